"""Physical interconnection of lossless systems, heat baths, and measurement.

Coupling two lossless systems port-to-port keeps the combined system lossless;
replacing the second system by its white-noise limit (a heat bath of strength
``k`` and temperature ``T``) turns the first one dissipative: the generator
gains a rank-one damping term ``-k B B^T`` and a noise drive ``-B sqrt(2kT) w``.
An idealized amplifier-style meter built the same way both damps the measured
system and contaminates the readout, with one shared scalar noise path driving
both effects; the cross-intensity of process and measurement noise depends only
on the meter temperature, never on its gain.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .lti import LosslessSystem

__all__ = [
    "HeatBath",
    "NoisyLinearSystem",
    "NoisyTrajectory",
    "connect_heat_bath",
    "interconnect",
    "measure",
    "run_noisy_ensemble",
    "simulate_noisy",
]

SPECTRAL_ABSCISSA_TOL = 1e-10


@dataclass
class HeatBath:
    """White-noise limit of a huge lossless gain approximation."""

    strength: float
    temperature: float
    recurrence_time: float

    def __post_init__(self):
        if self.strength <= 0:
            raise ValueError(f"bath strength must be positive, got {self.strength}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be nonnegative, got {self.temperature}")
        if self.recurrence_time <= 0:
            raise ValueError(f"recurrence time must be positive, got {self.recurrence_time}")


@dataclass
class NoisyLinearSystem:
    """Linear system driven by one scalar unit-intensity white noise path.

    ``x' = A x + B_in u + B_noise w``, ``y = C x + D_noise w``.  The same ``w``
    feeds both the state and (for measurement models) the readout; this shared
    path is what produces the gain-independent cross-intensity.  ``valid_horizon``
    is the recurrence time of the underlying bath: beyond it the white-noise
    idealization loses its justification and simulation warns.
    """

    A: np.ndarray
    B_in: np.ndarray
    B_noise: np.ndarray
    C: np.ndarray
    D_noise: float = 0.0
    noise_intensity: float = 1.0
    valid_horizon: float | None = None
    process_noise_gain: float = 0.0
    measurement_noise_gain: float = 0.0
    temperature: float | None = None
    strength: float | None = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B_in = np.asarray(self.B_in, dtype=float).reshape(-1)
        self.B_noise = np.asarray(self.B_noise, dtype=float).reshape(-1)
        self.C = np.asarray(self.C, dtype=float).reshape(-1)
        n = self.A.shape[0]
        if self.A.shape != (n, n) or len({n, self.B_in.size, self.B_noise.size, self.C.size}) != 1:
            raise ValueError("inconsistent dimensions in noisy linear system")
        abscissa = float(np.linalg.eigvals(self.A).real.max()) if n else 0.0
        if abscissa > SPECTRAL_ABSCISSA_TOL:
            raise ValueError(
                f"unstable closure: spectral abscissa {abscissa:.3e} exceeds "
                f"{SPECTRAL_ABSCISSA_TOL:.1e}"
            )

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def tradeoff_product(self) -> float:
        """Exact process x measurement cross-intensity squared, ``(2 T)^2``."""
        if self.temperature is None:
            return 0.0
        return (2.0 * self.temperature) ** 2


def interconnect(sys1: LosslessSystem, sys2: LosslessSystem) -> LosslessSystem:
    """Port-to-port coupling of two lossless systems; the result stays lossless.

    The combined generator is assembled (not recomputed), so the coupling
    blocks are skew to the bit: the lower-left block is the same float array
    whose negative transpose fills the upper-right block.
    """
    if sys2.dim == 0:
        return sys1
    if sys1.dim == 0:
        raise ValueError("the driven side of the interconnection must have states")
    n1, n2 = sys1.dim, sys2.dim
    J = np.zeros((n1 + n2, n1 + n2))
    J[:n1, :n1] = sys1.J
    J[n1:, n1:] = sys2.J
    cross = np.outer(sys2.B, sys1.B)
    J[n1:, :n1] = cross
    J[:n1, n1:] = -cross.T
    B = np.concatenate([sys1.B, np.zeros(n2)])
    return LosslessSystem(J, B)


def connect_heat_bath(sys: LosslessSystem, bath: HeatBath) -> NoisyLinearSystem:
    """Close the port of a lossless system on a heat bath.

    The bath acts back as rank-one damping plus white noise through the same
    port; with zero temperature the closure is a deterministic damped system.
    Valid on ``[0, recurrence_time]`` of the bath.
    """
    k, T = bath.strength, bath.temperature
    A = sys.J - k * np.outer(sys.B, sys.B)
    gain = np.sqrt(2.0 * k * T)
    return NoisyLinearSystem(
        A=A,
        B_in=sys.B,
        B_noise=-gain * sys.B,
        C=sys.B,
        D_noise=0.0,
        valid_horizon=bath.recurrence_time,
        process_noise_gain=gain,
        temperature=T,
        strength=k,
    )


def measure(sys: LosslessSystem, meter_gain: float, meter_temperature: float) -> NoisyLinearSystem:
    """Attach an amplifier-style meter of gain ``k_m`` and temperature ``T_m``.

    The meter's own lossless realization closes the loop: the measured system
    is damped by ``-k_m B B^T`` and driven by process noise ``sqrt(2 k_m T_m) w``
    through the port, while the normalized readout carries measurement noise
    ``sqrt(2 T_m / k_m) w`` -- the same ``w`` in both places.  An external drive
    through ``B_in`` is allowed as an extension beyond the bare readout setup.
    """
    if meter_gain <= 0:
        raise ValueError(f"meter gain must be positive, got {meter_gain}")
    if meter_temperature < 0:
        raise ValueError(f"meter temperature must be nonnegative, got {meter_temperature}")
    k_m, T_m = meter_gain, meter_temperature
    A = sys.J - k_m * np.outer(sys.B, sys.B)
    process_gain = np.sqrt(2.0 * k_m * T_m)
    meas_gain = np.sqrt(2.0 * T_m / k_m)
    return NoisyLinearSystem(
        A=A,
        B_in=sys.B,
        B_noise=-process_gain * sys.B,
        C=sys.B,
        D_noise=meas_gain,
        process_noise_gain=process_gain,
        measurement_noise_gain=meas_gain,
        temperature=T_m,
        strength=k_m,
    )


@dataclass
class NoisyTrajectory:
    """Euler-Maruyama path with the driving noise retained for later analysis."""

    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    noise: np.ndarray
    _proc_gain: float = field(default=0.0, repr=False)
    _meas_gain: float = field(default=0.0, repr=False)

    @property
    def process_path(self) -> np.ndarray:
        """Scalar process-noise samples aligned with the step grid."""
        return self._proc_gain * self.noise

    @property
    def measurement_path(self) -> np.ndarray:
        return self._meas_gain * self.noise


def _uniform_step(grid: np.ndarray) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be 1-D with at least two points")
    steps = np.diff(grid)
    dt = float(steps[0])
    if dt <= 0 or float(np.abs(steps - dt).max()) > 1e-9 * dt:
        raise ValueError("stochastic integration requires a uniform, increasing grid")
    return dt


def _horizon_warning(nsys: NoisyLinearSystem, grid: np.ndarray) -> None:
    if nsys.valid_horizon is not None and grid[-1] - grid[0] > nsys.valid_horizon * (1 + 1e-12):
        warnings.warn(
            f"simulating past the bath recurrence time {nsys.valid_horizon}; the "
            "white-noise closure is only justified up to that horizon",
            stacklevel=3,
        )


def simulate_noisy(nsys: NoisyLinearSystem, u, grid, seed: int,
                   x0: np.ndarray | None = None) -> NoisyTrajectory:
    """Euler-Maruyama path of the noisy closure on a uniform grid.

    White noise is discretized as independent Gaussians of variance ``1/dt``
    per sample (unit intensity), so delta-correlations appear as ``1/dt`` at
    zero lag.  The drawn noise path is recorded; rerunning with the same seed
    reproduces states, outputs and noise bit for bit.
    """
    from .lti import as_input

    grid = np.asarray(grid, dtype=float)
    dt = _uniform_step(grid)
    _horizon_warning(nsys, grid)
    u = as_input(u)
    m = grid.size
    n = nsys.dim
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(m) / np.sqrt(dt)
    uvals = np.zeros(m) if u.is_zero else u(grid)

    states = np.empty((m, n))
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).reshape(-1).copy()
    if x.size != n:
        raise ValueError(f"initial state length {x.size} does not match dimension {n}")
    states[0] = x
    for i in range(m - 1):
        x = x + dt * (nsys.A @ x + nsys.B_in * uvals[i] + nsys.B_noise * w[i])
        states[i + 1] = x
    outputs = states @ nsys.C + nsys.D_noise * w
    return NoisyTrajectory(
        grid.copy(), states, outputs, w,
        _proc_gain=nsys.process_noise_gain, _meas_gain=nsys.measurement_noise_gain,
    )


def run_noisy_ensemble(nsys: NoisyLinearSystem, u, grid, trials: int,
                       base_seed: int) -> np.ndarray:
    """Outputs of ``trials`` independent Euler-Maruyama paths, one row per trial.

    Trial ``j`` uses seed ``base_seed + j``; the stepping is vectorized across
    trials but numerically identical to running :func:`simulate_noisy` per trial.
    """
    from .lti import as_input

    grid = np.asarray(grid, dtype=float)
    dt = _uniform_step(grid)
    _horizon_warning(nsys, grid)
    u = as_input(u)
    m = grid.size
    n = nsys.dim
    W = np.empty((trials, m))
    for j in range(trials):
        W[j] = np.random.default_rng(base_seed + j).standard_normal(m)
    W /= np.sqrt(dt)
    uvals = np.zeros(m) if u.is_zero else u(grid)

    X = np.zeros((trials, n))
    outputs = np.empty((trials, m))
    outputs[:, 0] = X @ nsys.C + nsys.D_noise * W[:, 0]
    At = nsys.A.T
    for i in range(m - 1):
        X = X + dt * (X @ At + np.outer(W[:, i], nsys.B_noise))
        if uvals[i]:
            X = X + dt * uvals[i] * nsys.B_in
        outputs[:, i + 1] = X @ nsys.C + nsys.D_noise * W[:, i + 1]
    return outputs
