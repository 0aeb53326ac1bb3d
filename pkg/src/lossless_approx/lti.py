"""Lossless linear systems with scalar input/output and exact energy bookkeeping.

A lossless system is ``x' = J x + B u``, ``y = B^T x`` with skew-symmetric
generator ``J`` (rad per time-unit) and coupling vector ``B``.  Its internal
energy ``U = ||x||^2 / 2`` changes exactly at the work rate ``y*u``, so the
simulator is built around orthogonal propagators: systems with a known
rotation-block structure are advanced in closed form, general generators use
one scaling-and-squaring matrix exponential per fixed step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import expm, schur

__all__ = [
    "ControllabilityWarning",
    "InputSignal",
    "LosslessSystem",
    "Trajectory",
    "make_lossless",
    "simulate",
    "work_rate",
]

SKEW_TOL = 1e-12
# numerical rank of the reachability matrix is meaningless for large state
# dimension, so the construction only checks it below this size
CONTROLLABILITY_CHECK_LIMIT = 50
MIN_POINTS_PER_PERIOD = 20

# Gauss-Legendre nodes/weights on [0, 1]; used for the per-step drive quadrature
_GAUSS_NODES = np.array([0.5 - np.sqrt(15.0) / 10.0, 0.5, 0.5 + np.sqrt(15.0) / 10.0])
_GAUSS_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


class ControllabilityWarning(UserWarning):
    """The coupling vector does not excite every mode of the generator."""


@dataclass
class ModalForm:
    """Orthogonal block-diagonalization of a skew-symmetric generator.

    State index pairs ``(cos_idx[m], sin_idx[m])`` span a plane rotating at
    rate ``omega[m]``; ``zero_idx`` lists stationary states.  ``basis`` is the
    orthogonal change of coordinates into that block layout (``None`` when the
    generator is already block ordered).
    """

    omega: np.ndarray
    cos_idx: np.ndarray
    sin_idx: np.ndarray
    zero_idx: np.ndarray
    basis: np.ndarray | None = None

    def _rotate(self, block_vecs: np.ndarray, angles: np.ndarray) -> np.ndarray:
        """Apply the plane rotations ``exp(S*t)`` (angles = omega*t) in place."""
        out = block_vecs.copy()
        if self.omega.size:
            c = np.cos(angles)
            s = np.sin(angles)
            xc = block_vecs[self.cos_idx]
            xs = block_vecs[self.sin_idx]
            if out.ndim == 2:
                c = c[:, None]
                s = s[:, None]
            out[self.cos_idx] = c * xc + s * xs
            out[self.sin_idx] = -s * xc + c * xs
        return out

    def apply(self, t: float, vecs: np.ndarray) -> np.ndarray:
        """Return ``exp(J*t) @ vecs`` for a scalar time ``t``."""
        v = vecs if self.basis is None else self.basis.T @ vecs
        v = self._rotate(v, self.omega * t)
        return v if self.basis is None else self.basis @ v


class LosslessSystem:
    """State-space realization ``x' = Jx + Bu``, ``y = B^T x`` with ``J = -J^T``."""

    def __init__(self, J, B, *, skew_tol: float = SKEW_TOL, modes: ModalForm | None = None):
        J = np.atleast_2d(np.asarray(J, dtype=float))
        B = np.asarray(B, dtype=float).reshape(-1)
        if J.shape[0] != J.shape[1]:
            raise ValueError(f"generator must be square, got shape {J.shape}")
        if B.shape[0] != J.shape[0]:
            raise ValueError(
                f"coupling vector length {B.shape[0]} does not match state dimension {J.shape[0]}"
            )
        asym = float(np.abs(J + J.T).max()) if J.size else 0.0
        if asym > skew_tol:
            raise ValueError(
                f"generator is not skew-symmetric: max |J + J^T| = {asym:.3e} exceeds {skew_tol:.1e}"
            )
        self.J = J
        self.B = B
        self._modes = modes  # construction-known block structure only
        self._schur: ModalForm | None = None  # lazy fallback for analysis ops
        self.controllable: bool | None = None
        if 0 < self.dim <= CONTROLLABILITY_CHECK_LIMIT:
            self.controllable = self._reachable()
            if not self.controllable:
                warnings.warn(
                    "coupling vector does not reach every state (rank-deficient "
                    "reachability matrix); homogeneous dynamics are unaffected",
                    ControllabilityWarning,
                    stacklevel=3,
                )

    @property
    def dim(self) -> int:
        return self.J.shape[0]

    def _reachable(self) -> bool:
        cols = [self.B]
        for _ in range(self.dim - 1):
            cols.append(self.J @ cols[-1])
        return np.linalg.matrix_rank(np.column_stack(cols)) == self.dim

    @property
    def modal_form(self) -> ModalForm:
        """Rotation-block form of the generator (computed once, then cached)."""
        if self._modes is not None:
            return self._modes
        if self._schur is None:
            self._schur = _schur_modes(self.J)
        return self._schur

    def propagator(self, dt: float) -> np.ndarray:
        """Dense ``exp(J*dt)``."""
        if self._modes is not None:
            return self._modes.apply(dt, np.eye(self.dim))
        return expm(self.J * dt)

    def propagate(self, t: float, vecs: np.ndarray | None = None) -> np.ndarray:
        """Apply ``exp(J*t)`` to ``vecs`` (defaults to the coupling vector)."""
        v = self.B if vecs is None else np.asarray(vecs, dtype=float)
        return self.modal_form.apply(t, v)

    def output_rows(self, times) -> np.ndarray:
        """Matrix with rows ``B^T exp(J*t_i)``, one per entry of ``times``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        mf = self.modal_form
        b = self.B if mf.basis is None else mf.basis.T @ self.B
        rows = np.tile(b, (times.size, 1))
        if mf.omega.size:
            ang = np.outer(times, mf.omega)
            c = np.cos(ang)
            s = np.sin(ang)
            # (exp(J t))^T B = exp(-J t) B, i.e. rotation by -t applied to B
            rows[:, mf.cos_idx] = c * b[mf.cos_idx] - s * b[mf.sin_idx]
            rows[:, mf.sin_idx] = s * b[mf.cos_idx] + c * b[mf.sin_idx]
        if mf.basis is not None:
            rows = rows @ mf.basis.T
        return rows

    def impulse_response(self, times) -> np.ndarray:
        """``B^T exp(J*t) B`` evaluated on ``times``."""
        return self.output_rows(times) @ self.B

    def __repr__(self) -> str:  # pragma: no cover
        return f"LosslessSystem(dim={self.dim}, controllable={self.controllable})"


def _schur_modes(J: np.ndarray) -> ModalForm:
    n = J.shape[0]
    if n == 0:
        empty = np.empty(0, dtype=int)
        return ModalForm(np.empty(0), empty, empty, empty, basis=None)
    T, Z = schur(J, output="real")
    scale = max(1.0, float(np.abs(T).max()))
    omega, cos_idx, sin_idx, zero_idx = [], [], [], []
    i = 0
    while i < n:
        if i + 1 < n and abs(T[i + 1, i]) > 1e-13 * scale:
            omega.append(0.5 * (T[i, i + 1] - T[i + 1, i]))
            cos_idx.append(i)
            sin_idx.append(i + 1)
            i += 2
        else:
            zero_idx.append(i)
            i += 1
    return ModalForm(
        np.asarray(omega, dtype=float),
        np.asarray(cos_idx, dtype=int),
        np.asarray(sin_idx, dtype=int),
        np.asarray(zero_idx, dtype=int),
        basis=Z,
    )


def make_lossless(J, B, *, skew_tol: float = SKEW_TOL) -> LosslessSystem:
    """Validate and wrap a generator/coupling pair as a :class:`LosslessSystem`.

    Rejects non-square or non-skew-symmetric generators (reporting the largest
    asymmetry) and mismatched coupling lengths.  A rank-deficient reachability
    matrix only warns; the check is skipped above
    ``CONTROLLABILITY_CHECK_LIMIT`` states where it is numerically fragile.
    """
    return LosslessSystem(J, B, skew_tol=skew_tol)


class InputSignal:
    """Scalar drive signal: zero, closed form, or linearly interpolated samples.

    Closed-form signals may carry first/second derivative handles, which the
    truncation-bound report consumes directly.  Sampled signals interpolate
    linearly for simulation and are cubic-spline differentiated on demand, with
    the extra differentiation error surfaced by the callers that need it.
    """

    def __init__(self, fn=None, dfn=None, d2fn=None, times=None, values=None):
        self._fn = fn
        self._dfn = dfn
        self._d2fn = d2fn
        self._times = times
        self._values = values
        self._spline = None

    @classmethod
    def zero(cls) -> "InputSignal":
        return cls()

    @classmethod
    def from_function(cls, u, du=None, d2u=None) -> "InputSignal":
        return cls(fn=u, dfn=du, d2fn=d2u)

    @classmethod
    def from_samples(cls, times, values) -> "InputSignal":
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError("sample grid and values must be 1-D arrays of equal length")
        if times.size < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("sample grid must be strictly increasing with at least 2 points")
        return cls(times=times, values=values)

    @property
    def is_zero(self) -> bool:
        return self._fn is None and self._times is None

    @property
    def is_sampled(self) -> bool:
        return self._times is not None

    @property
    def has_exact_derivatives(self) -> bool:
        return self.is_zero or (self._dfn is not None and self._d2fn is not None)

    @property
    def sample_spacing(self) -> float:
        if not self.is_sampled:
            return 0.0
        return float(np.diff(self._times).max())

    def _check_domain(self, t: np.ndarray) -> None:
        if self.is_sampled:
            lo, hi = self._times[0], self._times[-1]
            if t.min() < lo - 1e-12 or t.max() > hi + 1e-12:
                raise ValueError(
                    f"signal sampled on [{lo}, {hi}] is undefined on the requested grid "
                    f"[{t.min()}, {t.max()}]"
                )

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros_like(t)
        if self.is_sampled:
            self._check_domain(t)
            return np.interp(t, self._times, self._values)
        return np.asarray(self._fn(t), dtype=float) * np.ones_like(t)

    def _get_spline(self) -> CubicSpline:
        if self._spline is None:
            if not self.is_sampled:
                raise ValueError("no derivative handles and no samples to differentiate")
            self._spline = CubicSpline(self._times, self._values)
        return self._spline

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros_like(t)
        if self._dfn is not None:
            return np.asarray(self._dfn(t), dtype=float) * np.ones_like(t)
        self._check_domain(t)
        return self._get_spline()(t, 1)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_zero:
            return np.zeros_like(t)
        if self._d2fn is not None:
            return np.asarray(self._d2fn(t), dtype=float) * np.ones_like(t)
        self._check_domain(t)
        return self._get_spline()(t, 2)


def as_input(u) -> InputSignal:
    """Coerce ``None``, callables, or signals to :class:`InputSignal`."""
    if u is None:
        return InputSignal.zero()
    if isinstance(u, InputSignal):
        return u
    if callable(u):
        return InputSignal.from_function(u)
    raise TypeError(f"cannot interpret {type(u).__name__} as an input signal")


@dataclass
class Trajectory:
    """Simulated path: time grid, states, scalar outputs.

    ``energies`` is recomputed from the states on every access so it can never
    drift from them.
    """

    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.outputs)):
            raise ValueError("times, states and outputs must have equal length")

    @property
    def energies(self) -> np.ndarray:
        return 0.5 * np.einsum("ij,ij->i", self.states, self.states)


def _check_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("time grid must be a 1-D array with at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return grid


def simulate(sys: LosslessSystem, u, x0, grid, *, warn_resolution: bool = True) -> Trajectory:
    """Integrate the system over ``grid`` from state ``x0`` under drive ``u``.

    The homogeneous part is advanced by the orthogonal propagator (closed-form
    rotations when the block structure is known, ``expm`` otherwise); the drive
    convolution uses a 3-point Gauss rule inside each step, which is far below
    the homogeneous accuracy for grids resolving the fastest mode with
    ``MIN_POINTS_PER_PERIOD`` points.
    """
    grid = _check_grid(grid)
    u = as_input(u)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    n = sys.dim
    if x0.shape[0] != n:
        raise ValueError(f"initial state length {x0.shape[0]} does not match dimension {n}")

    steps = np.diff(grid)
    h = float(steps.max())
    uniform = bool(steps.min() > (1.0 - 1e-12) * h)

    modes = sys._modes
    if warn_resolution and modes is not None and modes.omega.size:
        fastest = float(np.abs(modes.omega).max())
        if fastest > 0 and h > 2.0 * np.pi / fastest / MIN_POINTS_PER_PERIOD:
            warnings.warn(
                f"step {h:.3g} resolves the fastest period with fewer than "
                f"{MIN_POINTS_PER_PERIOD} points; drive quadrature may degrade",
                stacklevel=2,
            )

    m = grid.size
    states = np.empty((m, n))
    states[0] = x0

    if n == 0:
        return Trajectory(grid.copy(), states, np.zeros(m))

    def step_ops(dt: float):
        """Homogeneous apply plus drive vectors exp(J*dt*(1-c_q)) B for one step size."""
        if modes is not None:
            angles = modes.omega * dt

            def apply(x, _c=np.cos(angles), _s=np.sin(angles), _mf=modes):
                out = x.copy()
                if _mf.omega.size:
                    xc = x[_mf.cos_idx]
                    xs = x[_mf.sin_idx]
                    out[_mf.cos_idx] = _c * xc + _s * xs
                    out[_mf.sin_idx] = -_s * xc + _c * xs
                return out

            drive = [modes.apply(dt * (1.0 - c), sys.B) for c in _GAUSS_NODES]
        else:
            P = expm(sys.J * dt)

            def apply(x, _P=P):
                return _P @ x

            drive = [expm(sys.J * dt * (1.0 - c)) @ sys.B for c in _GAUSS_NODES]
        return apply, drive

    if uniform:
        ops = {h: step_ops(h)}
        key = np.full(m - 1, h)
    else:
        ops = {}
        key = steps
        for dt in np.unique(steps):
            ops[float(dt)] = step_ops(float(dt))

    forced = None
    if not u.is_zero:
        forced = np.zeros((m - 1, n))
        for q, (c, w) in enumerate(zip(_GAUSS_NODES, _GAUSS_WEIGHTS)):
            uq = u(grid[:-1] + c * steps)
            if uniform:
                vq = ops[h][1][q]
                forced += (w * steps * uq)[:, None] * vq
            else:
                for i, dt in enumerate(steps):
                    forced[i] += w * dt * uq[i] * ops[float(dt)][1][q]

    x = x0
    if uniform:
        apply = ops[h][0]
        if forced is None:
            for i in range(1, m):
                x = apply(x)
                states[i] = x
        else:
            for i in range(1, m):
                x = apply(x) + forced[i - 1]
                states[i] = x
    else:
        for i in range(1, m):
            x = ops[float(key[i - 1])][0](x)
            if forced is not None:
                x = x + forced[i - 1]
            states[i] = x

    outputs = states @ sys.B
    return Trajectory(grid.copy(), states, outputs)


def work_rate(traj: Trajectory, u) -> np.ndarray:
    """Instantaneous power ``w(t_i) = y(t_i) * u(t_i)`` delivered to the system.

    Its trapezoidal integral balances the stored-energy change up to the
    integration tolerance of the trajectory itself.
    """
    u = as_input(u)
    return traj.outputs * u(traj.times)
