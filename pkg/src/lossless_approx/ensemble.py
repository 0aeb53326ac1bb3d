"""Initial-state ensembles, temperature, and thermal output noise.

Uncertainty in the initial state of a high-order lossless system surfaces as
stationary noise on its output.  This module provides the exact output
covariance through the orthogonal propagators, the Monte Carlo estimator with
reproducible per-trial seeding, the temperature test (output covariance equal
to a constant times the decaying impulse response), the two equipartition
constructions for the initial covariance, and the band-limited noise power
used for the resistor-noise check.

Trials are generated from ``base_seed + trial_index`` so that serial and
parallel runs agree; reductions accumulate fixed-size chunks in index order,
making results independent of the worker count.  ``LOSSLESS_APPROX_THREADS``
caps the worker pool.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lti import LosslessSystem, as_input, simulate

__all__ = [
    "BandPowerEstimate",
    "CovarianceEstimate",
    "EnsembleSpec",
    "FluctuationDissipationReport",
    "TemperatureCheck",
    "band_limited_power",
    "check_temperature",
    "fluctuation_dissipation_check",
    "max_entropy_covariance",
    "output_covariance",
    "covariance_matrix",
    "run_ensemble",
    "white_noise_covariance",
]

_CHUNK = 512  # trials per reduction chunk; fixed so thread count cannot reorder sums


def _thread_count() -> int:
    raw = os.environ.get("LOSSLESS_APPROX_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_chunks(fn, items):
    threads = _thread_count()
    if threads == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _as_system(obj) -> LosslessSystem:
    """Accept either a bare system or a realization wrapper carrying ``.sys``."""
    return getattr(obj, "sys", obj)


@dataclass
class EnsembleSpec:
    """Gaussian initial-state law plus trial bookkeeping.

    ``covariance`` must be symmetric positive semidefinite to 1e-10; each trial
    ``j`` draws from a generator seeded with ``base_seed + j``.
    """

    mean: np.ndarray
    covariance: np.ndarray
    trials: int
    base_seed: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(-1)
        X = np.asarray(self.covariance, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] != self.mean.shape[0]:
            raise ValueError("covariance must be square and match the mean length")
        scale = max(1.0, float(np.abs(X).max()))
        if float(np.abs(X - X.T).max()) > 1e-10 * scale:
            raise ValueError("covariance must be symmetric to 1e-10")
        if X.size and float(np.linalg.eigvalsh(X).min()) < -1e-10 * scale:
            raise ValueError("covariance must be positive semidefinite to 1e-10")
        self.covariance = X
        if self.trials < 2:
            raise ValueError(f"need at least 2 trials, got {self.trials}")

    def factor(self) -> np.ndarray:
        """Square root ``L`` with ``L L^T`` equal to the covariance (PSD-safe)."""
        w, Q = np.linalg.eigh(self.covariance)
        return Q * np.sqrt(np.clip(w, 0.0, None))

    def draw(self, trial: int, factor: np.ndarray | None = None) -> np.ndarray:
        L = self.factor() if factor is None else factor
        z = np.random.default_rng(self.base_seed + trial).standard_normal(self.mean.size)
        return self.mean + L @ z

    def draw_block(self, start: int, stop: int, factor: np.ndarray | None = None) -> np.ndarray:
        L = self.factor() if factor is None else factor
        n = self.mean.size
        Z = np.empty((stop - start, n))
        for j in range(start, stop):
            Z[j - start] = np.random.default_rng(self.base_seed + j).standard_normal(n)
        return self.mean + Z @ L.T


def output_covariance(obj, X, s, t) -> np.ndarray | float:
    """Exact output covariance ``B^T e^{Jt} X e^{-Js} B`` (elementwise in s, t).

    For a harmonic realization the stored coupling already carries the
    causal-normalization factor, which doubles the covariance of the plain
    triple as required.
    """
    sys = _as_system(obj)
    X = np.asarray(X, dtype=float)
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if X.shape != (sys.dim, sys.dim):
        raise ValueError(f"covariance shape {X.shape} does not match dimension {sys.dim}")
    rows_t = sys.output_rows(t_arr)
    rows_s = sys.output_rows(s_arr)
    vals = np.einsum("ij,jk,ik->i", rows_t, X, rows_s)
    return float(vals[0]) if np.isscalar(t) and np.isscalar(s) else vals


def covariance_matrix(obj, X, times) -> np.ndarray:
    """Exact covariance matrix ``R(t_i, t_j)`` over a time grid, symmetric by construction."""
    sys = _as_system(obj)
    rows = sys.output_rows(np.asarray(times, dtype=float))
    R = rows @ np.asarray(X, dtype=float) @ rows.T
    return np.triu(R) + np.triu(R, 1).T


@dataclass
class CovarianceEstimate:
    """Empirical output mean/covariance over a time grid with standard errors."""

    times: np.ndarray
    r_hat: np.ndarray
    stderr: np.ndarray
    mean: np.ndarray
    mean_stderr: np.ndarray
    trials: int


def run_ensemble(obj, spec: EnsembleSpec, u, grid, cov_points: int = 64) -> CovarianceEstimate:
    """Monte Carlo ensemble over the initial state; empirical output statistics.

    The drive response is deterministic and computed once; the homogeneous
    responses of all trials reduce to one matrix product against the propagated
    output rows.  Covariance normalization is the unbiased ``trials - 1``, and
    the estimate matrix is mirrored from its upper triangle so symmetry in
    ``(s, t)`` is exact.
    """
    sys = _as_system(obj)
    grid = np.asarray(grid, dtype=float)
    if spec.mean.size != sys.dim:
        raise ValueError("ensemble dimension does not match the system")

    idx = np.unique(np.linspace(0, grid.size - 1, min(cov_points, grid.size)).astype(int))
    cov_times = grid[idx]

    u = as_input(u)
    if u.is_zero:
        forced = np.zeros(cov_times.size)
    else:
        forced = simulate(sys, u, np.zeros(sys.dim), grid).outputs[idx]

    rows = sys.output_rows(cov_times)
    L = spec.factor()
    edges = list(range(0, spec.trials, _CHUNK)) + [spec.trials]

    def hom_chunk(bounds):
        a, b = bounds
        X0 = spec.draw_block(a, b, factor=L)
        return X0 @ rows.T

    chunks = _map_chunks(hom_chunk, list(zip(edges[:-1], edges[1:])))
    # fixed-order pairwise reduction: totals do not depend on the thread count
    col_sum = np.add.reduce([c.sum(axis=0) for c in chunks])
    mean_hom = col_sum / spec.trials
    gram = np.add.reduce([(c - mean_hom).T @ (c - mean_hom) for c in chunks])
    sq_sum = np.add.reduce([((c - mean_hom) ** 2).sum(axis=0) for c in chunks])

    r_hat = gram / (spec.trials - 1)
    r_hat = np.triu(r_hat) + np.triu(r_hat, 1).T
    var_diag = np.diag(r_hat)
    stderr = np.sqrt(
        np.clip(np.outer(var_diag, var_diag) + r_hat**2, 0.0, None) / (spec.trials - 1)
    )
    mean = mean_hom + forced
    mean_stderr = np.sqrt(np.clip(sq_sum, 0.0, None) / (spec.trials - 1) / spec.trials)
    return CovarianceEstimate(cov_times, r_hat, stderr, mean, mean_stderr, spec.trials)


@dataclass
class TemperatureCheck:
    """Result of the output-covariance temperature test.

    ``temperature`` is the least-squares fit of covariance against the
    propagated impulse response; the sufficient structural condition (initial
    covariance commutes with the generator and has the coupling vector as an
    eigenvector) is evaluated separately and does not gate ``is_thermal``.
    """

    is_thermal: bool
    temperature: float | None
    max_defect: float
    fitted_temperature: float
    commutes_with_generator: bool
    coupling_is_eigenvector: bool


def check_temperature(obj, X, *, horizon: float | None = None, points: int = 24,
                      tol: float = 1e-8) -> TemperatureCheck:
    """Test whether the output covariance equals ``T * B^T e^{J(t-s)} B``."""
    sys = _as_system(obj)
    X = np.asarray(X, dtype=float)
    if horizon is None:
        rec = getattr(obj, "recurrence_time", None)
        horizon = 2.0 * rec if rec else 10.0
    tgrid = np.linspace(0.0, horizon, points)
    F = covariance_matrix(sys, X, tgrid)
    G = sys.impulse_response(tgrid[:, None] - tgrid[None, :]).reshape(points, points)
    denom = float((G * G).sum())
    fitted = float((F * G).sum() / denom) if denom > 0 else 0.0
    defect = float(np.abs(F - fitted * G).max())
    thermal = defect <= tol and fitted >= -tol
    temperature = max(fitted, 0.0) if thermal else None

    scale = max(1.0, float(np.abs(X).max()))
    commutes = float(np.abs(X @ sys.J - sys.J @ X).max()) <= 1e-10 * scale * max(
        1.0, float(np.abs(sys.J).max())
    )
    bnorm = float(sys.B @ sys.B)
    if bnorm > 0:
        lam = float(sys.B @ X @ sys.B) / bnorm
        eig = float(np.abs(X @ sys.B - lam * sys.B).max()) <= 1e-10 * scale
    else:
        eig = True
    return TemperatureCheck(thermal, temperature, defect, fitted, commutes, eig)


def max_entropy_covariance(total_energy: float, dim: int) -> tuple[np.ndarray, float]:
    """Entropy-maximizing initial law for a given expected energy: equipartition.

    Among zero-mean laws with expected energy ``E``, the Shannon-entropy
    maximizer is Gaussian with covariance ``(2E/n) I``; the per-mode energy
    share ``2E/n`` is returned as the temperature.
    """
    if total_energy < 0:
        raise ValueError(f"expected energy must be nonnegative, got {total_energy}")
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    T = 2.0 * total_energy / dim
    return T * np.eye(dim), T


def white_noise_covariance(real, intensity: float, horizon: float) -> np.ndarray:
    """Initial covariance accumulated by weak white-noise driving over ``[-h, 0]``.

    Closed-form antiderivatives of the trigonometric Gramian; at ``h = 2*tau``
    every mode has been excited equally and the result is ``(i*k/tau) I``,
    which is also the ``h -> inf`` limit.
    """
    if horizon <= 0:
        raise ValueError(f"driving horizon must be positive, got {horizon}")
    n = real.harmonics
    b = np.sqrt(real.gain / real.recurrence_time)
    omega0 = real.omega0
    h = float(horizon)

    # propagated coupling components: cos block b*cos(w s), sin block b*sin(w s),
    # constant b/sqrt(2)
    freqs = np.concatenate([np.arange(1, n + 1), np.arange(1, n + 1), [0.0]]) * omega0
    is_sin = np.concatenate(
        [np.zeros(n, dtype=bool), np.ones(n, dtype=bool), [False]]
    )
    amps = np.concatenate([np.full(n, b), np.full(n, b), [b / np.sqrt(2.0)]])

    A = freqs[:, None]
    Bf = freqs[None, :]

    def S(x):  # integral of cos(x s) over [-h, 0]; limit h at x = 0
        return h * np.sinc(x * h / np.pi)

    def C(x):  # (1 - cos(x h)) / x with limit 0 at x = 0; odd in x
        out = np.zeros_like(x)
        nz = np.abs(x) > 0
        out[nz] = (1.0 - np.cos(x[nz] * h)) / x[nz]
        return out

    Sm, Sp = S(A - Bf), S(A + Bf)
    Cm, Cp = C(A - Bf), C(A + Bf)
    both_sin = is_sin[:, None] & is_sin[None, :]
    both_cos = ~is_sin[:, None] & ~is_sin[None, :]
    sin_cos = is_sin[:, None] & ~is_sin[None, :]

    I = np.where(
        both_cos,
        0.5 * (Sm + Sp),
        np.where(
            both_sin,
            0.5 * (Sm - Sp),
            np.where(sin_cos, -0.5 * (Cm + Cp), -0.5 * (-Cm + Cp)),
        ),
    )
    return (2.0 * intensity / h) * np.outer(amps, amps) * I


@dataclass
class FluctuationDissipationReport:
    """Thermal output covariance versus the simulated impulse response."""

    is_thermal: bool
    temperature: float | None
    lags: np.ndarray | None
    max_defect: float | None
    passed: bool | None


def fluctuation_dissipation_check(obj, X, *, lags=None, tol: float = 1e-8,
                                  horizon: float | None = None) -> FluctuationDissipationReport:
    """Verify covariance/temperature equals the impulse response on a lag grid.

    The covariance side comes from the closed-form propagators, the impulse
    side from an actual simulation started at the coupling vector; a non-thermal
    initial covariance is reported and the comparison skipped.
    """
    sys = _as_system(obj)
    temp = check_temperature(obj, X, horizon=horizon) if horizon else check_temperature(obj, X)
    if not temp.is_thermal:
        return FluctuationDissipationReport(False, None, None, None, None)
    if lags is None:
        rec = getattr(obj, "recurrence_time", None)
        lags = np.linspace(0.0, 2.0 * rec if rec else 10.0, 201)
    lags = np.asarray(lags, dtype=float)
    cov = output_covariance(obj, np.asarray(X, dtype=float), np.zeros_like(lags), lags)
    impulse = simulate(sys, None, sys.B, lags).outputs
    T = temp.temperature
    if T == 0.0:
        defect = float(np.abs(cov).max())
    else:
        defect = float(np.abs(cov / T - impulse).max())
    return FluctuationDissipationReport(True, T, lags, defect, bool(defect <= tol))


@dataclass
class BandPowerEstimate:
    """Band-limited noise power ``int_{-B}^{B} S(w) dw`` from a Monte Carlo ensemble."""

    value: float
    bandwidth: float
    lag_horizon: float
    samples: int
    trials: int


def band_limited_power(real, temperature: float, bandwidth: float, trials: int,
                       base_seed: int, *, samples: int = 2048) -> BandPowerEstimate:
    """Estimate the output noise power admitted by an ideal band limit.

    Sample paths of the thermal output (covariance ``T I``) over one full
    period ``2*tau`` give the time/ensemble-averaged circular autocovariance
    via the discrete Fourier transform; the brick-wall band limit of width
    ``bandwidth`` (rad per time-unit) is then applied as the equivalent lag
    kernel ``2 sin(B d)/d`` truncated at the recurrence time.  The angular
    frequency convention matches variance = integral of the spectral density
    over the band, without a ``2 pi`` normalization.
    """
    sys = _as_system(real)
    tau = real.recurrence_time
    period = 2.0 * tau
    m = int(samples)
    dt = period / m
    times = np.arange(m) * dt
    rows = sys.output_rows(times)

    spec = EnsembleSpec(np.zeros(sys.dim), temperature * np.eye(sys.dim), trials, base_seed)
    L = spec.factor()
    edges = list(range(0, trials, _CHUNK)) + [trials]

    def path_chunk(bounds):
        a, b = bounds
        return spec.draw_block(a, b, factor=L) @ rows.T

    chunks = _map_chunks(path_chunk, list(zip(edges[:-1], edges[1:])))
    col_mean = np.add.reduce([c.sum(axis=0) for c in chunks]) / trials
    power = np.add.reduce(
        [(np.abs(np.fft.rfft(c - col_mean, axis=1)) ** 2).sum(axis=0) for c in chunks]
    )
    power /= trials - 1
    # circular autocovariance, time- and ensemble-averaged
    r_circ = np.fft.irfft(power, n=m) / m

    half = m // 2
    lag_idx = np.arange(-half, half + 1)
    lags = lag_idx * dt
    r_sym = r_circ[np.mod(lag_idx, m)]
    kernel = np.where(lag_idx == 0, 2.0 * bandwidth, 2.0 * np.sin(bandwidth * lags)
                      / np.where(lag_idx == 0, 1.0, lags))
    value = float(np.trapezoid(r_sym * kernel, lags))
    return BandPowerEstimate(value, float(bandwidth), float(tau), m, int(trials))
