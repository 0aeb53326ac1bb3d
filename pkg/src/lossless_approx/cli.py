"""Batch experiment driver: reproducible runs, CSV tables, figures.

Subcommands: ``approx`` (gain-approximation error sweep), ``noise`` (thermal
ensemble versus exact covariance and band-limited resistor noise),
``equipartition`` (entropy and white-noise constructions of the initial
covariance), ``interconnect`` (coupled systems and heat-bath closures),
``measure`` (back-action intensity sweep), ``certify`` (dissipativity check
plus certified lossless approximation of an impulse response).

Configuration comes from an optional JSON file (flat mapping of flag names to
values) overridden by command-line flags; stochastic commands require a seed.
Each run writes ``report.txt``, one CSV per table, matrix files where relevant,
and PNG figures, all into ``--out``.  Exit codes: 0 all checks passed, 1 a
check failed, 2 usage error, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .certify import (
    CertificationError,
    HarmonicBudgetError,
    ImpulseResponse,
    build_certificate,
    check_positive_real,
    search_energy_extraction,
    verify_certificate,
)
from .ensemble import (
    EnsembleSpec,
    band_limited_power,
    check_temperature,
    covariance_matrix,
    fluctuation_dissipation_check,
    max_entropy_covariance,
    run_ensemble,
    white_noise_covariance,
)
from .harmonic import apply_harmonic_gain, harmonic_gain, truncation_bound
from .interconnect import HeatBath, connect_heat_bath, interconnect, measure, simulate_noisy
from .lti import InputSignal, make_lossless, simulate
from .reporting import RunReport, output_lock, write_csv, write_matrix

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lossless-approx",
        description="Lossless/causal approximation experiments with reproducible reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="JSON config file (flags override it)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="base seed (mandatory for stochastic runs)")

    p = sub.add_parser("approx", help="gain-approximation error versus the analytic bound")
    add_common(p)
    p.add_argument("--gain", type=float, help="static gain k > 0")
    p.add_argument("--tau", type=float, help="recurrence time")
    p.add_argument("--harmonics", type=_int_list, help="comma-separated harmonic counts")
    p.add_argument("--grid-points", type=int, dest="grid_points")

    p = sub.add_parser("noise", help="thermal ensemble: covariance and band-limited power")
    add_common(p)
    p.add_argument("--gain", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--harmonics", type=_int_list)
    p.add_argument("--temperature", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--bandwidth", type=float, help="band limit in rad per time-unit")
    p.add_argument("--grid-points", type=int, dest="grid_points")

    p = sub.add_parser("equipartition", help="entropy and white-noise initial covariances")
    add_common(p)
    p.add_argument("--energy", type=float, help="expected initial energy")
    p.add_argument("--dim", type=int, help="state dimension for the entropy construction")
    p.add_argument("--gain", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--harmonics", type=_int_list)
    p.add_argument("--intensity", type=float, help="white-noise driving intensity")

    p = sub.add_parser("interconnect", help="couple two lossless systems; heat-bath closure")
    add_common(p)
    p.add_argument("--freq", type=_float_list, help="rotation rates of the two subsystems")
    p.add_argument("--tau", type=float, help="bath recurrence time")
    p.add_argument("--km", type=_float_list, help="bath strengths for the closure sweep")
    p.add_argument("--grid-points", type=int, dest="grid_points")

    p = sub.add_parser("measure", help="measurement back-action intensity sweep")
    add_common(p)
    p.add_argument("--km", type=_float_list, help="meter gains")
    p.add_argument("--temperature", type=float, help="meter temperature")
    p.add_argument("--dt", type=float, help="step size")
    p.add_argument("--steps", type=int)
    p.add_argument("--freq", type=_float_list, help="rotation rate of the measured system")

    p = sub.add_parser("certify", help="dissipativity check and certified approximation")
    add_common(p)
    p.add_argument("--family", choices=["exp", "negexp", "damped-cos"])
    p.add_argument("--rate", type=float)
    p.add_argument("--freq", type=_float_list)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--samples-file", type=Path, dest="samples_file",
                   help="two-column CSV (t, g) replacing the built-in families")
    p.add_argument("--epsilon", type=float, help="L2 error target")
    p.add_argument("--tau", type=float, help="requested approximation window")
    return parser


_DEFAULTS = {
    "approx": dict(gain=1.0, tau=10.0, harmonics=[25, 50, 100, 200], grid_points=4001,
                   out="out-approx"),
    "noise": dict(gain=2.0, tau=10.0, harmonics=[200], temperature=0.5, trials=10000,
                  bandwidth=1.0, grid_points=401, out="out-noise"),
    "equipartition": dict(energy=10.5, dim=21, gain=1.0, tau=float(np.pi), harmonics=[10],
                          intensity=1.0, out="out-equipartition"),
    "interconnect": dict(freq=[1.0, 2.0], tau=100.0, km=[0.1, 1.0, 10.0], grid_points=2001,
                         out="out-interconnect"),
    "measure": dict(km=[0.1, 1.0, 10.0], temperature=1.0, dt=1e-3, steps=100000,
                    freq=[1.0], out="out-measure"),
    "certify": dict(family="exp", rate=1.0, freq=[5.0], amplitude=1.0, epsilon=0.05,
                    tau=5.0, samples_file=None, out="out-certify"),
}

_STOCHASTIC = {"noise", "measure"}


def merge_config(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS[args.command])
    cfg["seed"] = None
    if args.config is not None:
        loaded = json.loads(Path(args.config).read_text())
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        cfg[key] = val
    if args.command in _STOCHASTIC and cfg.get("seed") is None:
        raise ValueError(f"'{args.command}' is stochastic: --seed is mandatory")
    return cfg


def _drive() -> InputSignal:
    """Reference smooth drive 1 - cos(t): vanishes at 0, unit-scale derivatives."""
    return InputSignal.from_function(
        lambda t: 1.0 - np.cos(t), lambda t: np.sin(t), lambda t: np.cos(t)
    )


def _finish(report: RunReport, outdir: Path, fail_code: int = EXIT_CHECK_FAILED) -> int:
    report.write(outdir / "report.txt")
    sys.stdout.write(report.render())
    return EXIT_OK if report.all_passed else fail_code


# ----------------------------------------------------------------- approx --


def cmd_approx(cfg: dict, outdir: Path) -> int:
    report = RunReport("approx", cfg)
    u = _drive()
    grid = np.linspace(0.0, cfg["tau"], cfg["grid_points"])
    rows = []
    prev = None
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for n in cfg["harmonics"]:
        real = harmonic_gain(cfg["gain"], cfg["tau"], n)
        if n >= 1:
            rep = truncation_bound(real, u, grid)
            sup_err, sup_bound, slack, ok = (
                rep.sup_observed, rep.sup_bound, rep.slack, rep.passed,
            )
            write_csv(
                outdir / f"approx_curve_n{n}.csv",
                ["t [time]", "observed_error [output]", "bound [output]"],
                zip(rep.times, rep.observed, rep.bound),
            )
            ax.plot(rep.times, rep.observed, label=f"observed N={n}")
            ax.plot(rep.times, rep.bound, "--", label=f"bound N={n}")
        else:
            y = apply_harmonic_gain(real, u, grid)
            sup_err = float(np.abs(cfg["gain"] * u(grid) - y).max())
            sup_bound, slack, ok = np.inf, 0.0, True
            report.note("N = 0 keeps only the constant gain term; no bound applies")
        ratio = sup_err / prev if prev else np.nan
        prev = sup_err
        rows.append([n, sup_err, sup_bound, slack, ratio, ok])
        report.check(f"observed error within bound (N={n})", ok,
                     f"sup observed {sup_err:.4e}, sup bound {sup_bound:.4e}")

    sups = [r[1] for r in rows]
    report.check("sup error non-increasing in N",
                 all(b <= a + 1e-10 for a, b in zip(sups, sups[1:])))
    cols = ["harmonics [count]", "sup_error [output]", "sup_bound [output]",
            "slack [output]", "ratio_to_prev [-]", "within_bound [bool]"]
    write_csv(outdir / "approx_error_vs_n.csv", cols, rows)
    report.table("error versus harmonic count", cols, rows)

    ax.set_xlabel("t [time]")
    ax.set_ylabel("error [output]")
    ax.set_yscale("log")
    ax.legend(fontsize=7)
    ax.grid(True, alpha=0.3)
    fig.savefig(outdir / "approx_bound_curves.png", dpi=150, bbox_inches="tight")
    plt.close(fig)

    ns = [r[0] for r in rows if r[0] >= 1]
    errs = [r[1] for r in rows if r[0] >= 1]
    if ns:
        fig, ax = plt.subplots(figsize=(5.2, 4.0))
        ax.loglog(ns, errs, "o-", label="sup error")
        ax.loglog(ns, [errs[0] * ns[0] / n for n in ns], "k--", alpha=0.6, label="1/N guide")
        ax.set_xlabel("harmonics N [count]")
        ax.set_ylabel("sup error [output]")
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        fig.savefig(outdir / "approx_error_vs_n.png", dpi=150, bbox_inches="tight")
        plt.close(fig)
    return _finish(report, outdir)


# ------------------------------------------------------------------ noise --


def cmd_noise(cfg: dict, outdir: Path) -> int:
    report = RunReport("noise", cfg)
    n = cfg["harmonics"][0]
    real = harmonic_gain(cfg["gain"], cfg["tau"], n)
    T = cfg["temperature"]
    X = T * np.eye(real.dim)
    grid = np.linspace(0.0, cfg["tau"], cfg["grid_points"])
    spec = EnsembleSpec(np.zeros(real.dim), X, cfg["trials"], cfg["seed"])
    est = run_ensemble(real, spec, None, grid, cov_points=16)
    exact = covariance_matrix(real, X, est.times)
    z = (est.r_hat - exact) / est.stderr

    rows = []
    for i, s in enumerate(est.times):
        for j, t in enumerate(est.times):
            if j < i:
                continue
            rows.append([s, t, exact[i, j], est.r_hat[i, j], est.stderr[i, j], z[i, j]])
    cols = ["s [time]", "t [time]", "exact [output^2]", "empirical [output^2]",
            "stderr [output^2]", "z [-]"]
    write_csv(outdir / "noise_covariance.csv", cols, rows)
    report.check("empirical covariance within 5 stderr of exact",
                 bool(np.abs(z).max() <= 5.0), f"max |z| = {np.abs(z).max():.3f}")

    mean_cols = ["t [time]", "mean [output]", "stderr [output]"]
    write_csv(outdir / "noise_mean.csv", mean_cols,
              zip(est.times, est.mean, est.mean_stderr))
    mean_z = float(np.abs(est.mean / np.where(est.mean_stderr > 0, est.mean_stderr, 1.0)).max())
    report.check("empirical mean within 3 stderr of the deterministic part",
                 mean_z <= 3.0, f"max |z| = {mean_z:.3f}")

    bp = band_limited_power(real, T, cfg["bandwidth"], cfg["trials"], cfg["seed"])
    target = 4.0 * T * cfg["gain"] * cfg["bandwidth"]
    rel = abs(bp.value - target) / target
    write_csv(outdir / "noise_band_power.csv",
              ["bandwidth [rad/time]", "estimate [output^2]", "target_4TkB [output^2]",
               "rel_error [-]", "within_10pct [bool]"],
              [[bp.bandwidth, bp.value, target, rel, rel <= 0.1]])
    report.check("band-limited power matches 4TkB within 10%", rel <= 0.1,
                 f"estimate {bp.value:.4f}, target {target:.4f}")

    fd = fluctuation_dissipation_check(real, X)
    report.check("fluctuation-dissipation identity on the lag grid",
                 bool(fd.passed), f"max defect {fd.max_defect:.3e}")

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(est.times, exact[0], label="exact R(0, t)")
    ax.errorbar(est.times, est.r_hat[0], yerr=est.stderr[0], fmt=".", ms=4,
                label="empirical", alpha=0.8)
    ax.set_xlabel("t [time]")
    ax.set_ylabel("output covariance [output^2]")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.savefig(outdir / "noise_covariance.png", dpi=150, bbox_inches="tight")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    ax.hist(z[np.triu_indices_from(z)], bins=30)
    ax.set_xlabel("covariance z-score [-]")
    ax.set_ylabel("cells [count]")
    ax.grid(True, alpha=0.3)
    fig.savefig(outdir / "noise_zscores.png", dpi=150, bbox_inches="tight")
    plt.close(fig)
    return _finish(report, outdir)


# ---------------------------------------------------------- equipartition --


def cmd_equipartition(cfg: dict, outdir: Path) -> int:
    report = RunReport("equipartition", cfg)
    X_me, T_me = max_entropy_covariance(cfg["energy"], cfg["dim"])
    trace_gap = abs(0.5 * float(np.trace(X_me)) - cfg["energy"])
    iso_gap = float(np.abs(X_me - T_me * np.eye(cfg["dim"])).max())
    cols = ["energy [energy]", "dim [count]", "temperature [energy]",
            "half_trace_gap [energy]", "isotropy_gap [-]"]
    write_csv(outdir / "equipartition_maxent.csv", cols,
              [[cfg["energy"], cfg["dim"], T_me, trace_gap, iso_gap]])
    report.table("entropy-maximizing covariance", cols,
                 [[cfg["energy"], cfg["dim"], T_me, trace_gap, iso_gap]])
    report.check("half trace equals the expected energy exactly", trace_gap == 0.0)

    real = harmonic_gain(cfg["gain"], cfg["tau"], cfg["harmonics"][0])
    tau, k, intensity = real.recurrence_time, real.gain, cfg["intensity"]
    target = intensity * k / tau
    rows = []
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for mult in (2.0, 6.0, 20.0):
        h = mult * tau
        Xh = white_noise_covariance(real, intensity, h)
        dev = float(np.abs(Xh - target * np.eye(real.dim)).max())
        bound = target * (2.0 * tau / h)
        rows.append([h, dev, bound, dev <= bound + 1e-12])
        ax.plot(np.diag(Xh), ".-", label=f"h = {mult:g} tau")
    cols = ["drive_horizon [time]", "max_dev_from_isotropy [-]", "bound [-]",
            "within_bound [bool]"]
    write_csv(outdir / "equipartition_whitenoise.csv", cols, rows)
    report.table("white-noise covariance versus ik/tau identity", cols, rows)
    report.check("white-noise covariance at h = 2 tau is (ik/tau) I to 1e-12",
                 rows[0][1] <= 1e-12, f"max deviation {rows[0][1]:.3e}")
    report.check("finite-horizon deviation within the 2 tau/h bound",
                 all(r[3] for r in rows))

    temp = check_temperature(real, white_noise_covariance(real, intensity, 2.0 * tau))
    report.check("white-noise covariance is thermal with T = ik/tau",
                 bool(temp.is_thermal) and abs((temp.temperature or 0.0) - target) <= 1e-10,
                 f"fitted T = {temp.fitted_temperature:.6g}")

    ax.axhline(target, color="k", ls="--", alpha=0.6, label="ik/tau")
    ax.set_xlabel("state index [-]")
    ax.set_ylabel("covariance diagonal [energy]")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.savefig(outdir / "equipartition_diagonals.png", dpi=150, bbox_inches="tight")
    plt.close(fig)
    return _finish(report, outdir)


# ----------------------------------------------------------- interconnect --


def cmd_interconnect(cfg: dict, outdir: Path) -> int:
    report = RunReport("interconnect", cfg)
    f1, f2 = cfg["freq"][0], cfg["freq"][-1]
    sys1 = make_lossless([[0.0, f1], [-f1, 0.0]], [1.0, 0.0])
    sys2 = make_lossless([[0.0, f2], [-f2, 0.0]], [1.0, 0.0])
    combined = interconnect(sys1, sys2)
    write_matrix(outdir / "interconnect_generator.txt", combined.J)
    skew_exact = bool(np.array_equal(combined.J, -combined.J.T))
    report.check("combined generator skew-symmetric bit-exactly", skew_exact)

    grid = np.linspace(0.0, 100.0, cfg["grid_points"])
    x0 = np.array([1.0, 0.0, 0.5, -0.5])
    traj = simulate(combined, None, x0, grid)
    drift = float(np.abs(traj.energies - traj.energies[0]).max()
                  / max(1.0, traj.energies[0]))
    write_csv(outdir / "interconnect_energy.csv",
              ["t [time]", "energy [energy]"], zip(traj.times, traj.energies))
    report.check("autonomous combined energy conserved to 1e-9", drift <= 1e-9,
                 f"relative drift {drift:.3e}")

    rows = []
    for k in cfg["km"]:
        closed = connect_heat_bath(sys1, HeatBath(k, 0.0, cfg["tau"]))
        eigs = np.linalg.eigvals(closed.A)
        absc = float(eigs.real.max())
        rows.append([k, absc, absc <= 1e-10])
    cols = ["strength [1/time]", "spectral_abscissa [1/time]", "nonpositive [bool]"]
    write_csv(outdir / "interconnect_abscissa.csv", cols, rows)
    report.table("heat-bath closure spectral abscissa", cols, rows)
    report.check("closure spectral abscissa <= 1e-10 for every strength",
                 all(r[2] for r in rows))

    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.8))
    axes[0].plot(traj.times, traj.energies)
    axes[0].set_xlabel("t [time]")
    axes[0].set_ylabel("energy [energy]")
    axes[0].set_title("coupled autonomous energy")
    axes[0].grid(True, alpha=0.3)
    for k in cfg["km"]:
        closed = connect_heat_bath(sys1, HeatBath(k, 0.0, cfg["tau"]))
        eigs = np.linalg.eigvals(closed.A)
        axes[1].scatter(eigs.real, eigs.imag, label=f"k = {k:g}")
    axes[1].axvline(0.0, color="k", lw=0.8)
    axes[1].set_xlabel("Re eigenvalue [1/time]")
    axes[1].set_ylabel("Im eigenvalue [rad/time]")
    axes[1].legend(fontsize=7)
    axes[1].grid(True, alpha=0.3)
    fig.savefig(outdir / "interconnect_spectrum.png", dpi=150, bbox_inches="tight")
    plt.close(fig)
    return _finish(report, outdir)


# ---------------------------------------------------------------- measure --


def cmd_measure(cfg: dict, outdir: Path) -> int:
    report = RunReport("measure", cfg)
    f = cfg["freq"][0]
    base = make_lossless([[0.0, f], [-f, 0.0]], [1.0, 0.0])
    T_m, dt, steps = cfg["temperature"], cfg["dt"], cfg["steps"]
    grid = np.arange(steps + 1) * dt
    rows = []
    for i, km in enumerate(cfg["km"]):
        meter = measure(base, km, T_m)
        traj = simulate_noisy(meter, None, grid, seed=cfg["seed"] + i)
        p = traj.process_path
        m = traj.measurement_path
        cross = float(np.mean(p * m) * dt)
        proc = float(np.mean(p * p) * dt)
        meas = float(np.mean(m * m) * dt)
        ok = (
            abs(cross - 2.0 * T_m) <= 0.1 * 2.0 * T_m
            and abs(proc - 2.0 * km * T_m) <= 0.1 * 2.0 * km * T_m
            and abs(meas - 2.0 * T_m / km) <= 0.1 * 2.0 * T_m / km
        )
        rows.append([km, cross, 2.0 * T_m, meas, 2.0 * T_m / km, proc, 2.0 * km * T_m,
                     meter.tradeoff_product, ok])
        report.check(f"intensities within 10% at meter gain {km:g}", ok,
                     f"cross {cross:.4f} vs {2*T_m:.1f}")
    cols = ["meter_gain [-]", "cross_est [energy/time]", "cross_expected [energy/time]",
            "meas_est [output^2 time]", "meas_expected [output^2 time]",
            "proc_est [energy/time]", "proc_expected [energy/time]",
            "tradeoff_product [energy^2]", "within_10pct [bool]"]
    write_csv(outdir / "measure_intensities.csv", cols, rows)
    report.table("back-action intensities", cols, rows)
    report.check("cross-intensity independent of the meter gain",
                 max(r[1] for r in rows) - min(r[1] for r in rows)
                 <= 0.2 * 2.0 * T_m)

    kms = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    ax.loglog(kms, [r[1] for r in rows], "o-", label="cross")
    ax.loglog(kms, [r[3] for r in rows], "s-", label="measurement")
    ax.loglog(kms, [r[5] for r in rows], "^-", label="process")
    ax.set_xlabel("meter gain [-]")
    ax.set_ylabel("intensity")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(outdir / "measure_intensities.png", dpi=150, bbox_inches="tight")
    plt.close(fig)
    return _finish(report, outdir)


# ---------------------------------------------------------------- certify --


def _load_kernel(cfg: dict) -> ImpulseResponse:
    if cfg.get("samples_file"):
        data = np.loadtxt(cfg["samples_file"], delimiter=",")
        return ImpulseResponse.from_samples(data[:, 0], data[:, 1],
                                            label=str(cfg["samples_file"]))
    family = cfg["family"]
    if family == "exp":
        return ImpulseResponse.exponential(cfg["rate"], cfg["amplitude"])
    if family == "negexp":
        return ImpulseResponse.exponential(cfg["rate"], -abs(cfg["amplitude"]))
    if family == "damped-cos":
        return ImpulseResponse.damped_cosine(cfg["rate"], cfg["freq"][0], cfg["amplitude"])
    raise ValueError(f"unknown kernel family {family!r}")


def cmd_certify(cfg: dict, outdir: Path) -> int:
    report = RunReport("certify", cfg)
    g = _load_kernel(cfg)
    report.note(f"kernel: {g.label}")

    pr = check_positive_real(g)
    write_csv(outdir / "certify_transform.csv",
              ["omega [rad/time]", "re_transform [output time]"],
              zip(pr.omegas, pr.real_parts))
    report.note(
        f"min Re transform {pr.min_real_part:.6e} at omega {pr.argmin_omega:g} "
        f"(tail bound {pr.tail_bound:.2e})"
    )
    if not pr.conclusive:
        report.check("positive-real test conclusive", False,
                     "tail bound exceeds the requested resolution")
        report.write(outdir / "report.txt")
        sys.stdout.write(report.render())
        return EXIT_INCONCLUSIVE
    report.check("kernel is positive real", bool(pr.is_positive_real),
                 f"min Re = {pr.min_real_part:.4e}")

    try:
        cert, system = build_certificate(g, cfg["epsilon"], requested_tau=cfg["tau"])
    except HarmonicBudgetError as exc:
        report.check("certificate construction", False,
                     f"harmonic budget exhausted: {exc}")
        return _finish(report, outdir)
    except CertificationError as exc:
        for name, value, bound in exc.violations or []:
            report.check(f"certificate inequality {name}", False,
                         f"{value:.4e} > {bound:.4e}")
        if exc.certificate is not None:
            _write_certificate(outdir, exc.certificate)
        witness = search_energy_extraction(g, None, min(cfg["tau"], g.horizon))
        if witness.found:
            report.note(
                f"energy-extraction witness: drive recovered {witness.extracted:.4e} "
                f"energy units from rest (lossless systems cannot)"
            )
        report.check("certificate construction", False, str(exc))
        return _finish(report, outdir)

    _write_certificate(outdir, cert)
    write_matrix(outdir / "certify_realization_generator.txt", system.J)
    write_matrix(outdir / "certify_realization_coupling.txt", system.B.reshape(1, -1))
    checks = verify_certificate(cert, g)
    for name, (value, bound, ok) in checks.items():
        report.check(f"independent re-check: {name} <= bound", ok,
                     f"{value:.6e} <= {bound:.6e}")
    report.table(
        "certificate",
        ["epsilon [output time^0.5]", "tau [time]", "terms [count]",
         "achieved_l2 [output time^0.5]", "negative_terms [count]"],
        [[cert.epsilon, cert.tau, cert.n_terms, cert.achieved_error,
          cert.negative_indices.size]],
    )

    t = np.linspace(0.0, cert.tau, 2001)
    from .certify import evaluate_series

    kept = cert.coeffs.copy()
    kept[kept < 0] = 0.0
    fig, axes = plt.subplots(1, 2, figsize=(9.2, 3.8))
    axes[0].plot(t, g(t), label="kernel")
    axes[0].plot(t, evaluate_series(kept, cert.tau, t), "--", label="lossless model")
    axes[0].set_xlabel("t [time]")
    axes[0].set_ylabel("impulse response [output]")
    axes[0].legend()
    axes[0].grid(True, alpha=0.3)
    axes[1].stem(np.arange(cert.coeffs.size), cert.coeffs, basefmt="k-")
    axes[1].set_xlabel("harmonic index [-]")
    axes[1].set_ylabel("coefficient [output]")
    axes[1].grid(True, alpha=0.3)
    fig.savefig(outdir / "certify_kernel.png", dpi=150, bbox_inches="tight")
    plt.close(fig)
    return _finish(report, outdir)


def _write_certificate(outdir: Path, cert) -> None:
    write_csv(outdir / "certify_coefficients.csv",
              ["harmonic [count]", "coefficient [output]", "kept [bool]"],
              [[k, a, a >= 0] for k, a in enumerate(cert.coeffs)])
    payload = {
        "epsilon": cert.epsilon,
        "tau": cert.tau,
        "terms": cert.n_terms,
        "achieved_l2_error": cert.achieved_error,
        "truncation_l2_error": cert.truncation_error,
        "negative_weight_sq": cert.neg_l2_sq,
        "bound_constant": cert.bound_constant,
        "tail_mass_at_tau": cert.tail_mass_at_tau,
        "tail_budget": cert.tail_budget,
        "negative_indices": [int(i) for i in cert.negative_indices],
    }
    (outdir / "certificate.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


_COMMANDS = {
    "approx": cmd_approx,
    "noise": cmd_noise,
    "equipartition": cmd_equipartition,
    "interconnect": cmd_interconnect,
    "measure": cmd_measure,
    "certify": cmd_certify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = merge_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        parser.exit(EXIT_USAGE, f"error: {exc}\n")
    outdir = Path(cfg.pop("out"))
    cfg_echo = {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.items()}
    cfg_echo["out"] = str(outdir)
    try:
        with output_lock(outdir):
            return _COMMANDS[args.command](cfg_echo, outdir)
    except RuntimeError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
