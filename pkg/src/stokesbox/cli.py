"""Command-line driver: modes | solve | verify | sweep.

Every run writes a manifest (config echo plus sha256 checksums of all
artifacts).  ``verify`` exits nonzero iff any hard-pass check fails.
``--threads`` distributes independent work items over a thread pool; results
are assembled in a fixed order and are independent of the thread count.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import DEFAULTS, ConfigError, RunConfig, parse_config
from .domain import BoxDomain, SpatialGrid, TimeGrid, enumerate_modes
from .manufactured import make_manufactured
from .snapshots import FieldSnapshot, write_manifest, write_report_csv, write_snapshot
from .stokes import StokesSolver
from .verify import (
    ReportRow,
    Resolution,
    check_corrector_heat_identity,
    check_corrector_inverse_laplacian,
    check_divergence_ladder,
    check_estimate,
    check_integral_equation,
    check_pressure_integrability,
    check_pressure_poisson,
    corpus_forcing,
    run_consistency_suite,
    run_kernel_suite,
    run_manufactured_comparison,
)

__all__ = ["main", "cmd_modes", "cmd_solve", "cmd_verify", "cmd_sweep"]


def parallel_map(fn, items, threads: int):
    """Map with a fixed assembly order, independent of thread count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _load_config(args) -> tuple[RunConfig, str]:
    if args.config:
        text = Path(args.config).read_text()
        cfg = parse_config(text)
    else:
        cfg, text = DEFAULTS, "# defaults\n"
    if args.out:
        cfg.output_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg, text


def _mode_forcing_at(cfg: RunConfig, domain: BoxDomain):
    """Per-knot modal coefficients for forcing.kind = modes."""
    n = cfg.n_modes

    def at(t: float) -> np.ndarray:
        out = np.zeros((3, n, n, n))
        for m in cfg.forcing_modes:
            if m.profile == "const":
                amp = m.amplitude
            elif m.profile == "linear":
                amp = m.amplitude * t
            else:
                amp = m.amplitude * np.sin(m.omega * t)
            out[m.component - 1, m.index[0] - 1, m.index[1] - 1, m.index[2] - 1] += amp
        return out

    return at


def _forcing_at(cfg: RunConfig, domain: BoxDomain, n_modes: int | None = None):
    n = n_modes or cfg.n_modes
    if cfg.forcing_kind == "modes":
        base = _mode_forcing_at(cfg, domain)
        if n == cfg.n_modes:
            return base

        def padded(t: float) -> np.ndarray:
            out = np.zeros((3, n, n, n))
            small = base(t)
            s = min(n, cfg.n_modes)
            out[:, :s, :s, :s] = small[:, :s, :s, :s]
            return out

        return padded
    if cfg.forcing_kind == "manufactured":
        case = make_manufactured(domain)
        from .verify import manufactured_forcing

        return manufactured_forcing(case, n)
    # random: first case of the seeded corpus at the requested band
    corpus = corpus_forcing(domain, n, n_cases=1, seed=cfg.seed)
    return lambda t: corpus(t)[0]


def _forcing_coeff_history(cfg, domain, times: TimeGrid) -> np.ndarray:
    at = _forcing_at(cfg, domain)
    return np.stack([at(t) for t in times.knots])


def cmd_modes(cfg: RunConfig, out=sys.stdout) -> int:
    domain = BoxDomain(cfg.lengths, cfg.rho)
    out.write(f"{'n1':>4} {'n2':>4} {'n3':>4}  {'eigenvalue':>18}\n")
    for mode in enumerate_modes(domain, cfg.n_modes):
        n1, n2, n3 = mode.index
        out.write(f"{n1:>4} {n2:>4} {n3:>4}  {mode.eigenvalue:>18.12f}\n")
    return 0


def cmd_solve(cfg: RunConfig, config_text: str = "", threads: int = 1) -> int:
    domain = BoxDomain(cfg.lengths, cfg.rho)
    grid = SpatialGrid(domain, cfg.grid_points)
    times = TimeGrid(cfg.t_final, cfg.time_steps)
    solver = StokesSolver(domain, cfg.n_modes, grid, times)
    w = _forcing_coeff_history(cfg, domain, times)
    pres = solver.pressure(w)
    vel = solver.velocity(w, pres)
    div_field, div_ratio = solver.divergence(vel)

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    def synth(which: str) -> np.ndarray:
        if which == "p":
            return pres.samples().values[:, None]
        if which == "grad_p":
            return pres.gradient_samples().values
        return vel.samples().values

    fields = dict(zip(("p", "grad_p", "u"), parallel_map(synth, ["p", "grad_p", "u"], threads)))
    artifacts = []
    for name, values in fields.items():
        snap = FieldSnapshot(values, domain.lengths, domain.rho, cfg.t_final)
        path = outdir / f"{name}.sgf"
        write_snapshot(path, snap)
        artifacts.append(path)

    res = Resolution(cfg.n_modes, cfg.grid_points, cfg.time_steps)
    dt = times.dt

    def qt_norm(values: np.ndarray) -> float:
        sq = grid.cell_volume * np.sum(values.reshape(times.n_knots, -1) ** 2, axis=1)
        return float(np.sqrt(np.trapezoid(sq, dx=dt)))

    rows = [
        ReportRow("solve", "", res, "p_l2_qt", qt_norm(fields["p"])),
        ReportRow("solve", "", res, "grad_p_l2_qt", qt_norm(fields["grad_p"])),
        ReportRow("solve", "", res, "u_l2_qt", qt_norm(fields["u"])),
        ReportRow("solve", "", res, "divergence_ratio", div_ratio),
        ReportRow("solve", "", res, "u_sobolev_221", solver.sobolev_norm_221(vel)),
    ]
    csv_path = outdir / "norms.csv"
    write_report_csv(csv_path, rows)
    artifacts.append(csv_path)
    write_manifest(outdir / "manifest.json", config_text, artifacts)
    return 0


def _suite_rows(cfg: RunConfig, suite: str) -> list[ReportRow]:
    domain = BoxDomain(cfg.lengths, cfg.rho)
    res = Resolution(cfg.n_modes, cfg.grid_points, cfg.time_steps)
    t_final = cfg.t_final
    rows: list[ReportRow] = []
    if suite == "kernels":
        for rep in run_kernel_suite(domain):
            rows.extend(rep.rows("kernels"))
    elif suite == "consistency":
        for rep in run_consistency_suite(domain, res, t_final, seed=cfg.seed):
            rows.extend(rep.rows("consistency"))
    elif suite in ("corrector_heat", "corrector_inverse_laplacian"):
        n = cfg.n_modes

        def p_single(t: float) -> np.ndarray:
            c = np.zeros((n, n, n))
            c[0, 0, 0] = 1.0
            return c

        rng = np.random.default_rng(cfg.seed)
        band = max(1, n // 2)
        cube = np.zeros((n, n, n))
        cube[:band, :band, :band] = rng.standard_normal((band, band, band))
        check = (
            check_corrector_heat_identity
            if suite == "corrector_heat"
            else check_corrector_inverse_laplacian
        )
        rows.extend(check(domain, res, t_final, p_single).rows(suite, "single_mode"))
        rows.extend(
            check(domain, res, t_final, lambda t: cube).rows(suite, "random_band")
        )
    elif suite == "integral_equation":
        w_at = _forcing_at(cfg, domain)
        rows.extend(
            check_integral_equation(domain, res, t_final, w_at).rows(suite, cfg.forcing_kind)
        )
    elif suite == "pressure_poisson":
        w_at = _forcing_at(cfg, domain)
        for rep in check_pressure_poisson(domain, res, t_final, w_at):
            rows.extend(rep.rows(suite, cfg.forcing_kind))
    elif suite == "divergence":
        w_at = _forcing_at(cfg, domain)
        rows.extend(
            check_divergence_ladder(domain, res, t_final, w_at).rows(suite, cfg.forcing_kind)
        )
    elif suite == "manufactured":
        case = make_manufactured(domain)
        tables = run_manufactured_comparison(case, res, t_final, rungs=1)
        for table in tables.values():
            rows.extend(table.rows(suite, "quadratic_cosine"))
    elif suite == "estimate":
        rep = check_estimate(domain, res, t_final, n_cases=10, seed=cfg.seed)
        rows.extend(rep.rows(suite))
        drift_p, drift_e = rep.stability()
        tol = cfg.tolerances.get("estimate_drift", 0.10)
        rows.append(
            ReportRow(
                suite, "acceptance", None, "drift_within_tolerance",
                max(drift_p, drift_e), tol, passed=max(drift_p, drift_e) <= tol,
            )
        )
    elif suite == "integrability":
        rows.extend(
            check_pressure_integrability(
                domain, res, t_final, lambda n: _forcing_at(cfg, domain, n)
            )
        )
    else:
        raise ValueError(f"unknown suite {suite!r}")
    return rows


def cmd_verify(cfg: RunConfig, config_text: str = "", threads: int = 1) -> int:
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    row_blocks = parallel_map(lambda s: _suite_rows(cfg, s), list(cfg.suites), threads)
    rows = [row for block in row_blocks for row in block]
    csv_path = outdir / "report.csv"
    write_report_csv(csv_path, rows)
    write_manifest(outdir / "manifest.json", config_text, [csv_path])
    failures = [r for r in rows if r.passed is False]
    for r in failures:
        print(f"FAIL {r.suite}/{r.metric}: {r.value:.3e}", file=sys.stderr)
    return 1 if failures else 0


def cmd_sweep(cfg: RunConfig, config_text: str = "", threads: int = 1, rungs: int = 3) -> int:
    domain = BoxDomain(cfg.lengths, cfg.rho)
    base = Resolution(cfg.n_modes, cfg.grid_points, cfg.time_steps)
    t_final = cfg.t_final
    rows: list[ReportRow] = []

    case = make_manufactured(domain)
    for table in run_manufactured_comparison(case, base, t_final, rungs=rungs).values():
        rows.extend(table.rows("manufactured", "quadratic_cosine"))

    n0 = cfg.n_modes

    def p_single_at(n):
        def at(t: float) -> np.ndarray:
            c = np.zeros((n, n, n))
            c[0, 0, 0] = 1.0
            return c

        return at

    ladder = base.ladder(rungs)
    for name, check in (
        ("corrector_heat", check_corrector_heat_identity),
        ("corrector_inverse_laplacian", check_corrector_inverse_laplacian),
    ):
        values = []
        for rung in ladder:
            rep = check(domain, rung, t_final, p_single_at(rung.n_modes))
            values.append(rep.normalized)
        from .verify import ConvergenceTable

        rows.extend(ConvergenceTable(name, ladder, values).rows(name, "single_mode"))

    values = []
    for rung in ladder:
        w_at = _forcing_at(cfg, domain, rung.n_modes)
        values.append(check_integral_equation(domain, rung, t_final, w_at).normalized)
    from .verify import ConvergenceTable

    rows.extend(
        ConvergenceTable("integral_equation", ladder, values).rows(
            "integral_equation", cfg.forcing_kind
        )
    )

    values = []
    for rung in ladder:
        w_at = _forcing_at(cfg, domain, rung.n_modes)
        values.append(check_divergence_ladder(domain, rung, t_final, w_at).normalized)
    rows.extend(
        ConvergenceTable("divergence_ratio", ladder, values).rows(
            "divergence", cfg.forcing_kind
        )
    )

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "sweep.csv"
    write_report_csv(csv_path, rows)
    write_manifest(outdir / "manifest.json", config_text, [csv_path])
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stokesbox",
        description="Spectral Stokes pressure/velocity pipeline and verification harness",
    )
    parser.add_argument("command", choices=["modes", "solve", "verify", "sweep"])
    parser.add_argument("--config", help="path to a flat dotted-key config file")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None, help="override forcing.seed")
    parser.add_argument(
        "--rungs", type=int, default=3, help="ladder rungs for the sweep command"
    )
    args = parser.parse_args(argv)
    try:
        cfg, text = _load_config(args)
    except (ConfigError, OSError) as exc:
        print(exc, file=sys.stderr)
        return 2
    if args.command == "modes":
        return cmd_modes(cfg)
    if args.command == "solve":
        return cmd_solve(cfg, text, args.threads)
    if args.command == "verify":
        return cmd_verify(cfg, text, args.threads)
    return cmd_sweep(cfg, text, args.threads, args.rungs)


if __name__ == "__main__":
    sys.exit(main())
