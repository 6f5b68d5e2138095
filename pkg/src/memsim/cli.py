"""``memsim`` command line: run, scaling, validate."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from .config import ConfigError, RunConfig, load_config, parse_list
from .control import SynthesisError, synthesize
from .dynamics import oracle_first_elimination, two_band_on
from .params import validate_regime
from .pipeline import (DurationResult, duration_seconds, run_duration, run_sweep_results,
                       scaling_table)
from .signal import make_target_mode

log = logging.getLogger("memsim")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

FIG3_COLUMNS = ["tau_total", "eta", "one_minus_eta", "two_gdminus_sq", "added_var_x4",
                "gdplus_sq", "gde_sq", "sum_rule_d", "sum_rule_s", "comm_ds_abs",
                "spin_gminus_sq", "cov_abs", "depletion"]
FIG2_COLUMNS = ["tau", "abs_S", "spin_pop", "phi_s", "re_Omega", "im_Omega", "abs_Omega"]
MODE_COLUMNS = ["tau", "E0", "dE0_dt"]
GREEN_COLUMNS = ["tau"] + [f"{part}_{name}" for name in ("G_EE", "G_ES", "G_SE", "G_SS")
                           for part in ("re", "im")]
ORACLE_COLUMNS = ["tau", "abs_E_oracle", "abs_E_two_band", "abs_S_oracle", "abs_S_two_band"]
HOMODYNE_NOTE = "homodyne quadrature Q_h = Re(exp(-i theta_h) E_d), theta_h = theta_R"


def _fmt(x) -> str:
    return repr(float(x))


def _label(tau_total: float) -> str:
    return f"{tau_total:g}"


def write_csv(path: Path, header: list, columns: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def fig3_row(res: DurationResult) -> list:
    b = res.budget
    if b is None:
        return [res.tau_total] + [math.nan] * (len(FIG3_COLUMNS) - 1)
    return [res.tau_total, b.eta, b.one_minus_eta, 2.0 * b.g_dminus_sq, b.added_var_x4,
            b.g_dplus_sq, b.g_de_sq, b.sum_rule_d, b.sum_rule_s, abs(b.comm_ds),
            b.spin_gminus_sq, abs(b.covariance_param), b.depletion]


def write_profiles(out: Path, header: list, res: DurationResult, kappa: float) -> None:
    m, c = res.mode, res.control
    tau = m.grid.tau(kappa)
    lab = _label(res.tau_total)
    write_csv(out / f"fig2_{lab}.csv", header, FIG2_COLUMNS,
              zip(tau, np.sqrt(c.spin_pop), c.spin_pop, c.spin_phase,
                  c.control.real, c.control.imag, np.abs(c.control)))
    write_csv(out / f"mode_{lab}.csv", header, MODE_COLUMNS,
              zip(tau, m.samples, m.derivative))


def write_green(out: Path, header: list, res: DurationResult, kappa: float) -> None:
    G = res.table.from_start()
    cols = [res.mode.grid.tau(kappa)]
    for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)):
        cols += [G[:, i, j].real, G[:, i, j].imag]
    write_csv(out / f"green_{_label(res.tau_total)}.csv", header, GREEN_COLUMNS, zip(*cols))


def write_oracle(out: Path, header: list, cfg: RunConfig, res: DurationResult) -> None:
    p = cfg.physics.params()
    c = res.control
    init = (0.0, c.initial_spin)
    t, E, S = oracle_first_elimination(p, c, init)
    E2, S2 = two_band_on(p, c, t, init)
    write_csv(out / f"oracle_{_label(res.tau_total)}.csv", header, ORACLE_COLUMNS,
              zip(2.0 * p.kappa * t, np.abs(E), np.abs(E2), np.abs(S), np.abs(S2)))


def summary_table(results) -> str:
    head = f"{'2kT':>6} {'eta':>10} {'1-eta':>10} {'2|Gd-|^2':>10} {'4<dQ^2>add':>11} " \
           f"{'sum_d':>10} {'2D':>9} {'match':>9} status"
    lines = [head, "-" * len(head)]
    for r in results:
        if r.budget is None:
            lines.append(f"{r.tau_total:>6g} FAILED: {r.error}")
            continue
        b = r.budget
        bad = [k for k, v in r.checks.items() if not v]
        status = "ok" if not bad else "FAIL(" + ",".join(bad) + ")"
        lines.append(f"{r.tau_total:>6g} {b.eta:>10.6f} {b.one_minus_eta:>10.6f} "
                     f"{2 * b.g_dminus_sq:>10.6f} {b.added_var_x4:>11.6f} "
                     f"{b.sum_rule_d:>10.2e} {2 * b.depletion:>9.2e} "
                     f"{r.matching.residual:>9.2e} {status}")
    return "\n".join(lines)


def run_sweep(cfg: RunConfig, jobs: int = 1, green: bool = False):
    """Run every duration, write all outputs, return (results, exit_code)."""
    out = Path(cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    header = cfg.echo()
    start = time.perf_counter()
    if green:
        results = [run_duration(cfg, float(v), keep_table=True) for v in cfg.sweep]
    else:
        results = run_sweep_results(cfg, jobs)
    kappa = cfg.physics.params().kappa
    write_csv(out / "fig3.csv", header + [HOMODYNE_NOTE], FIG3_COLUMNS,
              [fig3_row(r) for r in results])
    for r in results:
        if r.budget is None:
            continue
        if cfg.emit_profiles:
            write_profiles(out, header, r, kappa)
        if green:
            write_green(out, header, r, kappa)
        if cfg.emit_oracle:
            write_oracle(out, header, cfg, r)
    code = EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
    report = {
        "config": header,
        "homodyne": HOMODYNE_NOTE,
        "durations": [{
            "tau_total": r.tau_total,
            "error": r.error,
            "budget": r.budget.as_dict() if r.budget else None,
            "matching_residual": r.matching.residual if r.matching else None,
            "omega_max": r.control.omega_max if r.control else None,
            "regime": r.regime,
            "eta_rel_change_half_floor": r.floor_sensitivity,
            "oracle": r.oracle,
            "checks": r.checks,
            "passed": r.passed,
            "seconds": r.seconds,
        } for r in results],
        "wall_seconds": time.perf_counter() - start,
        "exit_status": code,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, allow_nan=True) + "\n")
    text = summary_table(results)
    (out / "summary.txt").write_text(text + "\n")
    print(text)
    return results, code


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig().validate()
    if getattr(args, "out", None):
        cfg = replace(cfg, outputs=args.out)
    if getattr(args, "durations", None):
        cfg = replace(cfg, sweep=parse_list(args.durations))
    if getattr(args, "grid_n", None):
        cfg = replace(cfg, grid_n=args.grid_n)
    if getattr(args, "oracle", False):
        cfg = replace(cfg, emit_oracle=True)
    return cfg.validate()


def cmd_run(args) -> int:
    cfg = _load(args)
    _, code = run_sweep(cfg, args.jobs, green=args.green)
    return code


def cmd_scaling(args) -> int:
    cfg = _load(args)
    factors = parse_list(args.factors)
    if not factors or any(f <= 0 for f in factors):
        raise ConfigError("factors must be a nonempty list of positive numbers")
    rows = scaling_table(cfg.physics.params(), args.duration, factors, cfg.grid_n,
                         cfg.control.floor_eps)
    cols = ["factor", "gdminus_ratio", "gsminus_ratio", "cov_ratio", "expected", "max_rel_dev"]
    out = Path(cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "scaling.csv", cfg.echo() + [f"sweep.scaling_duration={args.duration!r}"],
              cols, [[r[c] for c in cols] for r in rows])
    for r in rows:
        print(" ".join(f"{c}={r[c]:.12g}" for c in cols))
    return EXIT_OK if all(r["max_rel_dev"] < 1e-10 for r in rows) else EXIT_FAIL


def cmd_validate(args) -> int:
    cfg = _load(args)
    p = cfg.physics.params()
    ok = True
    for v in cfg.sweep:
        m = make_target_mode(duration_seconds(v, p), p.kappa, cfg.grid_n)
        try:
            c = synthesize(m, p, cfg.control.floor_eps, cfg.control.omega_cap_factor)
        except SynthesisError as exc:
            print(f"2kT={v:g} synthesis failed: {exc}")
            ok = False
            continue
        rate = 2.0 * p.gamma_perp * np.abs(c.control) ** 2 / p.delta ** 2
        rep = validate_regime(p, c.omega_max, m.T, cfg.control.thresholds(),
                              depletion=float(simpson(rate, x=m.t)))
        ok &= rep.passed
        checks = " ".join(f"{k}={'pass' if val else 'FAIL'}" for k, val in rep.checks.items())
        print(f"2kT={v:g} depletion={rep.depletion:.4g} bound={rep.depletion_bound:.4g} {checks}")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memsim", description="Cavity Raman memory readout simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI file with [physics] [control] [sweep] [output]")
        sp.add_argument("--out", help="output directory (overrides [output] dir)")
        sp.add_argument("--durations", help="comma list of 2*kappa*T values")
        sp.add_argument("--grid-n", type=int, dest="grid_n")

    run = sub.add_parser("run", help="duration sweep with CSV/JSON outputs")
    common(run)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--oracle", action="store_true", help="also run the first-elimination oracle")
    run.add_argument("--green", action="store_true", help="export G(t,0) tables")
    run.set_defaults(func=cmd_run)

    sc = sub.add_parser("scaling", help="check the 1/omega_sg^2 law of the luminescence noise")
    common(sc)
    sc.add_argument("--factors", default="0.5,2,4")
    sc.add_argument("--duration", type=float, default=12.0, help="2*kappa*T of the check")
    sc.set_defaults(func=cmd_scaling)

    va = sub.add_parser("validate", help="regime checks only")
    common(va)
    va.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"memsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
