"""Command-line surface: classify, simulate, solve, compare, converge.

Every subcommand reads the model (and experiment defaults) from a config
file and writes its artifacts into --out.  Exit codes: 0 success, 1 usage
or configuration error, 2 numerical failure, 3 conditioning failure.  All
outputs are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConditioningError, ConfigError, DynsirError, NumericalError
from .harness import (
    aligned_ensemble,
    pinned_limit,
    run_convergence,
    write_convergence_csvs,
    write_report_text,
)
from .limits import (
    final_size,
    i_max_closed_form,
    ode_mixed,
    ode_strong_multi,
    ode_strong_single,
    ode_weak,
    psi_from_spec,
    renewal_from_spec,
    write_curves_csv,
)
from .params import classify_regime, limit_r0_matrix
from .simulate import simulate_model1, simulate_model3, condition_on_outbreak, write_events_csv

_SOLVER_STEP = 1e-3   # default time step for curve subcommands
_T_MAX = 40.0


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="model/experiment config file")
    common.add_argument("--seed", type=int, metavar="U64",
                        help="override the config master seed")
    common.add_argument("--out", metavar="DIR", default=".",
                        help="directory for output files (default .)")
    common.add_argument("--grid-step", type=float, metavar="H",
                        help="override solver step and comparison grid step")
    common.add_argument("--quiet", action="store_true",
                        help="suppress progress chatter")

    parser = _Parser(prog="dynsir",
                     description="dynamic-network epidemics: simulate, solve, compare")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    sub.add_parser("classify", parents=[common],
                   help="regime classification and limiting reproduction numbers")

    p = sub.add_parser("simulate", parents=[common],
                       help="one trajectory, written as an event CSV")
    p.add_argument("--model", type=int, choices=(1, 2, 3), default=3)
    p.add_argument("--n", type=int, help="population size (default: first n_list entry)")
    p.add_argument("--horizon", type=float, help="stop logging events beyond this time")
    p.add_argument("--condition", action="store_true",
                   help="restart until the outbreak threshold is reached")
    p.add_argument("--gzip", action="store_true", help="compress the event CSV")

    p = sub.add_parser("ode", parents=[common], help="limit curves by ODE integration")
    p.add_argument("--system", choices=("weak", "strong", "mixed"), default="mixed")
    p.add_argument("--t-max", type=float, default=_T_MAX)

    p = sub.add_parser("renewal", parents=[common],
                       help="limit curves by the renewal-equation march")
    p.add_argument("--t-max", type=float, default=_T_MAX)

    sub.add_parser("psi", parents=[common],
                   help="fixed-point transform of the limit curve vs growth scale")

    sub.add_parser("finalsize", parents=[common],
                   help="ultimate susceptible fraction and attack rate")

    sub.add_parser("imax", parents=[common],
                   help="closed-form peak infected fraction (single type)")

    p = sub.add_parser("compare", parents=[common],
                       help="conditioned ensemble vs pinned limit curve")
    p.add_argument("--model", type=int, choices=(1, 2, 3), default=3)
    p.add_argument("--n", type=int, help="population size (default: first n_list entry)")
    p.add_argument("--runs", type=int, default=20)

    sub.add_parser("convergence", parents=[common],
                   help="full convergence report over the configured sizes")
    return parser


def _load(args):
    if not args.config:
        raise ConfigError("--config PATH is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    if args.grid_step is not None:
        cfg = dataclasses.replace(cfg, grid_step=args.grid_step)
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(args, msg: str):
    if not args.quiet:
        print(msg)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_classify(args) -> int:
    cfg = _load(args)
    spec = cfg.spec
    report = classify_regime(spec)
    lines = []
    for pr in report.pairs:
        kind = "homogeneous" if pr.homogeneous else "non-homogeneous"
        if pr.limit_r0 is None:
            tail = f"R0 undefined ({pr.degenerate}: {pr.diagnostic})"
        else:
            tail = f"R0={pr.limit_r0:.6f}"
        prefix = "" if spec.k == 1 else f"pair ({pr.i},{pr.j}): "
        lines.append(f"{prefix}case {pr.case_label}, {kind}, {tail}")
    lines.append(f"scaling constraints satisfied: {report.overall_ok}; "
                 f"decay-rate inequalities: {report.tv_rate_ok} "
                 f"(threshold {report.threshold:.6g})")
    print("\n".join(lines))
    out = _outdir(args)
    payload = {
        "k": spec.k,
        "threshold": report.threshold,
        "overall_ok": report.overall_ok,
        "tv_rate_ok": report.tv_rate_ok,
        "pairs": [dataclasses.asdict(pr) for pr in report.pairs],
    }
    (out / "classify.json").write_text(json.dumps(payload, indent=2,
                                                  sort_keys=True) + "\n")
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    n = args.n or cfg.n_list[0]
    out = _outdir(args)
    if args.condition:
        traj = condition_on_outbreak(cfg.spec, n, cfg.master_seed,
                                     cfg.threshold_exponent,
                                     model=f"M{args.model}")
    elif args.model == 3:
        traj = simulate_model3(cfg.spec, n, cfg.master_seed, horizon=args.horizon)
    else:
        traj = simulate_model1(cfg.spec, n, cfg.master_seed, horizon=args.horizon,
                               reset_on_infection=args.model == 2)
    name = f"events_{traj.model_tag.lower()}_n{n}.csv" + (".gz" if args.gzip else "")
    write_events_csv(traj, out / name, compress=args.gzip)
    _say(args, f"{traj.model_tag} n={n}: {traj.ever_infected} ever infected "
               f"({traj.event_count} events), outbreak={traj.outbreak}"
               + (f", discards={traj.discards}" if traj.discards is not None else ""))
    _say(args, f"wrote {out / name}")
    return 0


def _grid(args, t_max: float) -> tuple[float, float]:
    return (t_max, args.grid_step if args.grid_step is not None else _SOLVER_STEP)


def _cmd_ode(args) -> int:
    cfg = _load(args)
    spec = cfg.spec
    grid = _grid(args, args.t_max)
    if args.system == "weak":
        curves = ode_weak(limit_r0_matrix(spec), spec.gamma, spec.p, grid=grid)
    elif args.system == "strong":
        if spec.k == 1:
            curves = ode_strong_single(float(spec.lam[0, 0]), float(spec.mu[0, 0]),
                                       float(spec.beta[0, 0]), float(spec.gamma[0]),
                                       grid=grid)
        else:
            curves = ode_strong_multi(spec, grid=grid)
    else:
        curves = ode_mixed(spec, grid=grid)
    out = _outdir(args)
    path = out / f"ode_{args.system}.csv"
    write_curves_csv(curves, path)
    s_end = ", ".join(_fmt(curves.s[nu, -1]) for nu in range(spec.k))
    _say(args, f"{args.system} system integrated to t={args.t_max:g}; "
               f"final s: {s_end}")
    _say(args, f"wrote {path}")
    return 0


def _cmd_renewal(args) -> int:
    cfg = _load(args)
    curves = renewal_from_spec(cfg.spec, grid=_grid(args, args.t_max))
    out = _outdir(args)
    path = out / "renewal.csv"
    write_curves_csv(curves, path)
    s_end = ", ".join(_fmt(v) for v in curves.s[:, -1])
    _say(args, f"renewal march to t={args.t_max:g}; final s: {s_end}")
    _say(args, f"wrote {path}")
    return 0


def _cmd_psi(args) -> int:
    cfg = _load(args)
    psi = psi_from_spec(cfg.spec)
    out = _outdir(args)
    path = out / "psi.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z"] + [f"psi_{nu}" for nu in range(psi.k)])
        for col in range(len(psi.z_grid)):
            w.writerow([_fmt(psi.z_grid[col])]
                       + [_fmt(psi.psi[nu, col]) for nu in range(psi.k)])
    plateau = ", ".join(_fmt(v) for v in psi.plateau)
    _say(args, f"growth rate {psi.alpha_hat:.10g}; plateau (final s): {plateau}; "
               f"{psi.sweeps} sweeps")
    _say(args, f"wrote {path}")
    return 0


def _cmd_finalsize(args) -> int:
    cfg = _load(args)
    spec = cfg.spec
    fs = final_size(limit_r0_matrix(spec), p=spec.p)
    if spec.k == 1:
        print(f"s_inf={fs.s_inf[0]:.6f}, attack={fs.attack[0]:.6f}")
    else:
        for nu in range(spec.k):
            print(f"type {nu}: s_inf={fs.s_inf[nu]:.6f}, attack={fs.attack[nu]:.6f}")
        total = float(spec.p @ fs.attack)
        print(f"population attack rate: {total:.6f}")
    return 0


def _cmd_imax(args) -> int:
    cfg = _load(args)
    spec = cfg.spec
    if spec.k != 1:
        raise ConfigError("imax closed form applies to single-type models only")
    r0 = float(limit_r0_matrix(spec)[0, 0])
    try:
        value = i_max_closed_form(r0)
    except ValueError as exc:
        raise NumericalError(str(exc)) from exc
    print(f"i_max={value:.6f} (R0={r0:.6f})")
    return 0


def _cmd_compare(args) -> int:
    cfg = _load(args)
    spec = cfg.spec
    n = args.n or cfg.n_list[0]
    u = cfg.u_grid()
    curves, t_pin = pinned_limit(spec, cfg.pin_level, u)
    limit = {c: curves.sample(c, t_pin + u) for c in ("s", "i", "r")}
    mean, se, run_sups, discards, _events, _finals = aligned_ensemble(
        spec, n, args.runs, cfg.master_seed, u,
        threshold_exponent=cfg.threshold_exponent, pin_level=cfg.pin_level,
        model=f"M{args.model}", limit_samples=limit,
        progress=None if args.quiet else print)
    out = _outdir(args)
    csv_path = out / "compare.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["u"]
        for nu in range(spec.k):
            header += [f"s_sim_{nu}", f"i_sim_{nu}", f"r_sim_{nu}",
                       f"s_limit_{nu}", f"i_limit_{nu}", f"r_limit_{nu}"]
        w.writerow(header)
        for col, uval in enumerate(u):
            row = [_fmt(uval)]
            for nu in range(spec.k):
                row += [_fmt(mean[c][nu, col]) for c in ("s", "i", "r")]
                row += [_fmt(limit[c][nu, col]) for c in ("s", "i", "r")]
            w.writerow(row)
    gp_path = out / "compare.gp"
    plots = []
    for nu in range(spec.k):
        base = 1 + 6 * nu
        for off, c in enumerate(("s", "i", "r")):
            plots.append(f"'compare.csv' using 1:{base + 1 + off} with lines "
                         f"title '{c} sim {nu}'")
            plots.append(f"'compare.csv' using 1:{base + 4 + off} with lines "
                         f"dashtype 2 title '{c} limit {nu}'")
    gp_path.write_text(
        "set datafile separator ','\n"
        "set xlabel 'u (time from pin)'\n"
        "set ylabel 'fraction'\n"
        "set key outside\n"
        "plot " + ", \\\n     ".join(plots) + "\n")
    worst = max(float(np.max(np.abs(mean[c] - limit[c]))) for c in ("s", "i", "r"))
    _say(args, f"M{args.model} n={n} x{args.runs} runs (discards {discards}): "
               f"sup |mean - limit| = {worst:.5f}")
    _say(args, f"wrote {csv_path} and {gp_path}")
    return 0


def _cmd_convergence(args) -> int:
    cfg = _load(args)
    report = run_convergence(cfg, progress=None if args.quiet else print)
    out = _outdir(args)
    paths = write_convergence_csvs(report, out)
    paths.append(write_report_text(report, out / "convergence_report.txt"))
    verdict = "nonincreasing" if report.monotone_ok else "NOT nonincreasing"
    _say(args, f"sup-distances {verdict} in n (2 SE slack); "
               f"wrote {len(paths)} files to {out}")
    return 0


_DISPATCH = {
    "classify": _cmd_classify,
    "simulate": _cmd_simulate,
    "ode": _cmd_ode,
    "renewal": _cmd_renewal,
    "psi": _cmd_psi,
    "finalsize": _cmd_finalsize,
    "imax": _cmd_imax,
    "compare": _cmd_compare,
    "convergence": _cmd_convergence,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:   # help (0) or usage error (1, via _Parser.error)
        code = exc.code
        return code if isinstance(code, int) else 0
    try:
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except ConditioningError as exc:
        print(f"conditioning failure: {exc} (discarded {exc.discards})",
              file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, DynsirError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
