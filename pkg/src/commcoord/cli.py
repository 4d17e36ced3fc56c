"""Command-line front end.

    commcoord solve --scenario table3 --rho 1
    commcoord simulate --scenario table3 --rho 1 --episodes 100000 --seed 7
    commcoord sweep --scenario table3 --rho 0,1,2,4,8 --out table3.csv
    commcoord baselines --scenario my_scenario.json
    commcoord export-pomdp --scenario table3 --rho 1 --out defense.pomdp

``--scenario`` takes a JSON scenario file or one of the built-in names
``table3`` / ``table4``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .execution.simulate import DEFAULT_TAIL_TOL, simulate
from .export import export_pomdp
from .scenario import DiscountMode, Scenario, ScenarioError, load_scenario, table3_scenario, table4_scenario
from .solver import DEFAULT_GRID, DEFAULT_VI_TOL, baseline_always, baseline_never, solve

BUILTIN = {"table3": table3_scenario, "table4": table4_scenario}
SWEEP_COLUMNS = ("rho", "Optimal", "Never-comm", "Always-comm", "optimal_iterations", "optimal_residual",
                 "never_iterations", "never_residual")


def parse_rho_list(text: str | None) -> list:
    if text is None:
        return []
    return [float(v) for v in text.replace(" ", "").split(",") if v]


def load(args) -> Scenario:
    name = args.scenario
    if name in BUILTIN and not Path(name).exists():
        s = BUILTIN[name]()
    else:
        s = load_scenario(name)
    if getattr(args, "discount_mode", None):
        s = s.replace(discount_mode=DiscountMode(args.discount_mode))
    if getattr(args, "erasure", None) is not None:
        s = s.replace(erasure_prob=args.erasure)
    if getattr(args, "no_constraints", False):
        s = s.replace(constraints=None)
    return s


def stanza(args, s: Scenario) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    return {"scenario": s.digest(), "flags": flags, "seed": getattr(args, "seed", None), "version": __version__}


def _single_rho(args, s: Scenario) -> Scenario:
    rhos = parse_rho_list(args.rho)
    if len(rhos) > 1:
        raise SystemExit("this command takes a single --rho value")
    return s.with_rho(rhos[0]) if rhos else s


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report(result) -> dict:
    rep = {k: v for k, v in result.report.items() if k != "residual_history"}
    return rep


def cmd_solve(args) -> int:
    s = _single_rho(args, load(args))
    res = solve(s, grid=args.grid, vi_tol=args.vi_tol)
    pair = s.initial_pair()
    doc = {"reproducibility": stanza(args, s), "report": _report(res),
           "initial_comm": res.policy.decide_comm(pair).render()}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_simulate(args) -> int:
    s = _single_rho(args, load(args))
    res = solve(s, grid=args.grid, vi_tol=args.vi_tol)
    sim = simulate(res.policy, s, args.episodes, seed=args.seed, tail_tol=args.tail_tol,
                   trace_path=args.trace, trace_episodes=args.trace_episodes)
    doc = {"reproducibility": stanza(args, s), "dp_value": res.value, "simulation": sim.summary()}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def sweep_rows(s: Scenario, rhos, grid: int, vi_tol: float) -> list:
    rows = []
    for rho in rhos:
        sr = s.with_rho(rho)
        opt = solve(sr, grid=grid, vi_tol=vi_tol)
        nev = baseline_never(sr, grid=grid, vi_tol=vi_tol)
        alw = baseline_always(sr, grid=grid, vi_tol=vi_tol)
        rows.append({
            "rho": rho, "Optimal": opt.value, "Never-comm": nev.value, "Always-comm": alw.value,
            "optimal_iterations": opt.report.get("iterations", ""),
            "optimal_residual": opt.report.get("residual", ""),
            "never_iterations": nev.report.get("iterations", ""),
            "never_residual": nev.report.get("residual", ""),
        })
    return rows


def format_sweep(rows, header: dict) -> str:
    buf = io.StringIO()
    for key, value in header.items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) and k in ("rho", "Optimal", "Never-comm", "Always-comm")
                             else (f"{v:.3e}" if isinstance(v, float) else v)) for k, v in row.items()})
    return buf.getvalue()


def cmd_sweep(args) -> int:
    s = load(args)
    rows = sweep_rows(s, parse_rho_list(args.rho), args.grid, args.vi_tol)
    _emit(format_sweep(rows, stanza(args, s)), args.out)
    return 0


def cmd_baselines(args) -> int:
    s = _single_rho(args, load(args))
    opt = solve(s, grid=args.grid, vi_tol=args.vi_tol)
    doc = {
        "reproducibility": stanza(args, s),
        "Optimal": opt.value,
        "Never-comm": baseline_never(s, grid=args.grid, vi_tol=args.vi_tol).value,
        "Always-comm": baseline_always(s, grid=args.grid, vi_tol=args.vi_tol).value,
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_export(args) -> int:
    s = _single_rho(args, load(args))
    header = "\n".join(f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in stanza(args, s).items())
    _emit(export_pomdp(s, header), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="commcoord", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, solver=True):
        sp.add_argument("--scenario", required=True, help="scenario JSON file or table3/table4")
        sp.add_argument("--rho", help="communication cost (comma-separated list for sweep)")
        sp.add_argument("--discount-mode", choices=[m.value for m in DiscountMode])
        sp.add_argument("--erasure", type=float, help="override the erasure probability")
        sp.add_argument("--no-constraints", action="store_true", help="drop communication constraints")
        sp.add_argument("--out", help="output path (default: stdout)")
        if solver:
            sp.add_argument("--grid", type=int, default=DEFAULT_GRID, help="grid nodes per belief axis")
            sp.add_argument("--vi-tol", type=float, default=DEFAULT_VI_TOL)

    sp = sub.add_parser("solve", help="solve and report the value at the initial belief")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("simulate", help="solve, then run decentralized Monte Carlo episodes")
    common(sp)
    sp.add_argument("--episodes", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tail-tol", type=float, default=DEFAULT_TAIL_TOL)
    sp.add_argument("--trace", help="write per-phase trace records (CSV) here")
    sp.add_argument("--trace-episodes", type=int, default=1)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="Optimal / Never-comm / Always-comm over a list of rho")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("baselines", help="compare the optimal value with both baselines")
    common(sp)
    sp.set_defaults(func=cmd_baselines)

    sp = sub.add_parser("export-pomdp", help="write the coordinator problem as a flat POMDP file")
    common(sp, solver=False)
    sp.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
