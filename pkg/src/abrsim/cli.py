"""Command line front end: run, compare, oracle.

Exit codes: 0 all requested work completed, 1 a run or parse failed,
2 usage error.  The default output directory is $ABRSIM_OUT or ./out.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import metrics, scenarios, simcore
from .errors import AbrsimError, ParseError
from .maxmin import solve_maxmin
from .scenarios import ALGORITHMS, Scenario


def _default_out() -> str:
    return os.environ.get("ABRSIM_OUT", "out")


def _load_scenario(args) -> Scenario:
    if args.builtin is not None:
        sc = scenarios.builtin(args.builtin)
    else:
        try:
            with open(args.scenario, encoding="utf-8") as f:
                text = f.read()
        except OSError as exc:
            raise ParseError(f"cannot read scenario file {args.scenario}: {exc.strerror}")
        sc = scenarios.parse_scenario(text, source=args.scenario)
    duration = getattr(args, "duration", None)
    if duration is not None:
        sc = replace(sc, sim_duration_s=duration)
        scenarios.validate_scenario(sc)
    return sc


def _oracle_rates(sc: Scenario):
    result = solve_maxmin(scenarios.to_allocation_problem(sc))
    return result.per_flow, result.bottleneck_of


def _summarize(sc: Scenario, trace) -> tuple[list[str], dict]:
    """Steady-state report lines plus the numbers the compare table reuses."""
    oracle, _ = _oracle_rates(sc)
    summary = metrics.steady_state_summary(trace)
    lines = []
    lines.append(f"{'vc':<8}{'mean acr':>12}{'oracle':>12}{'ratio':>9}")
    ratios = []
    for vc in sc.vcs:
        vid = vc.vc_id
        mean = summary.vc_mean_acr.get(vid)
        want = oracle[vid]
        if mean is None:
            lines.append(f"{vid:<8}{'-':>12}{want:>12.3f}{'-':>9}")
            continue
        ratio = mean / want
        ratios.append(ratio)
        lines.append(f"{vid:<8}{mean:>12.3f}{want:>12.3f}{ratio:>9.3f}")
    row = {"vc_means": dict(summary.vc_mean_acr)}
    if ratios:
        jain = metrics.jain_fairness_index(ratios)
        lines.append(f"jain index on oracle ratios: {jain:.4f}")
        row["jain"] = jain
    if summary.port_mean_z:
        port = metrics.bottleneck_port(summary)
        row["n_eff"] = summary.port_mean_n_eff[port]
        row["max_queue"] = max(summary.port_max_queue.values())
        lines.append(
            f"bottleneck port {port}: z {summary.port_mean_z[port]:.4f}"
            f"  n_eff {summary.port_mean_n_eff[port]:.4f}"
            f"  fair share {summary.port_mean_fair_share[port]:.3f}"
            f"  max queue {row['max_queue']}"
        )
    return lines, row


def cmd_run(args) -> int:
    sc = _load_scenario(args)
    if args.alg is not None:
        sc = scenarios.with_algorithm(sc, args.alg)
    trace = simcore.run(sc)
    acr_path, port_path = metrics.write_csv(trace, args.out)
    algs = ",".join(sorted({sw.algorithm for sw in sc.switches}))
    print(f"scenario {sc.name}  algorithm {algs}  duration {sc.sim_duration_s:g} s")
    print(f"wrote {acr_path} and {port_path}")
    lines, _ = _summarize(sc, trace)
    for line in lines:
        print(line)
    return 0


def cmd_compare(args) -> int:
    sc = _load_scenario(args)
    rows = []
    failed = []
    for alg in args.alg:
        try:
            variant = scenarios.with_algorithm(sc, alg)
            trace = simcore.run(variant)
            metrics.write_csv(trace, os.path.join(args.out, alg))
            _, row = _summarize(variant, trace)
            rows.append((alg, row))
        except AbrsimError as exc:
            failed.append(alg)
            print(f"{alg}: {type(exc).__name__}: {exc}", file=sys.stderr)
    if rows:
        vc_ids = [vc.vc_id for vc in sc.vcs]
        head = f"{'algorithm':<22}" + "".join(f"{v:>10}" for v in vc_ids)
        print(head + f"{'n_eff':>9}{'jain':>8}{'max_q':>8}")
        for alg, row in rows:
            cells = "".join(
                f"{row['vc_means'].get(v, float('nan')):>10.3f}" for v in vc_ids
            )
            print(
                f"{alg:<22}" + cells
                + f"{row.get('n_eff', float('nan')):>9.3f}"
                + f"{row.get('jain', float('nan')):>8.4f}"
                + f"{row.get('max_queue', 0):>8d}"
            )
    return 1 if failed else 0


def cmd_oracle(args) -> int:
    sc = _load_scenario(args)
    per_flow, bottleneck = _oracle_rates(sc)
    print(f"{'vc':<8}{'allocation':>12}  bottleneck")
    total = 0.0
    for vc in sc.vcs:
        rate = per_flow[vc.vc_id]
        total += rate
        print(f"{vc.vc_id:<8}{rate:>12.3f}  {bottleneck[vc.vc_id]}")
    print(f"total {total:.3f} across {len(sc.vcs)} vcs")
    return 0


def _add_scenario_args(sub, with_duration=True):
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--builtin", help="built-in scenario name (fig2, fig3)")
    group.add_argument("--scenario", help="path to a scenario file")
    if with_duration:
        sub.add_argument(
            "--duration", type=float, help="override sim duration in seconds"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abrsim",
        description="Explicit-rate flow control simulator and allocation tools.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="simulate one scenario and write CSV traces")
    _add_scenario_args(p_run)
    p_run.add_argument("--alg", choices=ALGORITHMS, help="override switch algorithm")
    p_run.add_argument("--out", default=_default_out(), help="output directory")
    p_run.add_argument(
        "--seed", type=int, default=0,
        help="reserved for randomized workloads; current sources are deterministic",
    )
    p_run.set_defaults(func=cmd_run)

    p_cmp = subs.add_parser("compare", help="run several algorithms side by side")
    _add_scenario_args(p_cmp)
    p_cmp.add_argument(
        "--alg", choices=ALGORITHMS, action="append", required=True,
        help="algorithm to include (repeat; at least two)",
    )
    p_cmp.add_argument("--out", default=_default_out(), help="output directory")
    p_cmp.add_argument("--seed", type=int, default=0, help=argparse.SUPPRESS)
    p_cmp.set_defaults(func=cmd_compare)

    p_or = subs.add_parser("oracle", help="print the max-min allocation for a scenario")
    _add_scenario_args(p_or, with_duration=False)
    p_or.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "compare" and len(args.alg) < 2:
        parser.error("compare needs at least two --alg values")
    try:
        return args.func(args)
    except AbrsimError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
