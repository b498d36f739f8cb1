"""Command-line frontend.

Exit codes: 0 success, 1 operational error (I/O, parse, bad arguments),
2 domain outcome (infeasible placement or invalid embedding).  Summaries
go to stdout, logs to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from sfcplace import catalog as cat_mod
from sfcplace import embedding as emb_mod
from sfcplace import harness, ilp
from sfcplace.errors import SfcPlaceError, SizeLimitError
from sfcplace.heuristic import HcaConfig, run_hca
from sfcplace.topology import default_topology, load_topology

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DOMAIN = 2


def _read(path: str) -> str:
    return Path(path).read_text()


def _load_problem(args) -> cat_mod.Scenario:
    net = (load_topology(_read(args.topology)) if args.topology
           else default_topology())
    cat = (cat_mod.load_catalog(_read(args.catalog)) if args.catalog
           else cat_mod.default_catalog())
    return cat_mod.load_scenario(_read(args.scenario), net, cat)


def _print_config(args) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(f"config: {resolved}", file=sys.stderr)


def _cmd_solve(args) -> int:
    scenario = _load_problem(args)
    config = HcaConfig(mode=args.mode)
    outcome = run_hca(scenario, config)
    if not outcome.success:
        print("infeasible")
        return EXIT_DOMAIN
    print(f"status: success")
    print(f"active_nodes: {outcome.active_nodes}")
    for sfc_id in sorted(outcome.per_sfc_latency):
        print(f"sfc {sfc_id} latency_ms: {outcome.per_sfc_latency[sfc_id]:.6f}")
    if args.out:
        Path(args.out).write_text(
            emb_mod.dump_embedding(outcome.embedding, scenario))
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario = _load_problem(args)
    emb = emb_mod.load_embedding(_read(args.embedding), scenario)
    report = emb_mod.validate(emb, scenario, mode=args.mode)
    print(report)
    return EXIT_OK if report.ok else EXIT_DOMAIN


def _cmd_export_ilp(args) -> int:
    scenario = _load_problem(args)
    model = ilp.build_model(scenario)
    Path(args.out).write_text(ilp.export_lp(model))
    print(f"wrote {args.out}: {len(model.variables)} variables, "
          f"{len(model.constraints)} constraints")
    return EXIT_OK


def _cmd_exact(args) -> int:
    scenario = _load_problem(args)
    solution = ilp.solve_exact(scenario)
    if solution.status == "infeasible":
        print("infeasible")
        return EXIT_DOMAIN
    print(f"status: optimal")
    print(f"active_nodes: {solution.objective}")
    if args.out:
        Path(args.out).write_text(
            emb_mod.dump_embedding(solution.embedding, scenario))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    spec = harness.load_experiment_spec(_read(args.spec),
                                        base_dir=Path(args.spec).parent)
    if args.seed is not None:
        from dataclasses import replace
        spec = replace(spec, seed=args.seed)
    result = harness.run_experiment(spec, jobs=args.jobs)
    threshold = 20.0 if args.filter_infeasible else None
    Path(args.out).write_text(harness.emit_csv(result, threshold))
    if args.audit:
        Path(args.audit).write_text(harness.emit_audit_csv(result))
    print(f"wrote {args.out}: {len(result.points)} grid points")
    return EXIT_OK


def _cmd_compare(args) -> int:
    spec = harness.load_experiment_spec(_read(args.spec),
                                        base_dir=Path(args.spec).parent)
    sharing, sota = harness.run_paired_comparison(spec, jobs=args.jobs)
    Path(args.out).write_text(harness.emit_comparison_csv(sharing, sota))
    print(f"wrote {args.out}: {len(sharing.points)} paired grid points")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sfcplace",
        description="Cost-aware placement of chained virtual network "
                    "functions")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_problem_flags(p):
        p.add_argument("--topology", help="topology YAML (default fixture "
                                          "when omitted)")
        p.add_argument("--catalog", help="catalog YAML (default catalog "
                                         "when omitted)")
        p.add_argument("--scenario", required=True, help="scenario YAML")

    p = sub.add_parser("solve", help="run the placement heuristic")
    add_problem_flags(p)
    p.add_argument("--mode", choices=["sharing", "sota"], default="sharing")
    p.add_argument("--out", help="write the embedding YAML here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("validate", help="check an embedding file")
    add_problem_flags(p)
    p.add_argument("--embedding", required=True)
    p.add_argument("--mode", choices=["sharing", "sota"], default="sharing")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("export-ilp", help="write the LP-format model")
    add_problem_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_ilp)

    p = sub.add_parser("exact", help="exhaustive solve of a tiny instance")
    add_problem_flags(p)
    p.add_argument("--out", help="write the optimal embedding YAML here")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("experiment", help="run a randomized sweep")
    p.add_argument("--spec", required=True, help="experiment spec YAML")
    p.add_argument("--out", required=True, help="results CSV")
    p.add_argument("--audit", help="optional per-instance CSV")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--filter-infeasible", action="store_true",
                   help="drop grid points with >= 20%% infeasible instances")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("compare",
                       help="paired sharing-vs-baseline model sweep")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags; remap to the operational code
        return EXIT_ERROR if exc.code else EXIT_OK
    _print_config(args)
    try:
        return args.func(args)
    except SizeLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (SfcPlaceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
