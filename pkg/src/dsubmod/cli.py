"""Command line entry point: ``dsubmod {run,validate-graph,greedy,check-bounds}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baselines import centralized_greedy
from .data import generate_synthetic, load_ratings
from .experiment import PRESETS, ExperimentConfig, run_experiment, summarize_bounds
from .polytope import UniformMatroid
from .setfn import facility_location
from .topology import build_graph, load_edge_list, metropolis_weights, validate_weights


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _topology_arg(raw):
    if raw in ("er", "erdos_renyi"):
        return {"kind": "erdos_renyi", "avg_degree": 5}
    if raw.startswith("{"):
        return json.loads(raw)
    return {"kind": raw}


def cmd_run(args):
    raw = {}
    if args.preset:
        raw.update(PRESETS[args.preset])
    if args.config:
        raw.update(json.loads(Path(args.config).read_text()))
    flags = {
        "n": args.n, "T_values": args.T, "k_values": args.k, "seed": args.seed,
        "mode": args.mode, "gradient_mode": args.gradient_mode, "batch": args.batch,
        "alpha": args.alpha, "phi": args.phi, "stride": args.stride, "workers": args.workers,
        "rounding": args.rounding,
    }
    raw.update({k: v for k, v in flags.items() if v is not None})
    if args.topology:
        raw["topologies"] = [_topology_arg(t) for t in args.topology]
    if args.ratings:
        raw["data"] = {"kind": "file", "path": args.ratings}
    if args.no_plots:
        raw["plots"] = False
    raw.update(_parse_set(args.set))
    if args.out:
        raw["out_dir"] = args.out
    cfg = ExperimentConfig.from_dict(raw)
    record = run_experiment(cfg)
    for c in record["cells"]:
        print(f"{c['key']:<24} beta={c['graph']['beta']:.4f} "
              f"dist={c['final_distance']:.3e} F={c['mean_fractional']:.4f} "
              f"f(S)={c['mean_rounded'] if c['mean_rounded'] is not None else float('nan'):.4f} "
              f"greedy={c['greedy_value'] if c['greedy_value'] is not None else float('nan'):.4f} "
              f"lemmas={'ok' if c['lemmas']['ok'] else 'VIOLATED'}")
    print(f"wrote {cfg.out_dir}/runrecord.json")
    return 0


def cmd_validate_graph(args):
    if args.edges:
        g = load_edge_list(args.edges)
    else:
        g = build_graph(args.kind, args.n, avg_degree=args.avg_degree, seed=args.seed)
    report = validate_weights(metropolis_weights(g), g)
    out = report.to_dict()
    out.update(n=g.n, edges=len(g.edges))
    print(json.dumps(out, indent=2))
    return 0 if report.assumption1_holds else 2


def cmd_greedy(args):
    if args.ratings:
        ratings = load_ratings(args.ratings)
    else:
        ratings = generate_synthetic(args.M, args.p, args.density, (1, 5), args.seed)
    f = facility_location(ratings, scale=1.0 / args.nodes)
    res = centralized_greedy(f, UniformMatroid(f.p, args.k))
    print(json.dumps({"k": args.k, "value": res.value, "selected": list(res.selected),
                      "gains": res.gains}, indent=2))
    return 0


def cmd_check_bounds(args):
    record = json.loads(Path(args.runrecord).read_text())
    summary = summarize_bounds(record)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if summary["ok"] else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="dsubmod", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--preset", choices=sorted(PRESETS))
    run.add_argument("--out", help="output directory")
    run.add_argument("--n", type=int)
    run.add_argument("--T", type=int, nargs="+")
    run.add_argument("--k", type=int, nargs="+")
    run.add_argument("--seed", type=int)
    run.add_argument("--topology", nargs="+", help="line, complete, er, or a JSON object")
    run.add_argument("--mode", choices=["continuous", "discrete"])
    run.add_argument("--gradient-mode", choices=["sampled", "exact-facility"])
    run.add_argument("--batch", type=int)
    run.add_argument("--alpha", type=float)
    run.add_argument("--phi", type=float)
    run.add_argument("--stride", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--rounding", choices=["pipage", "randomized", "none"])
    run.add_argument("--ratings", help="ratings file instead of synthetic data")
    run.add_argument("--no-plots", action="store_true")
    run.add_argument("--set", action="append", metavar="KEY=JSON",
                     help="override any config key")
    run.set_defaults(func=cmd_run)

    vg = sub.add_parser("validate-graph", help="check Metropolis weights on a graph")
    vg.add_argument("edges", nargs="?", help="edge-list file ('i j' per line)")
    vg.add_argument("--kind", default="line", choices=["line", "complete", "erdos_renyi"])
    vg.add_argument("--n", type=int, default=10)
    vg.add_argument("--avg-degree", type=float, default=5.0)
    vg.add_argument("--seed", type=int, default=0)
    vg.set_defaults(func=cmd_validate_graph)

    gr = sub.add_parser("greedy", help="centralized greedy baseline value")
    gr.add_argument("--ratings")
    gr.add_argument("--k", type=int, required=True)
    gr.add_argument("--nodes", type=int, default=1, help="divide the objective by this")
    gr.add_argument("--M", type=int, default=500)
    gr.add_argument("--p", type=int, default=100)
    gr.add_argument("--density", type=float, default=0.1)
    gr.add_argument("--seed", type=int, default=0)
    gr.set_defaults(func=cmd_greedy)

    cb = sub.add_parser("check-bounds", help="summarize lemma checks in a run record")
    cb.add_argument("runrecord")
    cb.set_defaults(func=cmd_check_bounds)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
