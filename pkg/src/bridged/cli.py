"""Command-line entry point.

    bridged run <config>
    bridged oracle-suite
    bridged gen <generator> [options]
    bridged diag <trace.csv>

Exit codes: 0 success, 1 a check or run failed, 2 usage or config error.
"""
import argparse
import os
import sys

import numpy as np

from bridged import data as bdata
from bridged.config import DEFAULT_OUTPUT, OUTPUT_ENV, load_config
from bridged.errors import BridgedError, ConfigError, InvalidInputError
from bridged.experiments import format_sections

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

GENERATORS = ("lqe", "bmmc", "cox", "flow", "harmonization")


def _output_root(arg):
    return arg or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT


# -- run ------------------------------------------------------------------------------

def cmd_run(args):
    from bridged.experiments import run_experiment

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.output_dir:
        cfg.output_dir = args.output_dir
    try:
        _, paths = run_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, InvalidInputError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BridgedError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for key in sorted(paths):
        print(f"{key}: {paths[key]}")
    return EXIT_OK


# -- oracle suite ---------------------------------------------------------------------

def cmd_oracle_suite(args):
    from bridged.oracle_suite import run_suite

    results = run_suite()
    for c in results:
        print(c.line())
    failed = sum(not c.passed for c in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


# -- generators -----------------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                              for v in r) + "\n")


def cmd_gen(args):
    out = args.out or os.path.join(_output_root(None), f"gen-{args.generator}-{args.seed}")
    os.makedirs(out, exist_ok=True)
    g = args.generator
    if g == "lqe":
        d = bdata.gen_lqe_data(args.n or 1000, args.seed)
        _write_csv(os.path.join(out, "lqe.csv"), ["x", "y"], zip(d.x, d.y))
    elif g == "bmmc":
        d = bdata.gen_bmmc_toy(args.n_labeled, args.n_unlabeled, args.seed)
        masked = np.zeros(d.labels.size, dtype=int)
        masked[d.unlabeled] = 1
        p = d.X.shape[1]
        rows = [list(x) + [lab, m] for x, lab, m in zip(d.X, d.labels, masked)]
        _write_csv(os.path.join(out, "bmmc.csv"), [f"x{j}" for j in range(p)] + ["label", "masked"],
                   rows)
    elif g == "cox":
        d = bdata.gen_cox_data(args.n or 500, args.seed, lam0=args.lam0)
        _write_csv(os.path.join(out, "cox.csv"), ["time", "x"], zip(d.times, d.x))
    elif g == "flow":
        d = bdata.gen_flow_network(args.nodes, args.seed, n_uncertain=args.n_uncertain,
                                   n_rep=args.n_rep)
        net = d.net
        unc = np.zeros(net.n_edges, dtype=int)
        unc[net.uncertain] = 1
        _write_csv(os.path.join(out, "edges.csv"), ["tail", "head", "capacity", "uncertain", "flow"],
                   zip(net.tail, net.head, net.capacity, unc, d.z_true))
        _write_csv(os.path.join(out, "observations.csv"), [f"e{j}" for j in range(net.n_edges)],
                   d.Y)
    else:
        d = bdata.gen_harmonization_synthetic(args.subjects, args.regions, seed=args.seed)
        for s, L in enumerate(d.laplacians):
            with open(os.path.join(out, f"subject_{s:03d}.csv"), "w", newline="\n") as fh:
                for row in L:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")
        _write_csv(os.path.join(out, "groups.txt"), ["subject", "group"],
                   zip(range(len(d.groups)), d.groups))
    print(out)
    return EXIT_OK


# -- diagnostics ----------------------------------------------------------------------

def read_trace(path):
    """Header names and draws from a trace file, skipping ``#`` comment lines."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ConfigError(f"{path}: empty trace")
    names = lines[0].split(",")
    try:
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    except ValueError:
        raise ConfigError(f"{path}: non-numeric entry") from None
    if any(len(r) != len(names) for r in rows):
        raise ConfigError(f"{path}: rows do not match the header")
    return names, np.array(rows, dtype=float).reshape(len(rows), len(names))


def cmd_diag(args):
    from bridged.diagnostics import ESS_MIN_LENGTH, ess, ks_normal

    try:
        names, X = read_trace(args.trace)
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sections = {"trace": {"path": args.trace, "draws": str(X.shape[0])}}
    for j, name in enumerate(names):
        col = X[:, j]
        sec = {"mean": repr(float(col.mean())), "variance": repr(float(col.var()))}
        if X.shape[0] >= ESS_MIN_LENGTH and col.std() > 0:
            sec["ess"] = repr(float(ess(col)))
            sec["ks_normal"] = repr(ks_normal(col))
        sections[f"param:{name}"] = sec
    sys.stdout.write(format_sections(sections))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="bridged", description="Bridged posterior experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a config file")
    r.add_argument("config")
    r.add_argument("--output-dir", default=None,
                   help=f"overrides the config and ${OUTPUT_ENV}")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle-suite", help="run closed-form and duality checks")
    o.set_defaults(func=cmd_oracle_suite)

    g = sub.add_parser("gen", help="write a synthetic dataset")
    g.add_argument("generator", choices=GENERATORS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None, help="output directory")
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--lam0", type=float, default=0.8)
    g.add_argument("--nodes", type=int, default=40)
    g.add_argument("--n-uncertain", type=int, default=5)
    g.add_argument("--n-rep", type=int, default=500)
    g.add_argument("--n-labeled", type=int, default=30)
    g.add_argument("--n-unlabeled", type=int, default=6)
    g.add_argument("--subjects", type=int, default=20)
    g.add_argument("--regions", type=int, default=24)
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("diag", help="summarise a trace file")
    d.add_argument("trace")
    d.set_defaults(func=cmd_diag)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except BridgedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
