"""Command-line front end: ``brai learn | map | sample | features | bench``.

Every command writes one JSON run manifest: next to ``--out`` when given,
to ``--manifest`` when given, otherwise to stderr. Exit codes are 0 on
success, 2 on usage errors and 1 on runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import FEATURE_KINDS, all_feature_posteriors, auc, feature_matrix
from .citest import CiBudget
from .dataset import DataParseError, load_csv, load_network, load_schema
from .ggt import BraiConfig, BuildContext, GgtFormatError, build_tree, deserialize, serialize, tree_stats
from .experiments import bench_grid, summarize, thread_count
from .graph import DEFAULT_ENUMERATION_CAP, EnumerationCapError
from .sampler import map_cpdag, sample_cpdag, top_k_paths

log = logging.getLogger("brai")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return v


def _int_list(text):
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="brai", description="Bootstrap RAI: learn and query graph generative trees.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--manifest", help="manifest path (default: <out>.manifest.json or stderr)")

    lp = sub.add_parser("learn", help="build a tree from a data CSV")
    lp.add_argument("--data", required=True)
    lp.add_argument("--schema")
    lp.add_argument("--s", type=_positive_int, default=3)
    lp.add_argument("--ess", type=_positive_float, default=1.0)
    lp.add_argument("--seed", type=_nonneg_int, default=0)
    lp.add_argument("--max-order", type=_nonneg_int)
    lp.add_argument("--out", required=True)
    common(lp)

    mp = sub.add_parser("map", help="highest-scoring CPDAG of a tree")
    mp.add_argument("--ggt", required=True)
    mp.add_argument("--out")
    common(mp)

    sp = sub.add_parser("sample", help="draw CPDAGs from a tree")
    sp.add_argument("--ggt", required=True)
    sp.add_argument("-m", type=_positive_int, default=1)
    sp.add_argument("--gamma", type=_positive_float, default=1.0)
    sp.add_argument("--seed", type=_nonneg_int, default=0)
    sp.add_argument("--out")
    common(sp)

    fp = sub.add_parser("features", help="feature posteriors over the k best CPDAGs")
    fp.add_argument("--ggt", required=True)
    fp.add_argument("--k", type=_positive_int, default=10)
    fp.add_argument("--truth", help="ground-truth network file for AUC")
    fp.add_argument("--cap", type=_positive_int, default=DEFAULT_ENUMERATION_CAP,
                    help="maximum DAGs enumerated per CPDAG")
    fp.add_argument("--out")
    common(fp)

    bp = sub.add_parser("bench", help="data-size / CI-budget experiment grid")
    bp.add_argument("--truth", required=True, help="ground-truth network file")
    bp.add_argument("--grid-sizes", type=_int_list, default=[50, 100, 500])
    bp.add_argument("--grid-seeds", type=_int_list, default=list(range(10)))
    bp.add_argument("--arm", choices=("brai", "classic"), default="brai")
    bp.add_argument("--s", type=_positive_int, default=3)
    bp.add_argument("--l", type=_positive_int,
                    help="classic arm: fixed number of bootstrap runs (default: match the tree's budget)")
    bp.add_argument("--ess", type=_positive_float, default=1.0)
    bp.add_argument("--max-order", type=_nonneg_int)
    bp.add_argument("--holdout", type=_positive_int, default=5000)
    bp.add_argument("--out", required=True, help="output directory")
    common(bp)
    return p


# --------------------------------------------------------------------------
# Manifest
# --------------------------------------------------------------------------

def _write_manifest(args, record: dict) -> None:
    text = json.dumps(record, indent=1, sort_keys=True) + "\n"
    if args.manifest:
        Path(args.manifest).write_text(text)
    elif getattr(args, "out", None) and args.command != "bench":
        Path(args.out + ".manifest.json").write_text(text)
    elif args.command == "bench":
        Path(args.out, "manifest.json").write_text(text)
    else:
        sys.stderr.write(text)


def _manifest(command, config, fingerprint, budget: CiBudget | None, seconds, **extra):
    rec = {
        "command": command,
        "config": config,
        "dataset_fingerprint": fingerprint,
        "ci_tests": None if budget is None else budget.count,
        "ci_tests_by_order": None if budget is None else {str(k): v for k, v in sorted(budget.by_order.items())},
        "wall_seconds": round(seconds, 6),
    }
    rec.update(extra)
    return rec


def _load_tree(path):
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise RuntimeError(f"cannot read {path}: {e}")
    return deserialize(blob)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_learn(args) -> int:
    t0 = time.perf_counter()
    schema = load_schema(args.schema) if args.schema else None
    data = load_csv(args.data, schema)
    cfg = BraiConfig(s=args.s, ess=args.ess, seed=args.seed, max_order=args.max_order)
    ctx = BuildContext(cfg)
    root = build_tree(data, cfg, ctx)
    Path(args.out).write_bytes(serialize(root, data.variable_names, cfg, data))
    stats = tree_stats(root)
    _write_manifest(args, _manifest(
        "learn", {"s": cfg.s, "ess": cfg.ess, "seed": cfg.seed, "max_order": cfg.max_order},
        data.fingerprint(), ctx.budget, time.perf_counter() - t0,
        tree=stats, forced_extensions=ctx.forced_extensions, output=args.out))
    return EXIT_OK


def _cpdag_block(g, names, score, label=None) -> str:
    head = f"# score {score!r}" + (f" {label}" if label else "")
    return head + "\n" + g.to_text(names)


def cmd_map(args) -> int:
    t0 = time.perf_counter()
    root, header = _load_tree(args.ggt)
    names = header["variables"]
    best = map_cpdag(root)
    _emit(_cpdag_block(best.cpdag, names, best.score), args.out)
    _write_manifest(args, _manifest("map", header.get("config"), _fp(header), None,
                                    time.perf_counter() - t0, score=best.score))
    return EXIT_OK


def _fp(header):
    return (header.get("dataset") or {}).get("fingerprint")


def cmd_sample(args) -> int:
    t0 = time.perf_counter()
    root, header = _load_tree(args.ggt)
    names = header["variables"]
    rng = np.random.default_rng(args.seed)
    blocks, scores = [], []
    for i in range(args.m):
        m = sample_cpdag(root, args.gamma, rng)
        scores.append(m.score)
        blocks.append(_cpdag_block(m.cpdag, names, m.score, f"sample {i}"))
    _emit("".join(blocks), args.out)
    cfg = dict(header.get("config") or {}, gamma=args.gamma, sample_seed=args.seed, m=args.m)
    _write_manifest(args, _manifest("sample", cfg, _fp(header), None, time.perf_counter() - t0,
                                    scores=scores))
    return EXIT_OK


def cmd_features(args) -> int:
    t0 = time.perf_counter()
    root, header = _load_tree(args.ggt)
    names = header["variables"]
    top = top_k_paths(root, args.k)
    if top.shortfall:
        log.warning("tree holds only %d distinct CPDAGs (k=%d)", len(top), args.k)
    post = all_feature_posteriors(list(top), FEATURE_KINDS, args.cap)
    truth = None
    if args.truth:
        truth = load_network(args.truth)
        if list(truth.variable_names) != list(names):
            raise UsageError("truth network variables do not match the tree")
    labels = {}
    if truth is not None:
        labels = {k: feature_matrix(k, truth.graph) for k in FEATURE_KINDS}
    rows = []
    for p in post:
        f = p.feature
        lab = "" if truth is None else int(labels[f.kind][f.x, f.y])
        rows.append((f.kind, names[f.x], names[f.y], repr(p.probability), lab))
    out = _csv_text(("kind", "x", "y", "posterior", "label"), rows)
    aucs = {}
    if truth is not None:
        for kind in FEATURE_KINDS:
            try:
                aucs[kind] = auc(post, truth, kind)
            except ValueError:
                aucs[kind] = None
        out += "".join(f"# auc {k} {'' if v is None else repr(v)}\n" for k, v in aucs.items())
    _emit(out, args.out)
    cfg = dict(header.get("config") or {}, k=args.k, cap=args.cap)
    _write_manifest(args, _manifest("features", cfg, _fp(header), None, time.perf_counter() - t0,
                                    models=len(top), shortfall=top.shortfall, auc=aucs))
    return EXIT_OK


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


BENCH_COLUMNS = ("n_rows", "seed", "arm", "s", "l", "unique_cpdags", "ci_tests", "map_score",
                 "heldout_loglik", "skeleton_f1", "seconds")


def cmd_bench(args) -> int:
    t0 = time.perf_counter()
    net = load_network(args.truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = bench_grid(net, args.grid_sizes, args.grid_seeds, arm=args.arm, s=args.s, l=args.l,
                      ess=args.ess, holdout=args.holdout, max_order=args.max_order)
    total = CiBudget()
    for r in rows:
        total.merge(r.pop("_budget"))
    (out / "cells.csv").write_text(
        _csv_text(BENCH_COLUMNS, [[r[c] for c in BENCH_COLUMNS] for r in rows]))
    summary = summarize(rows)
    keys = sorted({k for rec in summary for k in rec}, key=lambda k: (k not in ("n_rows", "runs"), k))
    (out / "summary.csv").write_text(
        _csv_text(keys, [[rec.get(k, "") for k in keys] for rec in summary]))
    (out / "budget.csv").write_text(total.report())
    cfg = {"arm": args.arm, "s": args.s, "l": args.l, "ess": args.ess, "seeds": args.grid_seeds,
           "sizes": args.grid_sizes, "holdout": args.holdout, "max_order": args.max_order,
           "threads": thread_count()}
    _write_manifest(args, _manifest("bench", cfg, None, total, time.perf_counter() - t0,
                                    cells=len(rows)))
    return EXIT_OK


COMMANDS = {"learn": cmd_learn, "map": cmd_map, "sample": cmd_sample,
            "features": cmd_features, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"brai {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (GgtFormatError, DataParseError, EnumerationCapError, OSError, RuntimeError, ValueError) as e:
        print(f"brai {args.command}: error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
