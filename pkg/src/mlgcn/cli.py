"""Command-line entry point for reproducible runs.

Subcommands: stats, train, eval, sweep, case-study. Every run is driven by
one seed flag feeding separate random streams (init / dropout / split /
synthetic), and train runs end by writing an atomic manifest that suffices
to reproduce the run.

Exit codes: 0 success, 1 divergence (or failed sweep children), 2 I/O or
parse failure, 3 checkpoint/dataset fingerprint mismatch, 4 unknown
reference (e.g. label id), 64 usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import itertools
import json
import os
import sys
import time

import numpy as np

from .datasets import (FeatureConfig, ParseError, SyntheticConfig,
                       dataset_stats, generate_synthetic, load_dataset)
from .metrics import (evaluate, label_correlation_matrix, per_label_breakdown,
                      split_dataset)
from .operators import build_operators
from .training import (DivergenceError, TrainConfig, forward_node_gcn,
                       load_checkpoint, save_checkpoint, train)

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_IO = 2
EXIT_FINGERPRINT = 3
EXIT_BAD_REF = 4
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- dataset plumbing --------------------------------------------------------

_SYNTH_KEYS = {
    "k": "communities", "communities": "communities",
    "size": "community_size", "community-size": "community_size",
    "p-intra": "p_intra", "p_intra": "p_intra",
    "p-inter": "p_inter", "p_inter": "p_inter",
    "rho": "rho",
}


def parse_synthetic_spec(spec: str, seed: int) -> SyntheticConfig:
    """Parse 'k=2,size=100,p-intra=0.1,...' into a generator config."""
    kwargs: dict = {"seed": seed}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise UsageError(f"bad synthetic parameter {item!r} (expected key=value)")
        key, value = item.split("=", 1)
        field = _SYNTH_KEYS.get(key.strip())
        if field is None:
            raise UsageError(f"unknown synthetic parameter {key!r}")
        kwargs[field] = (int(value) if field in ("communities", "community_size")
                         else float(value))
    try:
        return SyntheticConfig(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _feature_config(args, seed: int) -> FeatureConfig:
    if getattr(args, "feature_dim", None):
        return FeatureConfig(kind="gaussian", dim=args.feature_dim, seed=seed)
    return FeatureConfig()


def _file_fingerprint(h: "hashlib._Hash", path: str):
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)


def dataset_fingerprint(args, seed: int) -> str:
    """Content hash of the dataset a run trains on."""
    h = hashlib.sha256()
    if args.synthetic is not None:
        h.update(parse_synthetic_spec(args.synthetic, seed).canonical().encode())
    else:
        h.update(b"edges:")
        _file_fingerprint(h, args.edges)
        h.update(b"labels:")
        _file_fingerprint(h, args.labels)
    feats = _feature_config(args, seed)
    h.update(f"features:{feats.kind}:{feats.dim}".encode())
    return h.hexdigest()


def build_graph(args, seed: int):
    feats = _feature_config(args, seed)
    if args.synthetic is not None:
        return generate_synthetic(parse_synthetic_spec(args.synthetic, seed), feats)
    return load_dataset(args.edges, args.labels, feats, delimiter=args.delimiter)


def _add_dataset_flags(p: argparse.ArgumentParser):
    p.add_argument("--edges", help="edge-list file: src<delim>dst[<delim>weight]")
    p.add_argument("--labels", help="label file: node<delim>label")
    p.add_argument("--synthetic", metavar="SPEC",
                   help="generate a planted-partition graph, e.g. "
                        "'k=2,size=100,p-intra=0.1,p-inter=0.02,rho=0.8'")
    p.add_argument("--delimiter", default=None,
                   help="force the field delimiter (default: auto-detect)")
    p.add_argument("--feature-dim", type=int, default=0, metavar="D",
                   help="use seeded Gaussian features of this width instead of "
                        "the combined one-hot space (bounds memory on large graphs)")


def _check_dataset_flags(args):
    if args.synthetic is None and not (args.edges and args.labels):
        raise UsageError("provide --edges and --labels, or --synthetic")
    if args.synthetic is not None and (args.edges or args.labels):
        raise UsageError("--synthetic excludes --edges/--labels")


def _add_train_flags(p: argparse.ArgumentParser):
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--hidden", type=int, default=400)
    p.add_argument("--alpha", type=float, default=0.2,
                   help="labeled training ratio")
    p.add_argument("--freq-n", type=int, default=50,
                   help="epochs between node-logit injections")
    p.add_argument("--freq-m", type=int, default=50,
                   help="epochs between label-logit injections")
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--decay", type=float, default=0.0, help="weight decay")
    p.add_argument("--variant", choices=["full", "node", "1n", "2l", "gcn_baseline"],
                   default="full")
    p.add_argument("--label-layers", type=int, choices=[1, 2], default=1)
    p.add_argument("--node-layers", type=int, choices=[1, 2], default=2)
    p.add_argument("--optimizer", choices=["gd", "adam"], default="gd")
    p.add_argument("--skip-epoch0-injection", action="store_true",
                   help="do not inject at epoch 0 (features stay raw until "
                        "the first full period)")
    p.add_argument("--train-projections", action="store_true",
                   help="experimental: also train the injection projections")
    p.add_argument("--binarize-cooc", action="store_true",
                   help="binarize label co-occurrence counts")


def train_config_from_args(args) -> TrainConfig:
    try:
        return TrainConfig(
            learning_rate=args.lr, epochs=args.epochs, hidden_dim=args.hidden,
            train_ratio=args.alpha, update_freq_nodes=args.freq_n,
            update_freq_labels=args.freq_m, dropout=args.dropout,
            weight_decay=args.decay, node_gcn_layers=args.node_layers,
            label_gcn_layers=args.label_layers, variant=args.variant,
            seed=args.seed, optimizer=args.optimizer,
            skip_epoch0_injection=args.skip_epoch0_injection,
            train_projections=args.train_projections,
            binarize_cooccurrence=args.binarize_cooc)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def parse_rule(spec: str) -> tuple[str, float]:
    if spec == "topk":
        return "top_k_true", 0.5
    if spec.startswith("threshold"):
        t = 0.5
        if ":" in spec:
            try:
                t = float(spec.split(":", 1)[1])
            except ValueError:
                raise UsageError(f"bad threshold in rule {spec!r}") from None
        if not 0.0 < t < 1.0:
            raise UsageError("threshold must lie in (0, 1)")
        return "threshold", t
    raise UsageError(f"unknown rule {spec!r} (use topk or threshold:t)")


# -- output helpers ----------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_atomic(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_history_csv(path: str, history):
    # wall-clock per epoch is deliberately omitted: history files must be
    # byte-identical across reruns with the same seed
    lines = ["epoch,label_loss,node_loss,total_loss,val_micro_f1"]
    for e in range(len(history)):
        lines.append(",".join([
            str(e), _fmt(history.label_loss[e]), _fmt(history.node_loss[e]),
            _fmt(history.total_loss[e]), _fmt(history.val_micro_f1[e])]))
    write_atomic(path, "\n".join(lines) + "\n")


def write_embeddings_tsv(path: str, node_ids, embeddings: np.ndarray):
    lines = []
    for i, node in enumerate(node_ids):
        lines.append("\t".join([str(node)] + [_fmt(v) for v in embeddings[i]]))
    write_atomic(path, "\n".join(lines) + "\n")


def _report_dict(report) -> dict:
    return {
        "micro_f1": report.micro_f1,
        "macro_f1": report.macro_f1,
        "decision_rule": report.decision_rule,
        "subset_size": report.subset_size,
        "per_label": [dataclasses.asdict(s) for s in report.per_label],
    }


# -- subcommands -------------------------------------------------------------

def cmd_stats(args) -> int:
    _check_dataset_flags(args)
    # stats never touch features; a width-1 placeholder keeps memory O(n)
    feats = FeatureConfig(kind="gaussian", dim=1, seed=0)
    if args.synthetic is not None:
        g = generate_synthetic(parse_synthetic_spec(args.synthetic, args.seed), feats)
    else:
        g = load_dataset(args.edges, args.labels, feats, delimiter=args.delimiter)
    s = dataset_stats(g)
    print(f"{s.node_count} {s.edge_count} {s.label_count} {s.cooccurrence_count}")
    return EXIT_OK


def cmd_train(args) -> int:
    _check_dataset_flags(args)
    config = train_config_from_args(args)
    rule, threshold = parse_rule(args.rule)
    os.makedirs(args.out, exist_ok=True)
    t_start = time.perf_counter()

    fingerprint = dataset_fingerprint(args, config.seed)
    graph = build_graph(args, config.seed)
    split = split_dataset(graph, config.train_ratio, config.seed)

    print(f"config: lr={config.learning_rate:g} epochs={config.epochs} "
          f"d_h={config.hidden_dim} alpha={config.train_ratio:g} "
          f"N={config.update_freq_nodes} M={config.update_freq_labels} "
          f"dropout={config.dropout:g} decay={config.weight_decay:g} "
          f"variant={config.variant} optimizer={config.optimizer} "
          f"seed={config.seed}")
    print(f"dataset: n={graph.node_count} m={graph.label_count} "
          f"fingerprint={fingerprint[:12]}")

    result = train(graph, split, config, rule=rule, threshold=threshold)

    paths = {
        "checkpoint": os.path.join(args.out, "checkpoint.npz"),
        "history": os.path.join(args.out, "history.csv"),
        "embeddings": os.path.join(args.out, "embeddings.tsv"),
        "manifest": os.path.join(args.out, "manifest.json"),
    }
    save_checkpoint(paths["checkpoint"], result.model, config,
                    config.epochs, fingerprint)
    write_history_csv(paths["history"], result.history)
    write_embeddings_tsv(paths["embeddings"], graph.node_ids, result.embeddings)

    manifest = {
        "command": "train",
        "config": dataclasses.asdict(config),
        "dataset": {
            "synthetic": args.synthetic,
            "edges": args.edges,
            "labels": args.labels,
            "feature_dim": args.feature_dim,
            "fingerprint": fingerprint,
        },
        "rule": args.rule,
        "seed": config.seed,
        "artifacts": paths,
        "final_losses": {
            "label": result.history.label_loss[-1],
            "node": result.history.node_loss[-1],
            "total": result.history.total_loss[-1],
        },
        "split_sizes": split.sizes(),
        "wall_clock_seconds": time.perf_counter() - t_start,
    }
    write_atomic(paths["manifest"], json.dumps(manifest, indent=2) + "\n")
    print(f"final total loss {result.history.total_loss[-1]:.6f}; "
          f"artifacts in {args.out}")
    return EXIT_OK


def _load_checkpoint_and_graph(args):
    model, config, epoch, fingerprint = load_checkpoint(args.checkpoint)
    actual = dataset_fingerprint(args, config.seed)
    if actual != fingerprint:
        raise FingerprintMismatch(
            f"checkpoint was trained on fingerprint {fingerprint[:12]}, "
            f"dataset resolves to {actual[:12]}")
    graph = build_graph(args, config.seed)
    return model, config, graph


class FingerprintMismatch(Exception):
    pass


def _final_scores(model, config, graph) -> np.ndarray:
    operators = build_operators(graph, config.variant,
                                config.binarize_cooccurrence)
    scores, _ = forward_node_gcn(graph, operators, model, config,
                                 training=False)
    return scores


def cmd_eval(args) -> int:
    _check_dataset_flags(args)
    model, config, graph = _load_checkpoint_and_graph(args)
    split = split_dataset(graph, config.train_ratio, config.seed)
    scores = _final_scores(model, config, graph)
    truth = graph.label_assignments.to_dense()

    rule, threshold = parse_rule(args.rule)
    rules = [("top_k_true", 0.5), ("threshold", threshold)]
    if (rule, threshold) not in rules:
        rules.append((rule, threshold))

    subsets = {"train": split.train_nodes, "val": split.val_nodes,
               "test": split.test_nodes}
    results: dict[str, dict] = {}
    for name, subset in subsets.items():
        if subset.size == 0:
            continue
        results[name] = {}
        for r, t in rules:
            rep = evaluate(scores, truth, subset, rule=r, threshold=t)
            results[name][rep.decision_rule] = _report_dict(rep)

    doc = {
        "command": "eval",
        "config": dataclasses.asdict(config),
        "seed": config.seed,
        "split_sizes": split.sizes(),
        "requested_rule": args.rule,
        "results": results,
    }
    os.makedirs(os.path.dirname(os.path.abspath(args.metrics)), exist_ok=True)
    write_atomic(args.metrics, json.dumps(doc, indent=2) + "\n")
    test_block = results.get("test", {})
    for tag, block in test_block.items():
        print(f"test {tag}: micro_f1={block['micro_f1']:.4f} "
              f"macro_f1={block['macro_f1']:.4f}")
    return EXIT_OK


_GRID_FIELDS = {
    "alpha": ("train_ratio", float),
    "lr": ("learning_rate", float),
    "epochs": ("epochs", int),
    "hidden": ("hidden_dim", int),
    "freq-n": ("update_freq_nodes", int),
    "freq-m": ("update_freq_labels", int),
    "dropout": ("dropout", float),
    "decay": ("weight_decay", float),
    "variant": ("variant", str),
}


def parse_grid(specs: list[str]) -> list[tuple[str, list]]:
    grid = []
    for spec in specs:
        if "=" not in spec:
            raise UsageError(f"bad grid spec {spec!r} (expected name=v1,v2,...)")
        name, values = spec.split("=", 1)
        name = name.strip()
        if name not in _GRID_FIELDS:
            raise UsageError(f"unknown grid parameter {name!r}")
        _, cast = _GRID_FIELDS[name]
        parsed = [cast(v) for v in values.split(",") if v != ""]
        if not parsed:
            raise UsageError(f"empty grid for {name!r}")
        grid.append((name, parsed))
    if not grid:
        raise UsageError("empty parameter grid")
    return grid


def cmd_sweep(args) -> int:
    _check_dataset_flags(args)
    if args.repeats < 1:
        raise UsageError("repeats must be >= 1")
    grid = parse_grid(args.grid)
    base_config = train_config_from_args(args)
    rule, threshold = parse_rule(args.rule)
    os.makedirs(args.out, exist_ok=True)

    names = [name for name, _ in grid]
    rows = []
    any_failed = False
    for combo in itertools.product(*[values for _, values in grid]):
        overrides = {_GRID_FIELDS[name][0]: value
                     for name, value in zip(names, combo)}
        micro, macro, error = [], [], ""
        for r in range(args.repeats):
            seed = args.seed + r
            try:
                config = dataclasses.replace(base_config, seed=seed, **overrides)
                graph = build_graph(args, seed)
                split = split_dataset(graph, config.train_ratio, seed)
                result = train(graph, split, config, rule=rule,
                               threshold=threshold)
                rep = evaluate(result.embeddings,
                               graph.label_assignments.to_dense(),
                               split.test_nodes, rule=rule, threshold=threshold)
                micro.append(rep.micro_f1)
                macro.append(rep.macro_f1)
            except Exception as exc:  # recorded per row; sweep continues
                any_failed = True
                error = f"{type(exc).__name__}: {exc}"
                break
        for metric, values in (("micro_f1", micro), ("macro_f1", macro)):
            rows.append(list(combo) + [
                metric,
                _fmt(np.mean(values)) if values else "",
                _fmt(np.std(values)) if values else "",
                len(values), error])

    out_path = os.path.join(args.out, "sweep.csv")
    header = names + ["metric", "mean", "std", "repeats", "error"]
    buf = [",".join(header)]
    for row in rows:
        buf.append(",".join(str(v) for v in row))
    write_atomic(out_path, "\n".join(buf) + "\n")
    print(f"wrote {len(rows)} rows to {out_path}")
    return EXIT_DIVERGED if any_failed else EXIT_OK


def cmd_case_study(args) -> int:
    _check_dataset_flags(args)
    model, config, graph = _load_checkpoint_and_graph(args)
    wanted = [s for s in args.labels_list.split(",") if s != ""]
    index = {lab: i for i, lab in enumerate(graph.label_ids)}
    missing = [lab for lab in wanted if lab not in index]
    if missing:
        raise BadReference(f"unknown label id(s): {', '.join(missing)}")

    split = split_dataset(graph, config.train_ratio, config.seed)
    scores = _final_scores(model, config, graph)
    truth = graph.label_assignments.to_dense()
    rule, threshold = parse_rule(args.rule)
    rep = evaluate(scores, truth, split.test_nodes, rule=rule,
                   threshold=threshold)
    by_label = dict(per_label_breakdown(rep))

    print("label\tf1")
    for lab in wanted:
        print(f"{lab}\t{by_label[index[lab]]:.6f}")

    corr = label_correlation_matrix(graph.label_assignments)
    os.makedirs(os.path.dirname(os.path.abspath(args.correlation_out)),
                exist_ok=True)
    lines = [",".join(["label"] + list(graph.label_ids))]
    for i, lab in enumerate(graph.label_ids):
        lines.append(",".join([lab] + [_fmt(v) for v in corr[i]]))
    write_atomic(args.correlation_out, "\n".join(lines) + "\n")
    print(f"correlation matrix written to {args.correlation_out}")
    return EXIT_OK


class BadReference(Exception):
    pass


# -- argument wiring ---------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlgcn",
                     description="Multi-label graph convolutional networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="print dataset statistics")
    _add_dataset_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a model and write artifacts")
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rule", default="topk",
                   help="decision rule: topk or threshold:t")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    _add_dataset_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--rule", default="topk")
    p.add_argument("--metrics", required=True, help="metrics JSON output path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid sweep with repeated seeds")
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rule", default="topk")
    p.add_argument("--grid", action="append", default=[],
                   metavar="NAME=V1,V2,...",
                   help="sweep parameter (repeatable; cartesian product)")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("case-study", help="per-label F1 plus correlation matrix")
    _add_dataset_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--labels-list", required=True,
                   help="comma-separated label ids to report")
    p.add_argument("--rule", default="topk")
    p.add_argument("--correlation-out", default="correlation.csv")
    p.set_defaults(func=cmd_case_study)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FingerprintMismatch as exc:
        print(f"fingerprint mismatch: {exc}", file=sys.stderr)
        return EXIT_FINGERPRINT
    except BadReference as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_REF
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
