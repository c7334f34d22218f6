"""Command-line entry point.

Subcommands: validate, label, train, infer, eval, inspect, count-params,
gradcheck. Exit codes: 0 success, 1 usage error, 2 data/format error.
``ATTNSUM_SEED`` serves as the fallback seed when no --seed (or config
seed) is given; ``--quiet`` suppresses timing lines so reruns are
byte-identical on stdout.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .errors import AttnsumError, ConfigError
from .gcn_core import ModelDims
from .graph_extract import UNIFORM, build_graphs
from . import bundle_io, eval_harness, oracle, training

GRADCHECK_BOUND = 1e-4


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fallback_seed(explicit: int | None, config_seed: int | None = None) -> int:
    if explicit is not None:
        return explicit
    if config_seed is not None:
        return config_seed
    env = os.environ.get("ATTNSUM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"ATTNSUM_SEED must be an integer, got {env!r}") from None
    return 0


def _threshold_policy(raw: str):
    if raw == UNIFORM:
        return UNIFORM
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(
            f"threshold must be 'uniform' or a number in (0, 1), got {raw!r}"
        ) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="attnsum", description=__doc__)
    parser.add_argument("--quiet", action="store_true", help="suppress timing lines")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker cap for per-document stages")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check every bundle in a corpus directory")
    p.add_argument("directory")

    p = sub.add_parser("label", help="write oracle labels into a corpus")
    p.add_argument("directory")
    p.add_argument("--refs", required=True)
    p.add_argument("--k", default="avg", help="avg or fixed:<n>")

    p = sub.add_parser("train", help="train on a labeled corpus")
    p.add_argument("directory")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--history", help="history CSV path (default <out>.history.csv)")

    p = sub.add_parser("infer", help="print the selected sentences for one bundle")
    p.add_argument("--model", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--threshold", default=UNIFORM)

    p = sub.add_parser("eval", help="mean ROUGE report for a model or Lead baseline")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model")
    group.add_argument("--lead", type=int)
    p.add_argument("directory")
    p.add_argument("--refs", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--min-sents", type=int)
    p.add_argument("--max-sents", type=int)
    p.add_argument("--csv", help="write the per-document CSV here")
    p.add_argument("--threshold", default=UNIFORM)

    p = sub.add_parser("inspect", help="edge counts, degree histogram, DOT dump")
    p.add_argument("bundle")
    p.add_argument("--head", type=int)
    p.add_argument("--threshold", default=UNIFORM)
    p.add_argument("--dot", help="write the graph as DOT text here")

    p = sub.add_parser("count-params", help="trainable-parameter count")
    p.add_argument("--config", help="JSON config file")

    p = sub.add_parser("gradcheck", help="gradients vs central finite differences")
    p.add_argument("--seed", type=int)

    return parser


def _cmd_validate(args) -> int:
    report = bundle_io.validate_corpus(args.directory)
    print(report.format())
    return 0 if report.ok else 2


def _cmd_label(args) -> int:
    report = oracle.label_corpus(args.directory, args.refs, args.k)
    print(report.format())
    return 0


def _cmd_train(args) -> int:
    if args.config:
        config = training.TrainConfig.from_json(args.config)
    else:
        config = training.TrainConfig()
    seed = _fallback_seed(args.seed, config.seed if args.config else None)
    config = training.TrainConfig.from_dict({**config.to_dict(), "seed": seed})
    history = args.history or (args.out + ".history.csv")
    started = time.perf_counter()
    result = training.train(args.directory, config, model_path=args.out, history_path=history)
    last_epoch, train_loss, val_loss = result.history[-1]
    print(f"trained {last_epoch} epochs; train loss {train_loss:.6f}, "
          f"val loss {val_loss:.6f}{' (early stop)' if result.stopped_early else ''}")
    print(f"model: {args.out}")
    print(f"history: {history}")
    if not args.quiet:
        print(f"[time] {time.perf_counter() - started:.2f}s")
    return 0


def _cmd_infer(args) -> int:
    scorer = eval_harness.model_scorer(args.model, _threshold_policy(args.threshold))
    bundle = bundle_io.load_bundle(args.bundle)
    if args.k is not None:
        k = args.k
    elif bundle.labels is not None:
        k = max(1, int(bundle.labels.sum()))
    else:
        k = 3
    scores = scorer(bundle)
    for i in eval_harness.select_top_k(scores, min(k, bundle.n_sentences)):
        print(bundle.sentences[i])
    return 0


def _cmd_eval(args) -> int:
    started = time.perf_counter()
    if args.model is not None:
        scorer = eval_harness.model_scorer(args.model, _threshold_policy(args.threshold))
        lead = None
    else:
        scorer = None
        lead = args.lead
    report = eval_harness.evaluate(
        args.directory,
        args.refs,
        args.k,
        scorer=scorer,
        lead=lead,
        min_sents=args.min_sents,
        max_sents=args.max_sents,
        csv_path=args.csv,
        jobs=max(1, args.jobs),
    )
    print(report.format_summary())
    if args.csv:
        print(f"csv: {args.csv}")
    if not args.quiet:
        print(f"[time] {time.perf_counter() - started:.2f}s")
    return 0


def _dot_text(binary, head: int, sentences) -> str:
    n = binary.shape[1]
    lines = [f"graph attention_head_{head} {{"]
    for i in range(n):
        snippet = sentences[i][:40].replace('"', "'")
        lines.append(f'  s{i} [label="{i}: {snippet}"];')
    for i in range(n):
        for j in range(i + 1, n):
            if binary[head, i, j]:
                lines.append(f"  s{i} -- s{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _cmd_inspect(args) -> int:
    bundle = bundle_io.load_bundle(args.bundle)
    policy = _threshold_policy(args.threshold)
    graph = build_graphs(bundle, policy)
    n = graph.n_nodes
    print(f"doc {bundle.doc_id}: N={n}, heads={graph.n_heads}, "
          f"threshold={graph.threshold:.6g}")
    heads = [args.head] if args.head is not None else range(graph.n_heads)
    for h in heads:
        if not 0 <= h < graph.n_heads:
            raise ConfigError(f"head {h} out of range [0, {graph.n_heads})")
        adj = graph.binary_adjacency[h]
        edges = int(adj.sum()) // 2
        degrees = adj.sum(axis=1)
        hist = {}
        for deg in degrees:
            hist[int(deg)] = hist.get(int(deg), 0) + 1
        hist_text = ", ".join(f"deg {d}: {hist[d]}" for d in sorted(hist))
        print(f"head {h}: {edges} edges; {hist_text}")
    if args.dot:
        head = args.head if args.head is not None else 0
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(_dot_text(graph.binary_adjacency, head, bundle.sentences))
        print(f"dot: {args.dot}")
    return 0


def _cmd_count_params(args) -> int:
    if args.config:
        dims = training.TrainConfig.from_json(args.config).dims
    else:
        dims = ModelDims()
    print(training.count_params(dims))
    return 0


def _cmd_gradcheck(args) -> int:
    seed = _fallback_seed(args.seed)
    error = training.grad_check(seed=seed)
    verdict = "PASS" if error < GRADCHECK_BOUND else "FAIL"
    print(f"max relative error: {error:.3e} ({verdict}, bound {GRADCHECK_BOUND:.0e})")
    return 0 if verdict == "PASS" else 2


_COMMANDS = {
    "validate": _cmd_validate,
    "label": _cmd_label,
    "train": _cmd_train,
    "infer": _cmd_infer,
    "eval": _cmd_eval,
    "inspect": _cmd_inspect,
    "count-params": _cmd_count_params,
    "gradcheck": _cmd_gradcheck,
}


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"attnsum: error: {exc}", file=sys.stderr)
        return 1
    except AttnsumError as exc:
        print(f"attnsum: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"attnsum: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
