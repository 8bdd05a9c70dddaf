"""Command-line pipeline: prepare, synth, train, search, eval, compare, inspect.

Every command writes its artifacts atomically (temp file, then rename)
plus a JSON manifest listing inputs, outputs, and the seed. Exit codes:
0 success, 1 usage or config error, 2 data error, 3 numeric abort.
"""

import argparse
import json
import os
import struct
import sys
import time

from . import conllu, embeddings, metrics, model, seeding, training

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    """Bad flags or config; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through UsageError
    # instead so data errors keep exclusive use of that code
    def error(self, message):
        raise UsageError(message)


def _toolkit_version() -> str:
    from . import __version__

    return __version__


def _write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_binary(path: str, writer) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        writer(fh)
    os.replace(tmp, path)


def _write_manifest(out_dir: str, command: str, seed, inputs: list, outputs: list, config: dict) -> str:
    path = os.path.join(out_dir, "manifest.json")
    body = {
        "command": command,
        "toolkit_version": _toolkit_version(),
        "seed": seed,
        "config": config,
        "inputs": sorted(inputs),
        "outputs": sorted(outputs),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    _write_text(path, json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def _read_treebank(path: str, reject_log=None) -> list:
    with open(path, "rb") as fh:
        return conllu.parse_conllu(fh, reject_log=reject_log)


def _read_store(path: str) -> embeddings.EmbeddingStore:
    with open(path, "rb") as fh:
        return embeddings.read_store(fh)


def _parse_ratios(text: str) -> tuple:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 3:
        raise UsageError(f"--ratios needs three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--ratios must be numeric, got {text!r}") from None


# -- prepare -------------------------------------------------------------------


def cmd_prepare(args) -> int:
    rejects: list = []
    sentences = _read_treebank(args.treebank, reject_log=rejects)
    ratios = _parse_ratios(args.ratios)
    train_idx, dev_idx, test_idx, log = conllu.split_indices(
        sentences, args.cap, ratios, args.seed
    )
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    for name, idx in (("train", train_idx), ("dev", dev_idx), ("test", test_idx)):
        path = os.path.join(args.out, f"{name}.conllu")
        _write_text(path, conllu.serialize_conllu([sentences[i] for i in idx]))
        outputs.append(path)
    log_path = os.path.join(args.out, "filter_log.txt")
    lines = rejects + log
    _write_text(log_path, "\n".join(lines) + ("\n" if lines else ""))
    outputs.append(log_path)
    inputs = [args.treebank]
    if args.store:
        store = _read_store(args.store)
        embeddings.align_pairs(sentences, store.sequences)
        for name, idx in (("train", train_idx), ("dev", dev_idx), ("test", test_idx)):
            part = embeddings.EmbeddingStore(store.dim, [store.sequences[i] for i in idx])
            path = os.path.join(args.out, f"{name}.sdeb")
            _write_binary(path, lambda fh, part=part: embeddings.write_store(part, fh))
            outputs.append(path)
        inputs.append(args.store)
    outputs.append(
        _write_manifest(
            args.out,
            "prepare",
            args.seed,
            inputs,
            outputs,
            {"cap": args.cap, "ratios": args.ratios},
        )
    )
    print(f"prepare: {len(train_idx)}/{len(dev_idx)}/{len(test_idx)} sentences -> {args.out}")
    return EXIT_OK


# -- synth ---------------------------------------------------------------------


def _oriented_heads(tree) -> list:
    """Head array (index 0 unused) from rooting the undirected tree at node 1."""
    heads = [0] * (tree.n + 1)
    adj = tree.adjacency()
    seen = [False] * (tree.n + 1)
    seen[1] = True
    stack = [1]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                heads[v] = u
                stack.append(v)
    return heads


def _tree_sentence(tree, ident: str) -> conllu.Sentence:
    heads = _oriented_heads(tree)
    tokens = [
        conllu.Token(index=i, form=f"w{i}", upos="X", head=heads[i])
        for i in range(1, tree.n + 1)
    ]
    return conllu.Sentence(ident, tuple(tokens))


def cmd_synth(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    inputs = []
    if args.source == "random":
        if args.min_n < 2 or args.max_n < args.min_n:
            raise UsageError(f"need 2 <= min-n <= max-n, got {args.min_n}..{args.max_n}")
        if args.dim < args.max_n - 1:
            raise UsageError(
                f"--dim {args.dim} is too small for sentences up to {args.max_n} words "
                f"(need at least {args.max_n - 1})"
            )
        sentences = []
        sequences = []
        for k in range(args.count):
            n = int(seeding.stream(args.seed, "size", k).integers(args.min_n, args.max_n + 1))
            tree = _random_tree(n, args.seed, k)
            ident = f"synth-{k + 1}"
            sentences.append(_tree_sentence(tree, ident))
            sequences.append(
                embeddings.synth_tree_embeddings(
                    tree, args.dim, args.noise, seeding.child_seed(args.seed, "emb", k), ident
                )
            )
        conllu_path = os.path.join(args.out, "synth.conllu")
        _write_text(conllu_path, conllu.serialize_conllu(sentences))
        outputs.append(conllu_path)
        store = embeddings.EmbeddingStore(args.dim, sequences)
        store_path = os.path.join(args.out, "synth.sdeb")
        _write_binary(store_path, lambda fh: embeddings.write_store(store, fh))
        outputs.append(store_path)
        made = len(sentences)
    else:  # from-treebank
        if not args.treebank:
            raise UsageError("synth from-treebank requires --treebank")
        sentences = _read_treebank(args.treebank)
        inputs.append(args.treebank)
        longest = max((s.n for s in sentences), default=2)
        if args.dim < longest - 1:
            raise UsageError(
                f"--dim {args.dim} is too small for {longest}-word sentences "
                f"(need at least {longest - 1})"
            )
        sequences = []
        for k, sent in enumerate(sentences):
            tree = conllu.gold_tree(sent)
            sequences.append(
                embeddings.synth_tree_embeddings(
                    tree, args.dim, args.noise, seeding.child_seed(args.seed, "emb", k), sent.id
                )
            )
        stem = os.path.splitext(os.path.basename(args.treebank))[0]
        store = embeddings.EmbeddingStore(args.dim, sequences)
        store_path = os.path.join(args.out, f"{stem}.sdeb")
        _write_binary(store_path, lambda fh: embeddings.write_store(store, fh))
        outputs.append(store_path)
        made = len(sequences)
    outputs.append(
        _write_manifest(
            args.out,
            "synth",
            args.seed,
            inputs,
            outputs,
            {
                "source": args.source,
                "dim": args.dim,
                "noise": args.noise,
                "count": getattr(args, "count", None),
            },
        )
    )
    print(f"synth: {made} sentences -> {args.out}")
    return EXIT_OK


def _random_tree(n: int, seed: int, k: int):
    from .graph import random_tree

    return random_tree(n, seeding.stream(seed, "tree", k))


# -- train / search ------------------------------------------------------------


def _load_split_dir(data_dir: str):
    """Load train/dev[/test] treebank parts and their aligned containers."""
    parts = {}
    stores = {}
    for name in ("train", "dev", "test"):
        conllu_path = os.path.join(data_dir, f"{name}.conllu")
        store_path = os.path.join(data_dir, f"{name}.sdeb")
        if not os.path.exists(conllu_path):
            if name == "test":
                parts[name] = []
                stores[name] = []
                continue
            raise FileNotFoundError(f"missing {conllu_path}")
        if not os.path.exists(store_path):
            raise FileNotFoundError(f"missing {store_path}")
        parts[name] = _read_treebank(conllu_path)
        stores[name] = _read_store(store_path).sequences
    dims = {seq.dim for seqs in stores.values() for seq in seqs}
    if len(dims) > 1:
        raise ValueError(f"containers disagree on dim: {sorted(dims)}")
    if not dims:
        raise ValueError(f"no embeddings found under {data_dir}")
    dim = dims.pop()
    split = conllu.TreebankSplit(
        parts["train"], parts["dev"], parts["test"], conllu.SplitProvenance(data_dir, [])
    )
    store = embeddings.EmbeddingStore(dim, stores["train"] + stores["dev"] + stores["test"])
    return split, store


def _config_from_args(args) -> training.TrainConfig:
    mapping = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            mapping = training.parse_kv(fh.read())
    squared = None
    if args.squared is not None:
        squared = args.squared == "true"
    return training.train_config_from_kv(
        mapping,
        model_kind=args.model_kind,
        rank=args.rank,
        learning_rate=args.learning_rate,
        dropout_rate=args.dropout_rate,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        squared=squared,
        seed=args.seed,
    )


def _emit_training_outputs(out_dir: str, record, prefix: str = "") -> list:
    checkpoint_path = os.path.join(out_dir, f"{prefix}checkpoint.spbm")
    _write_binary(
        checkpoint_path,
        lambda fh: model.save_checkpoint(record.params, record.squared, fh),
    )
    report_path = os.path.join(out_dir, f"{prefix}train_report.txt")
    _write_text(report_path, training.render_train_report(record))
    return [checkpoint_path, report_path]


def cmd_train(args) -> int:
    config = _config_from_args(args)
    split, store = _load_split_dir(args.data)
    record = training.train(config, split, store)
    os.makedirs(args.out, exist_ok=True)
    outputs = _emit_training_outputs(args.out, record)
    inputs = [args.data] + ([args.config] if args.config else [])
    outputs.append(
        _write_manifest(
            args.out,
            "train",
            config.seed,
            inputs,
            outputs,
            json.loads(json.dumps(vars(args), default=str)),
        )
    )
    print(
        f"train: {config.model_kind} best dev loss {record.best_dev_loss:.6f} "
        f"at epoch {record.best_epoch} -> {args.out}"
    )
    return EXIT_OK


def cmd_search(args) -> int:
    mapping = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            mapping = training.parse_kv(fh.read())
    base_mapping = {k: v for k, v in mapping.items() if k in training._TRAIN_KEYS}
    space_mapping = {k: v for k, v in mapping.items() if k not in training._TRAIN_KEYS}
    base = training.train_config_from_kv(
        base_mapping,
        model_kind=args.model_kind,
        rank=args.rank if args.rank is not None else 1,
        seed=args.seed,
    )
    space_kwargs = {}
    space = training.search_space_from_kv(space_mapping)
    if args.trials is not None:
        space_kwargs["trials"] = args.trials
    if args.rank_choices:
        space_kwargs["rank_choices"] = tuple(
            int(r) for r in args.rank_choices.split(",") if r.strip()
        )
    if args.lr_range:
        space_kwargs["lr_range"] = tuple(
            float(x) for x in args.lr_range.split(",") if x.strip()
        )
    if args.dropout_range:
        space_kwargs["dropout_range"] = tuple(
            float(x) for x in args.dropout_range.split(",") if x.strip()
        )
    if space_kwargs:
        from dataclasses import replace

        space = replace(space, **space_kwargs)
    split, store = _load_split_dir(args.data)
    result = training.random_search(space, base, split, store, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    outputs = _emit_training_outputs(args.out, result.best_record, prefix="best_")
    config_path = os.path.join(args.out, "best_config.txt")
    _write_text(config_path, training.format_train_config(result.best_config))
    outputs.append(config_path)
    lines = ["trial\trank\tlearning_rate\tdropout_rate\tbest_dev_loss\tstatus"]
    for i, trial in enumerate(result.trials):
        if trial.record is None:
            lines.append(
                f"{i}\t{trial.config.rank}\t{trial.config.learning_rate!r}\t"
                f"{trial.config.dropout_rate!r}\t-\taborted: {trial.error}"
            )
        else:
            lines.append(
                f"{i}\t{trial.config.rank}\t{trial.config.learning_rate!r}\t"
                f"{trial.config.dropout_rate!r}\t{trial.record.best_dev_loss!r}\tok"
            )
    table_path = os.path.join(args.out, "search_report.txt")
    _write_text(table_path, "\n".join(lines) + "\n")
    outputs.append(table_path)
    inputs = [args.data] + ([args.config] if args.config else [])
    outputs.append(
        _write_manifest(
            args.out,
            "search",
            args.seed,
            inputs,
            outputs,
            json.loads(json.dumps(vars(args), default=str)),
        )
    )
    print(
        f"search: best trial dev loss {result.best_record.best_dev_loss:.6f} "
        f"(rank {result.best_config.rank}) -> {args.out}"
    )
    return EXIT_OK


# -- eval / compare ------------------------------------------------------------


def cmd_eval(args) -> int:
    with open(args.checkpoint, "rb") as fh:
        params, squared = model.load_checkpoint(fh)
    sentences = _read_treebank(args.treebank)
    store = _read_store(args.store)
    if params.dim != store.dim:
        raise ValueError(
            f"checkpoint dim {params.dim} does not match container dim {store.dim}"
        )
    options = metrics.EvalOptions(
        exclude_punct=args.exclude_punct, dspr_mode=args.dspr_mode
    )
    report = metrics.evaluate(params, squared, sentences, store.sequences, options)
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "eval_report.txt")
    _write_text(report_path, metrics.render_eval_report(report))
    outputs = [report_path]
    outputs.append(
        _write_manifest(
            args.out,
            "eval",
            None,
            [args.checkpoint, args.treebank, args.store],
            outputs,
            {"exclude_punct": args.exclude_punct, "dspr_mode": args.dspr_mode},
        )
    )
    print(
        f"eval: uuas_micro {report.uuas_micro:.4f} dspr {report.dspr_macro:.4f} "
        f"dspr_pfw {report.dspr_pfw_macro:.4f} -> {report_path}"
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    labelled = []
    inputs = []
    for spec_text in args.pair:
        parts = spec_text.split(",")
        if len(parts) != 3:
            raise UsageError(f"--pair needs LABEL,REPORT_A,REPORT_B, got {spec_text!r}")
        label, path_a, path_b = parts
        with open(path_a, "r", encoding="utf-8") as fh:
            report_a = metrics.parse_eval_report(fh.read())
        with open(path_b, "r", encoding="utf-8") as fh:
            report_b = metrics.parse_eval_report(fh.read())
        labelled.append((label, report_a, report_b))
        inputs.extend([path_a, path_b])
    table = metrics.compare_many(labelled)
    sys.stdout.write(table)
    outputs = []
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        table_path = os.path.join(args.out, "compare_report.txt")
        _write_text(table_path, table)
        outputs.append(table_path)
        outputs.append(
            _write_manifest(args.out, "compare", None, inputs, outputs, {})
        )
    return EXIT_OK


# -- inspect -------------------------------------------------------------------


def cmd_inspect(args) -> int:
    with open(args.path, "rb") as fh:
        head = fh.read(4)
    if head == embeddings.MAGIC:
        store = _read_store(args.path)
        print(f"format\tembedding container (SDEB v{embeddings.VERSION})")
        print(f"sentences\t{len(store.sequences)}")
        print(f"dim\t{store.dim}")
        for seq in store.sequences[: args.limit]:
            print(f"record\t{seq.sentence_id}\t{seq.n}")
        if len(store.sequences) > args.limit:
            print(f"...\t{len(store.sequences) - args.limit} more")
    elif head == model.CHECKPOINT_MAGIC:
        with open(args.path, "rb") as fh:
            params, squared = model.load_checkpoint(fh)
        print(f"format\tparameter checkpoint (SPBM v{model.CHECKPOINT_VERSION})")
        print(f"rank\t{params.rank_budget}")
        print(f"dim\t{params.dim}")
        print(f"squared\t{str(squared).lower()}")
    else:
        raise ValueError(f"{args.path}: unrecognised magic {head!r}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="treeprobe", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="filter and split a CoNLL-U treebank")
    p.add_argument("--treebank", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cap", type=int, default=0, help="keep at most N sentences (0 = all)")
    p.add_argument("--ratios", default="8,1,1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--store", default=None, help="aligned container to split the same way")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("synth", help="generate synthetic trees and embeddings")
    p.add_argument("source", choices=("random", "from-treebank"))
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--min-n", type=int, default=5)
    p.add_argument("--max-n", type=int, default=15)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--treebank", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one model on a prepared data directory")
    p.add_argument("--data", required=True, help="directory with {train,dev[,test]}.{conllu,sdeb}")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="key = value file with TrainConfig fields")
    p.add_argument("--model-kind", choices=training.MODEL_KINDS, default=None)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--dropout-rate", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--max-epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--squared", choices=("true", "false"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="random hyperparameter search")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--model-kind", choices=training.MODEL_KINDS, default=None)
    p.add_argument("--rank", type=int, default=None, help="base rank (overridden per trial)")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--rank-choices", default=None, help="comma list, e.g. 32,64,128")
    p.add_argument("--lr-range", default=None, help="LO,HI sampled log-uniform")
    p.add_argument("--dropout-range", default=None, help="LO,HI sampled uniform")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="score a checkpoint against a treebank")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--treebank", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--exclude-punct", action="store_true")
    p.add_argument("--dspr-mode", choices=("pairs", "lengthbin"), default="pairs")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="delta table between paired eval reports")
    p.add_argument("--pair", action="append", required=True, help="LABEL,REPORT_A,REPORT_B")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("inspect", help="dump a container or checkpoint header")
    p.add_argument("path")
    p.add_argument("--limit", type=int, default=20, help="records to list for containers")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"treeprobe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except training.ConfigError as exc:
        print(f"treeprobe: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (training.TrainingAbort, training.SearchAbort) as exc:
        print(f"treeprobe: numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (
        conllu.ConlluError,
        embeddings.StoreFormatError,
        embeddings.StoreCorruptionError,
        embeddings.StoreDataError,
        embeddings.AlignmentError,
        model.StoreError,
        OSError,
        ValueError,
        struct.error,
    ) as exc:
        print(f"treeprobe: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
