"""Command line entry point: treebank in, embedding container out.

    extract --treebank ud.conllu --model bert-base --layer last --out ud.sdeb

Alongside the container the command writes a skip list (sentences too
long for the model's position limit, one id per line) and a manifest
recording how the vectors were produced.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .conllu import read_treebank
from .container import write_container
from .runner import LAYERS, extract, load_encoder

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(ValueError):
    """Bad command line arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="extract",
        description="Pool per-word contextual embeddings from a pretrained encoder.",
    )
    parser.add_argument("--treebank", required=True, help="input CoNLL-U file")
    parser.add_argument("--model", required=True, help="pretrained model name or path")
    parser.add_argument("--layer", choices=LAYERS, default="last", help="hidden layer to pool from")
    parser.add_argument("--out", required=True, help="output container path")
    parser.add_argument("--batch", type=int, default=8, help="sentences per forward pass")
    return parser


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def run(argv: list[str]) -> int:
    args = build_parser().parse_args(argv)
    if args.batch < 1:
        raise UsageError(f"--batch must be positive, got {args.batch}")
    sentences = read_treebank(args.treebank)
    encoder = load_encoder(args.model)
    records, skipped = extract(encoder, sentences, layer=args.layer, batch_size=args.batch)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_container(out, encoder.dim, records)
    _write_text(out.with_name(out.name + ".skipped.txt"), "".join(f"{i}\n" for i in skipped))
    manifest = {
        "tool": f"embextract {__version__}",
        "model": args.model,
        "layer": args.layer,
        "dim": encoder.dim,
        "sentences": len(records),
        "skipped": len(skipped),
        "tokenisation": "word-by-word",
        "pooling": "subtoken mean",
    }
    _write_text(out.with_name(out.name + ".manifest.json"), json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(records)} sentences (dim {encoder.dim}) to {out}; skipped {len(skipped)}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        return run(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
