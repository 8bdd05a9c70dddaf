"""Minimal CoNLL-U reader: sentence ids and surface forms only.

The extractor needs nothing beyond the word sequence, so this reader
keeps just the FORM column.  Multiword-token ranges ("3-4") and empty
nodes ("5.1") are sub-word or elided material, not syntactic words,
and are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

FIELD_COUNT = 10


@dataclass(frozen=True)
class SentenceWords:
    """One sentence: its id and the word forms in order."""

    sentence_id: str
    forms: tuple[str, ...]


def _is_plain_index(field: str) -> bool:
    # Plain words carry a bare integer index; ranges and empty nodes do not.
    return field.isdigit()


def read_treebank(path: str | Path) -> list[SentenceWords]:
    """Read sentence ids and forms from a CoNLL-U file.

    Sentences without a ``# sent_id`` comment get a positional id
    ``sent-{k}`` (1-based).  Raises ValueError on token lines that do
    not have exactly ten tab-separated fields.
    """
    sentences: list[SentenceWords] = []
    sent_id: str | None = None
    forms: list[str] = []
    count = 0

    def flush() -> None:
        nonlocal sent_id, forms, count
        if not forms:
            sent_id = None
            return
        count += 1
        ident = sent_id if sent_id is not None else f"sent-{count}"
        sentences.append(SentenceWords(ident, tuple(forms)))
        sent_id = None
        forms = []

    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("sent_id"):
                _, _, value = body.partition("=")
                sent_id = value.strip()
            continue
        fields = line.split("\t")
        if len(fields) != FIELD_COUNT:
            raise ValueError(
                f"line {lineno}: expected {FIELD_COUNT} tab-separated fields, got {len(fields)}"
            )
        if not _is_plain_index(fields[0]):
            continue
        forms.append(fields[1])
    flush()
    return sentences
