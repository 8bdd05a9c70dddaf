"""Word-to-subtoken alignment over a tokenised sentence.

Words are fed to the tokenizer pre-split (one word at a time), so each
word owns a contiguous run of sub-token positions in the encoded
sequence.  The plan records those runs in full-sequence coordinates,
special tokens included in the indexing but owned by no word.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class AlignmentPlan:
    """Sub-token spans per word for one encoded sentence.

    ``spans[w] = (start, stop)`` is the half-open position range of
    word ``w`` in the full encoded sequence.  Spans are in word order,
    non-overlapping, and together cover every non-special position.
    ``length`` is the full sequence length including specials.
    """

    sentence_id: str
    spans: tuple[tuple[int, int], ...]
    length: int


def plan_alignment(sentence_id: str, forms: tuple[str, ...], word_ids: list[int | None]) -> AlignmentPlan:
    """Build the plan from the tokenizer's per-position word indexes.

    ``word_ids`` has one entry per encoded position: the word index the
    sub-token came from, or None for special tokens.  A word that
    tokenised to zero sub-tokens has no positions at all; its vector
    would be undefined, so that is an error naming the word.
    """
    n_words = len(forms)
    starts: dict[int, int] = {}
    stops: dict[int, int] = {}
    for pos, wid in enumerate(word_ids):
        if wid is None:
            continue
        if wid < 0 or wid >= n_words:
            raise ValueError(f"sentence {sentence_id!r}: word index {wid} out of range")
        if wid not in starts:
            starts[wid] = pos
        elif stops[wid] != pos:
            raise ValueError(
                f"sentence {sentence_id!r}: word {wid} occupies non-contiguous positions"
            )
        stops[wid] = pos + 1
    spans: list[tuple[int, int]] = []
    prev_stop = 0
    for wid in range(n_words):
        if wid not in starts:
            raise ValueError(
                f"sentence {sentence_id!r}: word {wid + 1} ({forms[wid]!r}) "
                "tokenised to zero sub-tokens"
            )
        start, stop = starts[wid], stops[wid]
        if start < prev_stop:
            raise ValueError(f"sentence {sentence_id!r}: word spans out of order")
        spans.append((start, stop))
        prev_stop = stop
    return AlignmentPlan(sentence_id, tuple(spans), len(word_ids))
