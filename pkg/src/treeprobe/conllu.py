"""CoNLL-U ingestion: parsing, length filtering, deterministic splits."""

import io
from dataclasses import dataclass, field

from . import seeding
from .graph import DepTree

MIN_WORDS = 2
MAX_WORDS = 50


class ConlluError(ValueError):
    """Structural problem in a CoNLL-U stream; carries the line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Token:
    index: int  # 1-based word position
    form: str
    upos: str
    head: int  # 0 = attached to the root

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"token index must be >= 1, got {self.index}")
        if self.head < 0:
            raise ValueError(f"head must be >= 0, got {self.head}")
        if self.head == self.index:
            raise ValueError(f"token {self.index} is its own head")


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple

    @property
    def n(self) -> int:
        return len(self.tokens)

    def __post_init__(self):
        roots = [t for t in self.tokens if t.head == 0]
        if len(roots) != 1:
            raise ValueError(
                f"sentence {self.id!r} has {len(roots)} root-attached tokens"
            )
        for pos, tok in enumerate(self.tokens, start=1):
            if tok.index != pos:
                raise ValueError(
                    f"sentence {self.id!r}: token index {tok.index} at position {pos}"
                )
            if tok.head > self.n:
                raise ValueError(
                    f"sentence {self.id!r}: head {tok.head} out of range"
                )
        # raises if the non-root arcs do not form a spanning tree
        gold_tree(self)


@dataclass
class SplitProvenance:
    source: str
    filter_log: list = field(default_factory=list)


@dataclass
class TreebankSplit:
    train: list
    dev: list
    test: list
    provenance: SplitProvenance


def gold_tree(sentence: Sentence) -> DepTree:
    """Undirected tree over the words only: one edge per non-root arc."""
    edges = [(t.index, t.head) for t in sentence.tokens if t.head != 0]
    return DepTree.from_edges(sentence.n, edges)


def _open_text(stream):
    if isinstance(stream, bytes):
        return io.StringIO(stream.decode("utf-8"))
    if isinstance(stream, str):
        return io.StringIO(stream)
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8")


def parse_conllu(stream, reject_log: list | None = None) -> list[Sentence]:
    """Parse a CoNLL-U stream into sentences.

    Accepts bytes, str, or a file object. Comment lines, multiword-token
    ranges ("1-2") and empty nodes ("1.1") are skipped; only the word
    rows with integer IDs are kept. Malformed rows (wrong column count,
    non-integer HEAD) raise ConlluError with the line number. Sentences
    whose arcs do not form a tree with a single root are skipped and
    recorded in ``reject_log`` as "id<TAB>reason" lines.
    """
    text = _open_text(stream)
    sentences: list[Sentence] = []
    rows: list[Token] = []
    sent_id: str | None = None

    def flush():
        nonlocal rows, sent_id
        if not rows:
            sent_id = None
            return
        name = sent_id if sent_id is not None else f"s{len(sentences) + 1}"
        try:
            sentences.append(Sentence(name, tuple(rows)))
        except ValueError as exc:
            if reject_log is not None:
                reject_log.append(f"{name}\t{exc}")
        rows = []
        sent_id = None

    for lineno, raw in enumerate(text, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if line == "":
            flush()
            continue
        if line.startswith("#"):
            if line.startswith("# sent_id"):
                _, _, value = line.partition("=")
                sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 columns, got {len(cols)}", lineno)
        ident = cols[0]
        if "-" in ident or "." in ident:
            continue  # multiword range or empty node
        if not ident.isdigit():
            raise ConlluError(f"bad token ID {ident!r}", lineno)
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"non-integer HEAD {cols[6]!r}", lineno) from None
        try:
            rows.append(Token(int(ident), cols[1], cols[3], head))
        except ValueError as exc:
            raise ConlluError(str(exc), lineno) from None
    flush()
    return sentences


def serialize_conllu(sentences: list[Sentence]) -> str:
    """Render sentences back to CoNLL-U, keeping only the fields we read."""
    blocks = []
    for sent in sentences:
        lines = [f"# sent_id = {sent.id}"]
        for tok in sent.tokens:
            lines.append(
                "\t".join(
                    (
                        str(tok.index),
                        tok.form,
                        "_",
                        tok.upos,
                        "_",
                        "_",
                        str(tok.head),
                        "_",
                        "_",
                        "_",
                    )
                )
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def split_indices(
    sentences: list[Sentence],
    cap: int,
    ratios: tuple[float, float, float],
    seed: int,
) -> tuple[list[int], list[int], list[int], list[str]]:
    """Index-level version of :func:`filter_and_split`.

    Returns (train, dev, test) index lists into ``sentences`` plus the
    filter log, so a container aligned with the input corpus can be
    sliced with the exact same permutation.
    """
    if len(ratios) != 3:
        raise ValueError("ratios must be a triple")
    if any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ValueError(f"ratios must be non-negative with a positive sum, got {ratios}")
    ratios = tuple(r / sum(ratios) for r in ratios)
    if cap < 0:
        raise ValueError("cap must be >= 0")

    log: list[str] = []
    kept: list[int] = []
    for k, sent in enumerate(sentences):
        if sent.n < MIN_WORDS:
            log.append(f"{sent.id}\tlength<{MIN_WORDS}")
        elif sent.n > MAX_WORDS:
            log.append(f"{sent.id}\tlength>{MAX_WORDS}")
        else:
            kept.append(k)
    if cap and len(kept) > cap:
        for k in kept[cap:]:
            log.append(f"{sentences[k].id}\tover-cap")
        kept = kept[:cap]
    if len(kept) < 3:
        raise ValueError(
            f"only {len(kept)} sentences survive filtering, cannot form splits"
        )

    total = len(kept)
    base = [int(total * r) for r in ratios]
    fractions = [total * r - b for r, b in zip(ratios, base)]
    for _ in range(total - sum(base)):
        best = max(range(3), key=lambda k: (fractions[k], -k))
        base[best] += 1
        fractions[best] = -1.0
    order = seeding.stream(seed, "split").permutation(total)
    shuffled = [kept[i] for i in order]
    train = shuffled[: base[0]]
    dev = shuffled[base[0] : base[0] + base[1]]
    test = shuffled[base[0] + base[1] :]
    return train, dev, test, log


def filter_and_split(
    sentences: list[Sentence],
    cap: int,
    ratios: tuple[float, float, float],
    seed: int,
    source: str = "",
) -> TreebankSplit:
    """Length-filter a corpus and split it into train/dev/test.

    Sentences with fewer than 2 or more than 50 words are dropped and
    logged. The survivors are truncated to the first ``cap`` in corpus
    order (cap=0 keeps all), then partitioned by a seeded permutation
    into splits sized by ``ratios`` (largest-remainder rounding).
    """
    train, dev, test, log = split_indices(sentences, cap, ratios, seed)
    return TreebankSplit(
        [sentences[i] for i in train],
        [sentences[i] for i in dev],
        [sentences[i] for i in test],
        SplitProvenance(source, log),
    )
