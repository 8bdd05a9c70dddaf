"""Evaluation: attachment score and distance rank correlations.

Three scores per sentence, all over undirected trees:

- UUAS: fraction of gold edges present in the decoded tree.
- DSpr: Spearman correlation between predicted and gold pairwise
  distances over all word pairs (rank-sensitive everywhere).
- DSpr after tree projection: the predictions are first decoded to a
  tree and replaced by that tree's own metric, so the score only
  depends on which tree was recovered.

The last two can move in opposite directions: predictions that merely
separate edges from non-edges recover the tree perfectly but scramble
the long-distance ranks.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .conllu import Sentence, gold_tree
from .embeddings import EmbeddingSequence, align_pairs
from .graph import DepTree, DistanceMatrix, mst_prim, tree_to_distances
from .model import ProbeParams, predict_matrix

LENGTHBIN_MIN = 5
LENGTHBIN_MAX = 50


class SpearmanResult(NamedTuple):
    rho: float
    degenerate: bool  # a rank vector was constant; rho forced to 0


def fractional_ranks(values) -> np.ndarray:
    """Ranks 1..n with ties sharing the average of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sorted_values = values[order]
    i = 0
    while i < len(sorted_values):
        j = i
        while j + 1 < len(sorted_values) and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> SpearmanResult:
    """Rank correlation: Pearson over fractional ranks.

    Constant inputs have no rank order; such cases (including
    single-element vectors, e.g. the lone pair of a two-word sentence)
    return rho 0 with the degenerate flag set rather than dividing by
    zero.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"inputs must be equal-length vectors, got {x.shape} and {y.shape}")
    if len(x) == 0:
        raise ValueError("need at least one value")
    rx = fractional_ranks(x) - (len(x) + 1) / 2.0
    ry = fractional_ranks(y) - (len(y) + 1) / 2.0
    vx = float(rx @ rx)
    vy = float(ry @ ry)
    if vx == 0.0 or vy == 0.0:
        return SpearmanResult(0.0, True)
    rho = float(rx @ ry) / np.sqrt(vx * vy)
    return SpearmanResult(float(np.clip(rho, -1.0, 1.0)), False)


def uuas(pred: DepTree, gold: DepTree) -> tuple[int, int]:
    """Correct and total edge counts for one sentence (unordered pairs)."""
    if pred.n != gold.n:
        raise ValueError(f"trees disagree on size: {pred.n} vs {gold.n}")
    return len(pred.edges & gold.edges), gold.n - 1


def dspr_sentence(pred_distances: DistanceMatrix, gold: DepTree) -> SpearmanResult:
    """Spearman of predicted vs gold distances over all upper-triangle pairs."""
    if pred_distances.n != gold.n:
        raise ValueError(
            f"distance matrix is {pred_distances.n}x{pred_distances.n}, tree has {gold.n} nodes"
        )
    return spearman(pred_distances.upper(), tree_to_distances(gold).upper())


def dspr_pfw_sentence(pred_distances: DistanceMatrix, gold: DepTree) -> SpearmanResult:
    """DSpr after projecting the predictions through tree decoding.

    The predictions are replaced by the tree metric of their own
    minimum spanning tree, so the result is 1.0 exactly when the gold
    tree is recovered, regardless of the raw values.
    """
    decoded = mst_prim(pred_distances)
    return dspr_sentence(tree_to_distances(decoded), gold)


@dataclass(frozen=True)
class EvalOptions:
    exclude_punct: bool = False
    # "pairs": per-sentence correlation over all pairs, macro-averaged.
    # "lengthbin": per-word row correlations pooled by sentence length
    # (5..50), averaged within each length group, then across groups.
    dspr_mode: str = "pairs"

    def __post_init__(self):
        if self.dspr_mode not in ("pairs", "lengthbin"):
            raise ValueError(f"dspr_mode must be 'pairs' or 'lengthbin', got {self.dspr_mode!r}")


@dataclass
class SentenceEval:
    sentence_id: str
    n: int
    correct: int
    total: int
    dspr: float
    dspr_degenerate: bool
    dspr_pfw: float
    dspr_pfw_degenerate: bool


@dataclass
class EvalReport:
    sentences: list
    uuas_micro: float
    uuas_macro: float
    dspr_macro: float
    dspr_pfw_macro: float
    dspr_skipped: int
    dspr_pfw_skipped: int
    options: EvalOptions = field(default_factory=EvalOptions)


def _filtered_edge_counts(pred: DepTree, gold: DepTree, keep: set) -> tuple[int, int]:
    gold_kept = {e for e in gold.edges if e[0] in keep and e[1] in keep}
    return len(pred.edges & gold_kept), len(gold_kept)


def _row_correlations(pred_values: np.ndarray, gold_values: np.ndarray) -> list[float]:
    """Per-word correlations between matching distance-matrix rows."""
    n = pred_values.shape[0]
    out = []
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        result = spearman(pred_values[i][mask[i]], gold_values[i][mask[i]])
        if not result.degenerate:
            out.append(result.rho)
    return out


def _lengthbin_average(bins: dict) -> float:
    group_means = [float(np.mean(rhos)) for n, rhos in sorted(bins.items()) if rhos]
    if not group_means:
        return 0.0
    return float(np.mean(group_means))


def evaluate(
    params: ProbeParams,
    squared: bool,
    sentences: list,
    sequences: list,
    options: EvalOptions | None = None,
) -> EvalReport:
    """Decode and score every sentence; aggregate micro and macro.

    UUAS micro pools edges across the corpus; macro averages the
    per-sentence ratios. The correlation scores are macro-averaged with
    degenerate sentences skipped and counted.
    """
    options = options or EvalOptions()
    pairs = align_pairs(sentences, sequences)
    records: list[SentenceEval] = []
    sum_correct = 0
    sum_total = 0
    bins: dict[int, list[float]] = {}
    bins_pfw: dict[int, list[float]] = {}
    for sent, seq in pairs:
        gold = gold_tree(sent)
        pred_distances = predict_matrix(params, seq, squared=squared).distances
        decoded = mst_prim(pred_distances)
        if options.exclude_punct:
            keep = {tok.index for tok in sent.tokens if tok.upos != "PUNCT"}
            correct, total = _filtered_edge_counts(decoded, gold, keep)
        else:
            correct, total = uuas(decoded, gold)
        sum_correct += correct
        sum_total += total
        dspr = dspr_sentence(pred_distances, gold)
        projected = tree_to_distances(decoded)
        dspr_pfw = dspr_sentence(projected, gold)
        if options.dspr_mode == "lengthbin" and LENGTHBIN_MIN <= gold.n <= LENGTHBIN_MAX:
            gold_values = tree_to_distances(gold).values
            bins.setdefault(gold.n, []).extend(
                _row_correlations(pred_distances.values, gold_values)
            )
            bins_pfw.setdefault(gold.n, []).extend(
                _row_correlations(projected.values, gold_values)
            )
        records.append(
            SentenceEval(
                sentence_id=sent.id,
                n=gold.n,
                correct=correct,
                total=total,
                dspr=dspr.rho,
                dspr_degenerate=dspr.degenerate,
                dspr_pfw=dspr_pfw.rho,
                dspr_pfw_degenerate=dspr_pfw.degenerate,
            )
        )
    ratios = [r.correct / r.total for r in records if r.total > 0]
    dspr_values = [r.dspr for r in records if not r.dspr_degenerate]
    pfw_values = [r.dspr_pfw for r in records if not r.dspr_pfw_degenerate]
    if options.dspr_mode == "lengthbin":
        dspr_macro = _lengthbin_average(bins)
        dspr_pfw_macro = _lengthbin_average(bins_pfw)
    else:
        dspr_macro = float(np.mean(dspr_values)) if dspr_values else 0.0
        dspr_pfw_macro = float(np.mean(pfw_values)) if pfw_values else 0.0
    return EvalReport(
        sentences=records,
        uuas_micro=sum_correct / sum_total if sum_total else 0.0,
        uuas_macro=float(np.mean(ratios)) if ratios else 0.0,
        dspr_macro=dspr_macro,
        dspr_pfw_macro=dspr_pfw_macro,
        dspr_skipped=len(records) - len(dspr_values),
        dspr_pfw_skipped=len(records) - len(pfw_values),
        options=options,
    )


# -- report serialisation ------------------------------------------------------

_FLAG_NAMES = ("dspr_degenerate", "dspr_pfw_degenerate")


def render_eval_report(report: EvalReport) -> str:
    """Deterministic text form: aggregate header, then a per-sentence table."""
    lines = [
        f"sentences\t{len(report.sentences)}",
        f"uuas_micro\t{report.uuas_micro!r}",
        f"uuas_macro\t{report.uuas_macro!r}",
        f"dspr_macro\t{report.dspr_macro!r}",
        f"dspr_pfw_macro\t{report.dspr_pfw_macro!r}",
        f"dspr_skipped\t{report.dspr_skipped}",
        f"dspr_pfw_skipped\t{report.dspr_pfw_skipped}",
        f"exclude_punct\t{str(report.options.exclude_punct).lower()}",
        f"dspr_mode\t{report.options.dspr_mode}",
        "",
        "id\tn\tcorrect\ttotal\tdspr\tdspr_pfw\tflags",
    ]
    for rec in report.sentences:
        flags = []
        if rec.dspr_degenerate:
            flags.append("dspr_degenerate")
        if rec.dspr_pfw_degenerate:
            flags.append("dspr_pfw_degenerate")
        lines.append(
            f"{rec.sentence_id}\t{rec.n}\t{rec.correct}\t{rec.total}\t"
            f"{rec.dspr!r}\t{rec.dspr_pfw!r}\t{','.join(flags) or '-'}"
        )
    return "\n".join(lines) + "\n"


def parse_eval_report(text: str) -> EvalReport:
    """Inverse of :func:`render_eval_report`."""
    head, _, table = text.partition("\n\n")
    header: dict[str, str] = {}
    for line in head.splitlines():
        key, _, value = line.partition("\t")
        header[key] = value
    try:
        options = EvalOptions(
            exclude_punct=header["exclude_punct"] == "true",
            dspr_mode=header["dspr_mode"],
        )
        expected = int(header["sentences"])
    except KeyError as exc:
        raise ValueError(f"report header is missing {exc}") from None
    records = []
    rows = table.splitlines()
    if not rows or rows[0] != "id\tn\tcorrect\ttotal\tdspr\tdspr_pfw\tflags":
        raise ValueError("report table header missing or malformed")
    for row in rows[1:]:
        ident, n, correct, total, dspr, dspr_pfw, flags = row.split("\t")
        flagset = set(flags.split(",")) if flags != "-" else set()
        unknown = flagset - set(_FLAG_NAMES)
        if unknown:
            raise ValueError(f"unknown flags {sorted(unknown)} in report row {ident!r}")
        records.append(
            SentenceEval(
                sentence_id=ident,
                n=int(n),
                correct=int(correct),
                total=int(total),
                dspr=float(dspr),
                dspr_degenerate="dspr_degenerate" in flagset,
                dspr_pfw=float(dspr_pfw),
                dspr_pfw_degenerate="dspr_pfw_degenerate" in flagset,
            )
        )
    if len(records) != expected:
        raise ValueError(f"report promises {expected} sentences, table has {len(records)}")
    return EvalReport(
        sentences=records,
        uuas_micro=float(header["uuas_micro"]),
        uuas_macro=float(header["uuas_macro"]),
        dspr_macro=float(header["dspr_macro"]),
        dspr_pfw_macro=float(header["dspr_pfw_macro"]),
        dspr_skipped=int(header["dspr_skipped"]),
        dspr_pfw_skipped=int(header["dspr_pfw_skipped"]),
        options=options,
    )


_DELTA_KEYS = ("uuas_micro", "uuas_macro", "dspr_macro", "dspr_pfw_macro")


def compare(report_a: EvalReport, report_b: EvalReport) -> dict:
    """Per-metric deltas (a minus b) over the same evaluation set."""
    ids_a = [r.sentence_id for r in report_a.sentences]
    ids_b = [r.sentence_id for r in report_b.sentences]
    if ids_a != ids_b:
        raise ValueError(
            f"reports cover different sentence sets ({len(ids_a)} vs {len(ids_b)} ids)"
        )
    return {key: getattr(report_a, key) - getattr(report_b, key) for key in _DELTA_KEYS}


def compare_many(labelled_pairs: list) -> str:
    """Delta table over labelled report pairs plus a mean-delta row.

    Each element is (label, report_a, report_b); with one pair per
    language this reproduces a per-language comparison table.
    """
    if not labelled_pairs:
        raise ValueError("nothing to compare")
    rows = [(label, compare(a, b)) for label, a, b in labelled_pairs]
    lines = ["label\t" + "\t".join(_DELTA_KEYS)]
    for label, deltas in rows:
        lines.append(label + "\t" + "\t".join(f"{deltas[k]!r}" for k in _DELTA_KEYS))
    means = {k: float(np.mean([deltas[k] for _, deltas in rows])) for k in _DELTA_KEYS}
    lines.append("mean\t" + "\t".join(f"{means[k]!r}" for k in _DELTA_KEYS))
    return "\n".join(lines) + "\n"
