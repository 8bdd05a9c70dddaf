"""Acceptance gate: one test per top-level correctness criterion.

Each test enforces its stated tolerance and runtime budget; `pytest -v`
gives the one-line pass/fail verdict per criterion.
"""

import itertools
import time

import numpy as np
import pytest

from helpers import (
    fd_gradient,
    mst_tie_margin,
    rel_error,
    split_corpus,
    synth_corpus,
)
from treeprobe.cli import main
from treeprobe.embeddings import EmbeddingSequence, synth_nearfar_distances
from treeprobe.graph import (
    DistanceMatrix,
    distances_to_tree,
    mst_prim,
    prufer_to_tree,
    random_tree,
    tree_to_distances,
)
from treeprobe.losses import perceptron_local_loss, probe_local_loss
from treeprobe.metrics import (
    dspr_pfw_sentence,
    dspr_sentence,
    evaluate,
    render_eval_report,
    spearman,
    uuas,
)
from treeprobe.model import ProbeParams, distance, grad_squared_distance, init_params, predict_matrix
from treeprobe.training import TrainConfig, train


def random_instance(rng, n_max=8):
    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(max(2, n - 1), n + 4))
    r = int(rng.integers(1, d + 1))
    tree = random_tree(n, rng)
    emb = EmbeddingSequence("", rng.standard_normal((n, d)))
    params = ProbeParams(rng.standard_normal((r, d)))
    return params, emb, tree


def test_criterion_1_tree_distance_bijection():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    for _ in range(1000):
        n = int(rng.integers(2, 51))
        tree = random_tree(n, rng)
        recovered = distances_to_tree(tree_to_distances(tree))
        assert recovered.exact
        assert recovered.tree == tree
    elapsed = time.perf_counter() - start
    print(f"criterion 1: 1000/1000 trees recovered exactly in {elapsed:.2f}s")
    assert elapsed < 5.0


def test_criterion_2_mst_matches_brute_force():
    start = time.perf_counter()
    trees_by_n = {
        n: [
            prufer_to_tree(n, list(seq))
            for seq in itertools.product(range(1, n + 1), repeat=max(0, n - 2))
        ]
        for n in range(2, 7)
    }
    rng = np.random.default_rng(1002)
    for _ in range(500):
        n = int(rng.integers(2, 7))
        weights = DistanceMatrix.from_upper(n, rng.uniform(0.1, 1.0, size=n * (n - 1) // 2))
        decoded = mst_prim(weights)
        decoded_total = sum(weights.get(i, j) for i, j in decoded.edges)
        brute_total = min(
            sum(weights.get(i, j) for i, j in t.edges) for t in trees_by_n[n]
        )
        assert abs(decoded_total - brute_total) < 1e-12
    elapsed = time.perf_counter() - start
    print(f"criterion 2: 500/500 matrices at the brute-force minimum in {elapsed:.2f}s")
    assert elapsed < 30.0


def test_criterion_3_gradient_fidelity():
    start = time.perf_counter()
    rng = np.random.default_rng(1003)

    worst_sq = 0.0
    worst_lin = 0.0
    checked_lin = 0
    for k in range(100):
        d = int(rng.integers(2, 7))
        r = int(rng.integers(1, d + 1))
        params = ProbeParams(rng.standard_normal((r, d)))
        hi = rng.standard_normal(d)
        hj = rng.standard_normal(d)
        analytic_sq = grad_squared_distance(params, hi, hj)
        numeric_sq = fd_gradient(
            lambda m: distance(ProbeParams(m), hi, hj, squared=True), params.matrix
        )
        worst_sq = max(worst_sq, rel_error(analytic_sq, numeric_sq))
        dist = distance(params, hi, hj)
        if dist > 1e-6:  # the norm is non-differentiable at 0
            numeric_lin = fd_gradient(
                lambda m: distance(ProbeParams(m), hi, hj), params.matrix
            )
            worst_lin = max(worst_lin, rel_error(analytic_sq / (2 * dist), numeric_lin))
            checked_lin += 1
    assert worst_sq < 1e-4 and worst_lin < 1e-4 and checked_lin >= 90

    worst_probe = 0.0
    checked = 0
    while checked < 100:
        params, emb, tree = random_instance(rng)
        squared = bool(rng.integers(2))
        gold = tree_to_distances(tree).upper()
        pred = predict_matrix(params, emb, squared=squared).distances.upper()
        if np.min(np.abs(gold - pred)) < 1e-6:
            continue  # sign kink of the L1 objective
        if not squared and np.min(pred) < 1e-6:
            continue  # norm kink
        loss = probe_local_loss(params, emb, tree, squared)
        numeric = fd_gradient(
            lambda m: probe_local_loss(ProbeParams(m), emb, tree, squared).value,
            params.matrix,
        )
        worst_probe = max(worst_probe, rel_error(loss.grad, numeric))
        checked += 1
    assert worst_probe < 1e-4

    worst_perc = 0.0
    checked = 0
    while checked < 100:
        params, emb, tree = random_instance(rng)
        squared = bool(rng.integers(2))
        if mst_tie_margin(params, emb, squared) < 1e-6:
            continue  # decoding flips across an MST tie
        if not squared and np.min(predict_matrix(params, emb).distances.upper()) < 1e-6:
            continue
        loss = perceptron_local_loss(params, emb, tree, squared)
        decoded = loss.aux

        def fixed_tree_value(m):
            p = predict_matrix(ProbeParams(m), emb, squared=squared).distances
            return sum(p.get(i, j) for i, j in tree.edges) - sum(
                p.get(i, j) for i, j in decoded.edges
            )

        numeric = fd_gradient(fixed_tree_value, params.matrix)
        worst_perc = max(worst_perc, rel_error(loss.grad, numeric))
        checked += 1
    assert worst_perc < 1e-4

    elapsed = time.perf_counter() - start
    print(
        f"criterion 3: worst relative errors d_B2={worst_sq:.2e} d_B={worst_lin:.2e} "
        f"probe={worst_probe:.2e} perceptron={worst_perc:.2e} in {elapsed:.2f}s"
    )
    assert elapsed < 60.0


def test_criterion_4_synthetic_recoverability():
    start = time.perf_counter()
    sentences, sequences = synth_corpus(240, 5, 15, 32, 0.0, seed=112)
    split, store = split_corpus(sentences, sequences, (200, 20, 20), seed=112)
    assert (len(split.train), len(split.dev), len(split.test)) == (200, 20, 20)
    test_seqs = store.sequences[220:]
    for kind in ("probe", "perceptron"):
        record = train(TrainConfig(model_kind=kind, rank=32, seed=0), split, store)
        assert len(record.dev_losses) <= 100
        report = evaluate(record.params, record.squared, split.test, test_seqs)
        print(
            f"criterion 4 {kind}: uuas={report.uuas_micro:.4f} "
            f"dspr={report.dspr_macro:.4f} epochs={len(record.dev_losses)}"
        )
        assert report.uuas_micro >= 0.95
        assert report.dspr_macro >= 0.95
    elapsed = time.perf_counter() - start
    print(f"criterion 4: both models recovered the metric in {elapsed:.1f}s")
    assert elapsed < 300.0


def test_criterion_5_tree_and_rank_metrics_dissociate():
    rng = np.random.default_rng(1005)
    raw_scores = []
    for k in range(100):
        tree = random_tree(int(rng.integers(8, 21)), rng)
        pred = synth_nearfar_distances(tree, seed=5000 + k)
        correct, total = uuas(mst_prim(pred), tree)
        assert correct == total  # tree recovered in full, every sentence
        assert dspr_pfw_sentence(pred, tree) == (1.0, False)
        raw_scores.append(dspr_sentence(pred, tree).rho)
    mean_raw = float(np.mean(raw_scores))
    print(f"criterion 5: perfect trees everywhere, mean raw dspr {mean_raw:.4f}")
    assert mean_raw < 0.99


def test_criterion_6_monotone_invariance():
    rng = np.random.default_rng(1006)
    for _ in range(100):
        params, emb, gold = random_instance(rng, n_max=10)
        pred = predict_matrix(params, emb).distances
        pred_sq = DistanceMatrix(pred.values**2)
        assert mst_prim(pred) == mst_prim(pred_sq)
        assert uuas(mst_prim(pred), gold) == uuas(mst_prim(pred_sq), gold)
        assert dspr_sentence(pred, gold) == dspr_sentence(pred_sq, gold)
        assert dspr_pfw_sentence(pred, gold) == dspr_pfw_sentence(pred_sq, gold)
    print("criterion 6: all three scores identical under squaring, 100/100")


def test_criterion_7_spearman_unit_check():
    tie = spearman([1.0, 2.0, 2.0, 4.0], [1.0, 2.0, 3.0, 4.0])
    assert abs(tie.rho - 0.9487) < 1e-4
    reversal = spearman([1.0, 2.0, 3.0, 4.0, 5.0], [5.0, 4.0, 3.0, 2.0, 1.0])
    assert reversal.rho == -1.0
    print(f"criterion 7: tie case {tie.rho:.6f}, reversal {reversal.rho}")


def test_criterion_8_compare_emits_per_language_deltas(tmp_path, capsys):
    # realistic scores need real treebanks and a pretrained encoder;
    # here only the delta-table contract is enforced
    pairs = []
    for lang, seed in (("en", 41), ("fi", 43)):
        sentences, sequences = synth_corpus(8, 5, 9, 8, 0.2, seed=seed)
        for side, rank in (("a", 4), ("b", 2)):
            params = init_params(rank, 8, np.random.default_rng(seed + rank))
            report = evaluate(params, True, sentences, sequences)
            path = tmp_path / f"{lang}_{side}.txt"
            path.write_text(render_eval_report(report), encoding="utf-8")
        pairs.append((lang, tmp_path / f"{lang}_a.txt", tmp_path / f"{lang}_b.txt"))
    argv = ["compare"]
    for lang, a, b in pairs:
        argv += ["--pair", f"{lang},{a},{b}"]
    assert main(argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "label\tuuas_micro\tuuas_macro\tdspr_macro\tdspr_pfw_macro"
    assert [line.split("\t")[0] for line in lines[1:]] == ["en", "fi", "mean"]
    for line in lines[1:]:
        cells = line.split("\t")[1:]
        assert len(cells) == 4 and all(np.isfinite(float(c)) for c in cells)
    print("criterion 8: per-language delta table emitted with a mean row")


def test_criterion_9_train_and_eval_are_deterministic(tmp_path):
    root = tmp_path
    assert main([
        "synth", "random", "--out", str(root / "raw"), "--count", "30",
        "--min-n", "5", "--max-n", "9", "--dim", "8", "--seed", "7",
    ]) == 0
    assert main([
        "prepare", "--treebank", str(root / "raw" / "synth.conllu"),
        "--store", str(root / "raw" / "synth.sdeb"),
        "--out", str(root / "data"), "--seed", "7",
    ]) == 0
    for kind in ("probe", "perceptron"):
        outs = []
        for run in ("one", "two"):
            out = root / f"{kind}-{run}"
            assert main([
                "train", "--data", str(root / "data"), "--out", str(out),
                "--model-kind", kind, "--rank", "4", "--max-epochs", "5",
                "--batch-size", "8", "--seed", "7",
            ]) == 0
            assert main([
                "eval", "--checkpoint", str(out / "checkpoint.spbm"),
                "--treebank", str(root / "data" / "test.conllu"),
                "--store", str(root / "data" / "test.sdeb"),
                "--out", str(out),
            ]) == 0
            outs.append(out)
        for name in ("checkpoint.spbm", "train_report.txt", "eval_report.txt"):
            first = (outs[0] / name).read_bytes()
            second = (outs[1] / name).read_bytes()
            assert first == second, f"{kind} {name} differs between identical runs"
    print("criterion 9: reports and checkpoints byte-identical across reruns")
