"""Distance probe vs margin parser on one controlled corpus.

Both models learn the same object, a low-rank map B over embeddings;
they differ only in the objective. The probe regresses all pairwise
distances; the parser only separates the gold tree from the decoded
one. On a noiseless synthetic corpus both should recover the trees,
and the whole pipeline runs through the command-line entry points.
"""

import tempfile
from pathlib import Path

from treeprobe import load_checkpoint, parse_eval_report
from treeprobe.cli import main

work = Path(tempfile.mkdtemp(prefix="probe-demo-"))
data = work / "data"

# a small noiseless corpus: trees plus embeddings that encode them
main(["synth", "random", "--out", str(work / "raw"), "--count", "120",
      "--min-n", "5", "--max-n", "12", "--dim", "16", "--seed", "9"])
main(["prepare", "--treebank", str(work / "raw" / "synth.conllu"),
      "--store", str(work / "raw" / "synth.sdeb"), "--out", str(data), "--seed", "9"])

# train both kinds with the same budget and seed
for kind in ("probe", "perceptron"):
    main(["train", "--data", str(data), "--out", str(work / kind),
          "--model-kind", kind, "--rank", "16", "--max-epochs", "40", "--seed", "0"])
    main(["eval", "--checkpoint", str(work / kind / "checkpoint.spbm"),
          "--treebank", str(data / "test.conllu"), "--store", str(data / "test.sdeb"),
          "--out", str(work / kind)])

# the per-metric deltas (probe minus parser) on the shared test set
main(["compare", "--pair",
      f"synthetic,{work / 'probe' / 'eval_report.txt'},{work / 'perceptron' / 'eval_report.txt'}"])

# both checkpoints hold the same kind of object: a rank-16 map over d=16
for kind in ("probe", "perceptron"):
    with open(work / kind / "checkpoint.spbm", "rb") as fh:
        params, squared = load_checkpoint(fh)
    report = parse_eval_report((work / kind / "eval_report.txt").read_text())
    print(f"{kind}: rank {params.rank_budget}, squared {squared}, "
          f"test uuas {report.uuas_micro:.3f}, dspr {report.dspr_macro:.3f}")

print("artifacts left under", work)
