"""Lightweight syntactic structure extractors over contextual embeddings.

Two models share one parameterisation, a rank-limited linear map B:
a distance probe regressing ‖B(h_i − h_j)‖² onto tree distances, and a
margin-trained parser scoring the same quantity as an edge weight.
Trees are decoded as minimum spanning weight trees and scored with
attachment and rank-correlation metrics.
"""

__version__ = "0.1.0"

from .conllu import (
    ConlluError,
    Sentence,
    SplitProvenance,
    Token,
    TreebankSplit,
    filter_and_split,
    gold_tree,
    parse_conllu,
    serialize_conllu,
    split_indices,
)
from .embeddings import (
    AlignmentError,
    EmbeddingSequence,
    EmbeddingStore,
    StoreCorruptionError,
    StoreDataError,
    StoreFormatError,
    align_pairs,
    random_orthogonal,
    read_store,
    synth_nearfar_distances,
    synth_tree_embeddings,
    write_store,
)
from .graph import (
    DepTree,
    DistanceMatrix,
    TreeRecovery,
    distances_to_tree,
    mst_prim,
    prufer_to_tree,
    random_tree,
    tree_to_distances,
)
from .losses import (
    LossValue,
    batch_objective,
    perceptron_local_loss,
    probe_global_contribution,
    probe_local_loss,
)
from .metrics import (
    EvalOptions,
    EvalReport,
    SentenceEval,
    SpearmanResult,
    compare,
    compare_many,
    dspr_pfw_sentence,
    dspr_sentence,
    evaluate,
    parse_eval_report,
    render_eval_report,
    spearman,
    uuas,
)
from .model import (
    PairwisePrediction,
    ProbeParams,
    apply_dropout,
    distance,
    grad_squared_distance,
    init_params,
    load_checkpoint,
    predict_matrix,
    save_checkpoint,
)
from .training import (
    Adam,
    ConfigError,
    SearchAbort,
    SearchResult,
    SearchSpace,
    TrainConfig,
    TrainRecord,
    TrainingAbort,
    TrialResult,
    random_search,
    render_train_report,
    train,
)
