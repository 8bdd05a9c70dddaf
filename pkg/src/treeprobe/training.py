"""Mini-batch Adam training with early stopping and random search.

Both model kinds share this loop; only the objective differs. All
randomness (shuffling, dropout, search sampling) is drawn from named
streams fanned out from the config seed, so runs are bit-reproducible
and adding a new consumer never perturbs existing streams.
"""

import math
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import seeding
from .conllu import Sentence, TreebankSplit, gold_tree
from .embeddings import EmbeddingSequence, EmbeddingStore, align_pairs
from .losses import batch_objective
from .model import ProbeParams, apply_dropout, init_params

MODEL_KINDS = ("probe", "perceptron")

# early stopping: an epoch counts as an improvement only if dev loss
# drops by at least this relative amount
IMPROVEMENT_RTOL = 1e-6


class ConfigError(ValueError):
    """A config file or mapping violates the schema."""


class TrainingAbort(RuntimeError):
    """Raised when the objective stops being finite."""

    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(
            f"non-finite loss {loss!r} at epoch {epoch}, batch {batch}"
        )


class SearchAbort(RuntimeError):
    """Raised when every search trial aborts numerically."""


@dataclass(frozen=True)
class TrainConfig:
    model_kind: str
    rank: int
    learning_rate: float = 0.001
    dropout_rate: float | None = None  # None resolves by model kind
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 5
    squared: bool | None = None  # None resolves by model kind
    seed: int = 0

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if self.rank < 1:
            raise ConfigError("rank must be >= 1")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.dropout_rate is not None and not 0 <= self.dropout_rate < 1:
            raise ConfigError("dropout_rate must lie in [0, 1)")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")

    @property
    def resolved_squared(self) -> bool:
        """Probe regresses squared distances by default, the parser does not."""
        if self.squared is not None:
            return self.squared
        return self.model_kind == "probe"

    @property
    def resolved_dropout(self) -> float:
        """Empirical per-kind default: the margin model benefits from input
        dropout (it keeps training pressure alive after trees are first
        recovered, improving distance-rank fidelity), the regression model
        does not."""
        if self.dropout_rate is not None:
            return self.dropout_rate
        return 0.3 if self.model_kind == "perceptron" else 0.0


@dataclass
class TrainRecord:
    config: TrainConfig
    squared: bool
    train_losses: list[float]          # one entry per completed epoch
    dev_losses: list[float]
    best_epoch: int                    # 1-based
    best_dev_loss: float
    params: ProbeParams                # snapshot from the best dev epoch
    stopped_early: bool
    wall_clock: float                  # seconds; excluded from reports


@dataclass(frozen=True)
class SearchSpace:
    rank_choices: tuple = (32, 64, 128, 256)
    lr_range: tuple = (1e-4, 1e-2)     # sampled log-uniform
    dropout_range: tuple = (0.0, 0.5)  # sampled uniform
    trials: int = 10

    def __post_init__(self):
        if not self.rank_choices:
            raise ConfigError("rank_choices must be non-empty")
        if any(r < 1 for r in self.rank_choices):
            raise ConfigError("rank choices must be >= 1")
        lo, hi = self.lr_range
        if not 0 < lo <= hi:
            raise ConfigError("lr_range must satisfy 0 < lo <= hi")
        lo, hi = self.dropout_range
        if not 0 <= lo <= hi < 1:
            raise ConfigError("dropout_range must satisfy 0 <= lo <= hi < 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")


class TrialResult(NamedTuple):
    config: TrainConfig
    record: TrainRecord | None
    error: str | None


class SearchResult(NamedTuple):
    best_config: TrainConfig
    best_record: TrainRecord
    trials: list[TrialResult]


class Adam:
    """Textbook Adam with bias correction; updates the array in place."""

    def __init__(self, shape, learning_rate, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, param: np.ndarray, grad: np.ndarray):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


def _paired(sentences: list[Sentence], sequences: list[EmbeddingSequence]):
    pairs = align_pairs(sentences, sequences)
    return [(seq, gold_tree(sent)) for sent, seq in pairs]


def split_store_parts(split: TreebankSplit, store: EmbeddingStore):
    """Slice a store aligned with the train||dev||test concatenation."""
    n_train, n_dev, n_test = len(split.train), len(split.dev), len(split.test)
    total = n_train + n_dev + n_test
    if len(store.sequences) != total:
        raise ValueError(
            f"store holds {len(store.sequences)} sequences, split holds {total} "
            f"({n_train}/{n_dev}/{n_test})"
        )
    seqs = store.sequences
    return (
        seqs[:n_train],
        seqs[n_train:n_train + n_dev],
        seqs[n_train + n_dev:],
    )


def train(config: TrainConfig, split: TreebankSplit, store: EmbeddingStore) -> TrainRecord:
    """Run the full training loop and return the best-dev-epoch snapshot.

    Each epoch shuffles the training sentences with a per-epoch stream,
    applies dropout per sentence (keyed by epoch and corpus position so
    batch composition never changes a mask), takes one Adam step per
    batch, then measures dev loss without dropout. Stops after
    `patience` consecutive epochs without relative dev improvement.
    """
    if not split.train:
        raise ValueError("train split is empty")
    if not split.dev:
        raise ValueError("dev split is empty")
    if config.rank > store.dim:
        raise ConfigError(f"rank {config.rank} exceeds embedding dim {store.dim}")
    started = time.perf_counter()
    squared = config.resolved_squared
    dropout = config.resolved_dropout
    train_seqs, dev_seqs, _ = split_store_parts(split, store)
    train_pairs = _paired(split.train, train_seqs)
    dev_pairs = _paired(split.dev, dev_seqs)

    params = init_params(config.rank, store.dim, seeding.stream(config.seed, "init"))
    optimiser = Adam(params.matrix.shape, config.learning_rate)

    train_losses: list[float] = []
    dev_losses: list[float] = []
    best_dev = math.inf
    best_epoch = 0
    best_params = params.copy()
    stale = 0
    stopped_early = False

    n_train = len(train_pairs)
    for epoch in range(1, config.max_epochs + 1):
        order = seeding.stream(config.seed, "shuffle", epoch).permutation(n_train)
        epoch_loss = 0.0
        for batch_index, start in enumerate(range(0, n_train, config.batch_size)):
            positions = order[start:start + config.batch_size]
            batch = []
            for pos in positions:
                emb, gold = train_pairs[pos]
                if dropout > 0:
                    emb = apply_dropout(
                        emb,
                        dropout,
                        seeding.stream(config.seed, "dropout", epoch, int(pos)),
                    )
                batch.append((emb, gold))
            try:
                loss = batch_objective(config.model_kind, params, batch, squared)
            except ValueError as exc:
                # inputs were validated up front, so a forward-pass error
                # here means the parameters blew up mid-training
                raise TrainingAbort(epoch, batch_index, math.nan) from exc
            if not math.isfinite(loss.value):
                raise TrainingAbort(epoch, batch_index, loss.value)
            optimiser.step(params.matrix, loss.grad)
            epoch_loss += loss.value * len(batch)
        train_losses.append(epoch_loss / n_train)

        try:
            dev_loss = batch_objective(config.model_kind, params, dev_pairs, squared).value
        except ValueError as exc:
            raise TrainingAbort(epoch, -1, math.nan) from exc
        if not math.isfinite(dev_loss):
            raise TrainingAbort(epoch, -1, dev_loss)
        dev_losses.append(dev_loss)

        if dev_loss < best_dev * (1 - IMPROVEMENT_RTOL) or best_epoch == 0:
            best_dev = dev_loss
            best_epoch = epoch
            best_params = params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                stopped_early = True
                break

    return TrainRecord(
        config=config,
        squared=squared,
        train_losses=train_losses,
        dev_losses=dev_losses,
        best_epoch=best_epoch,
        best_dev_loss=best_dev,
        params=best_params,
        stopped_early=stopped_early,
        wall_clock=time.perf_counter() - started,
    )


def sample_config(space: SearchSpace, base: TrainConfig, trial: int) -> TrainConfig:
    """Draw one trial config from the search space (seeded by trial index).

    Only the searched hyperparameters vary; the training seed stays the
    base config's, so trials that sample identical values are
    bit-identical and ties resolve to the earliest trial.
    """
    rng = seeding.stream(base.seed, "search", trial)
    rank = int(rng.choice(np.asarray(space.rank_choices)))
    lo, hi = space.lr_range
    lr = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    dlo, dhi = space.dropout_range
    dropout = float(rng.uniform(dlo, dhi))
    return replace(base, rank=rank, learning_rate=lr, dropout_rate=dropout)


def _run_trial(payload):
    config, split, store = payload
    try:
        return train(config, split, store), None
    except TrainingAbort as exc:
        return None, str(exc)


def random_search(
    space: SearchSpace,
    base: TrainConfig,
    split: TreebankSplit,
    store: EmbeddingStore,
    jobs: int = 1,
) -> SearchResult:
    """Train `space.trials` sampled configs; return the best by dev loss.

    Ties go to the earliest trial. Aborted trials are recorded with
    their diagnostic; if every trial aborts, raises with all of them.
    Each trial is a pure function of its sampled config, so jobs > 1
    changes only speed.
    """
    configs = [sample_config(space, base, i) for i in range(space.trials)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_trial, [(c, split, store) for c in configs]))
    else:
        outcomes = [_run_trial((c, split, store)) for c in configs]
    trials = [
        TrialResult(config, record, error)
        for config, (record, error) in zip(configs, outcomes)
    ]
    best_index = -1
    for i, trial in enumerate(trials):
        if trial.record is None:
            continue
        if best_index < 0 or trial.record.best_dev_loss < trials[best_index].record.best_dev_loss:
            best_index = i
    if best_index < 0:
        lines = "; ".join(f"trial {i}: {t.error}" for i, t in enumerate(trials))
        raise SearchAbort(f"every search trial aborted: {lines}")
    best = trials[best_index]
    return SearchResult(best.config, best.record, trials)


# -- flat key/value config files ---------------------------------------------

_TRAIN_KEYS = {
    "model_kind": str,
    "rank": int,
    "learning_rate": float,
    "dropout_rate": float,
    "batch_size": int,
    "max_epochs": int,
    "patience": int,
    "squared": bool,
    "seed": int,
}

_SPACE_KEYS = {
    "rank_choices": tuple,
    "lr_range": tuple,
    "dropout_range": tuple,
    "trials": int,
}


def parse_kv(text: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _coerce(key: str, value: str, kind):
    try:
        if kind is bool:
            low = value.lower()
            if low not in ("true", "false"):
                raise ValueError
            return low == "true"
        if kind is tuple:
            return tuple(float(part) for part in value.split(",") if part.strip())
        return kind(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {value!r} as {kind.__name__}") from None


def train_config_from_kv(mapping: dict, **overrides) -> TrainConfig:
    """Build a TrainConfig from parsed key/value pairs plus overrides."""
    kwargs = {}
    for key, value in mapping.items():
        if key not in _TRAIN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[key] = _coerce(key, value, _TRAIN_KEYS[key])
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    if "model_kind" not in kwargs:
        raise ConfigError("config is missing required key 'model_kind'")
    if "rank" not in kwargs:
        raise ConfigError("config is missing required key 'rank'")
    return TrainConfig(**kwargs)


def search_space_from_kv(mapping: dict) -> SearchSpace:
    kwargs = {}
    for key, value in mapping.items():
        if key in _TRAIN_KEYS:
            continue  # shared file may carry base-config keys
        if key not in _SPACE_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[key] = _coerce(key, value, _SPACE_KEYS[key])
    if "rank_choices" in kwargs:
        kwargs["rank_choices"] = tuple(int(r) for r in kwargs["rank_choices"])
    if "trials" in kwargs:
        kwargs["trials"] = int(kwargs["trials"])
    return SearchSpace(**kwargs)


def format_train_config(config: TrainConfig) -> str:
    lines = [
        f"model_kind = {config.model_kind}",
        f"rank = {config.rank}",
        f"learning_rate = {config.learning_rate!r}",
        f"dropout_rate = {config.resolved_dropout!r}",
        f"batch_size = {config.batch_size}",
        f"max_epochs = {config.max_epochs}",
        f"patience = {config.patience}",
        f"squared = {str(config.resolved_squared).lower()}",
        f"seed = {config.seed}",
    ]
    return "\n".join(lines) + "\n"


def render_train_report(record: TrainRecord) -> str:
    """Deterministic text report: config echo, per-epoch table, best epoch.

    Wall-clock time is deliberately left out so identical runs produce
    identical bytes.
    """
    lines = ["# config"]
    lines.append(format_train_config(record.config).rstrip("\n"))
    lines.append("# epochs")
    lines.append("epoch\ttrain_loss\tdev_loss")
    for i, (tr, dv) in enumerate(zip(record.train_losses, record.dev_losses), start=1):
        lines.append(f"{i}\t{tr!r}\t{dv!r}")
    lines.append("# summary")
    lines.append(f"best_epoch = {record.best_epoch}")
    lines.append(f"best_dev_loss = {record.best_dev_loss!r}")
    lines.append(f"stopped_early = {str(record.stopped_early).lower()}")
    return "\n".join(lines) + "\n"
