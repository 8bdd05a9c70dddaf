"""Run a pretrained encoder over sentences and pool word vectors.

Each word's vector is the mean of its sub-token hidden states from the
requested layer.  Sentences whose encoded length exceeds the model's
position limit cannot be fed at all and are skipped, reported back to
the caller rather than silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .align import AlignmentPlan, plan_alignment
from .conllu import SentenceWords
from .container import Record

LAYERS = ("last",)


@dataclass(frozen=True)
class Encoder:
    """A loaded tokenizer/model pair."""

    tokenizer: object
    model: object

    @property
    def dim(self) -> int:
        return int(self.model.config.hidden_size)

    @property
    def position_limit(self) -> int:
        return int(self.model.config.max_position_embeddings)


def load_encoder(model_name: str) -> Encoder:
    """Load tokenizer and encoder weights; the model is set to eval mode."""
    tokenizer = AutoTokenizer.from_pretrained(model_name, use_fast=True)
    model = AutoModel.from_pretrained(model_name)
    model.eval()
    return Encoder(tokenizer, model)


def plan_sentences(
    encoder: Encoder, sentences: list[SentenceWords]
) -> tuple[list[tuple[SentenceWords, AlignmentPlan]], list[str]]:
    """Tokenise every sentence and split into feedable and skipped.

    Returns (kept, skipped_ids).  Kept entries carry the alignment plan
    built from the unpadded encoding; right padding added later during
    batching does not move any span.
    """
    kept: list[tuple[SentenceWords, AlignmentPlan]] = []
    skipped: list[str] = []
    limit = encoder.position_limit
    for sent in sentences:
        enc = encoder.tokenizer(list(sent.forms), is_split_into_words=True)
        word_ids = enc.word_ids()
        if len(word_ids) > limit:
            skipped.append(sent.sentence_id)
            continue
        kept.append((sent, plan_alignment(sent.sentence_id, sent.forms, word_ids)))
    return kept, skipped


def extract(
    encoder: Encoder,
    sentences: list[SentenceWords],
    layer: str = "last",
    batch_size: int = 8,
) -> tuple[list[Record], list[str]]:
    """Pool one vector per word for every feedable sentence.

    Returns (records, skipped_ids), records in treebank order.
    """
    if layer not in LAYERS:
        raise ValueError(f"unknown layer {layer!r}; expected one of {LAYERS}")
    if batch_size < 1:
        raise ValueError(f"batch size must be positive, got {batch_size}")
    kept, skipped = plan_sentences(encoder, sentences)
    records: list[Record] = []
    for lo in range(0, len(kept), batch_size):
        batch = kept[lo : lo + batch_size]
        enc = encoder.tokenizer(
            [list(sent.forms) for sent, _ in batch],
            is_split_into_words=True,
            padding=True,
            return_tensors="pt",
        )
        with torch.inference_mode():
            out = encoder.model(input_ids=enc["input_ids"], attention_mask=enc["attention_mask"])
        hidden = out.last_hidden_state
        for row, (sent, plan) in enumerate(batch):
            pooled = [hidden[row, start:stop].mean(dim=0) for start, stop in plan.spans]
            mat = torch.stack(pooled).numpy().astype(np.float32)
            records.append(Record(sent.sentence_id, mat))
    return records, skipped
