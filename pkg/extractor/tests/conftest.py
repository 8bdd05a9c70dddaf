"""Shared fixtures: a tiny offline encoder and a multilingual treebank.

The encoder is a randomly initialised two-layer BERT with a handmade
WordPiece vocab saved to disk, so tests exercise the real tokenizer
and model code paths without any network access.
"""

from pathlib import Path

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    ".", ",", "a", "at", "in", "the", "on",
    "cat", "dog", "sat", "ran", "mat", "was", "word", "token", "deep", "big",
    "un", "##believ", "##able",
    "caf", "##é",
    "happy", "##ly",
    "##piece", "##iz", "##ation", "model", "##ing",
    "кот", "сид", "##ит", "на", "ковре", "собака", "бежит",
    "猫", "坐", "下", "了", "狗", "跑",
    "kissa", "istuu", "matolla", "koira", "juoksee",
    "η", "γάτα", "κάθεται",
    "le", "chat", "dort", "chien", "court",
]

# (sentence id, word forms); heads form a chain so the file is a valid treebank.
SENTENCES = [
    ("en-1", ("the", "cat", "sat", "on", "the", "mat", ".")),
    ("en-2", ("the", "unbelievable", "cat", "sat", ".")),
    ("en-3", ("a", "dog", "ran", "at", "the", "cat", ".")),
    ("en-4", ("the", "cat", "was", "happily", "sat", ".")),
    ("en-5", ("the", "wordpiece", "token", ".")),
    ("en-6", ("deep", "modeling", "was", "the", "word", ".")),
    ("en-7", ("the", "cat", "sat", "in", "a", "café", ".")),
    ("en-8", ("tokenization", "was", "unbelievable", ".")),
    ("ru-1", ("кот", "сидит", "на", "ковре", ".")),
    ("ru-2", ("собака", "бежит", ".")),
    ("ru-3", ("кот", "бежит", "на", "ковре", ".")),
    ("ru-4", ("собака", "сидит", ".")),
    ("zh-1", ("猫", "坐", "下", "了", ".")),
    ("zh-2", ("狗", "跑", "了", ".")),
    ("zh-3", ("猫", "跑", "下", "了", ".")),
    ("fr-1", ("le", "chat", "dort", ".")),
    ("fr-2", ("le", "chien", "court", ".")),
    ("fi-1", ("kissa", "istuu", "matolla", ".")),
    ("fi-2", ("koira", "juoksee", ".")),
    ("el-1", ("η", "γάτα", "κάθεται", ".")),
]


def conllu_block(sentence_id: str, forms: tuple[str, ...]) -> str:
    lines = [f"# sent_id = {sentence_id}"]
    for k, form in enumerate(forms, start=1):
        head = k - 1
        deprel = "root" if head == 0 else "dep"
        lines.append(f"{k}\t{form}\t_\t_\t_\t_\t{head}\t{deprel}\t_\t_")
    return "\n".join(lines) + "\n\n"


def write_treebank(path: Path, sentences) -> Path:
    path.write_text("".join(conllu_block(i, f) for i, f in sentences), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory) -> str:
    root = tmp_path_factory.mktemp("tiny-encoder")
    vocab = root / "vocab.txt"
    vocab.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(str(vocab), do_lower_case=False)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=32,
    )
    torch.manual_seed(0)
    model = BertModel(config)
    model.eval()
    saved = root / "model"
    tokenizer.save_pretrained(saved)
    model.save_pretrained(saved)
    return str(saved)


@pytest.fixture(scope="session")
def treebank_path(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("treebank")
    return write_treebank(root / "multi.conllu", SENTENCES)
