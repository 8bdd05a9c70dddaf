"""Word-level contextual embedding extraction into a flat binary container."""

from .align import AlignmentPlan, plan_alignment
from .conllu import SentenceWords, read_treebank
from .container import MAGIC, VERSION, Record, container_bytes, write_container
from .runner import Encoder, extract, load_encoder, plan_sentences

__version__ = "0.1.0"

__all__ = [
    "AlignmentPlan",
    "Encoder",
    "MAGIC",
    "Record",
    "SentenceWords",
    "VERSION",
    "container_bytes",
    "extract",
    "load_encoder",
    "plan_alignment",
    "plan_sentences",
    "read_treebank",
    "write_container",
    "__version__",
]
