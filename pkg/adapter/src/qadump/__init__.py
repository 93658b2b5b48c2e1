"""Model-to-log bridge: dump QA checkpoints as calibration-toolkit logs."""

from .dataset import QAExample, load_qa_dataset
from .embeddings import dump_embeddings
from .extractive import dump_extractive
from .generative import dump_generative
from .job import AdapterJob, DumpResult

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
