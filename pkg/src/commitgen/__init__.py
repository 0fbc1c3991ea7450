"""Commit message generation from diffs: corpus handling, Java sketching,
subword segmentation, retrieval and neural translation baselines, BLEU
evaluation and file-type ensembles."""

from .corpus import Commit, CorpusSplit, FileType, Vocabulary, load_parallel_corpus, load_prefix
from .errors import CommitGenError

__version__ = "0.1.0"
__all__ = ["Commit", "CommitGenError", "CorpusSplit", "FileType", "Vocabulary", "load_parallel_corpus", "load_prefix"]
