"""Corpus augmentation and code-retrieval evaluation toolkit."""

__version__ = "0.1.0"
