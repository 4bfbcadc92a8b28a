"""Toolkit for synthesizing, injecting, and scoring option-list
disambiguation turns in task-oriented dialog corpora."""

from .corpus import Corpus, Database, Dialog, Entity, Frame, Turn, load_corpus, load_database, write_corpus
from .grammar import Grammar, Template, count_language, delexicalize, fill, load_grammar, sample
from .resolver import Resolution, edit_distance, normalize, resolve
from .synthesizer import AddressingMethod, SingleTurnExample, SynthConfig, apply_addressing, synthesize_dataset, synthesize_example

__version__ = "0.1.0"

__all__ = [
    "AddressingMethod",
    "Corpus",
    "Database",
    "Dialog",
    "Entity",
    "Frame",
    "Grammar",
    "Resolution",
    "SingleTurnExample",
    "SynthConfig",
    "Template",
    "Turn",
    "apply_addressing",
    "count_language",
    "delexicalize",
    "edit_distance",
    "fill",
    "load_corpus",
    "load_database",
    "load_grammar",
    "normalize",
    "resolve",
    "sample",
    "synthesize_dataset",
    "synthesize_example",
    "write_corpus",
]
