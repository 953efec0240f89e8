"""Parsers for the multiple-choice reading comprehension datasets."""

from .mc_example import LoadReport, McExample
from .dream import load_dream
from .race import load_race

__all__ = [
    'LoadReport',
    'McExample',
    'load_dream',
    'load_race',
]
