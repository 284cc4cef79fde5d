"""
Music Dependency Parser Package
Parses chord and melody sequences into dependency trees with a learned arc
scorer and spanning-tree decoding, and converts between dependency and
constituent trees
"""

from .trees import DependencyTree, dep_to_constituent, constituent_to_dep, is_projective
from .features import extract_features, build_duration_vocab
from .decoder import decode
from .training import TrainConfig, fit
from .scorer import ModelConfig
from .corpus_io import load_corpus, save_corpus
from .weights import save_weights, load_weights
from .pipeline import ParsingPipeline, parse_piece

__version__ = "0.1.0"

# Main functions for easy import
__all__ = [
    'DependencyTree',
    'dep_to_constituent',
    'constituent_to_dep',
    'is_projective',
    'extract_features',
    'build_duration_vocab',
    'decode',
    'TrainConfig',
    'fit',
    'ModelConfig',
    'load_corpus',
    'save_corpus',
    'save_weights',
    'load_weights',
    'ParsingPipeline',
    'parse_piece',
]
