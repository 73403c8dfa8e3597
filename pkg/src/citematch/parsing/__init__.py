from .citation import ParsedCitation, ReferenceParser, assemble, parse_reference
from .dictionaries import Dictionaries
from .features import FeatureExtractor, extract_features
from .tagger import LABELS, TaggerModel, TokenLabel, tag, train_tagger

__all__ = [
    "Dictionaries",
    "FeatureExtractor",
    "LABELS",
    "ParsedCitation",
    "ReferenceParser",
    "TaggerModel",
    "TokenLabel",
    "assemble",
    "extract_features",
    "parse_reference",
    "tag",
    "train_tagger",
]
