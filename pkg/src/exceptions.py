"""
Exception hierarchy for the Music Dependency Parser
"""


class MusicParserError(Exception):
    """Base class for every error raised by the toolkit"""


class UsageError(MusicParserError):
    """Bad command-line usage"""


# Trees
class InvalidTreeError(MusicParserError):
    pass


class DoubleSidedError(InvalidTreeError):
    """A head has dependents on both sides, so the constituent tree is not unique"""


class NonProjectiveError(InvalidTreeError):
    pass


# Features
class ChordParseError(MusicParserError):
    pass


class UnknownNumeratorError(MusicParserError):
    pass


class UnknownDurationError(MusicParserError):
    pass


# Scorer / decoder
class OutOfVocabError(MusicParserError):
    pass


class AllMaskedRowError(MusicParserError):
    pass


class InfeasibleError(MusicParserError):
    """No tree with a finite total score exists"""


# Training
class DivergenceError(MusicParserError):
    pass


# Metrics
class LengthMismatchError(MusicParserError):
    pass


# Files
class SchemaError(MusicParserError):
    pass


class ConversionError(MusicParserError):
    pass


class FormatVersionError(MusicParserError):
    pass


class PayloadLengthError(FormatVersionError):
    """Weight payload shorter or longer than the tensor directory says"""


class ShapeMismatchError(MusicParserError):
    pass
