"""Exception hierarchy shared across the package."""


class PieceAttackError(Exception):
    """Base class for all package-specific errors."""


class InvalidCorpus(PieceAttackError):
    pass


class VocabTooSmall(PieceAttackError):
    pass


class CorruptTokenization(PieceAttackError):
    pass


class DegenerateDataset(PieceAttackError):
    pass


class VictimUnavailable(PieceAttackError):
    pass


class MalformedResponse(PieceAttackError):
    pass


class GeneratorUnavailable(PieceAttackError):
    pass


class EmbeddingParseError(PieceAttackError):
    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class InsufficientData(PieceAttackError):
    pass
