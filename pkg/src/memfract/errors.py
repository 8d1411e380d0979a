from typing import Optional


class MemfractError(Exception):
    pass


class InputError(MemfractError, ValueError):
    """The data or parameters handed to an operation are unusable."""


class CsvParseError(InputError):
    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message)
        self.row = row


class CvValidationError(InputError):
    pass


class TooShortError(InputError):
    pass


class ShapeError(InputError):
    pass


class DomainError(InputError):
    pass


class PoleError(InputError):
    pass


class OpenSweepError(InputError):
    pass


class ConfigError(InputError):
    pass


class AnalysisError(MemfractError, ValueError):
    """The data is valid but the analysis has no meaningful answer."""


class NoVertexError(AnalysisError):
    pass


class UnderdeterminedError(AnalysisError):
    pass


class ConditioningError(AnalysisError):
    pass


class SingularityError(AnalysisError):
    def __init__(self, t: float, vertex_time: float, alpha: float):
        super().__init__(
            f"t={t!r} lies at the vertex time T={vertex_time!r}: the memory term "
            f"(t-T)^(k-{alpha!r}) is singular there"
        )
        self.t = t
        self.vertex_time = vertex_time
        self.alpha = alpha


class DegenerateCurveError(AnalysisError):
    pass


class NoAdmissibleCoupleError(AnalysisError):
    pass
