"""Exception hierarchy shared across the toolkit."""


class PetlabError(Exception):
    """Base class for all toolkit errors."""


class CorpusValidationError(PetlabError):
    """A corpus record violates the canonical-record invariants."""


class MarkerError(CorpusValidationError):
    """Text does not contain exactly one non-empty angle-bracket PET span."""


class DuplicateIdError(CorpusValidationError):
    """Two records share an example id."""


class EmbeddingError(PetlabError):
    """Embedding backend failure or degenerate vector."""


class BackendUnavailableError(EmbeddingError):
    """The requested embedding or classifier backend is not registered/reachable."""


class VectorTableError(EmbeddingError):
    """Malformed word-vector table file."""


class AnnotationError(PetlabError):
    """Malformed paraphrase annotations or review-queue data."""


class SplitError(PetlabError):
    """Dataset construction cannot satisfy the requested plan."""


class InfeasibleStatsError(PetlabError):
    """Declared corpus statistics are internally inconsistent, so no corpus
    can reproduce them."""


class TrainingError(PetlabError):
    """Classifier training or prediction contract violation."""


class AnalysisError(PetlabError):
    """Report inputs are inconsistent (missing labels, unscored ids, ...)."""


class ConfigError(PetlabError):
    """Invalid pipeline configuration."""


class StageError(PetlabError):
    """Wraps a failure with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
