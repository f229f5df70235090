"""Exception types shared across hyplab modules."""


class HyplabError(Exception):
    """Base class for all hyplab errors."""


class RankDeficientError(HyplabError):
    """A matrix that must have full rank does not (within tolerance)."""


class SingularMatrixError(HyplabError):
    """A pivot fell below the singularity threshold during factorization."""


class NonConvergedError(HyplabError):
    """An iterative solver exhausted its iteration budget."""


class MissingStreamError(HyplabError):
    """An operation that consumes randomness was called without a stream."""


class InvalidConfigError(HyplabError):
    """An experiment configuration failed validation."""


class DegenerateEnsembleError(HyplabError):
    """More than the tolerated fraction of trials had to be discarded."""
