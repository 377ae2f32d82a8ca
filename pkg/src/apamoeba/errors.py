"""Exception types shared across modules."""


class ApamoebaError(Exception):
    """Base class for numerical failures that callers may want to catch."""


class ZeroOnPathError(ApamoebaError):
    """|f| fell below the zero threshold while tracking the argument."""

    def __init__(self, message, min_modulus=None):
        super().__init__(message)
        self.min_modulus = min_modulus


class NonIntegerError(ApamoebaError):
    """A winding number came out too far from an integer."""


class NonConvergedError(ApamoebaError):
    """Independent estimates (lines, stages) disagree beyond tolerance."""


class NoMatchError(ApamoebaError):
    """No group element lies within tolerance of a numeric vector."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class AmbiguousMatchError(ApamoebaError):
    """Several equally simple group elements lie within tolerance."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = tuple(candidates)


class SumSpecError(ValueError):
    """A sum specification file is malformed."""
