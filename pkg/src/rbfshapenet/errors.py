"""Exception hierarchy shared by all modules."""

import math


class RbfShapeNetError(Exception):
    """Base class for every error raised by this package."""


class NumericalError(RbfShapeNetError):
    """A numerical failure (singular system, divergence, bad gradient)."""


class SingularSystem(NumericalError):
    """LU factorization of an augmented RBF system hit a zero pivot.

    ``cond`` is always ``+inf``; ``pivot`` is the zero-based index of the
    first vanishing pivot (or ``None`` when unknown); ``stencil`` is set by
    the RBF-FD assembly to the offending stencil/center index.
    """

    def __init__(self, message, pivot=None, stencil=None):
        super().__init__(message)
        self.pivot = pivot
        self.stencil = stencil
        self.cond = math.inf


class SingularGlobalSystem(NumericalError):
    pass


class SingularTimeStepSystem(NumericalError):
    pass


class NonFiniteState(NumericalError):
    """The time-stepped state stopped being finite or bounded."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NonFiniteGradient(NumericalError):
    pass


class DegeneratePointSet(RbfShapeNetError, ValueError):
    pass


class ZeroGap(DegeneratePointSet):
    pass


class ModelMismatch(RbfShapeNetError, ValueError):
    pass


class ShapeMismatch(RbfShapeNetError, ValueError):
    pass


class LengthMismatch(RbfShapeNetError, ValueError):
    pass


class ModelFormatError(RbfShapeNetError):
    """Problems reading a serialized model file."""


class SchemaVersionMismatch(ModelFormatError):
    pass


class CorruptModel(ModelFormatError):
    pass
