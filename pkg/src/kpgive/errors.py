class KPGiveError(Exception):
    """Base class for library errors."""


class StructuralError(KPGiveError, ValueError):
    """Operands have incompatible shapes, numbers of colors, or rings."""


class NonUnitConstantTerm(KPGiveError, ValueError):
    pass


class TrustExceeded(KPGiveError):
    """A requested coefficient lies outside the range in which values are exact."""


class NonInvertibleFlatMap(KPGiveError):
    pass


class NotTwisted(KPGiveError, ValueError):
    pass


class InconsistentInput(KPGiveError):
    pass


class VerificationFailed(KPGiveError):
    def __init__(self, message, residual=None, first_nonzero=None):
        super().__init__(message)
        self.residual = residual
        self.first_nonzero = first_nonzero
