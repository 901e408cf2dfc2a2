"""Exception types raised by the library."""


class NdwaveError(Exception):
    """Base class for library errors."""


class NonRemovableSingularity(NdwaveError, ValueError):
    pass


class GridMismatch(NdwaveError, ValueError):
    pass


class DegreeCapExceeded(NdwaveError, ValueError):
    pass


class SignIndefiniteTerm(NdwaveError, ValueError):
    pass


class NotClosedForm(NdwaveError, ValueError):
    """The requested operation has no result inside the term algebra."""


class NonIntegrableOrigin(NdwaveError, ValueError):
    pass


class OffCenterError(NdwaveError, ValueError):
    """A radial operator was applied to a field whose centre is not the origin."""


class QuadratureDivergence(NdwaveError, ArithmeticError):
    pass


class SuperluminalRelativistic(NdwaveError, ValueError):
    pass


class DivergentProduct(NdwaveError, ArithmeticError):
    pass


class NyquistViolation(NdwaveError, ValueError):
    pass


class CoreExitedBox(NdwaveError, ValueError):
    pass


class EigenSolverFailure(NdwaveError, ArithmeticError):
    pass


class ConfigError(NdwaveError, ValueError):
    pass
