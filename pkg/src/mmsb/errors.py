"""Exception hierarchy shared by all modules."""


class MMSBError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(MMSBError, ValueError):
    """An argument is outside its allowed range."""


class DomainError(MMSBError, ValueError):
    """Input values fall outside a function's mathematical domain."""


class SizeError(MMSBError, ValueError):
    """A brute-force enumeration would exceed its size guard."""


class ConvergenceError(MMSBError, RuntimeError):
    """The iterative eigensolver did not converge.

    The best residual norms reached are kept on ``residuals``.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DegenerateSpectrumError(MMSBError, ArithmeticError):
    """Eigenvalues are zero or too close to each other for a correction formula."""


class RankDeficiencyError(MMSBError, ArithmeticError):
    """SPA ran out of nonzero rows before selecting enough vertices."""


class VertexDegeneracyError(MMSBError, ArithmeticError):
    """The estimated vertex matrix is singular or badly conditioned."""


class RegularizationError(MMSBError, ArithmeticError):
    """The covariance estimate is singular and no regularization was given."""


class RankEstimationError(MMSBError, RuntimeError):
    """No eigenvalue cleared the rank-estimation threshold."""


class ConstructionWarning(UserWarning):
    """A combinatorial construction returned fewer objects than targeted."""


class ConfigError(MMSBError, ValueError):
    """An experiment configuration is invalid."""
