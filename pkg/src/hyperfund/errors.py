"""Exception hierarchy shared by all hyperfund modules."""


class HyperfundError(Exception):
    """Base class for every error raised by the package."""


class DomainError(HyperfundError, ValueError):
    pass


class NonConvergence(HyperfundError, ArithmeticError):
    pass


class PoleError(DomainError):
    pass


class ConeBoundary(DomainError):
    """A kernel was evaluated outside the closed light cone."""


class ConeDegenerate(HyperfundError):
    pass


class QuadratureFailure(HyperfundError, ArithmeticError):
    def __init__(self, message, node=None):
        super().__init__(message if node is None else f"{message} at node {node}")
        self.node = node


class SingularEvaluation(DomainError):
    pass


class UnsupportedDimension(HyperfundError, ValueError):
    pass


class CFLViolation(HyperfundError, ValueError):
    pass


class WindowTooLarge(HyperfundError, ValueError):
    pass


class IntegrationFailure(HyperfundError, ArithmeticError):
    pass


class InsufficientGrid(HyperfundError, ValueError):
    pass


class ConfigError(HyperfundError, ValueError):
    pass
