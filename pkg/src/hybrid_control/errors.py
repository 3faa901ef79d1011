"""Exception hierarchy shared by all modules."""


class HybridControlError(Exception):
    """Base class for estimation and input errors."""


class MalformedRow(HybridControlError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DegenerateDesign(HybridControlError, ValueError):
    pass


class DimensionMismatch(HybridControlError, ValueError):
    pass


class ScaleDomainError(HybridControlError, ValueError):
    pass


class SingularDesign(HybridControlError, ArithmeticError):
    pass


class NoConvergence(HybridControlError, ArithmeticError):
    pass


class Separation(NoConvergence):
    """Logistic fit diverging because the classes are (quasi-)separated."""


class DomainError(HybridControlError, ArithmeticError):
    pass


class SingularBread(HybridControlError, ArithmeticError):
    pass


class EstimatorFailure(HybridControlError, RuntimeError):
    pass


class TooManyFailures(HybridControlError, RuntimeError):
    pass


class ParseError(HybridControlError, ValueError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
