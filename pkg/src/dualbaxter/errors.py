"""Exception hierarchy shared by all modules."""


class DualBaxterError(Exception):
    """Base class for all library errors."""


class PrecisionLossError(DualBaxterError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ContractError(DualBaxterError, ValueError):
    """Inputs violate a documented precondition."""


class NotInvertibleError(DualBaxterError):
    """Anti-shift applied to a function with a component in the kernel of the shift."""


class ResonanceError(DualBaxterError):
    def __init__(self, message, order=None):
        super().__init__(message)
        self.order = order


class RangeError(DualBaxterError, OverflowError):
    def __init__(self, message, last_valid=None):
        super().__init__(message)
        self.last_valid = last_valid


class DegeneracyError(DualBaxterError):
    """Coinciding branch points, singular period matrices, coinciding zeros."""


class ContourError(DualBaxterError):
    pass


class AmbiguityError(DualBaxterError):
    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values


class RegularizationError(DualBaxterError):
    pass


class LimitError(DualBaxterError):
    pass


class DivergedError(DualBaxterError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class MalformedInputError(DualBaxterError, ValueError):
    pass
