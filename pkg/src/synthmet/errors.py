class SynthmetError(ValueError):
    """Base class for data and model errors raised by this package."""


class WeatherFormatError(SynthmetError):
    pass


class WeatherRangeError(SynthmetError):
    def __init__(self, message, row=None, variable=None):
        super().__init__(message)
        self.row = row
        self.variable = variable


class GapError(WeatherFormatError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class InsufficientDataError(SynthmetError):
    pass


class SingularMatrixError(SynthmetError):
    pass


class ConvergenceError(SynthmetError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class LibraryError(SynthmetError):
    pass
