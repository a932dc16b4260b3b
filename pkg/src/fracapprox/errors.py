"""Exception hierarchy shared by all modules."""


class FracApproxError(Exception):
    """Base class for domain errors; the CLI maps these to exit code 1."""

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class InvalidIFS(FracApproxError):
    pass


class InvalidLetter(FracApproxError):
    pass


class NotContracting(FracApproxError):
    pass


class InvalidTolerance(FracApproxError):
    pass


class InvalidArgument(FracApproxError):
    pass


class BudgetTooSmall(FracApproxError):
    pass


class NotInLimitSet(FracApproxError):
    def __init__(self, message, partial_word=()):
        super().__init__(message)
        self.partial_word = tuple(partial_word)

    def to_dict(self):
        d = super().to_dict()
        d["partial_word"] = list(self.partial_word)
        return d


class PeriodicityUndetected(FracApproxError):
    pass


class OutOfRange(FracApproxError):
    pass


class InvalidTranslate(FracApproxError):
    pass


class UndefinedSeries(FracApproxError):
    pass


class InvalidMeasure(FracApproxError):
    pass


class FactorizationIncomplete(FracApproxError):
    def __init__(self, message, factors=None, remainder=1):
        super().__init__(message)
        self.factors = dict(factors or {})
        self.remainder = remainder

    def to_dict(self):
        d = super().to_dict()
        d["factors"] = {str(k): v for k, v in self.factors.items()}
        d["remainder"] = str(self.remainder)
        return d


class BudgetExceeded(FracApproxError):
    pass
