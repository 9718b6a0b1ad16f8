"""Exception and warning types raised by the package."""


class DagMiqpError(Exception):
    pass


class InvalidGraph(DagMiqpError, ValueError):
    pass


class CyclicGraph(DagMiqpError, ValueError):
    pass


class InvalidParams(DagMiqpError, ValueError):
    pass


class DegenerateData(DagMiqpError, ValueError):
    pass


class LinkViolation(DagMiqpError, ValueError):
    """A weight is nonzero (or too large) where its edge indicator forbids it."""


class DimensionMismatch(DagMiqpError, ValueError):
    pass


class TooLarge(DagMiqpError, ValueError):
    pass


class NoFreeVariable(DagMiqpError, RuntimeError):
    pass


class UndefinedGap(DagMiqpError, ArithmeticError):
    pass


class MaxIterations(DagMiqpError, RuntimeError):
    pass


class ParseError(DagMiqpError, ValueError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyFile(ParseError):
    pass


class BigMBinding(UserWarning):
    """A fitted weight sits within 1% of the big-M bound."""
