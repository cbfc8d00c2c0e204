"""Exception hierarchy shared by the library and the command line tool."""


class MplnError(Exception):
    """Base class for all errors raised by mpln."""


class ValidationError(MplnError, ValueError):
    """Inputs violate a documented precondition."""


class ParseError(MplnError, ValueError):
    """A data or parameter file could not be read."""


class EstimationError(MplnError, RuntimeError):
    """A moment estimate could not be formed from the sample."""


class SamplingError(MplnError, RuntimeError):
    """Simulation produced a non-finite or overflowing intensity."""
