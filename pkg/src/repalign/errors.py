"""Exception hierarchy shared by every module."""


class AlignmentError(Exception):
    """Base class for all package errors."""


class InputError(AlignmentError, ValueError):
    """Malformed, inconsistent, or out-of-range input."""


class DegenerateInputError(InputError):
    """Input on which the requested statistic is undefined (constant vectors, empty selections)."""


class ContractError(AlignmentError, ValueError):
    """A caller violated a function precondition (bad indices, wrong ordering)."""


class NumericError(AlignmentError, ArithmeticError):
    """A numeric procedure produced non-finite values."""
