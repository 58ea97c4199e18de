"""
Error types shared by every module

Each error carries the process exit code the entry script maps it to:
1 usage, 2 data/format, 3 numerical failure.
"""
from typing import List, Optional


class LppdError(Exception):
    """Base class for all library errors"""

    exit_code = 1


class UsageError(LppdError):
    """Bad command line or configuration key"""

    exit_code = 1


class InvalidArgumentError(LppdError, ValueError):
    """Input violates an operation's precondition"""

    exit_code = 2


class DegenerateScaleError(InvalidArgumentError):
    """Normalization scale is zero (all depths identical)"""


class AlignmentError(LppdError, ArithmeticError):
    """Least-squares scale/shift system is singular"""

    exit_code = 2


class FormatError(LppdError, ValueError):
    """
    Malformed file

    Args:
        message: What went wrong
        offset: Position where it was detected
        unit: What offset counts ("byte offset" for binary files, "line" for text)
    """

    exit_code = 2

    def __init__(self, message: str, offset: Optional[int] = None, unit: str = "byte offset"):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at {unit} {offset})"
        super().__init__(message)


class RescaleDegenerateError(LppdError, ArithmeticError):
    """Remapped component has (near) zero norm, so eta is undefined"""

    exit_code = 3

    def __init__(self, message: str, iteration: Optional[int] = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)


class NumericalError(LppdError, ArithmeticError):
    """Optimization diverged or a gradient check failed"""

    exit_code = 3

    def __init__(self, message: str, trace: Optional[List[float]] = None):
        self.trace = list(trace) if trace is not None else []
        super().__init__(message)
