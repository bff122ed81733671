from typing import Optional


class ZSLError(Exception):
    """Base class for every error raised by the zero-shot pipeline."""


class InvalidArgumentError(ZSLError, ValueError):
    """Raised when an argument violates a documented precondition."""


class NumericFailureError(ZSLError, ArithmeticError):
    """Raised when a computation produces a non-finite value or a singular system."""

    def __init__(
        self,
        message: str,
        step: Optional[int] = None,
        epoch: Optional[int] = None,
        batch: Optional[int] = None
    ):
        self.step = step
        self.epoch = epoch
        self.batch = batch
        location = []
        if epoch is not None:
            location.append(f"epoch={epoch}")
        if batch is not None:
            location.append(f"batch={batch}")
        if step is not None:
            location.append(f"step={step}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class FormatError(ZSLError):
    """Malformed file; `offset` is the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} at byte offset {offset}")


class DataError(ZSLError):
    """File is well-formed but its payload is unusable (e.g. NaN values)."""


class UsageError(ZSLError):
    """Missing or invalid command-line arguments or configuration."""
