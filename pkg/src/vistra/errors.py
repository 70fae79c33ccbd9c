"""Exception types shared across the package."""


class NumericOverflowError(ArithmeticError):
    """A numeric routine produced a non-finite state.

    Carries the step index at which the state blew up so the caller can
    report where a trajectory diverged.
    """

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class DataFormatError(ValueError):
    """An input file does not match its documented format.

    ``line`` is the 1-based line number of the first offending line when the
    source is line-oriented, else None.
    """

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)
        self.line = line
        self.path = path


class PipelineStageError(RuntimeError):
    """A pipeline stage failed for a specific signal."""

    def __init__(self, stage: str, signal_id: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed for signal {signal_id}: {cause}")
        self.stage = stage
        self.signal_id = signal_id
        self.cause = cause
