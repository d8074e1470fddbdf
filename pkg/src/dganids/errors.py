"""Exception types shared across the package."""


class InvalidArchitectureError(ValueError):
    """Layer sizes or activation list describe an impossible network."""


class ShapeError(ValueError):
    """Array dimensions do not line up for the requested operation."""


class NumericError(ValueError):
    """Non-finite values showed up where finite ones are required."""


class TrainingDivergenceError(RuntimeError):
    """A training loop produced a non-finite loss."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class TopologyError(ValueError):
    """Ring construction is impossible with the given devices."""


class DivergenceInfiniteError(ArithmeticError):
    """KL divergence is +inf: p puts mass where q has none."""

    def __init__(self, point_index: int):
        self.point_index = point_index
        super().__init__(f"KL divergence infinite: q is zero at support point {point_index} where p > 0")


class PartitionError(ValueError):
    """Requested device count is incompatible with the partition strategy."""


class ParseError(ValueError):
    """A dataset file failed to parse."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"{message} (line {line})" if line is not None else message)


class FormatError(ValueError):
    """A weight file is malformed."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class ConfigError(ValueError):
    """An experiment config is invalid; the message names the field."""
