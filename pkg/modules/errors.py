from typing import Optional, Tuple


class NTrailerError(Exception):
    """Base class for every error raised by the toolkit. `exit_code` drives the CLI."""

    exit_code: int = 1


class SymbolicError(NTrailerError):
    """Errors raised while building or evaluating symbolic expressions."""


class InvalidExpression(SymbolicError):
    """An expression node was constructed with arguments violating its invariants."""

    exit_code = 2


class UnboundSymbol(SymbolicError):
    """An angle variable or parameter is not bound during evaluation."""

    exit_code = 2

    def __init__(self, name: str):
        super().__init__(f"Unbound symbol: {name}")
        self.name = name


class DivisionNearZero(SymbolicError):
    """A denominator evaluated below the singularity threshold."""

    exit_code = 4

    def __init__(self, denominator, value: float, eps: float):
        super().__init__(f"Denominator {value!r} is below {eps!r}")
        self.denominator = denominator
        self.value = value
        self.eps = eps


class ConfigError(NTrailerError):
    """Invalid vehicle description or input file."""

    exit_code = 2


class EmptyVehicle(ConfigError):
    def __init__(self):
        super().__init__("Vehicle has no units")


class MissingHitch(ConfigError):
    def __init__(self, unit: int, which: str = "front"):
        super().__init__(f"Unit {unit} is missing its {which} hitch")
        self.unit = unit
        self.which = which


class UnexpectedHitch(ConfigError):
    def __init__(self, unit: int, which: str):
        super().__init__(f"Unit {unit} must not declare a {which} hitch")
        self.unit = unit
        self.which = which


class TractorTooFewWheels(ConfigError):
    def __init__(self, count: int):
        super().__init__(f"Unit 1 needs at least 2 wheels to define its yaw rate, got {count}")
        self.count = count


class InvalidGeometry(ConfigError):
    """Non-finite coordinates, wheel-less units and similar malformed descriptions."""


class TraceFormatError(ConfigError):
    """Malformed control trace or state file."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")
        self.row = row
        self.column = column


class InvalidArgument(ConfigError):
    """Out-of-range indices or parameters passed to a library operation."""


class StructurallySingular(NTrailerError):
    """A back-substitution denominator simplifies to the zero expression."""

    exit_code = 3

    def __init__(self, location: Tuple[int, int], description: str):
        super().__init__(f"Structurally singular geometry at wheel {location}: {description}")
        self.location = location
        self.description = description


class SingularState(NTrailerError):
    """The model was evaluated at a singular configuration."""

    exit_code = 4

    def __init__(self, report, sample: Optional[int] = None, partial=None):
        where = f" at sample {sample}" if sample is not None else ""
        super().__init__(f"Singular state{where}: {report.description}")
        self.report = report
        self.sample = sample
        self.partial = partial


class DegeneratePoint(NTrailerError):
    """A body point is (nearly) at rest, so its steering angle is undefined."""

    exit_code = 4

    def __init__(self, unit: int, speed: float, eps: float):
        super().__init__(f"Point on unit {unit} moves at {speed:.3e} m/s, below {eps:.1e} m/s")
        self.unit = unit
        self.speed = speed


class SingularDenominator(NTrailerError):
    exit_code = 4

    def __init__(self, value: float):
        super().__init__(f"Generalized Ackermann denominator is {value!r}")
        self.value = value


class NonFiniteState(NTrailerError):
    exit_code = 4

    def __init__(self, sample: int):
        super().__init__(f"State became non-finite at sample {sample}")
        self.sample = sample


def exit_code_for(error: Exception) -> int:
    """CLI exit code for any exception: toolkit errors carry their own, file system errors count as input errors."""
    if isinstance(error, NTrailerError):
        return error.exit_code
    if isinstance(error, OSError):
        return ConfigError.exit_code
    return 1
