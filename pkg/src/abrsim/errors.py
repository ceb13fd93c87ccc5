"""Exception types shared across the package."""


class AbrsimError(Exception):
    """Base class for every error this package raises on purpose."""


class CapacityZero(AbrsimError):
    """ABR capacity is zero or negative; the load factor is undefined."""


class NoActiveVcs(AbrsimError):
    """An effective VC count of zero leaves no one to share capacity."""


class MissingRate(AbrsimError):
    """A per-VC rate was required from switch measurement but is absent."""


class NoConvergence(AbrsimError):
    """The fair-share fixed point was not reached."""


class AllUnderloading(AbrsimError):
    """Every source is rate-limited below the share; the closed form divides by zero."""


class InvalidTopology(AbrsimError):
    """An allocation problem references undeclared links or is otherwise malformed."""


class UnknownFlow(AbrsimError):
    """A candidate allocation names a flow the problem does not contain."""


class ScenarioInvalid(AbrsimError):
    """A scenario cannot be used for simulation."""


class ParseError(ScenarioInvalid):
    """Scenario text is syntactically malformed."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        if line:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class ValidationError(ScenarioInvalid):
    """Scenario text parsed but violates a structural invariant."""


class EmptyWindow(AbrsimError):
    """A summary window contains no samples for some stream."""


class AllZero(AbrsimError):
    """A fairness index over all-zero values is undefined."""
