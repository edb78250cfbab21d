from typing import Hashable, Sequence


class CapacityError(ValueError):
    """Base class for errors raised by the capacity library."""


class InputError(CapacityError):
    """Arguments that violate a precondition."""


class CycleLawError(CapacityError):
    """A flow that fails the cycle law on some fundamental cycle."""

    def __init__(self, cycle: Sequence[Hashable], residual: float) -> None:
        """Record the worst offending basis cycle and its residual."""
        self.cycle, self.residual = tuple(cycle), residual
        super().__init__(
            f"cycle law violated by {residual:.3e} on cycle {self.cycle}"
        )


class NodeLawError(CapacityError):
    """A flow that fails the node law away from the source and sink."""

    def __init__(self, vertex: Hashable, residual: float) -> None:
        """Record the worst vertex and its residual."""
        self.vertex, self.residual = vertex, residual
        super().__init__(
            f"node law violated by {residual:.3e} at vertex {vertex}"
        )


class DegenerateNetworkError(CapacityError):
    """A current flow of strength zero between distinct boundary values."""


class BracketError(CapacityError):
    """A lower bound that exceeds the upper bound beyond rounding."""

    def __init__(self, lower: float, upper: float) -> None:
        """Record the two crossing bounds."""
        self.lower, self.upper = lower, upper
        super().__init__(
            f"lower bound {lower!r} exceeds upper bound {upper!r}"
        )


class BudgetExceededError(CapacityError):
    """A lattice that would not fit in the configured vertex budget."""

    def __init__(self, required: int, budget: int) -> None:
        """Record the required and allowed vertex counts."""
        self.required, self.budget = required, budget
        super().__init__(
            f"lattice needs {required} vertices, budget is {budget}"
        )


class EdgeListSyntaxError(SyntaxError):
    """A malformed edge-list file, with the offending line number."""

    def __init__(self, message: str, line: int) -> None:
        """Record the 1-based line number of the error."""
        self.line = line
        super().__init__(f"line {line}: {message}")
