"""Exception taxonomy shared across modules.

The CLI maps these onto exit codes: ValidationError -> 1,
BudgetExceededError -> 2, TheoryViolationError -> 3.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Input failed semantic validation; carries the violation list."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(self.violations) or "validation failed")


class RankDeficiencyError(ValidationError):
    """A transition matrix required to have full row rank does not."""

    def __init__(self, rank, needed, dependent_rows):
        self.rank = rank
        self.needed = needed
        self.dependent_rows = tuple(dependent_rows)
        rows = ", ".join(str(r) for r in self.dependent_rows)
        super().__init__(
            (f"transition matrix has rank {rank} < {needed}; dependent rows: [{rows}]",)
        )


class BudgetExceededError(RuntimeError):
    """An enumeration would exceed the configured LP budget."""


class TheoryViolationError(RuntimeError):
    """An internally derived guarantee failed to verify exactly.

    These checks can only fire on an implementation bug, never on valid
    input, so they are raised loudly instead of being returned as data.
    """
