from __future__ import annotations


class ToposError(Exception):
    """Base class for every error raised by the workbench."""


class ShapeMismatch(ToposError):
    """Morphisms do not form the diagram an operation requires."""


class AmbientMismatch(ToposError):
    """A predicate does not live over the object it was used with."""


class BudgetExceeded(ToposError):
    """A construction would produce more elements than the context allows."""

    def __init__(self, what: str, needed: int | None, budget: int):
        self.what = what
        self.needed = needed
        self.budget = budget
        if needed is None:
            super().__init__(f"{what}: exceeds the budget of {budget} elements")
        else:
            super().__init__(f"{what}: {needed} elements exceeds the budget of {budget}")


class NotAPullback(ToposError):
    pass


class NotUltra(ToposError):
    pass


class NelsonInvariantError(ToposError):
    """A clause of the Nelson-structure definition failed at build time."""

    def __init__(self, clause: str, witness: dict | None = None):
        self.clause = clause
        self.witness = witness or {}
        super().__init__(f"{clause} violated: {self.witness}")


class SpecError(ToposError):
    """Malformed topos specification file."""


class FormulaError(ToposError):
    """Parse or sort error in a formula; ``pos`` is a character offset."""

    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        super().__init__(message if pos is None else f"{message} at position {pos}")
