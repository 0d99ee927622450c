"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes or modes do not conform."""


class DomainError(ValueError):
    """A value lies outside the domain of the selected divergence."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class BudgetExceeded(RuntimeError):
    """Exhaustive enumeration would exceed the configured budget."""

    def __init__(self, count, budget):
        super().__init__(
            f"enumeration needs {count} joint evaluations, budget is {budget}"
        )
        self.count = count
        self.budget = budget
