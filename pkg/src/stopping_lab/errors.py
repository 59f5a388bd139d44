"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A caller passed a value outside an operation's domain."""


class BudgetExceeded(RuntimeError):
    """Exhaustive enumeration would visit more orders than allowed."""

    def __init__(self, required: int, allowed: int):
        self.required = required
        self.allowed = allowed
        super().__init__(
            f"enumeration needs {required} distinguishable orders, budget is {allowed}"
        )


class ConfigError(ValueError):
    """One or more experiment configuration fields are invalid."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))
