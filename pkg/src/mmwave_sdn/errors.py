"""Exception types shared across the simulator."""


class InputError(ValueError):
    """A numeric argument is outside the domain of an operation."""


class ConfigError(ValueError):
    """One or more configuration fields are invalid.

    ``violations`` keeps every problem found so callers can report all of
    them at once instead of stopping at the first.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InvariantViolation(RuntimeError):
    """A runtime invariant failed during simulation."""

    def __init__(self, invariant, slot, detail=""):
        self.invariant = invariant
        self.slot = slot
        msg = f"invariant '{invariant}' violated at slot {slot}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
