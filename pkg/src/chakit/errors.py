"""Exception hierarchy shared across the toolkit."""


class ChaError(Exception):
    """Base class for all domain errors raised by this package."""


class UnknownIdError(ChaError):
    """A state, drug or clock id is not part of the model."""


class ModelValidationError(ChaError):
    """A model failed validation; carries the offending report."""

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class DeadEndError(ChaError):
    """No non-inhibited edge is available at runtime (totality violated)."""


class ExplosionGuardError(ChaError):
    """An enumeration would exceed the configured size cap."""


class DivergenceError(ChaError):
    """A discounted sum does not converge (discount 1 without horizon)."""


class DimensionMismatchError(ChaError):
    """Cost vectors of different dimensions were combined."""


class DomainMismatchError(ChaError):
    """Models in a family do not share the same state universe."""


class FormulaSyntaxError(ChaError):
    """Formula text could not be parsed; carries the failure position."""

    def __init__(self, message, position):
        self.position = position
        super().__init__(f"{message} (at position {position})")


class UnknownAtomError(ChaError):
    """A formula atom is neither a declared label nor a state label."""


class InvariantViolationError(ChaError):
    """A delay would push a clock past a state invariant."""

    def __init__(self, clock, limit):
        self.clock = clock
        self.limit = limit
        super().__init__(f"delay would push clock {clock!r} past invariant {limit}")


class GuardUnsatisfiedError(ChaError):
    """An edge was fired whose guard does not hold; lists failing atoms."""

    def __init__(self, failing_atoms):
        self.failing_atoms = tuple(failing_atoms)
        atoms = ", ".join(f"{c} >= {k}" for c, k in self.failing_atoms)
        super().__init__(f"guard not satisfied: {atoms}")


class EdgeNotFoundError(ChaError):
    """No edge matches the requested endpoints."""


class UnboundedClockError(ChaError):
    """Region construction needs a finite clock bound but none applies."""


class RegionSplitError(ChaError):
    """A unit delay mapped one region onto several (internal soundness check)."""


class FragmentUnsupportedError(ChaError):
    """A goal formula lies outside the synthesizable fragment."""

    def __init__(self, subformula_text):
        self.subformula_text = subformula_text
        super().__init__(f"unsupported goal subformula: {subformula_text}")


class PartialStrategyError(ChaError):
    """A strategy is undefined on a reachable controller node."""


class ModelFormatError(ChaError):
    """A model file is malformed; carries a human-readable location."""

    def __init__(self, message, location=None):
        self.location = location
        where = f" ({location})" if location else ""
        super().__init__(f"{message}{where}")


class SessionError(ChaError):
    """Invalid session operation (unknown id, step on halted session)."""
