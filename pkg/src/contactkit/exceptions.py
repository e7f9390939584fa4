class ContactkitError(Exception):
    """Base class for errors raised by contactkit."""


class DiaryParseError(ContactkitError, ValueError):
    """Malformed diary input. ``errors`` holds ``(line_number, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"line {ln}: {msg}" for ln, msg in self.errors[:20])
        more = f" (+{len(self.errors) - 20} more)" if len(self.errors) > 20 else ""
        super().__init__(f"{len(self.errors)} malformed row(s): {lines}{more}")


class UncoveredStratumError(ContactkitError, ValueError):
    """A stratum with population weight has no survey estimate."""


class EmptySampleError(ContactkitError, ValueError):
    pass


class IntegratorInstabilityError(ContactkitError, ArithmeticError):
    """A compartment went negative beyond tolerance; reduce ``dt``."""


class ConvergenceError(ContactkitError, ArithmeticError):
    pass


class ThresholdUnreachedError(ContactkitError, RuntimeError):
    """The stop threshold of cumulative infections was never reached."""
