"""Exception hierarchy for the toolkit."""


class WptError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(WptError, ValueError):
    """A parameter set or drive description violates its invariants."""


class SingularSystem(WptError, ArithmeticError):
    """The steady-state linear system is numerically singular."""

    def __init__(self, message, frequency=None):
        super().__init__(message)
        self.frequency = frequency


class DegenerateCoupling(WptError, ArithmeticError):
    """The coupled-inductor matrix is not positive definite (L_t*L_r <= M**2)."""


class Diverged(WptError, ArithmeticError):
    """An integration produced a state beyond the divergence limit."""

    def __init__(self, t):
        super().__init__(f"integration diverged at t = {t:.6e} s")
        self.t = t


class InsufficientData(WptError, ValueError):
    """A trace is too short for the requested analysis window."""


class InsufficientSamples(InsufficientData):
    """A sampled stream is too short for the delay line or averaging window."""


class RateMismatch(WptError, ValueError):
    """Sample rate is not an integer multiple (divisible by 4) of the drive frequency."""


class UndefinedPhase(WptError, ValueError):
    """Phase requested for a zero vector."""


class IdentificationError(WptError, ArithmeticError):
    """The identification arithmetic broke down."""


class NegativeRadicand(IdentificationError):
    """The radicand of the mutual-inductance formula is negative or not finite."""


class ConventionError(WptError, AssertionError):
    """The oracle and the phasor model disagree on the coupling sign convention."""


class ConfigError(WptError, ValueError):
    """Invalid scenario configuration."""
