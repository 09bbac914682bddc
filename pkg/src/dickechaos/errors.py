"""Exception hierarchy shared by all modules."""


class DickeChaosError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameter(DickeChaosError, ValueError):
    pass


class SqueezingDiverges(DickeChaosError, ValueError):
    """4 n g / omega >= 1: the squeezed mode has no bound ground state."""


class CutoffTooSmall(DickeChaosError, ValueError):
    pass


class CutoffLimitExceeded(DickeChaosError, RuntimeError):
    pass


class NumericalFailure(DickeChaosError, RuntimeError):
    pass


class TooFewLevels(DickeChaosError, ValueError):
    pass


class DegenerateFit(DickeChaosError, ValueError):
    pass


class EmptyInput(DickeChaosError, ValueError):
    pass


class WrongPhase(DickeChaosError, ValueError):
    pass


class AtCriticalPoint(DickeChaosError, ValueError):
    pass


class ConstraintViolated(DickeChaosError, ValueError):
    """Phase point outside the Holstein-Primakoff domain eta_c <= 1."""


class StepFailure(DickeChaosError, RuntimeError):
    pass


class ShellUnreachable(DickeChaosError, RuntimeError):
    pass
