"""Exception hierarchy shared across the toolkit."""


class PecsynthError(Exception):
    """Base class for all toolkit errors."""


class NonFinite(PecsynthError):
    """A matrix contains NaN or infinite entries."""


class NotSymmetric(PecsynthError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class NotPositiveDefinite(PecsynthError):
    """A matrix expected to be positive definite is not."""


class DimensionMismatch(PecsynthError):
    """Operands have incompatible shapes."""


class BadIndex(PecsynthError):
    """Sensor index out of range or duplicated."""


class NonPositivePeak(PecsynthError):
    """Disturbance peak must be strictly positive."""


class NotObservable(PecsynthError):
    """Observability matrix is rank deficient."""


class NotStabilizable(PecsynthError):
    """(A, B) fails the PBH stabilizability test."""


class NotDetectable(PecsynthError):
    """(A, C) fails the PBH detectability test."""


class RankDeficientC(PecsynthError):
    """Output matrix C must have full row rank."""


class KernelViolation(PecsynthError):
    """Realization matrix F does not annihilate the unmeasured coupling block."""


class NotStable(PecsynthError):
    """A matrix required to be Hurwitz is not."""


class DetectorUnstable(PecsynthError):
    """Attacked error dynamics are not Hurwitz; reachable-set tools do not apply."""


class Infeasible(PecsynthError):
    """Semidefinite program is infeasible."""


class AllInfeasible(Infeasible):
    """Every grid point of a parameter search was infeasible."""


class NumericalTrouble(PecsynthError):
    """Solver did not return a certifiable solution."""


class CertificateMismatch(PecsynthError):
    """A certificate was produced for a different attack scenario."""


class StepTooLarge(PecsynthError):
    """Integration step does not resolve the fastest closed-loop mode."""
