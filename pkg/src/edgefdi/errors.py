"""Exception hierarchy shared by all modules."""


class EdgeFdiError(Exception):
    """Base class for every error raised by this package."""


class InvalidGraph(EdgeFdiError, ValueError):
    pass


class InvalidPartition(EdgeFdiError, ValueError):
    pass


class TrivialPartition(InvalidPartition):
    pass


class NotAlmostEquitable(EdgeFdiError):
    pass


class ConvergenceFailure(EdgeFdiError):
    pass


class NotIrreducible(EdgeFdiError):
    pass


class RepeatedEigenvalue(EdgeFdiError):
    pass


class KappaOutOfRange(EdgeFdiError, ValueError):
    pass


class NotStronglyConnected(EdgeFdiError):
    pass


class NoSuchArc(EdgeFdiError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class AsymmetricWeights(EdgeFdiError):
    pass


class ScheduleInvalid(EdgeFdiError, ValueError):
    pass


class FaultDisconnectsGraph(EdgeFdiError):
    pass


def _format_values(values):
    out = []
    for z in values:
        z = complex(z)
        out.append(format(z.real, ".10g") if z.imag == 0 else f"{z.real:.10g}{z.imag:+.10g}j")
    return "[" + ", ".join(out) + "]"


class AssumptionViolated(EdgeFdiError):
    """Observability assumption failed for the healthy or the faulty pair.

    ``which`` is ``"original-not-observable"`` or ``"faulty-not-observable"``.
    """

    def __init__(self, which, eigenvalues=()):
        self.which = which
        self.eigenvalues = list(eigenvalues)
        super().__init__(f"{which}; unobservable eigenvalues: {_format_values(self.eigenvalues)}")


class NoDirectionMatch(EdgeFdiError):
    pass


class EmptyCandidateSet(EdgeFdiError):
    pass


class NotObservable(EdgeFdiError):
    def __init__(self, eigenvalues):
        self.eigenvalues = list(eigenvalues)
        super().__init__(f"pair is not observable; unobservable eigenvalues: {_format_values(self.eigenvalues)}")


class IllConditioned(EdgeFdiError):
    pass


class WindowTooShort(EdgeFdiError):
    pass


class ConfigError(EdgeFdiError, ValueError):
    pass
