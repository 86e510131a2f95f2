"""Exception types shared across the package."""


class PortschedError(Exception):
    """Base class for all errors raised by portsched."""


class DataError(PortschedError):
    """Malformed, inconsistent or out-of-range input data."""


class InfeasibleError(PortschedError):
    """The constrained scheduling problem has no feasible solution."""


class SizeGuardError(PortschedError):
    """A brute-force reference routine was called above its size limits."""
