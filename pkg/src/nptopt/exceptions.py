"""Exception hierarchy shared by all modules."""


class NPTError(Exception):
    """Base class for library errors."""


class TruncationError(NPTError):
    """Fock truncation is too small for the requested accuracy."""


class DegenerateStateError(NPTError):
    """A preparation produced the zero vector."""


class NumericalError(NPTError):
    """A floating-point result violated a structural guarantee."""


class DegenerateError(NPTError):
    """A statistical quantity is undefined (e.g. all variances vanish)."""


class AllocationError(NPTError):
    """A measurement allocation cannot support the requested estimate."""


class InsufficientSamplesError(NPTError):
    """Too few samples to form an unbiased variance estimate."""


class ConfigError(NPTError, ValueError):
    """Invalid sweep configuration."""
