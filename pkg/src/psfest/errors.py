"""Exception types shared across the package."""


class SizingError(ValueError):
    """A frequency grid is too small for the signal support or target window."""


class DegenerateKernelError(ValueError):
    """Kernel discretization produced no positive mass."""


class DivisionImpossibleError(ZeroDivisionError):
    """Deconvolution filter is undefined: zero transform with zero ridge."""


class AccountingError(ValueError):
    """A summation window excludes cells that carry nonzero truth."""


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


class ComputeError(RuntimeError):
    """A numerical consistency check failed during computation."""
