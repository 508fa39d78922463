"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument is outside its admissible range."""


class ShapeMismatchError(ValueError):
    """Two objects live on incompatible spectra or grids."""


class MeanComponentError(ValueError):
    """Negative operator power applied to a field with a nonzero mean mode."""


class InsufficientLevelsError(ValueError):
    """A log-log fit was requested with fewer than three usable points."""


class InvalidEstimateError(RuntimeError):
    """Too many excluded (blown-up) trajectories for a trustworthy estimate."""


class ConfigError(ValueError):
    """Configuration file or plan validation failure, with a stable code.

    ``code`` is one of the keys of ``EXIT_CODES`` and maps to a distinct
    process exit code in the CLI.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# Distinct exit codes per failure class (0 = success, 1 = unexpected crash).
EXIT_CODES = {
    "unknown_key": 2,
    "bad_value": 3,
    "noise_dimension": 4,
    "gamma_range": 5,
    "level_inconsistency": 6,
    "insufficient_levels": 7,
    "io_error": 8,
}
