"""
Exception hierarchy shared by the simulation services and the CLI
"""


class AsepLabError(Exception):
    """Base error; `exit_code` is what the CLI returns when it escapes a command"""

    exit_code = 3


class ConfigurationError(AsepLabError):
    """Window too small for the requested initial data, or an inconsistent configuration"""


class NoParticlesError(AsepLabError):
    """Event requested on a configuration without particles"""


class LookupColorError(AsepLabError, KeyError):
    """Color not present in the configuration"""

    def __str__(self) -> str:
        return Exception.__str__(self)


class DomainError(AsepLabError, ValueError):
    """Argument outside the domain of a function"""


class FitError(AsepLabError):
    """Degenerate sample or a fit that cannot be carried out"""


class CorruptedStateError(AsepLabError):
    """Coupled state violates site-class consistency"""


class SpecError(AsepLabError, ValueError):
    """Malformed experiment specification"""

    exit_code = 2


class UsageError(AsepLabError):
    """Bad command line or config file"""

    exit_code = 2


class SchemaVersionError(AsepLabError):
    """Persisted report written with an incompatible schema"""


class SettingsError(AsepLabError):
    """Invalid environment configuration"""

    exit_code = 2


class ExperimentInterrupted(AsepLabError):
    """Experiment stopped before all trials finished; completed records are on disk"""

    exit_code = 130
