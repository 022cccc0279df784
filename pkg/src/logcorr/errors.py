"""Exception types shared across the package."""


class LogcorrError(Exception):
    """Base class for all package errors."""


class ConfigError(LogcorrError):
    """Malformed or inconsistent parsing configuration."""


class DuplicateDefinitionError(ConfigError):
    """Two definitions in one config share a name."""


class UnknownDefinitionError(ConfigError):
    """A format template references a token with no definition."""


class UnknownEventIdError(LogcorrError):
    """A log id was requested for an event id the registry never assigned.

    This signals a pipeline ordering bug: event ids must be assigned
    before log ids that reference them.
    """


class UnsortedEventsError(LogcorrError):
    """An operation requiring a time-ordered event stream saw a decrease."""


class OracleGuardError(LogcorrError):
    """The exhaustive mining oracle was asked to run past its size guard."""


class OverlappingPeriodsError(LogcorrError):
    """Replay history and evaluation streams overlap in time."""


class PipelineError(LogcorrError):
    """Base for pipeline orchestration failures."""


class MissingArtifactError(PipelineError):
    """A stage was run before its upstream artifact exists."""


class StaleArtifactError(PipelineError):
    """An artifact no longer matches the inputs or parameters it was built from."""
