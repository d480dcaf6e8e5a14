"""Typed errors raised across the toolkit."""


class AuditError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(AuditError):
    pass


class ZeroNormError(AuditError):
    pass


class EmptyInputError(AuditError):
    pass


class PartitionError(AuditError):
    pass


class TemplateError(AuditError):
    """Unknown or misused enrolled template."""


class ModeError(AuditError):
    """Operation not available in the current SRS access mode."""


class PlanError(AuditError):
    """Technique/mode mismatch or unexecutable query plan."""


class FeatureError(AuditError):
    pass


class TrainingError(AuditError):
    pass


class ConfigError(AuditError):
    pass


class BridgeProtocolError(AuditError):
    pass


class BridgeTimeoutError(AuditError):
    pass
