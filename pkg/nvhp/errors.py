"""
Exception hierarchy shared by the physics modules, the runner and the CLI.

Every error carries a short machine-readable ``code`` and the process exit code
the CLI should use (2 for configuration problems, 3 for numeric failures).
"""

from typing import Any, Dict, List, Optional


class NvhpError(Exception):
    """Base class for all nvhp errors"""

    code = "nvhp-error"
    exit_code = 3

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        error: Dict[str, Any] = {
            "code": self.code,
            "message": self.message,
            "exit_code": self.exit_code,
        }
        if self.details:
            error["details"] = self.details
        return {"error": error}


class ConfigError(NvhpError):
    """Invalid run configuration; ``fields`` lists every offending field"""

    code = "config-error"
    exit_code = 2

    def __init__(self, message: str, fields: Optional[List[Dict[str, str]]] = None):
        super().__init__(message)
        self.fields = fields or []

    def to_dict(self) -> Dict[str, Any]:
        doc = super().to_dict()
        doc["error"]["fields"] = self.fields
        return doc


class NumericError(NvhpError):
    code = "numeric-error"
    exit_code = 3


class DimensionMismatchError(NumericError):
    code = "dimension-mismatch"


class NonHermitianError(NumericError):
    code = "non-hermitian"


class NonPhysicalStateError(NumericError):
    """Density matrix with the wrong trace or a negative eigenvalue"""

    code = "non-physical-state"


class PoleError(NumericError):
    code = "pole"


class NoResonanceError(NumericError):
    code = "no-resonance"


class RadiusTooSmallError(NumericError):
    code = "radius-too-small"


class SpanTooSmallError(NumericError):
    code = "span-too-small"


class SystemTooLargeError(NumericError):
    code = "system-too-large"


class InternalError(NvhpError):
    """Unexpected failure outside the physics error hierarchy"""

    code = "internal-error"
