# core/errors.py
"""
Exception hierarchy for the rainbow matching toolkit.

Each error carries the process exit code the CLI maps it to, plus a
``details`` dict holding the witness (offending cell, missing pair,
low-degree vertex, ...) so callers can emit a structured diagnostic.
"""

from typing import Any, Dict, Optional

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


class RainbowError(Exception):
    """Base error; never raised directly."""

    exit_code = EXIT_VALIDATION
    kind = "error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.kind, "message": self.message, "details": self.details}


# --- validation failures (exit 1) ---

class ValidationError(RainbowError):
    exit_code = EXIT_VALIDATION
    kind = "validation-failed"


class InvalidLatinArrayError(ValidationError):
    kind = "invalid-latin-array"


class NotCompleteError(ValidationError):
    kind = "not-complete"


class NotAPartitionError(ValidationError):
    kind = "not-a-partition"


class NonLinearHypergraphError(ValidationError):
    kind = "non-linear-hypergraph"


class InvalidSteinerSystemError(ValidationError):
    kind = "invalid-steiner-system"


class InvalidGraphError(ValidationError):
    kind = "invalid-graph"


class InvalidMatchingError(ValidationError):
    kind = "invalid-matching"


class MatchingNotInGraphError(ValidationError):
    kind = "matching-not-in-graph"


class InconsistentPlanError(ValidationError):
    kind = "inconsistent-plan"


# --- usage errors (exit 2) ---

class UsageError(RainbowError):
    exit_code = EXIT_USAGE
    kind = "usage-error"


class BadResidueError(UsageError):
    kind = "bad-residue"


class OutOfRangeError(UsageError):
    kind = "out-of-range"


class InvalidSplitError(UsageError):
    kind = "invalid-split"


class ConfigError(UsageError):
    kind = "config-error"


class InstanceFormatError(UsageError):
    kind = "parse-error"


# --- infeasible preconditions (exit 3) ---

class InfeasibleError(RainbowError):
    exit_code = EXIT_INFEASIBLE
    kind = "infeasible"


class PreconditionViolatedError(InfeasibleError):
    kind = "precondition-violated"


class TooLargeError(InfeasibleError):
    kind = "too-large"


class SizeInfeasibleError(InfeasibleError):
    kind = "size-infeasible"
