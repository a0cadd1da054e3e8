"""Error taxonomy shared by every module in the package.

The CLI maps these onto exit codes (see cli.py): configuration and schema
problems are distinguishable from runtime failures such as planning timeouts.
"""

from __future__ import annotations


class CoactiveError(Exception):
    """Base class for all package errors."""


class SchemaError(CoactiveError):
    """A document failed schema validation; the message names the field."""


class InvariantError(CoactiveError):
    """A cross-field invariant on a parsed document does not hold."""


class UnknownIdError(CoactiveError):
    """A reference (context id, task id, session id, ...) does not resolve."""


class DomainError(CoactiveError):
    """Numeric input outside the documented domain (joint limits, empty signals)."""


class ContractError(CoactiveError):
    """Dimension or precondition mismatch between cooperating components."""


class PlannerError(CoactiveError):
    """Trajectory sampling failed; the message names the sample index."""


class ConfigError(CoactiveError):
    """An experiment or CLI configuration is invalid."""


class TrainingError(CoactiveError):
    """A training routine received degenerate input (e.g. no usable pairs)."""
