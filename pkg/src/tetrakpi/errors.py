"""Exception types shared across the toolkit.

``InputError`` subclasses signal bad input files, configuration or argument
values (CLI exit code 2); everything else derived from ``TetraKpiError`` is a
runtime condition (CLI exit code 1).
"""

from __future__ import annotations


class TetraKpiError(Exception):
    """Base class for all toolkit errors."""


class InputError(TetraKpiError):
    """Base class for malformed input data, files or configuration."""


class MalformedRow(InputError):
    """A counter CSV/JSON row could not be parsed."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"row {line}: {reason}")


class UnknownColumn(InputError):
    """The counter file header does not match the expected schema."""


class InvariantViolation(InputError):
    """A counter record breaks one of the documented counter invariants."""

    def __init__(self, field: str, detail: str):
        self.field = field
        self.detail = detail
        super().__init__(f"{field}: {detail}")


class DuplicateWindow(InputError):
    """Two records claim overlapping observation windows of one station."""

    def __init__(self, tbs_id: str, window_start):
        self.tbs_id = tbs_id
        self.window_start = window_start
        super().__init__(f"overlapping window for {tbs_id} at {window_start.isoformat()}")


class ConfigError(InputError):
    """A configuration document (clusters, simulation, report) is invalid."""


class DimensionMismatch(InputError):
    """Matrix/vector shapes do not agree."""


class DomainError(InputError):
    """A numeric argument lies outside the function's domain."""


class NoData(TetraKpiError):
    """An operation that needs at least one observation received none."""


class UnstableLoad(TetraKpiError):
    """Offered traffic meets or exceeds the number of channels (no steady state)."""
