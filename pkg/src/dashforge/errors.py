"""Exception types shared across the pipeline."""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from dashforge.dsl import SourceLocation
    from dashforge.model import ValidationReport


class DashforgeError(Exception):
    """Base class for every error raised by dashforge."""


class MissingDimension(DashforgeError):
    def __init__(self, kpi_name: str, dimension: str):
        super().__init__(f"KPI {kpi_name!r} has no {dimension}")
        self.kpi_name = kpi_name
        self.dimension = dimension


class EmptyInput(DashforgeError, ValueError):
    pass


class InvalidModel(DashforgeError):
    """Raised when an operation requires a model with zero validation errors."""

    def __init__(self, report: ValidationReport):
        codes = ", ".join(d.code for d in report.errors)
        super().__init__(f"model has {len(report.errors)} validation error(s): {codes}")
        self.report = report


class ParseError(DashforgeError):
    def __init__(self, location: SourceLocation, expected: str, found: str):
        super().__init__(
            f"{location.line}:{location.column}: expected {expected}, found {found}"
        )
        self.location = location
        self.expected = expected
        self.found = found


class SchemaError(DashforgeError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class UnknownTarget(DashforgeError):
    def __init__(self, name: str, available: list[str]):
        super().__init__(
            f"unknown target {name!r}; available targets: {', '.join(available)}"
        )
        self.name = name
        self.available = available


class DuplicateTarget(DashforgeError):
    def __init__(self, name: str):
        super().__init__(f"target {name!r} is already registered")
        self.name = name


class NotEnriched(DashforgeError):
    def __init__(self, kpi_names: list[str]):
        super().__init__(
            "KPIs without a visualization: "
            + ", ".join(kpi_names)
            + " (run `dashforge enrich` first)"
        )
        self.kpi_names = kpi_names


class InconsistentGroups(DashforgeError):
    pass
