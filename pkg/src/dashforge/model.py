"""Dashboard metamodel: immutable domain types and model validation.

A :class:`DashboardModel` is the technology-agnostic artifact every stage of
the pipeline reads and writes. Constructors do not check invariants; call
:func:`validate_model` to obtain a :class:`ValidationReport`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional

from dashforge.errors import MissingDimension


class QueryKind(str, enum.Enum):
    TEMPORAL = "temporal"
    INSTANT = "instant"


class StructureKind(str, enum.Enum):
    CATEGORICAL = "categorical"
    TARGET = "target"
    CUSTOM = "custom"


class VisualizationType(str, enum.Enum):
    TIMESERIES = "timeseries"
    GAUGE = "gauge"
    BARCHART = "barchart"


@dataclass(frozen=True)
class Datasource:
    uid: str
    kind: str


@dataclass(frozen=True)
class Query:
    body: str
    kind: QueryKind


@dataclass(frozen=True)
class Kpi:
    name: str
    unit: str
    queries: tuple[Query, ...]
    category: Optional[str] = None
    target: Optional[str] = None
    group: Optional[str] = None


@dataclass(frozen=True)
class Visualization:
    id: str
    vtype: VisualizationType
    kpi_names: tuple[str, ...]
    group_key: str
    manual: bool = True


@dataclass(frozen=True)
class DashboardModel:
    title: str
    structure: StructureKind
    datasource: Datasource
    kpis: tuple[Kpi, ...] = ()
    visualizations: tuple[Visualization, ...] = ()

    def kpi(self, name: str) -> Optional[Kpi]:
        for kpi in self.kpis:
            if kpi.name == name:
                return kpi
        return None


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    location: str


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Diagnostic, ...] = ()
    warnings: tuple[Diagnostic, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


# structure -> (Kpi attribute, interchange key, human name)
_DIMENSIONS = {
    StructureKind.CATEGORICAL: ("category", "category", "category"),
    StructureKind.TARGET: ("target", "target", "target"),
    StructureKind.CUSTOM: ("group", "group", "custom group"),
}


def dimension_attribute(structure: StructureKind) -> str:
    """Name of the :class:`Kpi` attribute that *structure* groups by."""
    return _DIMENSIONS[StructureKind(structure)][0]


def group_label(kpi: Kpi, structure: StructureKind) -> str:
    """Return the label *kpi* is grouped under for the given dashboard structure.

    Raises:
        MissingDimension: the KPI lacks the dimension (or it is empty).
    """
    attr, _, human = _DIMENSIONS[StructureKind(structure)]
    label = getattr(kpi, attr)
    if not label:
        raise MissingDimension(kpi.name, human)
    return label


def _has_control(text: str) -> bool:
    return any(ord(ch) < 0x20 or ord(ch) == 0x7F for ch in text)


class _Collector:
    def __init__(self) -> None:
        self._items: list[tuple[tuple[int, ...], str, Diagnostic]] = []

    def add(self, level: str, pos: tuple[int, ...], code: str, location: str, message: str) -> None:
        self._items.append((pos, level, Diagnostic(code, message, location)))

    def report(self) -> ValidationReport:
        ordered = sorted(self._items, key=lambda item: (item[0], item[2].code))
        return ValidationReport(
            errors=tuple(d for _, level, d in ordered if level == "error"),
            warnings=tuple(d for _, level, d in ordered if level == "warning"),
        )


def _strings(model: DashboardModel) -> Iterator[tuple[tuple[int, ...], str, Optional[str]]]:
    yield (0,), "title", model.title
    yield (1, 0), "datasource.uid", model.datasource.uid
    yield (1, 1), "datasource.type", model.datasource.kind
    for i, kpi in enumerate(model.kpis):
        yield (2, i, 0), f"kpis[{i}].name", kpi.name
        yield (2, i, 1), f"kpis[{i}].unit", kpi.unit
        yield (2, i, 2), f"kpis[{i}].category", kpi.category
        yield (2, i, 3), f"kpis[{i}].target", kpi.target
        yield (2, i, 4), f"kpis[{i}].group", kpi.group
        for k, query in enumerate(kpi.queries):
            yield (2, i, 5, k), f"kpis[{i}].queries[{k}].body", query.body
    for j, vis in enumerate(model.visualizations):
        yield (3, j, 0), f"visualizations[{j}].id", vis.id
        yield (3, j, 1), f"visualizations[{j}].groupKey", vis.group_key
        for k, name in enumerate(vis.kpi_names):
            yield (3, j, 2, k), f"visualizations[{j}].kpis[{k}]", name


def validate_model(model: DashboardModel) -> ValidationReport:
    """Check every metamodel invariant and return the resulting diagnostics.

    Diagnostics are ordered by position in the model, then by code. The
    function never raises for a structurally well-formed model.
    """
    out = _Collector()

    for pos, loc, value in _strings(model):
        if value is not None and _has_control(value):
            out.add("error", pos, "CONTROL_CHARACTER", loc, "control characters are not allowed")

    if not model.title or not model.title.strip():
        out.add("error", (0,), "EMPTY_TITLE", "title", "dashboard title is empty")

    uid = model.datasource.uid
    if not uid or any(ch.isspace() for ch in uid):
        out.add("error", (1, 0), "INVALID_DATASOURCE", "datasource.uid",
                "datasource uid must be non-empty and contain no whitespace")
    if not model.datasource.kind:
        out.add("error", (1, 1), "INVALID_DATASOURCE", "datasource.type",
                "datasource type is empty")

    dim_attr, dim_key, dim_human = _DIMENSIONS[StructureKind(model.structure)]
    seen: set[str] = set()
    for i, kpi in enumerate(model.kpis):
        if not kpi.name:
            out.add("error", (2, i, 0), "EMPTY_KPI_NAME", f"kpis[{i}].name", "KPI name is empty")
        elif kpi.name in seen:
            out.add("error", (2, i, 0), "DUPLICATE_KPI", f"kpis[{i}].name",
                    f"KPI {kpi.name!r} is declared more than once")
        seen.add(kpi.name)
        if kpi.unit is None:
            out.add("error", (2, i, 1), "MISSING_UNIT", f"kpis[{i}].unit",
                    f"KPI {kpi.name!r} has no unit (use \"\" for dimensionless)")
        if not getattr(kpi, dim_attr):
            out.add("error", (2, i, 2), "MISSING_GROUP_DIMENSION", f"kpis[{i}].{dim_key}",
                    f"KPI {kpi.name!r} has no {dim_human} but the dashboard structure is "
                    f"{StructureKind(model.structure).value}")
        if not kpi.queries:
            out.add("error", (2, i, 5), "NO_QUERIES", f"kpis[{i}].queries",
                    f"KPI {kpi.name!r} has no query")
        for k, query in enumerate(kpi.queries or ()):
            if not query.body or not query.body.strip():
                out.add("error", (2, i, 5, k), "EMPTY_QUERY", f"kpis[{i}].queries[{k}].body",
                        f"query {k} of KPI {kpi.name!r} is empty")

    ids: set[str] = set()
    claimed: set[str] = set()
    for j, vis in enumerate(model.visualizations):
        where = f"visualizations[{j}]"
        if not vis.id:
            out.add("error", (3, j, 0), "EMPTY_VIS_ID", f"{where}.id", "visualization id is empty")
        elif vis.id in ids:
            out.add("error", (3, j, 0), "DUPLICATE_VIS_ID", f"{where}.id",
                    f"visualization id {vis.id!r} is used more than once")
        ids.add(vis.id)
        if not vis.kpi_names:
            out.add("error", (3, j, 2), "EMPTY_VISUALIZATION", f"{where}.kpis",
                    f"visualization {vis.id!r} references no KPI")
        for k, name in enumerate(vis.kpi_names):
            if name not in seen:
                out.add("error", (3, j, 2, k), "DANGLING_KPI_REF", f"{where}.kpis[{k}]",
                        f"visualization {vis.id!r} references unknown KPI {name!r}")
            elif name in claimed:
                out.add("error", (3, j, 2, k), "KPI_ALREADY_VISUALIZED", f"{where}.kpis[{k}]",
                        f"KPI {name!r} already belongs to another visualization")
            claimed.add(name)
        first = model.kpi(vis.kpi_names[0]) if vis.kpi_names else None
        expected = getattr(first, dim_attr) if first is not None else None
        if expected and vis.group_key != expected:
            out.add("error", (3, j, 1), "GROUP_KEY_MISMATCH", f"{where}.groupKey",
                    f"visualization {vis.id!r} has group {vis.group_key!r} but its first KPI "
                    f"is grouped under {expected!r}")

    if not model.kpis and not model.visualizations:
        out.add("warning", (9,), "EMPTY_MODEL", "$", "the dashboard declares no KPIs")

    return out.report()
