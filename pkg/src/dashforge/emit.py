"""Translation of enriched dashboard models into platform documents.

Emitters live in a registry keyed by target name. The default registry ships
``grafana`` and ``canonical``; new platforms are added with
:meth:`EmitterRegistry.register`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from dashforge.dsl import dump_canonical
from dashforge.errors import (
    DuplicateTarget,
    InconsistentGroups,
    InvalidModel,
    NotEnriched,
    UnknownTarget,
)
from dashforge.model import DashboardModel, Visualization, VisualizationType, validate_model

GRID_COLUMNS = 24
PANEL_WIDTH = 12
PANEL_HEIGHT = 8
ROW_HEIGHT = 1
GRAFANA_SCHEMA_VERSION = 39

_PANEL_TYPES = {
    VisualizationType.TIMESERIES: "timeseries",
    VisualizationType.GAUGE: "gauge",
    VisualizationType.BARCHART: "barchart",
}


@dataclass(frozen=True)
class EmitterTarget:
    name: str
    description: str


@dataclass(frozen=True)
class GridPosition:
    x: int
    y: int
    w: int
    h: int

    def as_dict(self) -> dict[str, int]:
        return {"h": self.h, "w": self.w, "x": self.x, "y": self.y}


@dataclass(frozen=True)
class EmitResult:
    document: bytes
    warnings: list[str] = field(default_factory=list)


Emitter = Callable[[DashboardModel], EmitResult]


def check_emittable(model: DashboardModel) -> None:
    """Raise unless *model* is valid and every KPI has a visualization."""
    report = validate_model(model)
    if report.errors:
        raise InvalidModel(report)
    covered = {name for vis in model.visualizations for name in vis.kpi_names}
    missing = [kpi.name for kpi in model.kpis if kpi.name not in covered]
    if missing:
        raise NotEnriched(missing)


class EmitterRegistry:
    def __init__(self) -> None:
        self._targets: dict[str, tuple[EmitterTarget, Emitter]] = {}

    def register(self, name: str, description: str, emitter: Emitter) -> None:
        if not name or name != name.lower() or any(ch.isspace() for ch in name):
            raise ValueError(f"invalid target name {name!r}: use lowercase without whitespace")
        if name in self._targets:
            raise DuplicateTarget(name)
        self._targets[name] = (EmitterTarget(name, description), emitter)

    def unregister(self, name: str) -> None:
        self._targets.pop(name, None)

    def list_targets(self) -> list[EmitterTarget]:
        return [target for target, _ in self._targets.values()]

    def names(self) -> list[str]:
        return list(self._targets)

    def emit(self, model: DashboardModel, target: str) -> EmitResult:
        if target not in self._targets:
            raise UnknownTarget(target, self.names())
        check_emittable(model)
        return self._targets[target][1](model)


def compute_grid(visualizations: Sequence[Visualization], groups: Sequence[str]) -> list[GridPosition]:
    """Lay out one row header per group followed by that group's panels.

    Returned positions follow document order: a row header, its panels in
    visualization order, the next row header, and so on. Panels sit two per
    line; every group starts below the previous group's lowest panel.
    """
    members: dict[str, list[Visualization]] = {label: [] for label in groups}
    for vis in visualizations:
        if vis.group_key not in members:
            raise InconsistentGroups(
                f"visualization {vis.id!r} has group {vis.group_key!r}, which is not in the group list"
            )
        members[vis.group_key].append(vis)

    per_line = GRID_COLUMNS // PANEL_WIDTH
    positions: list[GridPosition] = []
    y = 0
    for label in members:
        positions.append(GridPosition(0, y, GRID_COLUMNS, ROW_HEIGHT))
        y += ROW_HEIGHT
        panels = members[label]
        for index in range(len(panels)):
            line, column = divmod(index, per_line)
            positions.append(GridPosition(column * PANEL_WIDTH, y + line * PANEL_HEIGHT, PANEL_WIDTH, PANEL_HEIGHT))
        lines = -(-len(panels) // per_line)
        y += lines * PANEL_HEIGHT
    return positions


def _ref_id(index: int) -> str:
    # A..Z, AA..AZ, ... like spreadsheet columns
    letters = ""
    index += 1
    while index:
        index, rem = divmod(index - 1, 26)
        letters = chr(ord("A") + rem) + letters
    return letters


def grafana_uid(title: str) -> str:
    return hashlib.sha256(title.encode("utf-8")).hexdigest()[:12]


def emit_grafana(model: DashboardModel) -> EmitResult:
    """Render an enriched model as a Grafana dashboard JSON document.

    Groups become row panels and visualizations become panels beneath their
    row; each KPI query becomes a panel target.
    """
    check_emittable(model)
    warnings: list[str] = []
    if not model.kpis:
        warnings.append("EMPTY_DASHBOARD dashboard has no KPIs; emitting no panels")

    groups: list[str] = []
    for vis in model.visualizations:
        if vis.group_key not in groups:
            groups.append(vis.group_key)
    ordered = [vis for label in groups for vis in model.visualizations if vis.group_key == label]
    positions = iter(compute_grid(ordered, groups))
    datasource = {"type": model.datasource.kind, "uid": model.datasource.uid}

    panels = []
    panel_id = 0
    for label in groups:
        panel_id += 1
        panels.append({
            "collapsed": False,
            "gridPos": next(positions).as_dict(),
            "id": panel_id,
            "panels": [],
            "title": label,
            "type": "row",
        })
        for vis in ordered:
            if vis.group_key != label:
                continue
            kpis = [model.kpi(name) for name in vis.kpi_names]
            units = list(dict.fromkeys(kpi.unit for kpi in kpis))
            unit = units[0]
            if len(units) > 1:
                unit = ""
                warnings.append(
                    f"MIXED_UNITS visualization {vis.id!r} mixes units "
                    + ", ".join(repr(u) for u in units)
                    + "; panel unit left empty"
                )
            targets = []
            for kpi in kpis:
                for query in kpi.queries:
                    targets.append({
                        "expr": query.body,
                        "legendFormat": kpi.name,
                        "refId": _ref_id(len(targets)),
                    })
            panel_id += 1
            panels.append({
                "datasource": dict(datasource),
                "fieldConfig": {"defaults": {"unit": unit}, "overrides": []},
                "gridPos": next(positions).as_dict(),
                "id": panel_id,
                "targets": targets,
                "title": vis.id,
                "type": _PANEL_TYPES[VisualizationType(vis.vtype)],
            })

    document = {
        "panels": panels,
        "schemaVersion": GRAFANA_SCHEMA_VERSION,
        "title": model.title,
        "uid": grafana_uid(model.title),
    }
    text = json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    return EmitResult(text.encode("utf-8"), warnings)


def emit_canonical(model: DashboardModel) -> EmitResult:
    check_emittable(model)
    return EmitResult(dump_canonical(model))


registry = EmitterRegistry()
registry.register("grafana", "Grafana dashboard JSON for the \"Import dashboard\" dialog", emit_grafana)
registry.register("canonical", "dashforge canonical JSON model (debugging and interchange)", emit_canonical)


def list_targets() -> list[EmitterTarget]:
    return registry.list_targets()


def emit(model: DashboardModel, target: str) -> EmitResult:
    """Translate *model* with the emitter registered as *target*.

    Raises:
        UnknownTarget: no emitter has that name.
        NotEnriched: some KPI is not shown by any visualization.
        InvalidModel: the model fails validation.
    """
    return registry.emit(model, target)
