"""Automatic assignment of KPIs to visualizations."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import AbstractSet, Sequence

from dashforge.errors import EmptyInput, InvalidModel
from dashforge.model import (
    DashboardModel,
    Kpi,
    QueryKind,
    Visualization,
    VisualizationType,
    group_label,
    validate_model,
)


@dataclass(frozen=True)
class GroupKey:
    label: str
    unit: str


def _require_valid(model: DashboardModel) -> None:
    report = validate_model(model)
    if report.errors:
        raise InvalidModel(report)


def _claimed(model: DashboardModel) -> set[str]:
    return {name for vis in model.visualizations if vis.manual for name in vis.kpi_names}


def partition_kpis(model: DashboardModel) -> list[tuple[GroupKey, list[Kpi]]]:
    """Bucket the KPIs not claimed by a manual visualization by (group, unit).

    Buckets appear in order of first occurrence of their key; KPIs keep their
    declaration order inside a bucket.
    """
    _require_valid(model)
    claimed = _claimed(model)
    buckets: dict[GroupKey, list[Kpi]] = {}
    for kpi in model.kpis:
        if kpi.name in claimed:
            continue
        key = GroupKey(group_label(kpi, model.structure), kpi.unit)
        buckets.setdefault(key, []).append(kpi)
    return list(buckets.items())


def select_visualization_type(kpis: Sequence[Kpi]) -> VisualizationType:
    """Timeseries when any query is temporal, gauge otherwise.

    Bar charts are never chosen automatically.
    """
    if not kpis:
        raise EmptyInput("cannot choose a visualization type for zero KPIs")
    if any(q.kind == QueryKind.TEMPORAL for kpi in kpis for q in kpi.queries):
        return VisualizationType.TIMESERIES
    return VisualizationType.GAUGE


def make_visualization_id(kpis: Sequence[Kpi], existing: AbstractSet[str]) -> str:
    if not kpis:
        raise EmptyInput("cannot name a visualization of zero KPIs")
    base = "_".join(kpi.name for kpi in kpis)
    if base not in existing:
        return base
    suffix = 2
    while f"{base}_{suffix}" in existing:
        suffix += 1
    return f"{base}_{suffix}"


def enrich(model: DashboardModel) -> DashboardModel:
    """Return *model* with generated visualizations for every unclaimed KPI.

    Manual visualizations are kept verbatim and first; previously generated
    ones are discarded and rebuilt, which makes the operation idempotent.
    """
    _require_valid(model)
    manual = [vis for vis in model.visualizations if vis.manual]
    ids = {vis.id for vis in manual}
    generated = []
    for key, kpis in partition_kpis(model):
        vis_id = make_visualization_id(kpis, ids)
        ids.add(vis_id)
        generated.append(Visualization(
            id=vis_id,
            vtype=select_visualization_type(kpis),
            kpi_names=tuple(kpi.name for kpi in kpis),
            group_key=key.label,
            manual=False,
        ))
    return dataclasses.replace(model, visualizations=tuple(manual + generated))
