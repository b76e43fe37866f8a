"""Compile KPI lists into dashboard models and platform-specific dashboards."""

__version__ = "0.1.0"

from dashforge.dsl import dump_canonical, load_canonical, parse_model, serialize_model
from dashforge.emit import emit, emit_grafana, list_targets
from dashforge.enrich import enrich, partition_kpis
from dashforge.model import (
    DashboardModel,
    Datasource,
    Kpi,
    Query,
    QueryKind,
    StructureKind,
    Visualization,
    VisualizationType,
    group_label,
    validate_model,
)

__all__ = [
    "DashboardModel",
    "Datasource",
    "Kpi",
    "Query",
    "QueryKind",
    "StructureKind",
    "Visualization",
    "VisualizationType",
    "dump_canonical",
    "emit",
    "emit_grafana",
    "enrich",
    "group_label",
    "list_targets",
    "load_canonical",
    "parse_model",
    "partition_kpis",
    "serialize_model",
    "validate_model",
]
