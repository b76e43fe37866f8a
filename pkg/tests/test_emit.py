import dataclasses
import hashlib
import json

import pytest
from hypothesis import given, settings

from dashforge.dsl import dump_canonical
from dashforge.emit import (
    EmitResult,
    EmitterRegistry,
    GridPosition,
    compute_grid,
    emit,
    emit_grafana,
    list_targets,
    registry,
)
from dashforge.enrich import enrich
from dashforge.errors import (
    DuplicateTarget,
    InconsistentGroups,
    InvalidModel,
    NotEnriched,
    UnknownTarget,
)
from dashforge.model import (
    DashboardModel,
    Datasource,
    Kpi,
    Query,
    QueryKind,
    StructureKind,
    Visualization,
    VisualizationType,
)
from generators import models


def vis(vid, group="g", *names):
    return Visualization(vid, VisualizationType.GAUGE, names or (vid,), group, True)


def overlap(a, b):
    return a.x < b.x + b.w and b.x < a.x + a.w and a.y < b.y + b.h and b.y < a.y + a.h


def test_list_targets():
    assert [t.name for t in list_targets()] == ["grafana", "canonical"]
    assert all(t.description for t in list_targets())


def test_registration_order_and_duplicates():
    def mock(model):
        return EmitResult(b"mock\n")

    registry.register("mock", "test emitter", mock)
    try:
        assert [t.name for t in list_targets()] == ["grafana", "canonical", "mock"]
        with pytest.raises(DuplicateTarget):
            registry.register("grafana", "again", mock)
    finally:
        registry.unregister("mock")
    assert [t.name for t in list_targets()] == ["grafana", "canonical"]


@pytest.mark.parametrize("name", ["", "Grafana", "my target"])
def test_registry_rejects_bad_names(name):
    with pytest.raises(ValueError):
        EmitterRegistry().register(name, "x", lambda m: EmitResult(b"x"))


def test_emit_dispatch(fig1):
    enriched = enrich(fig1)
    assert emit(enriched, "grafana") == emit_grafana(enriched)
    assert emit(enriched, "canonical").document == dump_canonical(enriched)
    with pytest.raises(NotEnriched) as info:
        emit(fig1, "grafana")
    assert info.value.kpi_names == ["EstimatedErrorTime", "MaximumErrorTime"]
    with pytest.raises(UnknownTarget) as info:
        emit(enriched, "kibana")
    assert info.value.available == ["grafana", "canonical"]
    with pytest.raises(InvalidModel):
        emit(dataclasses.replace(enriched, title=""), "grafana")


def test_grafana_fig1(fig1):
    result = emit_grafana(enrich(fig1))
    assert result.warnings == []
    assert result.document.endswith(b"}\n") and not result.document.endswith(b"\n\n")
    doc = json.loads(result.document)
    assert doc["title"] == "Node Exporter"
    assert doc["schemaVersion"] == 39
    assert doc["uid"] == hashlib.sha256(b"Node Exporter").hexdigest()[:12]
    row, panel = doc["panels"]
    assert row["type"] == "row" and row["title"] == "Reliability"
    assert row["gridPos"] == {"x": 0, "y": 0, "w": 24, "h": 1}
    assert panel["type"] == "timeseries"
    assert panel["title"] == "EstimatedErrorTime_MaximumErrorTime"
    assert panel["datasource"] == {"type": "prometheus", "uid": "cc893e83"}
    assert panel["fieldConfig"]["defaults"]["unit"] == "s"
    assert panel["gridPos"] == {"x": 0, "y": 1, "w": 12, "h": 8}
    assert panel["targets"] == [
        {"expr": "node_timex_estimated_error_seconds", "legendFormat": "EstimatedErrorTime", "refId": "A"},
        {"expr": "node_timex_maxerror_seconds", "legendFormat": "MaximumErrorTime", "refId": "B"},
    ]


def _keys_sorted(node):
    if isinstance(node, dict):
        return list(node) == sorted(node) and all(_keys_sorted(v) for v in node.values())
    if isinstance(node, list):
        return all(_keys_sorted(v) for v in node)
    return True


def test_grafana_keys_sorted(fig1):
    text = emit_grafana(enrich(fig1)).document.decode()
    assert _keys_sorted(json.loads(text))


def test_grafana_empty_model():
    model = DashboardModel("X", StructureKind.CATEGORICAL, Datasource("a", "t"))
    result = emit_grafana(model)
    assert json.loads(result.document)["panels"] == []
    assert [w.split()[0] for w in result.warnings] == ["EMPTY_DASHBOARD"]


def test_grafana_three_panels_in_one_group():
    model = DashboardModel("X", StructureKind.CATEGORICAL, Datasource("a", "t"), tuple(
        Kpi(n, u, (Query(f"{n}_q", QueryKind.INSTANT),), category="G") for n, u in (("a", "s"), ("b", "%"), ("c", "ms"))
    ))
    doc = json.loads(emit_grafana(enrich(model)).document)
    row, *panels = doc["panels"]
    assert row["type"] == "row"
    assert [(p["gridPos"]["x"], p["gridPos"]["y"]) for p in panels] == [(0, 1), (12, 1), (0, 9)]
    assert [p["type"] for p in panels] == ["gauge"] * 3
    assert [p["id"] for p in doc["panels"]] == [1, 2, 3, 4]


def test_grafana_mixed_units_warning(fig1):
    kpis = (fig1.kpis[0], dataclasses.replace(fig1.kpis[1], unit="ms"))
    manual = Visualization("both", VisualizationType.BARCHART,
                           ("EstimatedErrorTime", "MaximumErrorTime"), "Reliability", True)
    result = emit_grafana(dataclasses.replace(fig1, kpis=kpis, visualizations=(manual,)))
    panel = json.loads(result.document)["panels"][1]
    assert panel["type"] == "barchart"
    assert panel["fieldConfig"]["defaults"]["unit"] == ""
    assert [w.split()[0] for w in result.warnings] == ["MIXED_UNITS"]


def test_ref_ids_past_z():
    queries = tuple(Query(f"q{i}", QueryKind.TEMPORAL) for i in range(28))
    model = DashboardModel("X", StructureKind.CATEGORICAL, Datasource("a", "t"),
                           (Kpi("k", "", queries, category="c"),))
    targets = json.loads(emit_grafana(enrich(model)).document)["panels"][1]["targets"]
    assert [t["refId"] for t in targets][24:] == ["Y", "Z", "AA", "AB"]


@pytest.mark.parametrize("count, expected", [
    (0, [(0, 0, 24, 1)]),
    (1, [(0, 0, 24, 1), (0, 1, 12, 8)]),
    (2, [(0, 0, 24, 1), (0, 1, 12, 8), (12, 1, 12, 8)]),
    (3, [(0, 0, 24, 1), (0, 1, 12, 8), (12, 1, 12, 8), (0, 9, 12, 8)]),
])
def test_grid_single_group(count, expected):
    positions = compute_grid([vis(f"v{i}") for i in range(count)], ["g"])
    assert [(p.x, p.y, p.w, p.h) for p in positions] == expected


def test_grid_two_groups():
    positions = compute_grid([vis("a", "g1"), vis("b", "g2"), vis("c", "g1"), vis("d", "g1")], ["g1", "g2"])
    assert positions == [
        GridPosition(0, 0, 24, 1),
        GridPosition(0, 1, 12, 8), GridPosition(12, 1, 12, 8), GridPosition(0, 9, 12, 8),
        GridPosition(0, 17, 24, 1),
        GridPosition(0, 18, 12, 8),
    ]


def test_grid_empty_and_inconsistent():
    assert compute_grid([], []) == []
    with pytest.raises(InconsistentGroups):
        compute_grid([vis("a", "g1")], ["g2"])


@settings(max_examples=200)
@given(models(enriched=True))
def test_grafana_structure(model):
    doc = json.loads(emit_grafana(model).document)
    panels = [p for p in doc["panels"] if p["type"] != "row"]
    rows = [p for p in doc["panels"] if p["type"] == "row"]
    assert len(panels) == len(model.visualizations)
    assert len(rows) == len({v.group_key for v in model.visualizations})
    exprs = [t["expr"] for p in panels for t in p["targets"]]
    bodies = [q.body for k in model.kpis for q in k.queries]
    assert sorted(exprs) == sorted(bodies)
    rects = [GridPosition(**p["gridPos"]) for p in doc["panels"]]
    for i, a in enumerate(rects):
        assert 0 <= a.x and a.x + a.w <= 24
        for b in rects[i + 1:]:
            assert not overlap(a, b)
    assert emit_grafana(model).document == emit_grafana(model).document
    assert emit(model, "canonical").document == dump_canonical(model)
