import sys
from pathlib import Path

import pytest

from dashforge.model import DashboardModel, Datasource, Kpi, Query, QueryKind, StructureKind

sys.path.insert(0, str(Path(__file__).parent))

TESTS = Path(__file__).parent
CORPUS = TESTS / "corpus"
GOLDEN = TESTS / "golden"

_acceptance: list[tuple[str, bool, str]] = []


def pytest_addoption(parser):
    parser.addoption("--update-golden", action="store_true",
                     help="rewrite tests/golden from the current implementation")


@pytest.fixture
def update_golden(request):
    return request.config.getoption("--update-golden")


@pytest.fixture
def record_criterion():
    """Record one acceptance criterion; printed in the terminal summary."""

    def record(name: str, passed: bool, detail: str = "") -> None:
        _acceptance.append((name, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _acceptance:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  {name}" + (f"  ({detail})" if detail else ""))


def corpus_files():
    return sorted(p for p in CORPUS.iterdir() if p.suffix in (".dash", ".json"))


@pytest.fixture
def fig1() -> DashboardModel:
    return DashboardModel(
        title="Node Exporter",
        structure=StructureKind.CATEGORICAL,
        datasource=Datasource("cc893e83", "prometheus"),
        kpis=(
            Kpi("EstimatedErrorTime", "s",
                (Query("node_timex_estimated_error_seconds", QueryKind.TEMPORAL),),
                category="Reliability"),
            Kpi("MaximumErrorTime", "s",
                (Query("node_timex_maxerror_seconds", QueryKind.TEMPORAL),),
                category="Reliability"),
        ),
    )


@pytest.fixture
def fig1_path() -> Path:
    return CORPUS / "01_node_exporter.dash"
