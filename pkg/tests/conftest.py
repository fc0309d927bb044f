import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fmea_rag import HashingEmbedder, embed_all, parse_fmea_table, transpose
from fmea_rag.fixtures import battery_module_csv
from fmea_rag.llm import ScriptedLlm
from fmea_rag.fixtures import mock_llm_rules_path

GOLDEN_DIR = Path(__file__).parent / "golden"

ACCEPTANCE_RESULTS = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        name = report.nodeid.rsplit("::", 1)[-1]
        if name.startswith("test_"):
            name = name[len("test_"):]
        ACCEPTANCE_RESULTS.append((name, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for name, verdict in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(f"ACCEPTANCE {name}: {verdict}")


@pytest.fixture
def battery_table():
    return parse_fmea_table(battery_module_csv())


@pytest.fixture
def battery_graph(battery_table):
    return transpose(battery_table)


@pytest.fixture
def embedded_battery_graph(battery_table):
    graph = transpose(battery_table)
    embed_all(graph, HashingEmbedder())
    return graph


@pytest.fixture
def embedder():
    return HashingEmbedder()


@pytest.fixture
def scripted_llm():
    return ScriptedLlm.from_file(mock_llm_rules_path())


@pytest.fixture
def golden_dir():
    return GOLDEN_DIR
