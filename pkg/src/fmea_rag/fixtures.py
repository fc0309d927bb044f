"""Access to the data files shipped inside the package.

battery_module: the three-row module production table used throughout
the docs and tests. severity_screen: twenty rows with exactly fourteen
effects rated above five. assembly_line: fifty modes plus a matching
validation dataset and scripted-model rules for offline runs.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

BATTERY_MODULE = "battery_module.csv"
SEVERITY_SCREEN = "severity_screen.csv"
ASSEMBLY_LINE = "assembly_line.csv"
ASSEMBLY_LINE_QUESTIONS = "assembly_line_questions.json"
MOCK_LLM_RULES = "mock_llm_rules.csv"


def data_path(name: str) -> Path:
    path = Path(str(resources.files("fmea_rag").joinpath("data", name)))
    if not path.is_file():
        raise FileNotFoundError(f"no packaged data file named {name!r}")
    return path


def data_text(name: str) -> str:
    return data_path(name).read_text(encoding="utf-8")


def battery_module_csv() -> str:
    return data_text(BATTERY_MODULE)


def severity_screen_csv() -> str:
    return data_text(SEVERITY_SCREEN)


def assembly_line_csv() -> str:
    return data_text(ASSEMBLY_LINE)


def assembly_line_questions() -> str:
    return data_text(ASSEMBLY_LINE_QUESTIONS)


def mock_llm_rules_path() -> Path:
    return data_path(MOCK_LLM_RULES)
