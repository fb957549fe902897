from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from archcycle.adl import parse
from archcycle.runtime import parse_scenario, parse_script

CORPUS = Path(str(resources.files("archcycle") / "corpus"))


def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text(encoding="utf-8")


def load_scripts() -> dict:
    return {p.stem: parse_script(p.read_text(encoding="utf-8")) for p in (CORPUS / "scripts").glob("*.script")}


def load_scenario(name: str):
    return parse_scenario(corpus_text(f"scenarios/{name}.scenario"))


@pytest.fixture
def phr():
    return parse(corpus_text("phr.adl"))


@pytest.fixture
def phr_bad():
    return parse(corpus_text("phr-bad-auth.adl"))


@pytest.fixture
def phr_converter():
    return parse(corpus_text("phr-with-converter.adl"))


@pytest.fixture
def scripts():
    return load_scripts()


# Acceptance criteria record one verdict line each; they are echoed at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
