from __future__ import annotations

from pathlib import Path

import pytest

from lagless.graph import WorkspaceManifest, load_manifest
from lagless.registry import RegistrySnapshot, load_snapshot

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fix1() -> tuple[RegistrySnapshot, WorkspaceManifest]:
    return load_snapshot(FIXTURES / "fix1" / "snapshot.json"), load_manifest(FIXTURES / "fix1" / "manifest.json")


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def pytest_terminal_summary(terminalreporter) -> None:
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
