from __future__ import annotations

import pytest

from cartaneds.reductions import replay
from cartaneds.scenarios import SCENARIO_IDS, verify_scenario


@pytest.fixture(scope="session")
def scenario_reports():
    """Every golden scenario verified once per test session."""
    return {sid: verify_scenario(sid) for sid in SCENARIO_IDS}


@pytest.fixture(scope="session")
def replays():
    """All elimination replays, run once per test session."""
    return {t: replay(t) for t in ("section3", "appendixA:+", "appendixA:-", "appendixB")}
