from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from escooter_balance.data_loader import load_scenario  # noqa: E402
from escooter_balance.sim.engine import run  # noqa: E402


# Full 20 s bundled runs take a few seconds each; share them across modules.
@pytest.fixture(scope="session")
def pd_run():
    return run(load_scenario("paper_scenario_pd"))


@pytest.fixture(scope="session")
def pdflu_run():
    return run(load_scenario("paper_scenario_pdflu"))
