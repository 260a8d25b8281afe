from __future__ import annotations

from pathlib import Path

import pytest

from pcsynth.net import PcTPN
from pcsynth.parser import load_model

NETS = Path(__file__).resolve().parent.parent / "nets"


@pytest.fixture
def fig1_path() -> Path:
    return NETS / "fig1.pctpn"


@pytest.fixture
def fig1(fig1_path: Path) -> PcTPN:
    return load_model(fig1_path.read_text())
