from __future__ import annotations

import os
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def cli_env() -> dict[str, str]:
    """Subprocess environment with a pinned clearing seed."""
    env = dict(os.environ)
    env["FINCLEAR_SEED"] = "1"
    return env
