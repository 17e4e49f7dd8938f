from __future__ import annotations

import sys
from pathlib import Path

import pytest

# Make the shared fixture builders importable as `fixtures` from every test.
sys.path.insert(0, str(Path(__file__).parent))

from fixtures import build_rtmt_fixture, build_separable_fixture  # noqa: E402


@pytest.fixture(scope="session")
def separable():
    return build_separable_fixture()


@pytest.fixture(scope="session")
def rtmt_fixture():
    return build_rtmt_fixture()
