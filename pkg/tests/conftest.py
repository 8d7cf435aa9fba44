from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))

from tsgflow import load_bundle, load_scenario  # noqa: E402

BUNDLES = TESTS_DIR / "fixtures" / "bundles"
FIG4_DIR = BUNDLES / "availability_fig4"
FIG5_DIR = BUNDLES / "availability_fig5"
TRIPLE_DIR = BUNDLES / "triple_probe"


@pytest.fixture(scope="session")
def fig4_bundle():
    return load_bundle(FIG4_DIR)


@pytest.fixture(scope="session")
def fig4_scenario():
    return load_scenario(FIG4_DIR, "dependency_issue")


@pytest.fixture(scope="session")
def fig5_bundle():
    return load_bundle(FIG5_DIR)


@pytest.fixture(scope="session")
def fig5_scenario():
    return load_scenario(FIG5_DIR, "dependency_issue")


@pytest.fixture(scope="session")
def triple_bundle():
    return load_bundle(TRIPLE_DIR)


@pytest.fixture(scope="session")
def triple_scenario():
    return load_scenario(TRIPLE_DIR, "all_fallback")
