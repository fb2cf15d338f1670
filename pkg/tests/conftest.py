from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from dynamics.poincare import find_fixed_points_at_infinity  # noqa: E402
from geometry.catalog import catalog_spaces, get_space  # noqa: E402
from geometry.ricci import find_einstein_metrics  # noqa: E402


@pytest.fixture(autouse=True)
def _embedded_catalog(monkeypatch):
    monkeypatch.delenv("HRF_CATALOG_PATH", raising=False)


@pytest.fixture(scope="session")
def spaces():
    return {s.name: s for s in catalog_spaces()}


@pytest.fixture(scope="session")
def fixed_points():
    """Fixed points at infinity per space name; every space is solved at most once."""
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = find_fixed_points_at_infinity(get_space(name))
        return cache[name]

    return get


@pytest.fixture(scope="session")
def einstein_metrics():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = find_einstein_metrics(get_space(name))
        return cache[name]

    return get
