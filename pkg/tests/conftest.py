from __future__ import annotations

from pathlib import Path

import pytest

from harbor.catalog import Listing, load_catalog
from harbor.engine import Bid, Withdraw

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def root():
    return ROOT


def make_listing(lid="X1", start=100_000, true_value=150_000, personas=(), name=None):
    return Listing(id=lid, name=name or f"Home {lid}", description=f"A house called {lid}.",
                   starting_price=start, true_value=true_value,
                   matched_personas=frozenset(personas))


class Cap:
    """Bid the minimum legal amount up to a fixed cap."""

    def __init__(self, cap):
        self.cap = cap
        self.views = []

    def act(self, view):
        self.views.append(view)
        if view.required <= min(self.cap, view.my_budget):
            return Bid(view.required)
        return Withdraw()


class Script:
    """Replays a fixed list of actions, then withdraws."""

    def __init__(self, actions):
        self.actions = list(actions)

    def act(self, view):
        return self.actions.pop(0) if self.actions else Withdraw()
