"""Item priority lists (levels 1..3) and the scripted planner."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from .catalog import PublicListing

LEVELS = (1, 2, 3)


@dataclass(frozen=True)
class PriorityList:
    scores: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for lid, level in self.scores.items():
            if level not in LEVELS:
                raise ValueError(f"priority for {lid} must be 1, 2 or 3, got {level!r}")

    def get(self, listing_id: str, default: int = 1) -> int:
        return self.scores.get(listing_id, default)

    def __getitem__(self, listing_id: str) -> int:
        return self.scores[listing_id]

    def keys(self):
        return self.scores.keys()

    def restricted(self, listing_ids: Iterable[str]) -> "PriorityList":
        ids = set(listing_ids)
        return PriorityList({k: v for k, v in self.scores.items() if k in ids})


class PlanningPolicy(Protocol):
    def plan(self, budget: int, items: Sequence[PublicListing], *,
             statuses=None, profiles=None, prev: Optional[PriorityList] = None
             ) -> PriorityList: ...


def tercile_level(position: int, n: int) -> int:
    """3 for the first third of a ranking, 2 for the middle, 1 for the rest."""
    return 3 - (3 * position) // n


class ScriptedPlanner:
    """Deterministic planner.

    Persona-matched items get 3, items whose starting price exceeds the budget
    get 1, and the rest are split into terciles either by perceived margin
    (``mode="margin"``) or by presentation order (``mode="auction_order"``).
    """

    def __init__(self, persona_ids: Iterable[int], estimates: Mapping[str, int],
                 mode: str = "margin"):
        if mode not in ("margin", "auction_order"):
            raise ValueError(f"unknown planning mode {mode!r}")
        self.persona_ids = frozenset(persona_ids)
        self.estimates = dict(estimates)
        self.mode = mode

    def plan(self, budget, items, *, statuses=None, profiles=None, prev=None):
        scores: dict[str, int] = {}
        rest: list[tuple[int, PublicListing]] = []
        for pos, item in enumerate(items):
            if item.matched_personas & self.persona_ids:
                scores[item.id] = 3
            elif item.starting_price > budget:
                scores[item.id] = 1
            else:
                rest.append((pos, item))
        if self.mode == "margin":
            rest.sort(key=lambda t: (-(self.estimates[t[1].id] - t[1].starting_price), t[0]))
        for rank, (_, item) in enumerate(rest):
            scores[item.id] = tercile_level(rank, len(rest))
        return PriorityList(scores)


def _check(result: PriorityList, items: Sequence[PublicListing]) -> PriorityList:
    expected = {x.id for x in items}
    if set(result.keys()) != expected:
        raise ValueError("priority list keys must equal the remaining items")
    return result


def init_priorities(budget: int, items: Sequence[PublicListing],
                    policy: PlanningPolicy) -> PriorityList:
    if not items:
        raise ValueError("cannot plan over an empty item list")
    return _check(policy.plan(budget, items), items)


def update_priorities(prev: PriorityList, budget: int, remaining: Sequence[PublicListing],
                      statuses, profiles, policy: PlanningPolicy) -> PriorityList:
    if not remaining:
        return PriorityList({})
    return _check(policy.plan(budget, remaining, statuses=statuses, profiles=profiles,
                              prev=prev), remaining)
