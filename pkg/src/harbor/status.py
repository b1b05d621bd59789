from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping


@dataclass
class StatusBoard:
    """An agent's view of the auction standings.

    ``total_profits`` are measured against the owning agent's own value
    estimates, never against true values.
    """

    remaining_budget: int
    total_profits: dict[str, int] = field(default_factory=dict)
    winning_bids: dict[str, dict[str, int]] = field(default_factory=dict)

    @classmethod
    def fresh(cls, budget: int, names) -> "StatusBoard":
        return cls(budget, {n: 0 for n in names}, {n: {} for n in names})

    def to_dict(self) -> dict:
        return {"remaining_budget": self.remaining_budget,
                "total_profits": dict(self.total_profits),
                "winning_bids": {k: dict(v) for k, v in self.winning_bids.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def copy(self) -> "StatusBoard":
        return StatusBoard(self.remaining_budget, dict(self.total_profits),
                           {k: dict(v) for k, v in self.winning_bids.items()})

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "StatusBoard":
        budget = d["remaining_budget"]
        if isinstance(budget, bool) or not isinstance(budget, (int, float, str)):
            raise ValueError("remaining_budget must be numeric")
        profits = d["total_profits"]
        wins = d["winning_bids"]
        if not isinstance(profits, dict) or not isinstance(wins, dict):
            raise ValueError("total_profits and winning_bids must be objects")
        clean_wins: dict[str, dict[str, int]] = {}
        for bidder, items in wins.items():
            if not isinstance(items, dict):
                raise ValueError("winning_bids entries must be objects")
            clean_wins[str(bidder)] = {str(k): _money(v) for k, v in items.items()}
        return cls(_money(budget), {str(k): _money(v) for k, v in profits.items()}, clean_wins)


def _money(v: Any) -> int:
    if isinstance(v, bool):
        raise ValueError("money must be numeric")
    if isinstance(v, str):
        v = v.replace("$", "").replace(",", "").strip()
    return int(round(float(v)))
