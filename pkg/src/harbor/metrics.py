"""Evaluation metrics computed from auction logs and the catalog.

Nothing here reads agent-side state: profits come from settlements and true
values, engagement from accepted bid events.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .catalog import Listing
from .engine import BidEvent, Settlement, max_profit
from .trueskill import Rating, TrueSkill, ranks_from_scores


def _by_id(items: Iterable[Listing]) -> dict[str, Listing]:
    return {x.id: x for x in items}


def per_item_profit(settlement: Settlement, listing: Listing, bidder: int) -> int:
    if settlement.winner != bidder:
        return 0
    return listing.true_value - settlement.hammer_price


def realized_profits(settlements: Sequence[Settlement], items: Sequence[Listing],
                     n_bidders: int) -> list[int]:
    lookup = _by_id(items)
    out = [0] * n_bidders
    for s in settlements:
        if s.winner is not None:
            out[s.winner] += lookup[s.listing_id].true_value - s.hammer_price
    return out


def profit_ratio(settlements: Sequence[Settlement], items: Sequence[Listing],
                 bidder: int) -> Optional[float]:
    """Realised true profit over the summed max profit of every auctioned item.

    None when every item has true value equal to its starting price.
    """
    denom = sum(max_profit(x) for x in items)
    if denom == 0:
        return None
    lookup = _by_id(items)
    num = sum(per_item_profit(s, lookup[s.listing_id], bidder) for s in settlements)
    return float(Fraction(num, denom))


def aligned_items(items: Sequence[Listing], persona_ids: Iterable[int]) -> list[Listing]:
    ids = set(persona_ids)
    return [x for x in items if x.matched_personas & ids]


def acquisition_rate(settlements: Sequence[Settlement], items: Sequence[Listing],
                     persona_ids: Iterable[int], bidder: int) -> Optional[float]:
    """Share of the bidder's persona-aligned items it won; None if it has none."""
    aligned = {x.id for x in aligned_items(items, persona_ids)}
    if not aligned:
        return None
    won = sum(1 for s in settlements if s.winner == bidder and s.listing_id in aligned)
    return won / len(aligned)


def engagement_counts(log: Iterable) -> dict[tuple[int, str], int]:
    counts: dict[tuple[int, str], int] = defaultdict(int)
    for rec in log:
        if isinstance(rec, BidEvent) and rec.accepted_bid:
            counts[(rec.bidder_id, rec.listing_id)] += 1
    return dict(counts)


def engagement_table(log: Iterable, n_bidders: int, listing_ids: Sequence[str]
                     ) -> list[tuple[int, str, int]]:
    """One row per bidder and listing, zeros included."""
    counts = engagement_counts(log)
    return [(b, lid, counts.get((b, lid), 0)) for b in range(n_bidders) for lid in listing_ids]


def mean_engagement(log: Iterable, bidder: int, listing_ids: Iterable[str]) -> Optional[float]:
    ids = list(listing_ids)
    if not ids:
        return None
    counts = engagement_counts(log)
    return sum(counts.get((bidder, lid), 0) for lid in ids) / len(ids)


def trueskill_update(ratings: Mapping, profits: Mapping, env: Optional[TrueSkill] = None
                     ) -> dict:
    """Rate one auction: players ranked by profit (higher is better, ties draw)."""
    env = env or TrueSkill()
    players = list(profits)
    if len(players) < 2:
        raise ValueError("TrueSkill needs at least two players")
    current = [ratings.get(p, env.create_rating()) for p in players]
    new = env.rate(current, ranks_from_scores([profits[p] for p in players]))
    out = dict(ratings)
    out.update(zip(players, new))
    return out


@dataclass
class BidderMetrics:
    name: str
    profit_ratio: Optional[float]
    acquisition_rate: Optional[float]
    true_profit: int
    kl_single: Optional[float] = None
    kl_mix: Optional[float] = None
    trueskill: Rating = field(default_factory=Rating)


@dataclass
class MetricsReport:
    """Per-role aggregate for one scenario."""

    scenario: str
    runs: int
    bidders: dict[str, BidderMetrics]


def mean(values: Iterable[Optional[float]]) -> Optional[float]:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None
