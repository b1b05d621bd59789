"""Turn-based English ascending auction.

Items are sold one at a time in presentation order. Within an item, every
active bidder is polled once per cycle in ascending id order, skipping the
current high bidder. A bidder either raises (at least the minimum legal bid,
at most its remaining budget) or withdraws for good. The item settles as soon
as only the high bidder is left, when everyone withdrew before any bid, or at
the cycle cap.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Optional, Protocol, Sequence, Union

from .catalog import Listing, PublicListing

DEFAULT_MIN_INCREMENT_RATE = 0.10
DEFAULT_CYCLE_CAP = 50
POST_ROUND_HOOKS = ("update_status", "update_profiles", "update_priorities")


class ConfigError(ValueError):
    """Invalid auction configuration."""


class SettlementError(RuntimeError):
    """settle_item called before any settlement condition holds."""


class PolicyError(RuntimeError):
    """Recoverable policy failure; the engine records a forced withdrawal."""


def round_half_up(value: Decimal) -> int:
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def perceived_value(listing: Listing, overhead: float) -> int:
    """The value an agent with this estimation overhead believes the item has."""
    if overhead <= -1:
        raise ValueError("overhead must be > -1")
    return round_half_up(Decimal(listing.true_value) * (1 + Decimal(str(overhead))))


def max_profit(listing: Listing) -> int:
    return listing.true_value - listing.starting_price


def min_increment(starting_price: int, rate: float) -> int:
    return max(1, round_half_up(Decimal(starting_price) * Decimal(str(rate))))


# -- actions and records ----------------------------------------------------

@dataclass(frozen=True)
class Bid:
    amount: int
    note: Optional[str] = None


@dataclass(frozen=True)
class Withdraw:
    note: Optional[str] = None


Action = Union[Bid, Withdraw]


@dataclass(frozen=True)
class BidEvent:
    seq: int
    listing_id: str
    bidder_id: int
    action: str  # "bid" | "withdraw"
    amount: Optional[int]
    cycle: int
    annotation: Optional[str] = None

    @property
    def accepted_bid(self) -> bool:
        return self.action == "bid"

    def to_record(self) -> dict:
        rec: dict[str, Any] = {"seq": self.seq, "listing_id": self.listing_id,
                               "bidder_id": self.bidder_id, "action": self.action}
        if self.amount is not None:
            rec["amount"] = self.amount
        rec["cycle"] = self.cycle
        if self.annotation is not None:
            rec["annotation"] = self.annotation
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "BidEvent":
        return cls(seq=rec["seq"], listing_id=rec["listing_id"], bidder_id=rec["bidder_id"],
                   action=rec["action"], amount=rec.get("amount"), cycle=rec["cycle"],
                   annotation=rec.get("annotation"))


@dataclass(frozen=True)
class Settlement:
    listing_id: str
    winner: Optional[int]
    hammer_price: Optional[int]
    passed: bool

    def to_record(self) -> dict:
        rec: dict[str, Any] = {"listing_id": self.listing_id}
        if self.winner is not None:
            rec["winner"] = self.winner
            rec["hammer"] = self.hammer_price
        rec["passed"] = self.passed
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Settlement":
        return cls(listing_id=rec["listing_id"], winner=rec.get("winner"),
                   hammer_price=rec.get("hammer"), passed=rec["passed"])


@dataclass
class BidderState:
    bidder_id: int
    initial_budget: int
    remaining_budget: int
    won: list[tuple[str, int]] = field(default_factory=list)
    true_profit: int = 0
    engagement: dict[str, int] = field(default_factory=dict)

    def snapshot(self) -> dict:
        return {"bidder_id": self.bidder_id, "initial_budget": self.initial_budget,
                "remaining_budget": self.remaining_budget,
                "won": [list(w) for w in self.won], "true_profit": self.true_profit,
                "engagement": dict(sorted(self.engagement.items()))}


@dataclass
class ItemRound:
    listing: Listing
    min_increment: int
    active: set[int]
    current_high: Optional[tuple[int, int]] = None
    history: list[BidEvent] = field(default_factory=list)
    cycle_count: int = 0
    settlement: Optional[Settlement] = None

    @property
    def required_bid(self) -> int:
        if self.current_high is None:
            return self.listing.starting_price
        return self.current_high[1] + self.min_increment


# -- agent-facing views (never carry true values) ----------------------------

@dataclass(frozen=True)
class AuctionInfo:
    bidder_id: int
    n_bidders: int
    items: tuple[PublicListing, ...]
    min_increment_rate: float
    initial_budget: int


@dataclass(frozen=True)
class BidView:
    bidder_id: int
    listing: PublicListing
    cycle: int
    current_high: Optional[tuple[int, int]]
    min_increment: int
    required: int
    my_budget: int
    history: tuple[BidEvent, ...]
    active: frozenset[int]
    remaining_items: tuple[PublicListing, ...]


@dataclass(frozen=True)
class ItemResult:
    bidder_id: int
    listing: PublicListing
    history: tuple[BidEvent, ...]
    settlement: Settlement
    my_budget: int
    remaining_items: tuple[PublicListing, ...]


class Policy(Protocol):
    def act(self, view: BidView) -> Action: ...


@dataclass
class BidderSeat:
    initial_budget: int
    policy: Any


class Auction:
    """Mutable state of one auction run. Strictly sequential."""

    def __init__(self, items: Sequence[Listing], bidders: Sequence[BidderSeat],
                 min_increment_rate: float = DEFAULT_MIN_INCREMENT_RATE,
                 seed: int = 0, cycle_cap: int = DEFAULT_CYCLE_CAP):
        if len(bidders) < 2:
            raise ConfigError("an auction needs at least 2 bidders")
        if not items:
            raise ConfigError("an auction needs at least 1 item")
        if not 0 < min_increment_rate <= 1:
            raise ConfigError("min_increment_rate must be in (0, 1]")
        if cycle_cap < 1:
            raise ConfigError("cycle_cap must be >= 1")
        for i, seat in enumerate(bidders):
            if not isinstance(seat.initial_budget, int) or seat.initial_budget <= 0:
                raise ConfigError(f"bidder {i}: budget must be a positive integer")
        ids = [x.id for x in items]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate listing ids in item queue")
        self.items = list(items)
        self.policies = [s.policy for s in bidders]
        self.states = [BidderState(i, s.initial_budget, s.initial_budget)
                       for i, s in enumerate(bidders)]
        self.min_increment_rate = min_increment_rate
        self.cycle_cap = cycle_cap
        self.seed = seed
        self.rng = random.Random(seed)
        self.log: list[BidEvent | Settlement] = []
        self.settlements: list[Settlement] = []
        self.position = 0
        self._seq = 0

    # -- helpers ---------------------------------------------------------
    def header(self) -> dict:
        return {
            "bidders": [{"bidder_id": s.bidder_id, "initial_budget": s.initial_budget}
                        for s in self.states],
            "items": [{"listing_id": x.id, "name": x.name,
                       "starting_price": x.starting_price,
                       "min_increment": min_increment(x.starting_price, self.min_increment_rate)}
                      for x in self.items],
            "min_increment_rate": self.min_increment_rate,
            "cycle_cap": self.cycle_cap,
            "seed": self.seed,
        }

    def _remaining_public(self, after: int) -> tuple[PublicListing, ...]:
        return tuple(x.public() for x in self.items[after:])

    def start_item(self, listing: Listing) -> ItemRound:
        return ItemRound(
            listing=listing,
            min_increment=min_increment(listing.starting_price, self.min_increment_rate),
            active=set(range(len(self.states))),
        )

    def settleable(self, rnd: ItemRound) -> bool:
        if rnd.settlement is not None:
            return False
        if not rnd.active:
            return True
        if rnd.current_high is not None and rnd.active == {rnd.current_high[0]}:
            return True
        return rnd.cycle_count >= self.cycle_cap

    def _record(self, rnd: ItemRound, bidder: int, action: str, amount: Optional[int],
                annotation: Optional[str]) -> BidEvent:
        self._seq += 1
        ev = BidEvent(self._seq, rnd.listing.id, bidder, action, amount, rnd.cycle_count,
                      annotation)
        rnd.history.append(ev)
        self.log.append(ev)
        return ev

    def _view(self, rnd: ItemRound, bidder: int) -> BidView:
        return BidView(
            bidder_id=bidder,
            listing=rnd.listing.public(),
            cycle=rnd.cycle_count,
            current_high=rnd.current_high,
            min_increment=rnd.min_increment,
            required=rnd.required_bid,
            my_budget=self.states[bidder].remaining_budget,
            history=tuple(rnd.history),
            active=frozenset(rnd.active),
            remaining_items=self._remaining_public(self.position + 1),
        )

    def _apply(self, rnd: ItemRound, bidder: int, action: Any) -> BidEvent:
        state = self.states[bidder]
        if isinstance(action, Withdraw):
            rnd.active.discard(bidder)
            return self._record(rnd, bidder, "withdraw", None, action.note)
        if not isinstance(action, Bid):
            rnd.active.discard(bidder)
            return self._record(rnd, bidder, "withdraw", None, "invalid action")
        amount = action.amount
        reason = None
        if not isinstance(amount, int) or isinstance(amount, bool):
            reason, amount = "invalid amount", None
        elif amount < rnd.required_bid:
            reason = ("below starting price" if rnd.current_high is None
                      else "below minimum raise")
        elif amount > state.remaining_budget:
            reason = "exceeds budget"
        if reason is not None:
            rnd.active.discard(bidder)
            return self._record(rnd, bidder, "withdraw", amount, reason)
        rnd.current_high = (bidder, amount)
        state.engagement[rnd.listing.id] = state.engagement.get(rnd.listing.id, 0) + 1
        return self._record(rnd, bidder, "bid", amount, action.note)

    # -- protocol --------------------------------------------------------
    def poll_cycle(self, rnd: ItemRound) -> ItemRound:
        """Ask each active non-leading bidder once, in ascending id order."""
        if rnd.settlement is not None:
            raise SettlementError(f"{rnd.listing.id} is already settled")
        if not rnd.active:
            raise SettlementError(f"{rnd.listing.id} has no active bidders")
        rnd.cycle_count += 1
        for bidder in sorted(rnd.active):
            if rnd.current_high is not None and rnd.active == {rnd.current_high[0]}:
                break
            if bidder not in rnd.active:
                continue
            if rnd.current_high is not None and rnd.current_high[0] == bidder:
                continue
            try:
                action = self.policies[bidder].act(self._view(rnd, bidder))
            except PolicyError as exc:
                action = Withdraw(f"policy error: {exc}")
            self._apply(rnd, bidder, action)
        return rnd

    def settle_item(self, rnd: ItemRound) -> Settlement:
        if not self.settleable(rnd):
            raise SettlementError(f"{rnd.listing.id}: no settlement condition holds")
        if rnd.current_high is None:
            settlement = Settlement(rnd.listing.id, None, None, True)
        else:
            winner, hammer = rnd.current_high
            state = self.states[winner]
            state.remaining_budget -= hammer
            state.won.append((rnd.listing.id, hammer))
            state.true_profit += rnd.listing.true_value - hammer
            settlement = Settlement(rnd.listing.id, winner, hammer, False)
        rnd.settlement = settlement
        self.settlements.append(settlement)
        self.log.append(settlement)
        return settlement

    def begin(self) -> None:
        items = tuple(x.public() for x in self.items)
        for i, policy in enumerate(self.policies):
            hook = getattr(policy, "begin", None)
            if hook is not None:
                hook(AuctionInfo(i, len(self.states), items, self.min_increment_rate,
                                 self.states[i].initial_budget))

    def run_item(self) -> Settlement:
        listing = self.items[self.position]
        rnd = self.start_item(listing)
        while not self.settleable(rnd):
            self.poll_cycle(rnd)
        settlement = self.settle_item(rnd)
        remaining = self._remaining_public(self.position + 1)
        for i, policy in enumerate(self.policies):
            result = ItemResult(i, listing.public(), tuple(rnd.history), settlement,
                                self.states[i].remaining_budget, remaining)
            for name in POST_ROUND_HOOKS:
                hook = getattr(policy, name, None)
                if hook is not None:
                    hook(result)
        self.position += 1
        return settlement

    @property
    def finished(self) -> bool:
        return self.position >= len(self.items)


def new_auction(items: Sequence[Listing], bidders: Sequence[BidderSeat | tuple],
                min_increment_rate: float = DEFAULT_MIN_INCREMENT_RATE, seed: int = 0,
                cycle_cap: int = DEFAULT_CYCLE_CAP) -> Auction:
    seats = [b if isinstance(b, BidderSeat) else BidderSeat(*b) for b in bidders]
    return Auction(items, seats, min_increment_rate, seed, cycle_cap)


def run_auction(auction: Auction):
    """Process every queued item; returns (log, bidder states, settlements)."""
    if auction.position == 0:
        auction.begin()
    while not auction.finished:
        auction.run_item()
    return auction.log, auction.states, auction.settlements
