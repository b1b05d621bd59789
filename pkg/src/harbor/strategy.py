"""Per-poll bidding conduct.

``expert_act`` is the deterministic reading of the six strategy rules:

    A  bid: top-priority item
    B  bid: drain a rival that values this item
    C  bid: budget allows without hurting future rounds
    D  quit: conserve budget for higher-priority items
    E  quit: margin no longer attractive (<= $300)
    F  quit: avoid a costly bidding war / cannot afford
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import prompts
from .catalog import PublicListing
from .engine import Action, Bid, BidEvent, Withdraw
from .parsing import parse_recommendation, parse_strategy_choice
from .planning import PriorityList
from .profiling import ProfileVector
from .status import StatusBoard
from .transport import FixtureMissing, TransportFailure, TransportError, with_retries

log = logging.getLogger(__name__)

BID_RULES = frozenset("ABC")
QUIT_RULES = frozenset("DEF")
MARGIN_FLOOR = 300
WAR_RAISES = 8
DRAIN_WEIGHT = 0.5
DRAIN_VALUE_CAP = Fraction(9, 10)
RESERVE_MULTIPLE = 2


@dataclass(frozen=True)
class StrategyAction:
    """``rule`` is None only for remote-policy decisions, which carry no rule."""

    rule: Optional[str]
    decision: Action
    rationale: str = ""

    def __post_init__(self):
        if self.rule is None:
            return
        if self.rule in BID_RULES and not isinstance(self.decision, Bid):
            raise ValueError(f"rule {self.rule} implies a bid")
        if self.rule in QUIT_RULES and not isinstance(self.decision, Withdraw):
            raise ValueError(f"rule {self.rule} implies a withdrawal")
        if self.rule not in BID_RULES | QUIT_RULES:
            raise ValueError(f"unknown rule {self.rule!r}")


@dataclass(frozen=True)
class BidContext:
    bidder_id: int
    listing: PublicListing
    perceived_value: int
    current_high: Optional[tuple[int, int]]
    min_raise: int
    my_budget: int
    statuses: StatusBoard
    priorities: PriorityList
    profiles: Mapping[int, ProfileVector]
    history: tuple[BidEvent, ...] = ()
    remaining_items: tuple[PublicListing, ...] = ()
    names: tuple[str, ...] = ()
    persona_names: tuple[str, ...] = ()
    cycle: int = 1

    @property
    def next_bid(self) -> int:
        if self.current_high is None:
            return self.listing.starting_price
        return self.current_high[1] + self.min_raise

    @property
    def raises(self) -> int:
        return sum(1 for ev in self.history if ev.accepted_bid)

    @property
    def priority(self) -> int:
        return self.priorities.get(self.listing.id, 1)

    def other_top_items(self) -> list[PublicListing]:
        return [x for x in self.remaining_items
                if x.id != self.listing.id and self.priorities.get(x.id, 1) == 3]

    def auctioneer_msg(self) -> str:
        return prompts.auctioneer_message(self.listing, self.history, self.names,
                                          self.current_high, self.min_raise, self.cycle,
                                          self.perceived_value)


def _rival_values_item(ctx: BidContext) -> Optional[tuple[int, int, float]]:
    best = None
    for rival, vec in sorted(ctx.profiles.items()):
        if rival == ctx.bidder_id:
            continue
        for p in sorted(ctx.listing.matched_personas):
            if p < vec.k and vec.weights[p] >= DRAIN_WEIGHT:
                if best is None or vec.weights[p] > best[2]:
                    best = (rival, p, vec.weights[p])
    return best


def expert_act(ctx: BidContext) -> StrategyAction:
    nb = ctx.next_bid
    budget = ctx.my_budget
    margin = ctx.perceived_value - nb
    prio = ctx.priority
    affordable = nb <= budget
    top = ctx.other_top_items()

    if margin <= MARGIN_FLOOR:
        return StrategyAction("E", Withdraw(), f"margin ${margin} at ${nb} is <= ${MARGIN_FLOOR}")
    if prio == 1 and any(x.starting_price > budget - nb for x in top):
        return StrategyAction("D", Withdraw(), "bidding would starve a priority-3 item")
    if not affordable:
        return StrategyAction("F", Withdraw(), f"next bid ${nb} exceeds budget ${budget}")
    if ctx.raises >= WAR_RAISES and prio < 3:
        return StrategyAction("F", Withdraw(), f"{ctx.raises} raises already: bidding war")
    if prio == 3:
        return StrategyAction("A", Bid(nb), "top-priority item and affordable")
    if prio >= 2:
        target = _rival_values_item(ctx)
        reserve = RESERVE_MULTIPLE * min((x.starting_price for x in top), default=0)
        if (target is not None and nb <= DRAIN_VALUE_CAP * ctx.perceived_value
                and budget - nb >= reserve):
            rival, persona, w = target
            who = ctx.names[rival] if rival < len(ctx.names) else f"bidder {rival}"
            label = (ctx.persona_names[persona] if persona < len(ctx.persona_names)
                     else f"persona {persona}")
            return StrategyAction("B", Bid(nb), f"{who} highly values {label} ({w:g}); "
                                                f"draining their budget")
        if prio == 2:
            return StrategyAction("C", Bid(nb), "budget allows without hurting top items")
    return StrategyAction("D", Withdraw(), "low priority; conserve budget")


def render_profile_text(profiles: Mapping[int, ProfileVector], names: Sequence[str],
                        persona_names: Sequence[str]) -> str:
    lines = []
    for rival, vec in sorted(profiles.items()):
        who = names[rival] if rival < len(names) else f"Bidder {rival}"
        if not any(vec.weights):
            lines.append(f"{who}: no clear preference observed.")
            continue
        n = min(2, vec.k)
        order = list(range(vec.k))
        top = sorted(order, key=lambda i: (-vec.weights[i], i))[:n]
        bottom = sorted(order, key=lambda i: (vec.weights[i], i))[:n]
        lines.append(
            f"{who} tends to bid on properties that are "
            f"{', '.join(persona_names[i] for i in top)}, and tends to avoid "
            f"{', '.join(persona_names[i] for i in bottom)}.")
    return "\n".join(lines)


@dataclass
class StrategyCounters:
    calls: int = 0
    retries: int = 0
    fallbacks: int = 0
    degraded: int = 0
    notes: list[str] = field(default_factory=list)


def _chat(transport, messages, what):
    return with_retries(lambda: transport.send(messages, temperature=0.0), what=what)


def llm_strategy(ctx: BidContext, transport, system_msg: str, *, second_order: str = "",
                 retries: int = 2, counters: Optional[StrategyCounters] = None
                 ) -> StrategyAction:
    counters = counters if counters is not None else StrategyCounters()
    profile_json = prompts.profiles_json({r: v.weights for r, v in ctx.profiles.items()},
                                         ctx.names, ctx.persona_names)
    id_to_name = {x.id: x.name for x in (ctx.listing, *ctx.remaining_items)}
    plan = prompts.priorities_json(
        {k: v for k, v in ctx.priorities.scores.items() if k in id_to_name}, id_to_name)
    prompt = prompts.strategy_prompt(ctx.auctioneer_msg(), ctx.statuses.to_json(), plan,
                                     profile_json, second_order)
    messages = [{"role": "system", "content": system_msg}, {"role": "user", "content": prompt}]
    for attempt in range(retries + 1):
        counters.calls += 1
        reply = _chat(transport, messages, "strategy")
        letter = parse_strategy_choice(reply)
        if letter is not None:
            return _decision_for(letter, ctx, reply)
        if attempt < retries:
            counters.retries += 1
            messages = messages + [
                {"role": "assistant", "content": reply},
                {"role": "user", "content": prompts.RETRY_MESSAGE.format(
                    hint='"I chose to [A-F] because [reason]."')}]
    counters.fallbacks += 1
    counters.notes.append("strategy reply unparseable; used expert rules")
    log.info("strategy reply unparseable after %d retries; falling back", retries)
    return expert_act(ctx)


def _decision_for(letter: str, ctx: BidContext, reply: str) -> StrategyAction:
    if letter in QUIT_RULES:
        return StrategyAction(letter, Withdraw(), reply)
    nb = ctx.next_bid
    if nb > ctx.my_budget:
        return StrategyAction("F", Withdraw(),
                              f"chose {letter} but next bid ${nb} exceeds budget; " + reply)
    return StrategyAction(letter, Bid(nb), reply)


def remote_request(ctx: BidContext, system_msg: str) -> dict:
    id_to_name = {x.id: x.name for x in (ctx.listing, *ctx.remaining_items)}
    return {
        "system": system_msg,
        "auctioneer_msg": ctx.auctioneer_msg(),
        "status_text": ctx.statuses.to_json(),
        "priorities": [{id_to_name[k]: v} for k, v in ctx.priorities.scores.items()
                       if k in id_to_name],
        "profile_text": render_profile_text(ctx.profiles, ctx.names, ctx.persona_names),
    }


def remote_act(ctx: BidContext, endpoint, system_msg: str, *, retries: int = 2,
               counters: Optional[StrategyCounters] = None) -> StrategyAction:
    counters = counters if counters is not None else StrategyCounters()
    nb = ctx.next_bid
    if ctx.my_budget < nb:
        return StrategyAction(None, Withdraw(), "budget below current bid + minimum increase")
    request = remote_request(ctx, system_msg)
    for attempt in range(retries + 1):
        counters.calls += 1
        try:
            reply = with_retries(lambda: endpoint.recommend(request), retries=0, what="policy")
        except FixtureMissing:
            raise
        except TransportFailure as exc:
            if attempt < retries:
                counters.retries += 1
                continue
            counters.degraded += 1
            counters.notes.append(f"remote policy unavailable: {exc}")
            return StrategyAction(None, Withdraw("remote policy unavailable"), str(exc))
        choice = parse_recommendation(reply)
        if choice == "bid":
            return StrategyAction(None, Bid(nb), reply)
        if choice == "withdraw":
            return StrategyAction(None, Withdraw(), reply)
        if attempt < retries:
            counters.retries += 1
    counters.fallbacks += 1
    counters.notes.append("remote reply had no recommendation")
    return StrategyAction(None, Withdraw("no recommendation in policy reply"), "")


def second_order_context(me: int, statuses: StatusBoard, item: PublicListing,
                         history: Sequence[BidEvent], names: Sequence[str], transport,
                         system_msg: str, enabled: bool = True,
                         counters: Optional[StrategyCounters] = None) -> str:
    if not enabled or transport is None:
        return ""
    prompt = prompts.second_order_prompt(item, prompts.render_history(history, names),
                                         statuses.to_json(), names[me])
    messages = [{"role": "system", "content": system_msg}, {"role": "user", "content": prompt}]
    if counters is not None:
        counters.calls += 1
    try:
        return _chat(transport, messages, "second-order").strip()
    except FixtureMissing:
        raise
    except (TransportFailure, TransportError) as exc:
        if counters is not None:
            counters.degraded += 1
            counters.notes.append(f"second-order context unavailable: {exc}")
        return ""
