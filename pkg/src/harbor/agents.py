"""Bidder agents: specs, scripted oracle policies and the LLM-backed policy.

An agent only ever sees what the engine hands it (BidView / ItemResult), its
own value estimates, and the bidder names. Ground-truth persona vectors of
rivals are injected only for the "true persona" setting.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Mapping, Optional, Sequence

from . import prompts
from .catalog import Persona, PublicListing
from .engine import AuctionInfo, Bid, BidView, ItemResult, Withdraw
from .parsing import parse_action, parse_priorities, parse_profile, parse_status
from .planning import PriorityList, ScriptedPlanner, init_priorities, update_priorities
from .profiling import (GroundTruthPersona, HeuristicProfiler, ProfileVector, init_profile,
                        update_profile)
from .status import StatusBoard
from .strategy import (BidContext, StrategyCounters, expert_act,
                       llm_strategy, remote_act, render_profile_text, second_order_context)
from .transport import with_retries

log = logging.getLogger(__name__)

POLICY_KINDS = ("greedy", "persona_loyal", "threshold", "llm", "remote")
PERSONA_SOURCES = ("none", "true", "inferred")
STRATEGIES = ("none", "expert")
PLANNING_MODES = ("auto", "margin", "auction_order")
DEFAULT_BUDGET = 1_000_000
DEFAULT_OVERHEAD = 0.10
PARSE_RETRIES = 2

# fraction of the estimate a scripted bidder will pay, by priority level
PRIORITY_CAPS = {3: Fraction(1), 2: Fraction(85, 100), 1: Fraction(7, 10)}
# persona-loyal bidders pay less for off-persona items and hold budget back for
# the persona-matched items still to come
OFF_PERSONA_CAPS = {3: Fraction(1, 2), 2: Fraction(2, 5), 1: Fraction(3, 10)}
LOYAL_RESERVE = Fraction(8, 10)


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class PolicyKind:
    kind: str = "greedy"
    limit: float = 1.0
    model: str = ""
    tom_level: int = 0
    persona_source: str = "none"
    strategy: str = "none"
    endpoint: str = ""
    planning: str = "auto"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise SpecError(f"unknown policy kind {self.kind!r}")
        if self.persona_source not in PERSONA_SOURCES:
            raise SpecError(f"unknown persona_source {self.persona_source!r}")
        if self.strategy not in STRATEGIES:
            raise SpecError(f"unknown strategy {self.strategy!r}")
        if self.planning not in PLANNING_MODES:
            raise SpecError(f"unknown planning mode {self.planning!r}")
        if self.tom_level not in (0, 1, 2):
            raise SpecError("tom_level must be 0, 1 or 2")
        if self.limit < 0:
            raise SpecError("threshold limit must be >= 0")
        if self.llm_backed and not self.model:
            raise SpecError(f"{self.kind} policy needs a model")
        if self.kind == "remote" and not self.endpoint:
            raise SpecError("remote policy needs an endpoint")
        if self.tom_level == 2 and not self.llm_backed:
            raise SpecError("second-order theory of mind needs an LLM-backed policy")

    @property
    def llm_backed(self) -> bool:
        return self.kind in ("llm", "remote")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for f in ("limit", "model", "tom_level", "persona_source", "strategy", "endpoint",
                  "planning"):
            v = getattr(self, f)
            if v != getattr(PolicyKind, f):
                out[f] = v
        return out

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PolicyKind":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise SpecError(f"unknown policy fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class AgentSpec:
    name: str
    persona_mix: tuple[tuple[int, float], ...] = ()
    overhead: float = DEFAULT_OVERHEAD
    initial_budget: int = DEFAULT_BUDGET
    policy: PolicyKind = field(default_factory=PolicyKind)

    def __post_init__(self):
        if not self.name:
            raise SpecError("agent name must be non-empty")
        if len(self.persona_mix) > 2:
            raise SpecError(f"{self.name}: at most two personas per agent")
        ids = [p for p, _ in self.persona_mix]
        if len(set(ids)) != len(ids):
            raise SpecError(f"{self.name}: duplicate persona ids")
        if any(w <= 0 for _, w in self.persona_mix):
            raise SpecError(f"{self.name}: persona weights must be > 0")
        if self.persona_mix and abs(sum(w for _, w in self.persona_mix) - 1) > 1e-9:
            raise SpecError(f"{self.name}: persona weights must sum to 1")
        if self.overhead <= -1:
            raise SpecError(f"{self.name}: overhead must be > -1")
        if (not isinstance(self.initial_budget, int) or isinstance(self.initial_budget, bool)
                or self.initial_budget <= 0):
            raise SpecError(f"{self.name}: budget must be a positive integer")

    @property
    def persona_ids(self) -> tuple[int, ...]:
        return tuple(sorted(p for p, _ in self.persona_mix))

    def with_personas(self, mix) -> "AgentSpec":
        return replace(self, persona_mix=tuple(mix))

    def planning_mode(self) -> str:
        mode = self.policy.planning
        if mode == "auto":
            return "margin" if self.persona_mix else "auction_order"
        return mode

    def to_dict(self) -> dict:
        return {"name": self.name, "persona_mix": [[p, w] for p, w in self.persona_mix],
                "overhead": self.overhead, "initial_budget": self.initial_budget,
                "policy": self.policy.to_dict()}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AgentSpec":
        unknown = set(d) - {"name", "persona_mix", "overhead", "initial_budget", "policy"}
        if unknown:
            raise SpecError(f"unknown agent fields: {sorted(unknown)}")
        raw = d.get("persona_mix", [])
        if not isinstance(raw, list):
            raise SpecError("persona_mix must be a list")
        mix = []
        for entry in raw:
            if isinstance(entry, int) and not isinstance(entry, bool):
                mix.append((entry, 1.0 / len(raw)))
            elif isinstance(entry, (list, tuple)) and len(entry) == 2:
                mix.append((int(entry[0]), float(entry[1])))
            else:
                raise SpecError(f"bad persona_mix entry {entry!r}")
        policy = d.get("policy", {})
        if isinstance(policy, str):
            policy = {"kind": policy}
        return cls(name=str(d["name"]), persona_mix=tuple(mix),
                   overhead=float(d.get("overhead", DEFAULT_OVERHEAD)),
                   initial_budget=d.get("initial_budget", DEFAULT_BUDGET),
                   policy=PolicyKind.from_dict(policy))


def build_system_message(spec: AgentSpec, personas: Sequence[Persona]) -> str:
    snippets = [personas[p].prompt_snippet for p in spec.persona_ids]
    return prompts.system_message(spec.name, snippets)


def threshold_decision(required: int, budget: int, estimate: int, limit: float):
    """Bid the minimum legal amount while it stays within limit x estimate."""
    if required <= budget and required <= Fraction(str(limit)) * estimate:
        return Bid(required)
    return Withdraw()


class BidderAgent:
    """One bidder bound to one auction run. Implements the engine policy hooks."""

    def __init__(self, spec: AgentSpec, bidder_id: int, names: Sequence[str],
                 personas: Sequence[Persona], estimates: Mapping[str, int], *,
                 transport=None, endpoint=None,
                 rival_truth: Optional[Mapping[int, GroundTruthPersona]] = None):
        pk = spec.policy
        if pk.llm_backed and transport is None:
            raise SpecError(f"{spec.name}: LLM-backed policy needs a chat transport")
        if pk.kind == "remote" and endpoint is None:
            raise SpecError(f"{spec.name}: remote policy needs an endpoint client")
        if pk.persona_source == "true" and rival_truth is None:
            raise SpecError(f"{spec.name}: true-persona setting needs rival ground truth")
        self.spec = spec
        self.id = bidder_id
        self.names = tuple(names)
        self.persona_names = tuple(p.name for p in personas)
        self.k = len(personas)
        self.estimates = dict(estimates)
        self.transport = transport
        self.endpoint = endpoint
        self._truth = dict(rival_truth or {})
        self.system_msg = build_system_message(spec, personas)
        self.planner = ScriptedPlanner(spec.persona_ids, self.estimates, spec.planning_mode())
        self.profiler = HeuristicProfiler()
        self.board = StatusBoard.fresh(spec.initial_budget, self.names)
        self.ledger = StatusBoard.fresh(spec.initial_budget, self.names)
        self.priorities = PriorityList({})
        self.profiles: dict[int, ProfileVector] = {}
        self.remaining: tuple[PublicListing, ...] = ()
        self.incidents: Counter = Counter()
        self.rules: Counter = Counter()
        self.counters = StrategyCounters()
        self.chat_calls = 0

    # -- bookkeeping ----------------------------------------------------
    @property
    def llm_calls(self) -> int:
        return self.chat_calls + self.counters.calls

    def incident_counts(self) -> dict[str, int]:
        out = Counter(self.incidents)
        out["strategy_retries"] += self.counters.retries
        out["strategy_fallbacks"] += self.counters.fallbacks
        out["transport_degraded"] += self.counters.degraded
        return {k: v for k, v in sorted(out.items()) if v}

    def _rivals(self) -> list[int]:
        return [i for i in range(len(self.names)) if i != self.id]

    def _estimates_for(self, items) -> dict[str, int]:
        return {x.id: self.estimates[x.id] for x in items}

    def _ask(self, prompt: str, parse, hint: str, what: str):
        """Stateless [system, user] call with corrective retries; None on failure."""
        messages = [{"role": "system", "content": self.system_msg},
                    {"role": "user", "content": prompt}]
        for attempt in range(PARSE_RETRIES + 1):
            self.chat_calls += 1
            reply = with_retries(lambda: self.transport.send(messages, temperature=0.0),
                                 what=what)
            out = parse(reply)
            if out is not None:
                return out
            if attempt < PARSE_RETRIES:
                self.incidents[f"{what}_retries"] += 1
                messages = messages + [
                    {"role": "assistant", "content": reply},
                    {"role": "user", "content": prompts.RETRY_MESSAGE.format(hint=hint)}]
        self.incidents[f"{what}_parse_failures"] += 1
        log.info("%s: %s reply unparseable after retries", self.spec.name, what)
        return None

    # -- engine hooks -----------------------------------------------------
    def begin(self, info: AuctionInfo) -> None:
        self.remaining = info.items
        src = self.spec.policy.persona_source
        if src == "true":
            self.profiles = {r: self._truth_vector(r) for r in self._rivals()}
        elif src == "inferred":
            self.profiles = {r: init_profile(self.k, r) for r in self._rivals()}
        self.priorities = self._plan(info.items, initial=True)

    def act(self, view: BidView):
        ctx = self.context(view)
        pk = self.spec.policy
        if pk.kind == "remote":
            sa = remote_act(ctx, self.endpoint, self.system_msg, counters=self.counters)
            return sa.decision
        if pk.kind == "llm":
            advice = prompts.NO_ADVICE
            if pk.strategy == "expert":
                report = ""
                if pk.tom_level == 2:
                    report = second_order_context(
                        self.id, self.board, view.listing, view.history, self.names,
                        self.transport, self.system_msg, counters=self.counters)
                sa = llm_strategy(ctx, self.transport, self.system_msg, second_order=report,
                                  counters=self.counters)
                self.rules[sa.rule] += 1
                if isinstance(sa.decision, Withdraw):
                    return Withdraw()
                advice = sa.rationale
            return self.decide_bid(view, ctx.auctioneer_msg(), advice)
        if pk.strategy == "expert":
            sa = expert_act(ctx)
            self.rules[sa.rule] += 1
            return sa.decision
        return self._scripted_decision(view, ctx)

    def update_status(self, result: ItemResult) -> None:
        self._update_ledger(result)
        if not self.spec.policy.llm_backed:
            self.board = self.ledger.copy()
            return
        history = prompts.render_history(result.history, self.names)
        est = self.estimates[result.listing.id]
        prompt = prompts.status_prompt(
            result.listing, history,
            prompts.hammer_message(result.listing, result.settlement, self.names),
            prompts.win_lose_message(result.listing, result.settlement, self.id, est),
            self.spec.name, self.board.to_json())
        board = self._ask(prompt, parse_status, "a status JSON object", "status")
        if board is None:
            return
        if (board.remaining_budget != self.ledger.remaining_budget
                or _wins(board) != _wins(self.ledger)):
            self.incidents["status_hallucinations"] += 1
        self.board = board

    def update_profiles(self, result: ItemResult) -> None:
        src = self.spec.policy.persona_source
        if src == "none":
            return
        if src == "true":
            self.profiles = {r: self._truth_vector(r) for r in self._rivals()}
            return
        for r in self._rivals():
            policy = _LLMProfiler(self, r) if self.spec.policy.llm_backed else self.profiler
            self.profiles[r] = update_profile(self.profiles[r], result.listing,
                                              result.history, policy)

    def update_priorities(self, result: ItemResult) -> None:
        self.remaining = result.remaining_items
        self.priorities = self._plan(result.remaining_items, initial=False)

    # -- decisions --------------------------------------------------------
    def context(self, view: BidView) -> BidContext:
        return BidContext(
            bidder_id=self.id, listing=view.listing,
            perceived_value=self.estimates[view.listing.id],
            current_high=view.current_high, min_raise=view.min_increment,
            my_budget=view.my_budget, statuses=self.board,
            priorities=self.priorities, profiles=dict(self.profiles),
            history=view.history, remaining_items=view.remaining_items,
            names=self.names, persona_names=self.persona_names, cycle=view.cycle)

    def _scripted_decision(self, view: BidView, ctx: BidContext):
        est = self.estimates[view.listing.id]
        pk = self.spec.policy
        if pk.kind == "threshold":
            return threshold_decision(view.required, view.my_budget, est, pk.limit)
        prio = ctx.priority
        nb = view.required
        mine = set(self.spec.persona_ids)
        if pk.kind == "persona_loyal" and mine:
            if view.listing.matched_personas & mine:
                cap, reserve = Fraction(1), 0
            else:
                cap = OFF_PERSONA_CAPS[prio]
                reserve = sum(LOYAL_RESERVE * self.estimates[x.id] for x in view.remaining_items
                              if x.matched_personas & mine)
        else:
            cap = PRIORITY_CAPS[prio]
            reserve = 0 if prio == 3 else sum(x.starting_price for x in ctx.other_top_items())
        if nb <= cap * est and nb <= view.my_budget - reserve:
            return Bid(nb)
        return Withdraw()

    def decide_bid(self, view: BidView, auctioneer_msg: str, advice: str):
        prompt = prompts.action_prompt(auctioneer_msg, self.spec.name, advice)
        parsed = self._ask(prompt, parse_action, '"I\'m out!" or "I bid $xxx!"', "action")
        if parsed is None:
            self.incidents["forced_withdrawals"] += 1
            return Withdraw("unparseable action reply")
        kind, amount = parsed
        if kind == "out":
            return Withdraw()
        return self._legal_bid(view, amount)

    def _legal_bid(self, view: BidView, amount: int):
        if view.required > view.my_budget:
            self.incidents["forced_withdrawals"] += 1
            return Withdraw("cannot afford the minimum legal bid")
        clamped = min(max(amount, view.required), view.my_budget)
        if clamped != amount:
            self.incidents["clamped_bids"] += 1
            return Bid(clamped, note=f"clamped from {amount}")
        return Bid(amount)

    # -- planning / profiling helpers ----------------------------------------
    def _plan(self, items: Sequence[PublicListing], initial: bool) -> PriorityList:
        budget = self.ledger.remaining_budget
        if not items:
            return PriorityList({})
        if not self.spec.policy.llm_backed:
            if initial:
                return init_priorities(budget, items, self.planner)
            return update_priorities(self.priorities, budget, items, self.board,
                                     self.profiles, self.planner)
        est = self._estimates_for(items)
        update = None
        if not initial:
            id_to_name = {x.id: x.name for x in items}
            update = {
                "prev_status": self.board.to_json(),
                "current_profile": (prompts.profiles_json(
                    {r: v.weights for r, v in self.profiles.items()}, self.names,
                    self.persona_names) if self.profiles else "(no profiling available)"),
                "prev_plan": prompts.priorities_json(
                    self.priorities.restricted(id_to_name).scores, id_to_name),
            }
        prompt = prompts.planning_prompt(self.spec.name, budget, items, est, update)
        names = [x.name for x in items]
        parsed = self._ask(prompt, lambda t: parse_priorities(t, names),
                           'a JSON object mapping every item name to 1, 2 or 3', "planning")
        if parsed is None:
            self.incidents["planning_fallbacks"] += 1
            return self.planner.plan(budget, items)
        by_name = {x.name: x.id for x in items}
        return PriorityList({by_name[n]: lvl for n, lvl in parsed.items()})

    def _truth_vector(self, rival: int) -> ProfileVector:
        gt = self._truth.get(rival)
        if gt is None:
            return init_profile(self.k, rival)
        return ProfileVector(rival, tuple(gt.distribution))

    def _update_ledger(self, result: ItemResult) -> None:
        s = result.settlement
        self.ledger.remaining_budget = result.my_budget
        if s.winner is not None:
            who = self.names[s.winner]
            self.ledger.winning_bids[who][result.listing.name] = s.hammer_price
            self.ledger.total_profits[who] += self.estimates[result.listing.id] - s.hammer_price

    def profile_text(self) -> str:
        return render_profile_text(self.profiles, self.names, self.persona_names)


def _wins(board: StatusBoard) -> dict:
    return {k: v for k, v in board.winning_bids.items() if v}


class _LLMProfiler:
    """Profiling policy that asks the agent's chat model about one rival."""

    def __init__(self, agent: BidderAgent, rival: int):
        self.agent = agent
        self.rival = rival

    def propose(self, prev: ProfileVector, item: PublicListing, history):
        a = self.agent
        target = a.names[self.rival]
        prev_weights = None
        if any(prev.weights):
            prev_weights = dict(zip(a.persona_names, prev.weights))
        prompt = prompts.profile_prompt(a.spec.name, target, item,
                                        prompts.render_history(history, a.names),
                                        a.persona_names, prev_weights)
        weights = a._ask(prompt, lambda t: parse_profile(t, target, a.persona_names),
                         f'a JSON object {{"{target}": {{persona: weight, ...}}}} with '
                         f"{a.k} keys", "profiling")
        if weights is None or not any(weights):
            return None
        return weights

