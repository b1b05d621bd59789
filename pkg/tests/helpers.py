"""Scenario builders shared by the unit tests and the acceptance suite."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from harbor.agents import AgentSpec, BidderAgent, PolicyKind
from harbor.catalog import Listing
from harbor.engine import BidEvent, new_auction, perceived_value, run_auction
from harbor.experiments import ItemsSpec, ScenarioConfig

import oracles

GRID_ITEMS = (
    Listing("G1", "Grid One", "First grid house.", 100_000, 150_050),
    Listing("G2", "Grid Two", "Second grid house.", 200_000, 260_050),
)
GRID_LIMITS = ("0", "0.6", "0.9", "1", "1.1", "1.3")
GRID_BUDGETS = (150_000, 400_000, 1_000_000)


def threshold_grid():
    """324 two-bidder, two-item cases: (limit0, limit1, budget0, budget1)."""
    return list(itertools.product(GRID_LIMITS, GRID_LIMITS, GRID_BUDGETS, GRID_BUDGETS))


def engine_threshold_outcome(limits, budgets, overhead=0.1):
    names = ("Bidder 1", "Bidder 2")
    seats = []
    for i, (lim, bud) in enumerate(zip(limits, budgets)):
        spec = AgentSpec(name=names[i], initial_budget=bud,
                         policy=PolicyKind(kind="threshold", limit=float(lim)))
        est = {x.id: perceived_value(x, overhead) for x in GRID_ITEMS}
        seats.append((bud, BidderAgent(spec, i, names, (), est)))
    _, _, settlements = run_auction(new_auction(GRID_ITEMS, seats, 0.10))
    return [(s.listing_id, s.winner, s.hammer_price) for s in settlements]


def oracle_threshold_outcome(limits, budgets, overhead=0.1):
    est = [{x.id: oracles.half_up(x.true_value * round(100 * (1 + overhead)), 100)
            for x in GRID_ITEMS} for _ in budgets]
    return oracles.brute_force_auction([(x.id, x.starting_price) for x in GRID_ITEMS],
                                       budgets, est, [Fraction(l) for l in limits])


def closed_form_outcome(limits, budgets, overhead=0.1):
    budgets = list(budgets)
    out = []
    for x in GRID_ITEMS:
        est = oracles.half_up(x.true_value * round(100 * (1 + overhead)), 100)
        caps = [oracles.threshold_cap(b, est, Fraction(l)) for b, l in zip(budgets, limits)]
        w, h = oracles.closed_form_two(x.starting_price, oracles.increment(x.starting_price, 10),
                                       *caps)
        if w is not None:
            budgets[w] -= h
        out.append((x.id, w, h))
    return out


SCRIPTED_POLICIES = (
    dict(kind="greedy"),
    dict(kind="persona_loyal"),
    dict(kind="threshold", limit=0.9),
    dict(kind="greedy", strategy="expert", persona_source="inferred", tom_level=1),
    dict(kind="persona_loyal", persona_source="inferred", tom_level=1),
)


def random_scripted_scenario(rng: random.Random, k: int = 10) -> ScenarioConfig:
    n = rng.randint(3, 7)
    n_items = rng.randint(10, 15)
    personas = rng.sample(range(k), n)
    agents, matched = [], {}
    for i in range(n):
        pol = PolicyKind(**rng.choice(SCRIPTED_POLICIES))
        with_persona = pol.kind == "persona_loyal" or rng.random() < 0.7
        mix = ((personas[i], 1.0),) if with_persona else ()
        agents.append(AgentSpec(name=f"Bidder {i + 1}", persona_mix=mix,
                                initial_budget=rng.choice([400_000, 700_000, 1_000_000]),
                                overhead=rng.choice([-0.1, 0.0, 0.1, 0.2]), policy=pol))
    bearing = [a for a in agents if a.persona_mix]
    left = n_items
    for a in bearing:
        c = min(rng.randint(0, 2), left)
        matched[a.name] = c
        left -= c
    return ScenarioConfig(f"random_{rng.random():.6f}", tuple(agents), ItemsSpec(matched, left),
                          seed=rng.randint(0, 10**6),
                          min_increment_rate=rng.choice([0.05, 0.1]))


class Recorder:
    """Collects repr() of everything the engine hands to an agent."""

    def __init__(self):
        self.texts: list[str] = []


def recording_agent_class(recorder: Recorder):
    class RecordingAgent(BidderAgent):
        def begin(self, info):
            recorder.texts.append(repr(info))
            super().begin(info)

        def act(self, view):
            recorder.texts.append(repr(view))
            return super().act(view)

        def update_status(self, result):
            recorder.texts.append(repr(result))
            super().update_status(result)

    return RecordingAgent


def legality_violations(run) -> list[str]:
    """Accepted bids below the required amount or above the bidder's budget."""
    problems = []
    budgets = [b["initial_budget"] for b in run.header["bidders"]]
    items = {x["listing_id"]: x for x in run.header["items"]}
    high = {}
    for rec in run.log:
        if isinstance(rec, BidEvent):
            if not rec.accepted_bid:
                continue
            it = items[rec.listing_id]
            prev = high.get(rec.listing_id)
            need = it["starting_price"] if prev is None else prev + it["min_increment"]
            if rec.amount < need:
                problems.append(f"seq {rec.seq}: {rec.amount} < {need}")
            if rec.amount > budgets[rec.bidder_id]:
                problems.append(f"seq {rec.seq}: over budget")
            high[rec.listing_id] = rec.amount
        elif rec.winner is not None:
            budgets[rec.winner] -= rec.hammer_price
    return problems
