"""Scenario configuration, the experiment families, and the run/aggregate loop."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

from .agents import AgentSpec, BidderAgent, PolicyKind, SpecError
from .catalog import Catalog, Listing, load_catalog, select_scenario_items
from .engine import BidderSeat, new_auction, perceived_value, run_auction
from .metrics import (BidderMetrics, MetricsReport, acquisition_rate, engagement_table,
                      mean, profit_ratio, realized_profits)
from .profiling import ground_truth_vector, profiling_kl
from .trueskill import Rating, TrueSkill, ranks_from_scores
from .transport import (BASE_URL_ENV, DEFAULT_BASE_URL, FixtureStore, HTTPPolicyEndpoint,
                        MockEndpoint, MockTransport, OpenAIChatTransport, RecordingEndpoint,
                        RecordingTransport)

log = logging.getLogger(__name__)

ROTATIONS = ("none", "round_robin")
DEFAULT_PERSONAS = (7, 4, 0)  # Urban Dwellers, Relocation for Work, First-Time Homebuyers
MODEL_PERSONA = "gpt-4o-mini"
MODEL_SWEEP = "gpt-4o"
MODEL_TOM = "claude-3-5-sonnet"
RLACT_ENDPOINT = "rlact"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ItemsSpec:
    """Matched listings per agent (by name) plus filler matching nobody."""

    matched: Mapping[str, int] = field(default_factory=dict)
    filler: int = 0

    def to_dict(self) -> dict:
        return {"matched": dict(self.matched), "filler": self.filler}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    agents: tuple[AgentSpec, ...]
    items: ItemsSpec
    catalog: Optional[str] = None
    min_increment_rate: float = 0.10
    cycle_cap: int = 50
    repetitions: int = 1
    rotation: str = "none"
    seed: int = 0
    variant: int = 0

    def __post_init__(self):
        if not self.name:
            raise ConfigError("scenario needs a name")
        if self.repetitions < 1:
            raise ConfigError(f"{self.name}: repetitions must be >= 1")
        if self.rotation not in ROTATIONS:
            raise ConfigError(f"{self.name}: rotation must be one of {ROTATIONS}")
        if len(self.agents) < 2:
            raise ConfigError(f"{self.name}: at least two agents")
        names = [a.name for a in self.agents]
        if len(set(names)) != len(names):
            raise ConfigError(f"{self.name}: agent names must be unique")
        bearing = [a for a in self.agents if a.persona_mix]
        if self.rotation == "round_robin" and len(bearing) < 2:
            raise ConfigError(f"{self.name}: round_robin rotation needs >= 2 persona agents")
        by_name = {a.name: a for a in self.agents}
        for who, n in self.items.matched.items():
            if who not in by_name:
                raise ConfigError(f"{self.name}: matched items for unknown agent {who!r}")
            if n < 0:
                raise ConfigError(f"{self.name}: negative matched count for {who}")
            if n and not by_name[who].persona_mix:
                raise ConfigError(f"{self.name}: {who} has no persona to match")
        if self.items.filler < 0:
            raise ConfigError(f"{self.name}: negative filler")

    @property
    def n_items(self) -> int:
        return sum(self.persona_counts().values()) + self.items.filler

    def persona_counts(self) -> dict[int, int]:
        """Listings to draw per persona. Agents sharing a persona share items;
        a mix-of-two agent's count is split between its personas."""
        need: dict[int, int] = {}
        by_name = {a.name: a for a in self.agents}
        for who, n in self.items.matched.items():
            ids = by_name[who].persona_ids
            shares = [n - n // 2, n // 2] if len(ids) == 2 else [n]
            for p, c in zip(ids, shares):
                need[p] = max(need.get(p, 0), c)
        # personas carried by agents without a matched count still get no items
        for a in self.agents:
            for p in a.persona_ids:
                need.setdefault(p, 0)
        return need

    def to_dict(self) -> dict:
        d = {"name": self.name, "agents": [a.to_dict() for a in self.agents],
             "items": self.items.to_dict(), "min_increment_rate": self.min_increment_rate,
             "cycle_cap": self.cycle_cap, "repetitions": self.repetitions,
             "rotation": self.rotation, "seed": self.seed}
        if self.catalog is not None:
            d["catalog"] = self.catalog
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ScenarioConfig":
        allowed = {"name", "agents", "items", "catalog", "min_increment_rate", "cycle_cap",
                   "repetitions", "rotation", "seed"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        try:
            items = d.get("items", {})
            return cls(
                name=str(d["name"]),
                agents=tuple(AgentSpec.from_dict(a) for a in d["agents"]),
                items=ItemsSpec(dict(items.get("matched", {})), int(items.get("filler", 0))),
                catalog=d.get("catalog"),
                min_increment_rate=float(d.get("min_increment_rate", 0.10)),
                cycle_cap=int(d.get("cycle_cap", 50)),
                repetitions=int(d.get("repetitions", 1)),
                rotation=str(d.get("rotation", "none")),
                seed=int(d.get("seed", 0)),
            )
        except SpecError as exc:
            raise ConfigError(f"{d.get('name', '?')}: {exc}") from exc
        except (KeyError, TypeError, AttributeError) as exc:
            raise ConfigError(f"{d.get('name', '?')}: malformed scenario ({exc})") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    scenarios: tuple[ScenarioConfig, ...]

    def to_dict(self) -> dict:
        return {"name": self.name, "scenarios": [s.to_dict() for s in self.scenarios]}

    @classmethod
    def from_dict(cls, d: Any) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be a JSON object")
        if "scenarios" not in d:
            sc = ScenarioConfig.from_dict(d)
            return cls(sc.name, (sc,))
        scenarios = tuple(ScenarioConfig.from_dict(s) for s in d["scenarios"])
        if not scenarios:
            raise ConfigError("experiment has no scenarios")
        names = [s.name for s in scenarios]
        if len(set(names)) != len(names):
            raise ConfigError("scenario names must be unique")
        return cls(str(d.get("name", "experiment")), scenarios)


def load_experiment(path: str | Path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(data)


def expand_rotation(config: ScenarioConfig) -> list[ScenarioConfig]:
    """One variant per cyclic shift of persona mixes over persona-bearing agents."""
    if config.rotation == "none":
        return [config]
    slots = [i for i, a in enumerate(config.agents) if a.persona_mix]
    mixes = [config.agents[i].persona_mix for i in slots]
    variants = []
    for shift in range(len(slots)):
        agents = list(config.agents)
        for j, i in enumerate(slots):
            agents[i] = agents[i].with_personas(mixes[(j + shift) % len(slots)])
        variants.append(replace(config, agents=tuple(agents), variant=shift))
    return variants


# -- experiment families ----------------------------------------------------------

def _scripted(name: str, personas=(), kind: str = "persona_loyal", **policy) -> AgentSpec:
    mix = tuple((p, 1.0 / len(personas)) for p in personas)
    return AgentSpec(name=name, persona_mix=mix, policy=PolicyKind(kind=kind, **policy))


def persona_impact(reps: int = 5, seed: int = 100) -> list[ScenarioConfig]:
    a, b, c = DEFAULT_PERSONAS
    out = []
    for label, master in (("master_without_persona", _scripted("Master", kind="greedy")),
                          ("master_with_persona", _scripted("Master", (c,)))):
        agents = (master, _scripted("Rival 1", (a,)), _scripted("Rival 2", (b,)))
        matched = {x.name: 2 for x in agents if x.persona_mix}
        out.append(ScenarioConfig(label, agents, ItemsSpec(matched, 10 - 2 * len(matched)),
                                  repetitions=reps, rotation="round_robin", seed=seed))
    return out


def competition_ladder(reps: int = 5, seed: int = 200) -> list[ScenarioConfig]:
    a, b, c = DEFAULT_PERSONAS
    settings = [
        ("a_master_without_persona", (), (a,), (b,)),
        ("b_master_with_persona", (c,), (a,), (b,)),
        ("c_some_competition", (b,), (a,), (b,)),
        ("d_more_competition", (a,), (a,), (a,)),
    ]
    out = []
    for label, pm, p1, p2 in settings:
        master = _scripted("Master", pm, kind="persona_loyal" if pm else "greedy")
        agents = (master, _scripted("Rival 1", p1), _scripted("Rival 2", p2))
        matched = {x.name: 2 for x in agents if x.persona_mix}
        draft = ScenarioConfig(label, agents, ItemsSpec(matched, 0))
        filler = 10 - sum(draft.persona_counts().values())
        rotation = "round_robin" if len({x.persona_mix for x in agents if x.persona_mix}) > 1 \
            else "none"
        out.append(replace(draft, items=ItemsSpec(matched, filler), repetitions=reps,
                           rotation=rotation, seed=seed))
    return out


def matched_items_sweep(m_values: Sequence[int] = range(5), reps: int = 5,
                        seed: int = 300) -> list[ScenarioConfig]:
    a, b, _ = DEFAULT_PERSONAS
    out = []
    for m in m_values:
        agents = (_scripted("Master", kind="greedy", persona_source="inferred"),
                  _scripted("Rival 1", (a,)), _scripted("Rival 2", (b,)))
        out.append(ScenarioConfig(f"M{m}", agents,
                                  ItemsSpec({"Rival 1": m, "Rival 2": m}, 10 - 2 * m),
                                  repetitions=reps, seed=seed))
    return out


SWEEP_PERSONAS = (7, 4, 0, 5, 9, 2)


def bidder_count_sweep(counts: Sequence[int] = range(2, 7), reps: int = 5,
                       seed: int = 400, n_items: int = 15) -> list[ScenarioConfig]:
    out = []
    for n in counts:
        rivals = tuple(_scripted(f"Rival {i + 1}", (SWEEP_PERSONAS[i],)) for i in range(n))
        agents = (_scripted("Master", kind="greedy", persona_source="inferred"),) + rivals
        matched = {r.name: 2 for r in rivals}
        out.append(ScenarioConfig(f"rivals_{n}", agents,
                                  ItemsSpec(matched, n_items - 2 * n),
                                  repetitions=reps, seed=seed))
    return out


def tom_settings(reps: int = 1, seed: int = 500, model: str = MODEL_TOM,
                 endpoint: str = RLACT_ENDPOINT, n_items: int = 10) -> list[ScenarioConfig]:
    a, b, c = DEFAULT_PERSONAS

    def llm(name, p, **kw):
        return AgentSpec(name=name, persona_mix=((p, 1.0),),
                         policy=PolicyKind(kind=kw.pop("kind", "llm"), model=model, **kw))

    rows = [
        ("baseline_without_tom", {}),
        ("tom_true_persona", {"tom_level": 1, "persona_source": "true"}),
        ("tom_true_persona_expact", {"tom_level": 1, "persona_source": "true",
                                     "strategy": "expert"}),
        ("tom_inferred_persona_expact", {"tom_level": 1, "persona_source": "inferred",
                                         "strategy": "expert"}),
        ("tom_inferred_persona_rlact", {"kind": "remote", "tom_level": 1,
                                        "persona_source": "inferred", "endpoint": endpoint}),
        ("second_order_tom", {"tom_level": 2, "persona_source": "inferred",
                              "strategy": "expert"}),
    ]
    out = []
    for label, master_kw in rows:
        rival_kw = {}
        if label == "second_order_tom":
            rival_kw = {"tom_level": 1, "persona_source": "inferred", "strategy": "expert"}
        agents = (llm("Master", c, **master_kw), llm("Rival 1", a, **rival_kw),
                  llm("Rival 2", b, **rival_kw))
        matched = {x.name: 2 for x in agents}
        out.append(ScenarioConfig(label, agents, ItemsSpec(matched, n_items - 6),
                                  repetitions=reps, rotation="round_robin", seed=seed))
    return out


FAMILIES: dict[str, Callable[[], list[ScenarioConfig]]] = {
    "persona_impact": persona_impact,
    "competition_ladder": competition_ladder,
    "matched_items_sweep": matched_items_sweep,
    "bidder_count_sweep": bidder_count_sweep,
    "tom_settings": tom_settings,
}


# -- backends ------------------------------------------------------------------------

class ScriptedOnlyBackend:
    """For configs without LLM-backed agents; any chat request is a config error."""

    def chat(self, model):
        raise ConfigError(f"model {model!r} requested but no transport configured")

    def policy(self, endpoint):
        raise ConfigError(f"policy endpoint {endpoint!r} requested but no transport configured")


class MockBackend:
    def __init__(self, store: FixtureStore):
        self.store = store

    def chat(self, model):
        return MockTransport(model, self.store)

    def policy(self, endpoint):
        return MockEndpoint(endpoint, self.store)


class LiveBackend:
    """HTTP transports. A bare endpoint name resolves under ``{base}/v1/policy/``."""

    def __init__(self, base_url: Optional[str] = None):
        import os

        self.base_url = (base_url or os.environ.get(BASE_URL_ENV, DEFAULT_BASE_URL)).rstrip("/")

    def chat(self, model):
        return OpenAIChatTransport(model, base_url=self.base_url)

    def policy(self, endpoint):
        url = endpoint if endpoint.startswith(("http://", "https://")) else \
            f"{self.base_url}/v1/policy/{endpoint}"
        return HTTPPolicyEndpoint(url)


class RecordBackend:
    """Wraps another backend and stores every reply for later replay."""

    def __init__(self, inner, store: FixtureStore):
        self.inner = inner
        self.store = store

    def chat(self, model):
        return RecordingTransport(self.inner.chat(model), self.store)

    def policy(self, endpoint):
        return RecordingEndpoint(endpoint, self.inner.policy(endpoint), self.store)


# -- running -----------------------------------------------------------------------------

@dataclass
class RunResult:
    scenario: str
    variant: int
    index: int
    seed: int
    specs: tuple[AgentSpec, ...]
    items: tuple[Listing, ...]
    header: dict
    log: list
    settlements: list
    states: list
    profiles: dict[int, dict[int, list[float]]]
    incidents: dict[int, dict[str, int]]
    llm_calls: int
    metrics: list[BidderMetrics]

    @property
    def run_id(self) -> str:
        return f"{self.scenario}/{self.index}"

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.specs]


def run_schedule(config: ScenarioConfig) -> list[tuple[ScenarioConfig, int, int]]:
    """(variant config, run index, seed) for every run, seeds = seed + index."""
    out = []
    for variant in expand_rotation(config):
        for r in range(config.repetitions):
            idx = variant.variant * config.repetitions + r
            out.append((variant, idx, config.seed + idx))
    return out


def select_items(config: ScenarioConfig, catalog: Catalog, seed: int) -> list[Listing]:
    return select_scenario_items(catalog, config.persona_counts(), config.items.filler, seed)


def run_single(config: ScenarioConfig, index: int, seed: int, catalog: Catalog,
               backend=None) -> RunResult:
    backend = backend or ScriptedOnlyBackend()
    items = select_items(config, catalog, seed)
    names = [a.name for a in config.agents]
    truths = {i: ground_truth_vector(a.persona_ids, catalog.k)
              for i, a in enumerate(config.agents) if a.persona_mix}
    agents = []
    for i, spec in enumerate(config.agents):
        pk = spec.policy
        estimates = {x.id: perceived_value(x, spec.overhead) for x in items}
        rival_truth = ({r: g for r, g in truths.items() if r != i}
                       if pk.persona_source == "true" else None)
        agents.append(BidderAgent(
            spec, i, names, catalog.personas, estimates,
            transport=backend.chat(pk.model) if pk.llm_backed else None,
            endpoint=backend.policy(pk.endpoint) if pk.kind == "remote" else None,
            rival_truth=rival_truth))
    auction = new_auction(items, [BidderSeat(s.initial_budget, ag)
                                  for s, ag in zip(config.agents, agents)],
                          config.min_increment_rate, seed, config.cycle_cap)
    log_records, states, settlements = run_auction(auction)

    metrics = []
    for i, spec in enumerate(config.agents):
        single, mix = [], []
        for r, vec in agents[i].profiles.items():
            if r in truths:
                kl = profiling_kl(truths[r], vec)
                (single if len(config.agents[r].persona_ids) == 1 else mix).append(kl)
        metrics.append(BidderMetrics(
            name=spec.name,
            profit_ratio=profit_ratio(settlements, items, i),
            acquisition_rate=acquisition_rate(settlements, items, spec.persona_ids, i),
            true_profit=states[i].true_profit,
            kl_single=mean(single), kl_mix=mean(mix)))
    return RunResult(
        scenario=config.name, variant=config.variant, index=index, seed=seed,
        specs=tuple(config.agents), items=tuple(items), header=auction.header(),
        log=list(log_records), settlements=list(settlements), states=list(states),
        profiles={i: {r: list(v.weights) for r, v in ag.profiles.items()}
                  for i, ag in enumerate(agents) if ag.profiles},
        incidents={i: ag.incident_counts() for i, ag in enumerate(agents)},
        llm_calls=sum(ag.llm_calls for ag in agents),
        metrics=metrics)


class ExperimentFailed(RuntimeError):
    def __init__(self, message: str, partial: list[RunResult]):
        super().__init__(message)
        self.partial = partial


def run_scenario(config: ScenarioConfig, catalog: Catalog, backend=None, parallel: int = 1,
                 on_run: Optional[Callable[[RunResult], None]] = None) -> list[RunResult]:
    """Execute every rotation variant x repetition; results sorted by run index."""
    schedule = run_schedule(config)
    done: list[RunResult] = []

    def one(job):
        variant, idx, seed = job
        res = run_single(variant, idx, seed, catalog, backend)
        if on_run is not None:
            on_run(res)
        return res

    errors: list[BaseException] = []
    if parallel <= 1:
        for job in schedule:
            try:
                done.append(one(job))
            except Exception as exc:
                errors.append(exc)
                break
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(one, job) for job in schedule]
            for fut in futures:
                try:
                    done.append(fut.result())
                except Exception as exc:
                    errors.append(exc)
    done.sort(key=lambda r: r.index)
    if errors:
        raise ExperimentFailed(f"{config.name}: {errors[0]}", done) from errors[0]
    return done


def trueskill_trajectory(runs: Sequence[RunResult], env: Optional[TrueSkill] = None
                         ) -> list[dict[str, Rating]]:
    """Ratings per role after each run, folded in run-index order."""
    env = env or TrueSkill()
    ratings: dict[str, Rating] = {}
    out = []
    for run in sorted(runs, key=lambda r: r.index):
        names = run.names
        profits = realized_profits(run.settlements, run.items, len(names))
        current = [ratings.get(n, env.create_rating()) for n in names]
        new = env.rate(current, ranks_from_scores(profits))
        ratings = {**ratings, **dict(zip(names, new))}
        out.append(dict(ratings))
    return out


def aggregate(scenario: str, runs: Sequence[RunResult]) -> MetricsReport:
    """Arithmetic means per role; TrueSkill is the final folded rating."""
    if not runs:
        raise ValueError("nothing to aggregate")
    ordered = sorted(runs, key=lambda r: r.index)
    final = trueskill_trajectory(ordered)[-1]
    roles = [m.name for m in ordered[0].metrics]
    out = {}
    for role in roles:
        rows = [m for r in ordered for m in r.metrics if m.name == role]
        out[role] = BidderMetrics(
            name=role,
            profit_ratio=mean(m.profit_ratio for m in rows),
            acquisition_rate=mean(m.acquisition_rate for m in rows),
            true_profit=round(sum(m.true_profit for m in rows) / len(rows)),
            kl_single=mean(m.kl_single for m in rows),
            kl_mix=mean(m.kl_mix for m in rows),
            trueskill=final[role])
    return MetricsReport(scenario, len(ordered), out)


def run_experiment(config: ScenarioConfig, catalog: Optional[Catalog] = None, backend=None,
                   parallel: int = 1) -> MetricsReport:
    catalog = catalog or load_catalog(config.catalog)
    return aggregate(config.name, run_scenario(config, catalog, backend, parallel))


def engagement_rows(run: RunResult) -> list[tuple[int, str, int]]:
    return engagement_table(run.log, len(run.specs), [x.id for x in run.items])


def write_family_configs(directory: str | Path) -> list[Path]:
    """Materialise every experiment family as a JSON config file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, build in FAMILIES.items():
        cfg = ExperimentConfig(name, tuple(build()))
        path = directory / f"{name}.json"
        path.write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
        paths.append(path)
    return paths
