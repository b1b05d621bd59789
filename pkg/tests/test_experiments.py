import json

import pytest

from harbor.agents import AgentSpec, PolicyKind
from harbor.experiments import (FAMILIES, ConfigError, ExperimentConfig, ItemsSpec,
                                ScenarioConfig, aggregate, bidder_count_sweep,
                                competition_ladder, engagement_rows, expand_rotation,
                                load_experiment, matched_items_sweep, persona_impact,
                                run_scenario, run_schedule, tom_settings, trueskill_trajectory)


def _cfg(**kw):
    agents = (AgentSpec("A", ((7, 1.0),), policy=PolicyKind("persona_loyal")),
              AgentSpec("B", ((4, 1.0),), policy=PolicyKind("persona_loyal")),
              AgentSpec("C", ((0, 1.0),), policy=PolicyKind("greedy")))
    base = dict(name="s", agents=agents, items=ItemsSpec({"A": 2, "B": 2, "C": 2}, 4),
                repetitions=2, seed=10)
    base.update(kw)
    return ScenarioConfig(**base)


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig("e", (_cfg(), _cfg(name="t", rotation="round_robin")))
    p = tmp_path / "e.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert load_experiment(p) == cfg


@pytest.mark.parametrize("bad", [
    {"name": "x", "agents": []},
    {"name": "x", "agents": [{"name": "A"}, {"name": "A"}]},
    {"name": "x", "agents": [{"name": "A"}, {"name": "B"}], "rotation": "shuffle"},
    {"name": "x", "agents": [{"name": "A"}, {"name": "B"}], "items": {"matched": {"Z": 1}}},
    {"name": "x", "agents": [{"name": "A"}, {"name": "B"}], "items": {"matched": {"A": 1}}},
    {"name": "x", "agents": [{"name": "A", "policy": {"kind": "llm"}}, {"name": "B"}]},
    {"name": "x", "agents": [{"name": "A"}, {"name": "B"}], "extra": 1},
    {"name": "x", "agents": [{"name": "A"}, {"name": "B"}], "repetitions": 0},
    [],
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_load_invalid_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_experiment(p)


def test_persona_counts_share_and_split():
    agents = (AgentSpec("A", ((7, 1.0),)), AgentSpec("B", ((7, 1.0),)),
              AgentSpec("M", ((1, 0.5), (2, 0.5))), AgentSpec("N"))
    cfg = ScenarioConfig("s", agents, ItemsSpec({"A": 2, "B": 3, "M": 3}, 1))
    assert cfg.persona_counts() == {7: 3, 1: 2, 2: 1}
    assert cfg.n_items == 7


def test_rotation_is_cyclic_over_persona_agents():
    cfg = _cfg(rotation="round_robin")
    variants = expand_rotation(cfg)
    assert [tuple(a.persona_ids for a in v.agents) for v in variants] == [
        ((7,), (4,), (0,)), ((4,), (0,), (7,)), ((0,), (7,), (4,))]
    assert [a.policy.kind for a in variants[1].agents] == ["persona_loyal", "persona_loyal",
                                                            "greedy"]


def test_schedule_seeds():
    sched = run_schedule(_cfg(rotation="round_robin"))
    assert [(v.variant, i, s) for v, i, s in sched] == [
        (0, 0, 10), (0, 1, 11), (1, 2, 12), (1, 3, 13), (2, 4, 14), (2, 5, 15)]


def test_family_shapes():
    pi = persona_impact()
    assert [s.name for s in pi] == ["master_without_persona", "master_with_persona"]
    ladder = competition_ladder()
    assert len(ladder) == 4 and all(len(s.agents) == 3 for s in ladder)
    sweep = matched_items_sweep()
    assert [s.items.matched for s in sweep][0] == {"Rival 1": 0, "Rival 2": 0}
    assert all(s.n_items == 10 for s in sweep)
    counts = bidder_count_sweep()
    assert [len(s.agents) for s in counts] == [3, 4, 5, 6, 7]
    assert all(s.n_items == 15 for s in counts)
    tom = tom_settings()
    assert [s.name for s in tom] == ["baseline_without_tom", "tom_true_persona",
                                     "tom_true_persona_expact", "tom_inferred_persona_expact",
                                     "tom_inferred_persona_rlact", "second_order_tom"]
    assert tom[4].agents[0].policy.kind == "remote"
    assert tom[5].agents[0].policy.tom_level == 2


def test_checked_in_configs_match_builders(root):
    for name, build in FAMILIES.items():
        shipped = load_experiment(root / "experiments" / f"{name}.json")
        assert shipped.scenarios == tuple(build()), name


def test_scripted_runs_are_deterministic_and_parallel_safe(catalog):
    cfg = _cfg(rotation="round_robin")
    a = run_scenario(cfg, catalog)
    b = run_scenario(cfg, catalog, parallel=4)
    assert [r.log for r in a] == [r.log for r in b]
    assert [r.index for r in b] == list(range(6))


def test_aggregate_and_trajectory(catalog):
    runs = run_scenario(_cfg(), catalog)
    rep = aggregate("s", runs)
    assert rep.runs == 2 and set(rep.bidders) == {"A", "B", "C"}
    traj = trueskill_trajectory(runs)
    assert len(traj) == 2 and traj[-1]["A"] == rep.bidders["A"].trueskill
    ratio = sum(m.profit_ratio for r in runs for m in r.metrics if m.name == "A") / 2
    assert rep.bidders["A"].profit_ratio == pytest.approx(ratio)
    assert len(engagement_rows(runs[0])) == 3 * 10


def test_llm_config_without_transport_fails(catalog):
    from harbor.experiments import ExperimentFailed

    with pytest.raises(ExperimentFailed):
        run_scenario(tom_settings()[0], catalog)
