"""Regenerate experiments/*.json, the ToM reply fixtures and the example logs.

The ToM fixtures are authored offline with the rule-based synthetic model and
the two hand-written replies; rerun this after changing any prompt template.
"""

from __future__ import annotations

import argparse
import shutil
from pathlib import Path

from harbor.catalog import load_catalog
from harbor.experiments import (MockBackend, RecordBackend, load_experiment, run_scenario,
                                write_family_configs)
from harbor.replay import write_log
from harbor.synthetic import SyntheticBackend, curated_profile_case, curated_strategy_case
from harbor.transport import FixtureStore, RecordingTransport

ROOT = Path(__file__).resolve().parent.parent


def record_curated(catalog, store: FixtureStore) -> None:
    agent, result = curated_profile_case(catalog)
    agent.transport = RecordingTransport(agent.transport, store)
    agent.update_profiles(result)
    agent, view = curated_strategy_case(catalog)
    agent.transport = RecordingTransport(agent.transport, store)
    agent.act(view)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", type=Path, default=ROOT)
    args = ap.parse_args()
    root = args.root

    for p in write_family_configs(root / "experiments"):
        print("wrote", p.relative_to(root))

    catalog = load_catalog()
    fixtures = root / "fixtures"
    fixtures.mkdir(exist_ok=True)
    store = FixtureStore(fixtures / "tom_settings.json")
    store.chat.clear()
    store.remote.clear()
    cfg = load_experiment(root / "experiments" / "tom_settings.json")
    backend = RecordBackend(SyntheticBackend(catalog), store)
    for sc in cfg.scenarios:
        run_scenario(sc, catalog, backend)
    record_curated(catalog, store)
    store.save()
    print(f"wrote fixtures/tom_settings.json ({len(store.chat)} chat, "
          f"{len(store.remote)} policy replies)")

    logs = fixtures / "logs"
    shutil.rmtree(logs, ignore_errors=True)
    logs.mkdir()
    mock = MockBackend(FixtureStore(fixtures / "tom_settings.json"))
    for sc in cfg.scenarios:
        run = run_scenario(sc, catalog, mock)[0]
        write_log(logs / f"{sc.name}_{run.index}.jsonl", run.header, run.log)
    ladder = load_experiment(root / "experiments" / "competition_ladder.json")
    for sc in ladder.scenarios:
        run = run_scenario(sc, catalog)[0]
        write_log(logs / f"{sc.name}_{run.index}.jsonl", run.header, run.log)
    print(f"wrote {len(list(logs.iterdir()))} example logs under fixtures/logs")


if __name__ == "__main__":
    main()
