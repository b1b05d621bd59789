"""harbor command line: run, replay, report, validate.

Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import shutil
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional

from .catalog import CatalogError, InfeasibleSelection, load_catalog
from .experiments import (ConfigError, ExperimentConfig, ExperimentFailed, LiveBackend,
                          MockBackend, RecordBackend, RunResult, ScriptedOnlyBackend, run_schedule,
                          run_scenario, run_single, select_items)
from .replay import LogError, replay_file, serialize_log
from .report import ReportError, write_reports
from .transport import FixtureStore, TransportFailure

log = logging.getLogger("harbor")

OK, RUNTIME, USAGE = 0, 1, 2
TRANSPORTS = ("live", "mock", "record")
BACKENDS = ("http", "synthetic")
FIXTURES_NAME = "fixtures.json"


class UsageError(Exception):
    pass


# -- config handling ------------------------------------------------------------

def _parse_config(text: str, where: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where}: not valid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(data)


def _read_config(path: str) -> tuple[str, ExperimentConfig]:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config not found: {path}")
    text = p.read_text()
    return text, _parse_config(text, path)


def _resolve_catalog(cfg: ExperimentConfig, base: Path) -> Optional[str]:
    paths = {s.catalog for s in cfg.scenarios}
    if len(paths) > 1:
        raise ConfigError("all scenarios of one experiment must use the same catalog")
    (path,) = paths
    if path is None:
        return None
    p = Path(path)
    return str(p if p.is_absolute() else (base / p).resolve())


def _with_seed(cfg: ExperimentConfig, seed: Optional[int]) -> ExperimentConfig:
    if seed is None:
        return cfg
    return replace(cfg, scenarios=tuple(replace(s, seed=seed) for s in cfg.scenarios))


def _needs_llm(cfg: ExperimentConfig) -> bool:
    return any(a.policy.llm_backed for s in cfg.scenarios for a in s.agents)


def _default_fixtures(config_path: Path) -> Path:
    return config_path.resolve().parent.parent / "fixtures" / f"{config_path.stem}.json"


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# -- run --------------------------------------------------------------------------

def _backend(transport: str, backend: str, store: Optional[FixtureStore], catalog_path):
    if transport == "mock":
        return MockBackend(store)
    if backend == "synthetic":
        from .synthetic import SyntheticBackend

        inner = SyntheticBackend(load_catalog(catalog_path))
    else:
        inner = LiveBackend()
    return RecordBackend(inner, store) if transport == "record" else inner


def _write_run(out: Path, res: RunResult, persona_names) -> dict:
    rel_log = Path("logs") / res.scenario / f"{res.index}.jsonl"
    (out / rel_log).parent.mkdir(parents=True, exist_ok=True)
    (out / rel_log).write_text(serialize_log(res.header, res.log))
    entry = {"scenario": res.scenario, "variant": res.variant, "index": res.index,
             "seed": res.seed, "log": rel_log.as_posix(),
             "agents": [{"name": s.name, "personas": list(s.persona_ids)} for s in res.specs],
             "llm_calls": res.llm_calls,
             "incidents": {res.names[i]: v for i, v in sorted(res.incidents.items()) if v}}
    if res.profiles:
        rel = Path("profiles") / res.scenario / f"{res.index}.json"
        (out / rel).parent.mkdir(parents=True, exist_ok=True)
        snap = {res.names[o]: {res.names[r]: w for r, w in sorted(ps.items())}
                for o, ps in sorted(res.profiles.items())}
        (out / rel).write_text(json.dumps(snap, indent=1) + "\n")
        entry["profiles"] = rel.as_posix()
    return entry


def _execute(cfg: ExperimentConfig, catalog_path, backend, parallel: int):
    catalog = load_catalog(catalog_path)
    results: list[RunResult] = []
    for sc in cfg.scenarios:
        try:
            results.extend(run_scenario(sc, catalog, backend, parallel))
        except ExperimentFailed as exc:
            raise ExperimentFailed(str(exc), results + exc.partial) from exc
    return catalog, results


def cmd_run(args) -> int:
    config_path = Path(args.config)
    text, cfg = _read_config(args.config)
    cfg = _with_seed(cfg, args.seed)
    catalog_path = _resolve_catalog(cfg, config_path.resolve().parent)
    if args.parallel < 1:
        raise UsageError("--parallel must be >= 1")

    out = Path(args.out)
    if out.exists() and any(out.iterdir()):
        if not args.force:
            raise UsageError(f"{out} already holds a run; use --force to replace it")
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)

    store = None
    fixtures_src = None
    if args.transport == "mock":
        fixtures_src = Path(args.fixtures) if args.fixtures else _default_fixtures(config_path)
        if _needs_llm(cfg):
            if not fixtures_src.is_file():
                raise UsageError(f"fixture file not found: {fixtures_src}")
            shutil.copyfile(fixtures_src, out / FIXTURES_NAME)
            store = FixtureStore(out / FIXTURES_NAME)
    elif args.transport == "record":
        store = FixtureStore(out / FIXTURES_NAME)
    backend = (_backend(args.transport, args.backend, store, catalog_path)
               if _needs_llm(cfg) else ScriptedOnlyBackend())

    started = _timestamp()
    failure = None
    try:
        catalog, results = _execute(cfg, catalog_path, backend, args.parallel)
    except ExperimentFailed as exc:
        catalog, results, failure = load_catalog(catalog_path), exc.partial, exc
    finally:
        if args.transport == "record" and store is not None:
            store.save()
            if args.fixtures:
                store.save(args.fixtures)

    persona_names = catalog.persona_names()
    entries = [_write_run(out, r, persona_names) for r in results]
    (out / "config.json").write_text(text)
    incidents: dict[str, int] = {}
    for e in entries:
        for per in e["incidents"].values():
            for k, v in per.items():
                incidents[k] = incidents.get(k, 0) + v
    manifest = {
        "run_id": out.name,
        "config_path": str(config_path),
        "config_sha256": _sha256(text.encode()),
        "config": text,
        "seed": args.seed,
        "transport": args.transport,
        "backend": args.backend if args.transport != "mock" else None,
        "fixtures": FIXTURES_NAME if store is not None else None,
        "catalog": catalog_path,
        "parallel": args.parallel,
        "started": started,
        "finished": _timestamp(),
        "status": "failed" if failure else "complete",
        "artifacts": {"config": "config.json", "logs": "logs", "metrics": "metrics.csv",
                      "engagement": "engagement.csv", "summary": "summary.txt"},
        "llm_call_count": sum(e["llm_calls"] for e in entries),
        "incidents": dict(sorted(incidents.items())),
        "runs": entries,
    }
    if store is not None:
        manifest["fixtures_sha256"] = _sha256((out / FIXTURES_NAME).read_bytes())
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    if failure is not None:
        print(f"error: {failure}", file=sys.stderr)
        return RUNTIME
    summary = write_reports(out, catalog)
    print(summary, end="")
    print(f"{len(entries)} auction runs written to {out}")
    return OK


# -- replay -----------------------------------------------------------------------

def _replay_log(path: Path, catalog=None) -> bool:
    rep = replay_file(path, catalog)
    print(f"{path}: {rep.message}")
    return rep.ok


def cmd_replay(args) -> int:
    target = Path(args.path)
    if not target.exists():
        raise UsageError(f"not found: {target}")
    if target.is_file():
        return OK if _replay_log(target) else RUNTIME
    mpath = target / "manifest.json"
    if not mpath.exists():
        raise UsageError(f"{target}: not a run directory (no manifest.json)")
    manifest = json.loads(mpath.read_text())
    cfg = _with_seed(_parse_config(manifest["config"], "manifest config"), manifest.get("seed"))
    catalog = load_catalog(manifest.get("catalog"))
    ok = True
    for e in manifest["runs"]:
        ok &= _replay_log(target / e["log"], catalog)
    if manifest["transport"] == "live" and _needs_llm(cfg):
        print("live run: logs verified, re-execution needs the live models and was skipped")
        return OK if ok else RUNTIME

    store = FixtureStore(target / manifest["fixtures"]) if manifest.get("fixtures") else None
    backend = MockBackend(store) if store is not None else ScriptedOnlyBackend()
    by_name = {s.name: s for s in cfg.scenarios}
    for e in manifest["runs"]:
        sc = by_name[e["scenario"]]
        job = next((j for j in run_schedule(sc) if j[1] == e["index"]), None)
        if job is None:
            print(f"{e['log']}: run not in the config schedule")
            ok = False
            continue
        variant, idx, seed = job
        res = run_single(variant, idx, seed, catalog, backend)
        fresh = serialize_log(res.header, res.log)
        stored = (target / e["log"]).read_text()
        if fresh == stored:
            print(f"{e['log']}: re-executed, identical")
        else:
            ok = False
            a, b = stored.splitlines(), fresh.splitlines()
            line = next((i for i, (x, y) in enumerate(zip(a, b)) if x != y), min(len(a), len(b)))
            print(f"{e['log']}: re-execution differs at line {line + 1}")
    print("OK" if ok else "FAILED")
    return OK if ok else RUNTIME


# -- report / validate ---------------------------------------------------------------

def cmd_report(args) -> int:
    target = Path(args.run_dir)
    if not target.is_dir():
        raise UsageError(f"run directory not found: {target}")
    print(write_reports(target), end="")
    return OK


def cmd_validate(args) -> int:
    _, cfg = _read_config(args.config)
    catalog_path = _resolve_catalog(cfg, Path(args.config).resolve().parent)
    catalog = load_catalog(catalog_path)
    n_runs = 0
    for sc in cfg.scenarios:
        for variant, idx, seed in run_schedule(sc):
            for spec in variant.agents:
                for p in spec.persona_ids:
                    if p >= catalog.k:
                        raise ConfigError(f"{sc.name}: {spec.name} persona {p} not in catalog")
            select_items(variant, catalog, seed)
            n_runs += 1
    print(f"{args.config}: ok ({len(cfg.scenarios)} scenarios, {n_runs} runs, "
          f"{'needs' if _needs_llm(cfg) else 'no'} chat transport)")
    return OK


# -- entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="harbor", description="Sequential housing auction runner.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config")
    run.add_argument("config")
    run.add_argument("--out", required=True, help="run directory (write-once)")
    run.add_argument("--seed", type=int, help="override every scenario's base seed")
    run.add_argument("--parallel", type=int, default=1)
    run.add_argument("--transport", choices=TRANSPORTS, default="mock")
    run.add_argument("--fixtures", help="fixture file to replay (mock) or also save to (record)")
    run.add_argument("--backend", choices=BACKENDS, default="http",
                     help="what record mode talks to: the HTTP API or the offline synthetic model")
    run.add_argument("--force", action="store_true", help="replace an existing run directory")
    run.set_defaults(func=cmd_run)

    rp = sub.add_parser("replay", help="verify a log file or re-execute a run directory")
    rp.add_argument("path")
    rp.set_defaults(func=cmd_replay)

    rep = sub.add_parser("report", help="rebuild CSVs and the summary table")
    rep.add_argument("run_dir")
    rep.set_defaults(func=cmd_report)

    val = sub.add_parser("validate", help="lint an experiment config")
    val.add_argument("config")
    val.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, CatalogError, InfeasibleSelection) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (TransportFailure, LogError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME


if __name__ == "__main__":
    sys.exit(main())
