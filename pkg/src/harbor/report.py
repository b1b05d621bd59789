"""Metrics CSVs and the text summary table, derived from a run directory.

Everything is recomputed from the persisted logs, profile snapshots and the
manifest, so ``report`` works on any completed run without re-executing it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .catalog import Catalog, load_catalog
from .engine import Settlement
from .metrics import (BidderMetrics, MetricsReport, acquisition_rate, engagement_table, mean,
                      profit_ratio, realized_profits)
from .profiling import ground_truth_vector, profiling_kl
from .replay import read_log
from .trueskill import TrueSkill, ranks_from_scores

METRICS_COLUMNS = ("run_id", "bidder", "profit_ratio", "acquisition_rate", "trueskill_mu",
                   "trueskill_sigma", "kl_single", "kl_mix")
ENGAGEMENT_COLUMNS = ("run_id", "bidder", "listing", "raises")
NA = "n/a"


class ReportError(RuntimeError):
    pass


@dataclass
class StoredRun:
    scenario: str
    index: int
    names: list[str]
    personas: list[list[int]]
    items: list
    log: list
    settlements: list[Settlement]
    profiles: dict[str, dict[str, list[float]]]

    @property
    def run_id(self) -> str:
        return f"{self.scenario}/{self.index}"


def load_runs(run_dir: Path, manifest: dict, catalog: Catalog) -> list[StoredRun]:
    out = []
    for entry in manifest["runs"]:
        log_path = run_dir / entry["log"]
        if not log_path.exists():
            raise ReportError(f"missing log {entry['log']}")
        header, records = read_log(log_path)
        items = [catalog.listing(it["listing_id"]) for it in header["items"]]
        profiles = {}
        if entry.get("profiles"):
            p = run_dir / entry["profiles"]
            if not p.exists():
                raise ReportError(f"missing profile snapshot {entry['profiles']}")
            profiles = json.loads(p.read_text())
        out.append(StoredRun(
            scenario=entry["scenario"], index=entry["index"],
            names=[a["name"] for a in entry["agents"]],
            personas=[list(a["personas"]) for a in entry["agents"]],
            items=items, log=records,
            settlements=[r for r in records if isinstance(r, Settlement)],
            profiles=profiles))
    return out


def run_metrics(run: StoredRun, k: int) -> list[BidderMetrics]:
    truths = {n: ground_truth_vector(p, k) for n, p in zip(run.names, run.personas) if p}
    out = []
    for i, name in enumerate(run.names):
        single, mix = [], []
        for rival, weights in run.profiles.get(name, {}).items():
            if rival in truths:
                kl = profiling_kl(truths[rival], weights)
                (single if len(run.personas[run.names.index(rival)]) == 1 else mix).append(kl)
        profits = realized_profits(run.settlements, run.items, len(run.names))
        out.append(BidderMetrics(
            name=name,
            profit_ratio=profit_ratio(run.settlements, run.items, i),
            acquisition_rate=acquisition_rate(run.settlements, run.items, run.personas[i], i),
            true_profit=profits[i], kl_single=mean(single), kl_mix=mean(mix)))
    return out


def scenario_reports(runs: Sequence[StoredRun], k: int
                     ) -> tuple[list[MetricsReport], list[tuple[str, BidderMetrics]]]:
    """Per-scenario aggregates plus per-run rows carrying the running TrueSkill."""
    env = TrueSkill()
    by_scenario: dict[str, list[StoredRun]] = {}
    for r in runs:
        by_scenario.setdefault(r.scenario, []).append(r)
    reports, rows = [], []
    for scenario, group in by_scenario.items():
        group = sorted(group, key=lambda r: r.index)
        ratings: dict = {}
        per_run = []
        for run in group:
            ms = run_metrics(run, k)
            profits = realized_profits(run.settlements, run.items, len(run.names))
            current = [ratings.get(n, env.create_rating()) for n in run.names]
            ratings.update(zip(run.names, env.rate(current, ranks_from_scores(profits))))
            for m in ms:
                m.trueskill = ratings[m.name]
                rows.append((run.run_id, m))
            per_run.append(ms)
        roles = [m.name for m in per_run[0]]
        agg = {}
        for role in roles:
            ms = [m for run_ms in per_run for m in run_ms if m.name == role]
            agg[role] = BidderMetrics(
                name=role, profit_ratio=mean(m.profit_ratio for m in ms),
                acquisition_rate=mean(m.acquisition_rate for m in ms),
                true_profit=round(sum(m.true_profit for m in ms) / len(ms)),
                kl_single=mean(m.kl_single for m in ms), kl_mix=mean(m.kl_mix for m in ms),
                trueskill=ratings[role])
        reports.append(MetricsReport(scenario, len(group), agg))
    return reports, rows


def _num(v: Optional[float]) -> str:
    return NA if v is None else repr(float(v))


def write_metrics_csv(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        for run_id, m in rows:
            w.writerow([run_id, m.name, _num(m.profit_ratio), _num(m.acquisition_rate),
                        _num(m.trueskill.mu), _num(m.trueskill.sigma), _num(m.kl_single),
                        _num(m.kl_mix)])


def write_engagement_csv(path: Path, runs: Sequence[StoredRun]) -> int:
    n = 0
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ENGAGEMENT_COLUMNS)
        for run in runs:
            for b, lid, raises in engagement_table(run.log, len(run.names),
                                                   [x.id for x in run.items]):
                w.writerow([run.run_id, run.names[b], lid, raises])
                n += 1
    return n


def _pct(v: Optional[float]) -> str:
    return NA if v is None else f"{100 * v:.2f}"


def summary_table(reports: Sequence[MetricsReport]) -> str:
    """Rows are settings; each role gets R (%), TrueSkill mu and A (%) columns."""
    roles: list[str] = []
    for rep in reports:
        for role in rep.bidders:
            if role not in roles:
                roles.append(role)
    first = max([len("Setting")] + [len(r.scenario) for r in reports])
    cell = 8
    group = 3 * cell + 2
    head1 = "Setting".ljust(first) + "".join(" | " + r.center(group) for r in roles)
    head2 = " " * first + "".join(
        " | " + " ".join(h.rjust(cell) for h in ("R(%)", "S", "A(%)")) for _ in roles)
    lines = [head1, head2, "-" * len(head1)]
    for rep in reports:
        cells = []
        for role in roles:
            m = rep.bidders.get(role)
            if m is None:
                vals = (NA, NA, NA)
            else:
                vals = (_pct(m.profit_ratio), f"{m.trueskill.mu:.2f}", _pct(m.acquisition_rate))
            cells.append(" | " + " ".join(v.rjust(cell) for v in vals))
        lines.append(rep.scenario.ljust(first) + "".join(cells))
    kl_rows = [(rep.scenario, role, m) for rep in reports for role, m in rep.bidders.items()
               if m.kl_single is not None or m.kl_mix is not None]
    if kl_rows:
        lines += ["", "Profiling KL (lower is better)",
                  f"{'Setting'.ljust(first)} | {'Bidder'.ljust(10)} | {'single':>8} | {'mix':>8}"]
        for scenario, role, m in kl_rows:
            single = NA if m.kl_single is None else f"{m.kl_single:.4f}"
            mix = NA if m.kl_mix is None else f"{m.kl_mix:.4f}"
            lines.append(f"{scenario.ljust(first)} | {role.ljust(10)} | {single:>8} | {mix:>8}")
    return "\n".join(lines) + "\n"


def write_reports(run_dir: str | Path, catalog: Optional[Catalog] = None) -> str:
    run_dir = Path(run_dir)
    mpath = run_dir / "manifest.json"
    if not mpath.exists():
        raise ReportError(f"{run_dir}: no manifest.json")
    manifest = json.loads(mpath.read_text())
    catalog = catalog or load_catalog(manifest.get("catalog"))
    runs = load_runs(run_dir, manifest, catalog)
    if not runs:
        raise ReportError(f"{run_dir}: manifest lists no runs")
    reports, rows = scenario_reports(runs, catalog.k)
    write_metrics_csv(run_dir / "metrics.csv", rows)
    write_engagement_csv(run_dir / "engagement.csv", runs)
    text = summary_table(reports)
    (run_dir / "summary.txt").write_text(text)
    return text
