"""JSON Lines auction logs and event-sourced replay verification.

The first line of a log is a header record ``{"header": {...}}`` carrying the
bidder budgets and item queue. Every following line is either a bid event
(has ``seq``) or a settlement (has ``passed``).
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .catalog import Catalog, Listing
from .engine import (Auction, Bid, BidderSeat, BidEvent, Settlement, Withdraw)


class LogError(ValueError):
    """Corrupt or truncated log."""


Record = BidEvent | Settlement


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=False, separators=(",", ":"))


def serialize_log(header: dict, records: Iterable[Record]) -> str:
    lines = [dumps_record({"header": header})]
    lines.extend(dumps_record(r.to_record()) for r in records)
    return "\n".join(lines) + "\n"


def write_log(path: str | Path, header: dict, records: Iterable[Record]) -> None:
    Path(path).write_text(serialize_log(header, records))


def parse_log(text: str) -> tuple[dict, list[Record]]:
    header = None
    records: list[Record] = []
    last_seq = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            if not isinstance(rec, dict):
                raise ValueError("record is not an object")
            if "header" in rec:
                if header is not None or records:
                    raise ValueError("unexpected header")
                header = rec["header"]
                continue
            if "seq" in rec:
                ev = BidEvent.from_record(rec)
                if ev.action not in ("bid", "withdraw"):
                    raise ValueError(f"unknown action {ev.action!r}")
                records.append(ev)
                last_seq = ev.seq
            elif "passed" in rec:
                records.append(Settlement.from_record(rec))
            else:
                raise ValueError("unknown record type")
        except (ValueError, KeyError, TypeError) as exc:
            raise LogError(f"corrupt record at seq {last_seq + 1} (line {lineno}): {exc}") from exc
    if header is None:
        raise LogError("log has no header record")
    return header, records


def read_log(path: str | Path) -> tuple[dict, list[Record]]:
    return parse_log(Path(path).read_text())


class _Exhausted(Exception):
    pass


class PlaybackPolicy:
    """Re-submits the actions a bidder took in a recorded log."""

    def __init__(self, events: Iterable[BidEvent]):
        self.queues: dict[str, deque[BidEvent]] = defaultdict(deque)
        for ev in events:
            self.queues[ev.listing_id].append(ev)

    def act(self, view):
        queue = self.queues.get(view.listing.id)
        if not queue:
            raise _Exhausted(view.bidder_id)
        ev = queue.popleft()
        if ev.action == "bid":
            return Bid(ev.amount, note=ev.annotation)
        if ev.amount is not None:
            # forced withdrawal: resubmit the rejected bid so the engine re-rejects it
            return Bid(ev.amount)
        return Withdraw(note=ev.annotation)


@dataclass
class ReplayReport:
    ok: bool
    message: str
    states: list = field(default_factory=list)
    settlements: list = field(default_factory=list)


def _describe(rec: Optional[Record]) -> str:
    return "end of log" if rec is None else json.dumps(rec.to_record())


def _seq_at(records: list[Record], index: int) -> int:
    """seq of a bid event, or the next seq number for a settlement/end position."""
    if index < len(records) and isinstance(records[index], BidEvent):
        return records[index].seq
    for rec in reversed(records[:index]):
        if isinstance(rec, BidEvent):
            return rec.seq + 1
    return 1


def replay_records(header: dict, records: list[Record],
                   catalog: Optional[Catalog] = None) -> ReplayReport:
    """Re-drive the engine with the recorded actions and diff the regenerated log."""
    items = []
    for it in header["items"]:
        true_value = it["starting_price"]
        if catalog is not None:
            true_value = catalog.listing(it["listing_id"]).true_value
        items.append(Listing(id=it["listing_id"], name=it.get("name", it["listing_id"]),
                             description="", starting_price=it["starting_price"],
                             true_value=true_value))
    by_bidder: dict[int, list[BidEvent]] = defaultdict(list)
    for rec in records:
        if isinstance(rec, BidEvent):
            by_bidder[rec.bidder_id].append(rec)
    seats = [BidderSeat(b["initial_budget"], PlaybackPolicy(by_bidder.get(b["bidder_id"], [])))
             for b in header["bidders"]]
    auction = Auction(items, seats, header["min_increment_rate"], header.get("seed", 0),
                      header["cycle_cap"])

    exhausted = False
    try:
        while not auction.finished:
            auction.run_item()
    except _Exhausted:
        exhausted = True

    generated = auction.log
    for i, gen in enumerate(generated):
        if i >= len(records):
            return ReplayReport(False, f"unexpected end at seq {_seq_at(generated, i)}")
        if gen != records[i]:
            return ReplayReport(
                False,
                f"divergence at seq {_seq_at(records, i)}: log has {_describe(records[i])}, "
                f"replay derives {_describe(gen)}")
    n = len(generated)
    if exhausted and len(records) <= n:
        return ReplayReport(False, f"unexpected end at seq {auction._seq + 1}")
    if len(records) > n:
        why = "another bidder was due to act" if exhausted else "extra record"
        return ReplayReport(False, f"divergence at seq {_seq_at(records, n)}: {why}: "
                                   f"{_describe(records[n])}")
    return ReplayReport(True, "OK", auction.states, auction.settlements)


def replay_file(path: str | Path, catalog: Optional[Catalog] = None) -> ReplayReport:
    header, records = read_log(path)
    return replay_records(header, records, catalog)
