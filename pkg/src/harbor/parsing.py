"""Extract structured answers from free-form model replies.

Every parser returns None when the reply does not contain a usable answer;
callers decide whether to retry or fall back.
"""

from __future__ import annotations

import json
import re
from decimal import Decimal, InvalidOperation
from typing import Any, Optional, Sequence

from .status import StatusBoard

RULES = "ABCDEF"
_decoder = json.JSONDecoder()

_CHOICE = re.compile(r"I\s+chose\s+to\s*[\*\[\(\"'`]*\s*([A-Za-z])(?![A-Za-z])")
_OUT = re.compile(r"I['’]m\s+out\s*!?", re.IGNORECASE)
_BID = re.compile(r"I\s+bid\s+\$?\s*([0-9][0-9,]*(?:\.[0-9]+)?)", re.IGNORECASE)
_RECOMMEND = re.compile(r"I\s+recommend\s+to\s+(bid|withdraw)", re.IGNORECASE)


def json_objects(text: str) -> list[Any]:
    """All top-level JSON objects embedded in ``text``, in order."""
    found = []
    i = text.find("{")
    while i != -1:
        try:
            obj, end = _decoder.raw_decode(text, i)
        except json.JSONDecodeError:
            i = text.find("{", i + 1)
            continue
        if isinstance(obj, dict):
            found.append(obj)
        i = text.find("{", end)
    return found


def last_json_object(text: str) -> Optional[dict]:
    objs = json_objects(text)
    return objs[-1] if objs else None


def _number(v: Any) -> Optional[float]:
    if isinstance(v, bool):
        return None
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(v.strip())
        except ValueError:
            return None
    return None


def _norm(name: str) -> str:
    return " ".join(name.lower().split())


def parse_priorities(text: str, item_names: Sequence[str]) -> Optional[dict[str, int]]:
    """Map of item name -> level, covering every name in ``item_names``."""
    for obj in reversed(json_objects(text)):
        lookup = {_norm(k): v for k, v in obj.items()}
        out: dict[str, int] = {}
        for name in item_names:
            v = _number(lookup.get(_norm(name)))
            if v is None or v != int(v) or int(v) not in (1, 2, 3):
                break
            out[name] = int(v)
        else:
            return out
    return None


def parse_profile(text: str, target: str, persona_names: Sequence[str]
                  ) -> Optional[list[float]]:
    """Weights in persona order; the object must name every persona."""
    for obj in reversed(json_objects(text)):
        inner = obj.get(target)
        if not isinstance(inner, dict):
            inner = obj
        lookup = {_norm(k): v for k, v in inner.items()}
        weights = []
        for name in persona_names:
            v = _number(lookup.get(_norm(name)))
            if v is None:
                break
            weights.append(v)
        else:
            return weights
    return None


def parse_strategy_choice(text: str) -> Optional[str]:
    hits = _CHOICE.findall(text)
    if not hits:
        return None
    letter = hits[-1].upper()
    return letter if letter in RULES else None


def parse_action(text: str) -> Optional[tuple[str, Optional[int]]]:
    """("out", None) or ("bid", amount); the last phrase in the reply wins."""
    last = None
    for m in _OUT.finditer(text):
        last = (m.start(), ("out", None))
    for m in _BID.finditer(text):
        try:
            amount = int(Decimal(m.group(1).replace(",", "")).to_integral_value())
        except InvalidOperation:
            continue
        if last is None or m.start() > last[0]:
            last = (m.start(), ("bid", amount))
    return None if last is None else last[1]


def parse_recommendation(text: str) -> Optional[str]:
    hits = _RECOMMEND.findall(text)
    return hits[-1].lower() if hits else None


def parse_status(text: str) -> Optional[StatusBoard]:
    for obj in reversed(json_objects(text)):
        if {"remaining_budget", "total_profits", "winning_bids"} <= obj.keys():
            try:
                return StatusBoard.from_dict(obj)
            except (ValueError, TypeError):
                continue
    return None
