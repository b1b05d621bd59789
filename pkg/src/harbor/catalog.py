"""Personas, listings and scenario item selection."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping


class CatalogError(ValueError):
    """Raised when a catalog file is malformed or violates an invariant."""


class InfeasibleSelection(ValueError):
    """Raised when a scenario asks for more matched listings than exist."""


@dataclass(frozen=True)
class Persona:
    id: int
    name: str
    description: str
    prompt_snippet: str


@dataclass(frozen=True)
class Listing:
    id: str
    name: str
    description: str
    starting_price: int
    true_value: int
    matched_personas: frozenset[int] = frozenset()
    features: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def public(self) -> "PublicListing":
        """Agent-facing view; drops the hidden true value."""
        return PublicListing(
            id=self.id,
            name=self.name,
            description=self.description,
            starting_price=self.starting_price,
            matched_personas=self.matched_personas,
        )


@dataclass(frozen=True)
class PublicListing:
    id: str
    name: str
    description: str
    starting_price: int
    matched_personas: frozenset[int] = frozenset()


@dataclass(frozen=True)
class Catalog:
    personas: tuple[Persona, ...]
    listings: tuple[Listing, ...]

    @property
    def k(self) -> int:
        return len(self.personas)

    def listing(self, listing_id: str) -> Listing:
        for item in self.listings:
            if item.id == listing_id:
                return item
        raise KeyError(listing_id)

    def persona_names(self) -> list[str]:
        return [p.name for p in self.personas]

    def to_dict(self) -> dict:
        return {
            "personas": [
                {"id": p.id, "name": p.name, "description": p.description,
                 "prompt_snippet": p.prompt_snippet}
                for p in self.personas
            ],
            "listings": [_listing_to_dict(x) for x in self.listings],
        }


def _listing_to_dict(x: Listing) -> dict:
    d = {
        "id": x.id,
        "name": x.name,
        "description": x.description,
        "starting_price": x.starting_price,
        "true_value": x.true_value,
        "matched_personas": sorted(x.matched_personas),
    }
    if x.features:
        d["features"] = dict(x.features)
    return d


def default_catalog_path() -> Path:
    return Path(str(resources.files("harbor") / "data" / "catalog.json"))


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise CatalogError(msg)


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def catalog_from_dict(data: Any) -> Catalog:
    """Build and validate a Catalog; raises CatalogError on the first violation."""
    _require(isinstance(data, dict), "catalog must be a JSON object")
    _require("personas" in data and "listings" in data,
             "catalog needs top-level 'personas' and 'listings'")
    raw_personas = data["personas"]
    raw_listings = data["listings"]
    _require(isinstance(raw_personas, list) and raw_personas, "no personas")
    _require(isinstance(raw_listings, list), "'listings' must be an array")
    _require(len(raw_listings) > 0, "no listings")

    personas = []
    for p in raw_personas:
        _require(isinstance(p, dict), "persona entries must be objects")
        for key in ("id", "name", "description", "prompt_snippet"):
            _require(key in p, f"persona missing field {key!r}")
        _require(_is_int(p["id"]), f"persona id must be an integer: {p['id']!r}")
        _require(isinstance(p["name"], str) and p["name"].strip() != "",
                 f"persona {p['id']} has an empty name")
        _require(isinstance(p["prompt_snippet"], str) and p["prompt_snippet"].strip() != "",
                 f"persona {p['id']} has an empty prompt_snippet")
        personas.append(Persona(p["id"], p["name"], str(p["description"]), p["prompt_snippet"]))
    ids = sorted(p.id for p in personas)
    _require(ids == list(range(len(personas))),
             f"persona ids must be dense and unique 0..{len(personas) - 1}, got {ids}")
    personas.sort(key=lambda p: p.id)

    k = len(personas)
    listings = []
    seen: set[str] = set()
    for x in raw_listings:
        _require(isinstance(x, dict), "listing entries must be objects")
        for key in ("id", "name", "description", "starting_price", "true_value",
                    "matched_personas"):
            _require(key in x, f"listing missing field {key!r}")
        lid = str(x["id"])
        _require(lid not in seen, f"duplicate listing id {lid!r}")
        seen.add(lid)
        _require(_is_int(x["starting_price"]) and _is_int(x["true_value"]),
                 f"listing {lid}: prices must be integers")
        _require(x["starting_price"] > 0, f"listing {lid}: starting_price must be > 0")
        _require(x["true_value"] >= x["starting_price"],
                 f"listing {lid}: true_value < starting_price")
        matched = x["matched_personas"]
        _require(isinstance(matched, list), f"listing {lid}: matched_personas must be an array")
        for pid in matched:
            _require(_is_int(pid) and 0 <= pid < k,
                     f"listing {lid}: unknown persona id {pid!r} (k={k})")
        listings.append(Listing(
            id=lid,
            name=str(x["name"]),
            description=str(x["description"]),
            starting_price=x["starting_price"],
            true_value=x["true_value"],
            matched_personas=frozenset(matched),
            features=dict(x.get("features") or {}),
        ))
    names = [x.name for x in listings]
    _require(len(set(names)) == len(names), "listing names must be unique")
    return Catalog(tuple(personas), tuple(listings))


def load_catalog(path: str | Path | None = None) -> Catalog:
    """Load a catalog JSON file (the bundled one when ``path`` is None)."""
    path = Path(path) if path is not None else default_catalog_path()
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: parse error: {exc}") from exc
    return catalog_from_dict(data)


def save_catalog(catalog: Catalog, path: str | Path) -> None:
    Path(path).write_text(json.dumps(catalog.to_dict(), indent=2) + "\n")


def select_scenario_items(
    catalog: Catalog,
    per_agent_matches: Mapping[int, int],
    filler: int,
    seed: int,
) -> list[Listing]:
    """Pick ``count`` matched listings per persona plus ``filler`` neutral ones.

    A listing is only usable for persona ``p`` if ``p`` is the sole requested
    persona it matches, so no listing is counted twice. Filler listings match
    none of the requested personas. The returned order is the presentation
    order and depends only on ``seed``.
    """
    if filler < 0 or any(c < 0 for c in per_agent_matches.values()):
        raise ValueError("counts must be non-negative")
    requested = {p for p in per_agent_matches}
    for p in requested:
        if not 0 <= p < catalog.k:
            raise InfeasibleSelection(f"unknown persona id {p}")
    rng = random.Random(seed)

    by_persona: dict[int, list[Listing]] = {p: [] for p in requested}
    neutral: list[Listing] = []
    for x in catalog.listings:
        hits = x.matched_personas & requested
        if not hits:
            neutral.append(x)
        elif len(hits) == 1:
            by_persona[next(iter(hits))].append(x)

    chosen: list[Listing] = []
    for p in sorted(requested):
        need = per_agent_matches[p]
        pool = by_persona[p]
        if need > len(pool):
            raise InfeasibleSelection(
                f"persona {p} needs {need} matched listings, only {len(pool)} available")
        chosen.extend(rng.sample(pool, need))
    if filler > len(neutral):
        raise InfeasibleSelection(
            f"need {filler} filler listings, only {len(neutral)} match no requested persona")
    chosen.extend(rng.sample(neutral, filler))
    rng.shuffle(chosen)
    return chosen
