"""Per-rival persona weight vectors and KL-based profiling accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from .catalog import PublicListing
from .engine import BidEvent

EPSILON = 1e-12
DEFAULT_STEP = 0.1
MAX_COUNTED_RAISES = 3


@dataclass(frozen=True)
class ProfileVector:
    rival_id: int
    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.weights:
            raise ValueError("profile vector must have k >= 1 entries")

    @property
    def k(self) -> int:
        return len(self.weights)


ProfileKnowledge = dict[int, ProfileVector]


@dataclass(frozen=True)
class GroundTruthPersona:
    distribution: tuple[float, ...]


def clamp(x: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return lo if x < lo else hi if x > hi else x


def init_profile(k: int, rival_id: int = 0) -> ProfileVector:
    if k < 1:
        raise ValueError("persona space must have k >= 1")
    return ProfileVector(rival_id, (0.0,) * k)


class ProfilingPolicy(Protocol):
    def propose(self, prev: ProfileVector, item: PublicListing,
                history: Sequence[BidEvent]) -> Optional[Sequence[float]]:
        """New absolute weights, or None to keep ``prev``."""


def count_raises(history: Iterable[BidEvent], bidder_id: int) -> int:
    return sum(1 for ev in history if ev.bidder_id == bidder_id and ev.accepted_bid)


class HeuristicProfiler:
    """Count-based update: +step per raise (at most 3 counted) on every persona
    the item matches, -step on those personas when the rival never bid."""

    def __init__(self, step: float = DEFAULT_STEP, max_raises: int = MAX_COUNTED_RAISES):
        self.step = step
        self.max_raises = max_raises

    def delta(self, rival_id: int, item: PublicListing, history: Sequence[BidEvent],
              k: int) -> list[float]:
        raises = min(count_raises(history, rival_id), self.max_raises)
        out = [0.0] * k
        for j in item.matched_personas:
            if 0 <= j < k:
                out[j] = self.step * raises if raises > 0 else -self.step
        return out

    def propose(self, prev, item, history):
        d = self.delta(prev.rival_id, item, history, prev.k)
        if not any(d):
            return None
        return [w + x for w, x in zip(prev.weights, d)]


def update_profile(prev: ProfileVector, item: PublicListing, history: Sequence[BidEvent],
                   policy: ProfilingPolicy) -> ProfileVector:
    proposal = policy.propose(prev, item, history)
    if proposal is None:
        return prev
    if len(proposal) != prev.k:
        raise ValueError(f"profile length {len(proposal)} != k={prev.k}")
    # round away float noise from repeated +/-0.1 steps
    return ProfileVector(prev.rival_id, tuple(round(clamp(float(w)), 12) for w in proposal))


def ground_truth_vector(persona_ids: Iterable[int], k: int) -> GroundTruthPersona:
    ids = set(persona_ids)
    if not ids:
        raise ValueError("ground truth needs at least one persona")
    if len(ids) > 2:
        raise ValueError("at most a mix of two personas is supported")
    if any(not 0 <= p < k for p in ids):
        raise ValueError(f"persona id out of range for k={k}")
    share = 1.0 / len(ids)
    return GroundTruthPersona(tuple(share if i in ids else 0.0 for i in range(k)))


def normalized_profile(weights: Sequence[float]) -> list[float]:
    """Shift by |min| and normalise; uniform when the shifted mass is zero."""
    shift = abs(min(weights))
    shifted = [w + shift for w in weights]
    total = sum(shifted)
    if total <= 0:
        return [1.0 / len(weights)] * len(weights)
    return [w / total for w in shifted]


def _smooth(dist: Sequence[float], eps: float) -> list[float]:
    raw = [p + eps for p in dist]
    total = sum(raw)
    return [p / total for p in raw]


def profiling_kl(gt: GroundTruthPersona, profile: ProfileVector | Sequence[float],
                 eps: float = EPSILON) -> float:
    """KL(G || Q) in nats, Q being the shifted, normalised profile."""
    weights = profile.weights if isinstance(profile, ProfileVector) else tuple(profile)
    if len(weights) != len(gt.distribution):
        raise ValueError("ground truth and profile lengths differ")
    g = _smooth(gt.distribution, eps)
    q = _smooth(normalized_profile(weights), eps)
    return max(0.0, sum(gi * math.log(gi / qi) for gi, qi in zip(g, q)))


def mean_kl(profiles: Mapping[int, ProfileVector], truths: Mapping[int, GroundTruthPersona]
            ) -> Optional[float]:
    vals = [profiling_kl(truths[r], v) for r, v in profiles.items() if r in truths]
    return sum(vals) / len(vals) if vals else None
