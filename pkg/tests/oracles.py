"""Independent reference implementations used as test oracles.

Nothing here imports the engine: the poll protocol, rounding and KL are
re-derived from their definitions.
"""

from __future__ import annotations

import math
from fractions import Fraction


def half_up(num: int, den: int = 1) -> int:
    return (2 * num + den) // (2 * den)


def increment(start: int, rate_pct: int) -> int:
    return max(1, half_up(start * rate_pct, 100))


def threshold_cap(budget: int, estimate: int, limit: Fraction) -> int:
    """Largest amount a threshold bidder is still willing to bid."""
    return min(budget, math.floor(limit * estimate))


def brute_force_auction(items, budgets, estimates, limits, rate_pct=10, cycle_cap=50):
    """Enumerate the poll protocol step by step for threshold bidders.

    items: [(listing_id, start)], estimates[b][listing_id], limits[b] as Fraction.
    Returns [(listing_id, winner or None, hammer or None)].
    """
    budgets = list(budgets)
    n = len(budgets)
    out = []
    for lid, start in items:
        inc = increment(start, rate_pct)
        high = None  # (bidder, amount)
        active = list(range(n))
        cycles = 0
        while True:
            if not active or (high and active == [high[0]]) or cycles >= cycle_cap:
                break
            cycles += 1
            for b in list(active):
                if high and active == [high[0]]:
                    break
                if b not in active or (high and high[0] == b):
                    continue
                need = start if high is None else high[1] + inc
                if need <= budgets[b] and need <= limits[b] * estimates[b][lid]:
                    high = (b, need)
                else:
                    active.remove(b)
        if high is None:
            out.append((lid, None, None))
        else:
            budgets[high[0]] -= high[1]
            out.append((lid, high[0], high[1]))
    return out


def closed_form_two(start: int, inc: int, cap0: int, cap1: int):
    """Winner and hammer for two minimum-raise bidders with fixed caps.

    Bidder 0 opens if it can; bids then alternate at start + j*inc until the
    bidder whose turn it is cannot follow.
    """
    if cap0 < start and cap1 < start:
        return None, None
    if cap0 < start:
        return 1, start
    # first even j (bidder 0) and first odd j (bidder 1) that exceed the caps
    j0 = (cap0 - start) // inc + 1
    j0 += j0 % 2
    j1 = max((cap1 - start) // inc + 1, 1) if cap1 >= start else 1
    j1 += 1 - j1 % 2
    last = min(j0, j1) - 1
    return last % 2, start + last * inc


def kl(p, q):
    return sum(pi * math.log(pi / qi) for pi, qi in zip(p, q) if pi > 0)


def smoothed(dist, eps=1e-12):
    total = sum(d + eps for d in dist)
    return [(d + eps) / total for d in dist]
