"""Free-for-all TrueSkill by expectation propagation on the usual factor graph.

Players are ordered by rank; adjacent performance differences are truncated
(win) or windowed (tie) and messages are passed up and down the chain of
difference factors until they stop moving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Hashable, Mapping, Sequence

MU = 25.0
SIGMA = MU / 3
BETA = SIGMA / 2
TAU = SIGMA / 100
DRAW_PROBABILITY = 0.02

_N = NormalDist()


@dataclass(frozen=True)
class Rating:
    mu: float = MU
    sigma: float = SIGMA


class _Gaussian:
    __slots__ = ("pi", "tau")

    def __init__(self, pi: float = 0.0, tau: float = 0.0):
        self.pi = pi
        self.tau = tau

    @classmethod
    def from_mu_sigma(cls, mu: float, sigma: float) -> "_Gaussian":
        pi = sigma ** -2
        return cls(pi, pi * mu)

    @property
    def mu(self) -> float:
        return self.tau / self.pi if self.pi else 0.0

    @property
    def sigma(self) -> float:
        return math.sqrt(1 / self.pi) if self.pi else math.inf

    def __mul__(self, o):
        return _Gaussian(self.pi + o.pi, self.tau + o.tau)

    def __truediv__(self, o):
        return _Gaussian(self.pi - o.pi, self.tau - o.tau)


class _Var:
    def __init__(self):
        self.value = _Gaussian()
        self.msgs: dict[int, _Gaussian] = {}

    def _set(self, val: _Gaussian) -> float:
        dpi = abs(self.value.pi - val.pi)
        delta = 0.0 if math.isinf(dpi) else max(abs(self.value.tau - val.tau), math.sqrt(dpi))
        self.value = val
        return delta

    def msg(self, factor: int) -> _Gaussian:
        return self.msgs.setdefault(factor, _Gaussian())

    def update_message(self, factor: int, new: _Gaussian) -> float:
        old = self.msg(factor)
        self.msgs[factor] = new
        return self._set(self.value / old * new)

    def update_value(self, factor: int, new: _Gaussian) -> float:
        old = self.msg(factor)
        self.msgs[factor] = new * old / self.value
        return self._set(new)


def _v_win(t: float, eps: float) -> float:
    x = t - eps
    denom = _N.cdf(x)
    return _N.pdf(x) / denom if denom else -x


def _w_win(t: float, eps: float) -> float:
    x = t - eps
    v = _v_win(t, eps)
    w = v * (v + x)
    if 0 < w < 1:
        return w
    raise FloatingPointError("truncation outside numeric range")


def _v_draw(t: float, eps: float) -> float:
    a, b = eps - abs(t), -eps - abs(t)
    denom = _N.cdf(a) - _N.cdf(b)
    v = (_N.pdf(b) - _N.pdf(a)) / denom if denom else a
    return -v if t < 0 else v


def _w_draw(t: float, eps: float) -> float:
    a, b = eps - abs(t), -eps - abs(t)
    denom = _N.cdf(a) - _N.cdf(b)
    if not denom:
        raise FloatingPointError("draw window collapsed")
    v = _v_draw(abs(t), eps)
    return v ** 2 + (a * _N.pdf(a) - b * _N.pdf(b)) / denom


class TrueSkill:
    def __init__(self, mu: float = MU, sigma: float = SIGMA, beta: float = BETA,
                 tau: float = TAU, draw_probability: float = DRAW_PROBABILITY,
                 min_delta: float = 1e-10, max_iterations: int = 200):
        self.mu, self.sigma, self.beta, self.tau = mu, sigma, beta, tau
        self.draw_probability = draw_probability
        self.min_delta = min_delta
        self.max_iterations = max_iterations

    def create_rating(self) -> Rating:
        return Rating(self.mu, self.sigma)

    def draw_margin(self, n_players: int = 2) -> float:
        return _N.inv_cdf((self.draw_probability + 1) / 2) * math.sqrt(n_players) * self.beta

    def rate(self, ratings: Sequence[Rating], ranks: Sequence[int]) -> list[Rating]:
        """New ratings; lower rank is better, equal ranks are ties."""
        n = len(ratings)
        if n < 2:
            raise ValueError("need at least two players")
        if len(ranks) != n:
            raise ValueError("one rank per player")
        order = sorted(range(n), key=lambda i: ranks[i])
        rs = [ratings[i] for i in order]
        rk = [ranks[i] for i in order]

        skill = [_Var() for _ in range(n)]
        perf = [_Var() for _ in range(n)]
        diff = [_Var() for _ in range(n - 1)]
        eps = self.draw_margin(2)
        b2 = self.beta ** 2

        # factor ids: prior i, likelihood n+i, diff-sum 2n+j, truncation 3n+j
        def prior_down(i):
            r = rs[i]
            skill[i].update_value(i, _Gaussian.from_mu_sigma(
                r.mu, math.sqrt(r.sigma ** 2 + self.tau ** 2)))

        def lik_down(i):
            m = skill[i].value / skill[i].msg(n + i)
            a = 1 / (1 + b2 * m.pi)
            return perf[i].update_message(n + i, _Gaussian(a * m.pi, a * m.tau))

        def lik_up(i):
            m = perf[i].value / perf[i].msg(n + i)
            a = 1 / (1 + b2 * m.pi)
            return skill[i].update_message(n + i, _Gaussian(a * m.pi, a * m.tau))

        def sum_update(target: _Var, fid: int, terms, coeffs):
            pi_inv, mu = 0.0, 0.0
            for var, c in zip(terms, coeffs):
                d = var.value / var.msg(fid)
                mu += c * d.mu
                if math.isinf(pi_inv):
                    continue
                pi_inv = math.inf if d.pi == 0 else pi_inv + c * c / d.pi
            pi = 1 / pi_inv
            return target.update_message(fid, _Gaussian(pi, pi * mu))

        def diff_down(j):
            return sum_update(diff[j], 2 * n + j, [perf[j], perf[j + 1]], [1.0, -1.0])

        def diff_up(j, side):
            # d = p_j - p_{j+1}  =>  p_j = d + p_{j+1},  p_{j+1} = p_j - d
            if side == 0:
                return sum_update(perf[j], 2 * n + j, [diff[j], perf[j + 1]], [1.0, 1.0])
            return sum_update(perf[j + 1], 2 * n + j, [perf[j], diff[j]], [1.0, -1.0])

        def trunc_up(j):
            var = diff[j]
            d = var.value / var.msg(3 * n + j)
            sp = math.sqrt(d.pi)
            t, e = d.tau / sp, eps * sp
            if rk[j] == rk[j + 1]:
                v, w = _v_draw(t, e), _w_draw(t, e)
            else:
                v, w = _v_win(t, e), _w_win(t, e)
            denom = 1 - w
            return var.update_value(3 * n + j, _Gaussian(d.pi / denom, (d.tau + sp * v) / denom))

        for i in range(n):
            prior_down(i)
        for i in range(n):
            lik_down(i)
        m = n - 1
        for _ in range(self.max_iterations):
            if m == 1:
                diff_down(0)
                delta = trunc_up(0)
            else:
                delta = 0.0
                for j in range(m - 1):
                    diff_down(j)
                    delta = max(delta, trunc_up(j))
                    diff_up(j, 1)
                for j in range(m - 1, 0, -1):
                    diff_down(j)
                    delta = max(delta, trunc_up(j))
                    diff_up(j, 0)
            if delta <= self.min_delta:
                break
        diff_up(0, 0)
        diff_up(m - 1, 1)
        for i in range(n):
            lik_up(i)

        out = [None] * n
        for pos, i in enumerate(order):
            g = skill[pos].value
            out[i] = Rating(g.mu, g.sigma)
        return out


def ranks_from_scores(scores: Sequence[float]) -> list[int]:
    """Competition ranks (0 = best) from scores where higher is better; ties share."""
    ordered = sorted(set(scores), reverse=True)
    pos = {s: sum(1 for x in scores if x > s) for s in ordered}
    return [pos[s] for s in scores]


def fold_ratings(outcomes: Sequence[Mapping[Hashable, float]], env: TrueSkill | None = None
                 ) -> dict[Hashable, Rating]:
    """Sequentially rate each outcome (player -> score); players start fresh."""
    env = env or TrueSkill()
    ratings: dict[Hashable, Rating] = {}
    for scores in outcomes:
        players = list(scores)
        current = [ratings.get(p, env.create_rating()) for p in players]
        new = env.rate(current, ranks_from_scores([scores[p] for p in players]))
        ratings.update(zip(players, new))
    return ratings
