import math

import pytest
from hypothesis import given, strategies as st

from harbor.engine import BidEvent
from harbor.profiling import (HeuristicProfiler, ProfileVector, ground_truth_vector,
                              init_profile, mean_kl, normalized_profile, profiling_kl,
                              update_profile)

import oracles
from conftest import make_listing

K = 10


def test_zero_profile_vs_one_hot_is_ln_k():
    assert profiling_kl(ground_truth_vector([3], K), init_profile(K)) == pytest.approx(
        math.log(10), abs=1e-6)


def test_zero_profile_vs_mix_is_ln_half_k():
    assert profiling_kl(ground_truth_vector([3, 7], K), init_profile(K)) == pytest.approx(
        math.log(5), abs=1e-6)


def test_perfect_profile_is_near_zero():
    w = [0.0] * K
    w[2] = 1.0
    assert profiling_kl(ground_truth_vector([2], K), w) < 1e-9


def test_kl_matches_reference_after_shift():
    w = [0.3, -0.2, 0.0, 0.5, 0.1, 0.0, 0.0, 0.0, 0.0, -0.1]
    shifted = [x + 0.2 for x in w]
    q = oracles.smoothed([x / sum(shifted) for x in shifted])
    g = oracles.smoothed([0, 0, 0, 1, 0, 0, 0, 0, 0, 0])
    assert profiling_kl(ground_truth_vector([3], K), w) == pytest.approx(oracles.kl(g, q),
                                                                         rel=1e-12)


def test_normalization_uniform_fallback():
    assert normalized_profile([0.0, 0.0]) == [0.5, 0.5]
    assert normalized_profile([-0.5, -0.5]) == [0.5, 0.5]


@given(st.lists(st.floats(-1, 1), min_size=K, max_size=K), st.integers(0, K - 1))
def test_kl_is_finite_and_non_negative(w, p):
    v = profiling_kl(ground_truth_vector([p], K), w)
    assert 0 <= v < 30


def test_ground_truth_validation():
    with pytest.raises(ValueError):
        ground_truth_vector([], K)
    with pytest.raises(ValueError):
        ground_truth_vector([1, 2, 3], K)
    with pytest.raises(ValueError):
        ground_truth_vector([K], K)


def _hist(*pairs):
    return tuple(BidEvent(i + 1, "X", b, a, 1 if a == "bid" else None, 1)
                 for i, (b, a) in enumerate(pairs))


def test_heuristic_raises_matched_persona():
    item = make_listing(personas=[7]).public()
    prev = ProfileVector(1, tuple([0.0] * 7 + [0.7, 0.0, 0.0]))
    new = update_profile(prev, item, _hist((1, "bid"), (0, "bid"), (1, "withdraw")),
                         HeuristicProfiler())
    assert new.weights[7] == 0.8


def test_heuristic_counts_at_most_three_raises():
    item = make_listing(personas=[2]).public()
    h = _hist(*[(1, "bid"), (0, "bid")] * 5)
    new = update_profile(init_profile(K, 1), item, h, HeuristicProfiler())
    assert new.weights[2] == pytest.approx(0.3)


def test_heuristic_negative_evidence_and_clamp():
    item = make_listing(personas=[4]).public()
    prev = ProfileVector(1, tuple(-1.0 if i == 4 else 0.0 for i in range(K)))
    assert update_profile(prev, item, _hist((1, "withdraw")), HeuristicProfiler()) == prev
    new = update_profile(init_profile(K, 1), item, _hist((0, "bid"), (1, "withdraw")),
                         HeuristicProfiler())
    assert new.weights[4] == pytest.approx(-0.1)


class _Fixed:
    def __init__(self, out):
        self.out = out

    def propose(self, prev, item, history):
        return self.out


def test_update_clamps_and_checks_length():
    item = make_listing().public()
    new = update_profile(init_profile(3), item, (), _Fixed([2.0, -3.0, 0.5]))
    assert new.weights == (1.0, -1.0, 0.5)
    with pytest.raises(ValueError):
        update_profile(init_profile(3), item, (), _Fixed([0.1]))


def test_no_informative_action_keeps_profile():
    prev = ProfileVector(0, (0.2, 0.1, 0.0))
    assert update_profile(prev, make_listing().public(), (), _Fixed(None)) is prev


def test_mean_kl():
    truths = {1: ground_truth_vector([0], 3), 2: ground_truth_vector([1], 3)}
    assert mean_kl({1: init_profile(3, 1), 2: init_profile(3, 2)}, truths) == pytest.approx(
        math.log(3))
    assert mean_kl({}, truths) is None
