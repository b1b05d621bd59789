import random

import pytest
import trueskill as ref

from harbor.trueskill import Rating, TrueSkill, fold_ratings, ranks_from_scores

REF = ref.TrueSkill(mu=25.0, sigma=25 / 3, beta=25 / 6, tau=25 / 300, draw_probability=0.02,
                    backend="scipy")


def _ref_rate(ratings, ranks):
    groups = [(REF.create_rating(r.mu, r.sigma),) for r in ratings]
    return [g[0] for g in REF.rate(groups, ranks=ranks)]


def test_defaults():
    env = TrueSkill()
    assert env.create_rating() == Rating(25.0, 25 / 3)


@pytest.mark.parametrize("ranks", [[0, 1], [1, 0], [0, 0], [0, 1, 2], [2, 0, 1], [0, 0, 1],
                                   [0, 1, 1], [0, 1, 2, 3, 4, 5, 6], [0, 0, 0, 0]])
def test_matches_reference_from_fresh(ranks):
    env = TrueSkill()
    ours = env.rate([env.create_rating()] * len(ranks), ranks)
    theirs = _ref_rate([env.create_rating()] * len(ranks), ranks)
    for a, b in zip(ours, theirs):
        assert a.mu == pytest.approx(b.mu, abs=1e-9)
        assert a.sigma == pytest.approx(b.sigma, abs=1e-9)


def test_matches_reference_random_sequences():
    rng = random.Random(11)
    env = TrueSkill()
    for _ in range(60):
        n = rng.randint(2, 7)
        ratings = [Rating(rng.uniform(15, 35), rng.uniform(1, 8.3)) for _ in range(n)]
        ranks = ranks_from_scores([rng.choice([0, 1, 2, 5, 9]) for _ in range(n)])
        for a, b in zip(env.rate(ratings, ranks), _ref_rate(ratings, ranks)):
            assert a.mu == pytest.approx(b.mu, abs=1e-6)
            assert a.sigma == pytest.approx(b.sigma, abs=1e-6)


def test_ranks_from_scores():
    assert ranks_from_scores([10, 30, 20]) == [2, 0, 1]
    assert ranks_from_scores([5, 5, 1]) == [0, 0, 2]


def test_fold_ratings_winner_rises():
    out = fold_ratings([{"a": 3, "b": 1, "c": 0}] * 5)
    assert out["a"].mu > out["b"].mu > out["c"].mu
    assert all(r.sigma < 25 / 3 for r in out.values())


def test_rate_validation():
    env = TrueSkill()
    with pytest.raises(ValueError):
        env.rate([Rating()], [0])
    with pytest.raises(ValueError):
        env.rate([Rating(), Rating()], [0])
