import pytest

from harbor.engine import BidEvent, Settlement
from harbor.metrics import (acquisition_rate, aligned_items, engagement_counts,
                            engagement_table, mean, mean_engagement, per_item_profit,
                            profit_ratio, realized_profits, trueskill_update)

from conftest import make_listing

ITEMS = [make_listing("A", 100, 150, personas=[1]), make_listing("B", 200, 300, personas=[2]),
         make_listing("C", 50, 50)]


def test_profit_identities():
    s = [Settlement("A", 0, 120, False), Settlement("B", 1, 200, False),
         Settlement("C", None, None, True)]
    assert per_item_profit(s[0], ITEMS[0], 0) == 30
    assert per_item_profit(s[0], ITEMS[0], 1) == 0
    assert realized_profits(s, ITEMS, 2) == [30, 100]
    assert profit_ratio(s, ITEMS, 0) == pytest.approx(30 / 150)
    assert profit_ratio(s, ITEMS, 1) == pytest.approx(100 / 150)


def test_profit_ratio_undefined():
    assert profit_ratio([Settlement("C", 0, 50, False)], [ITEMS[2]], 0) is None


def test_sweep_at_starting_prices_gives_one():
    s = [Settlement(x.id, 0, x.starting_price, False) for x in ITEMS]
    assert profit_ratio(s, ITEMS, 0) == 1.0
    assert profit_ratio(s, ITEMS, 1) == 0.0


def test_acquisition_rate():
    s = [Settlement("A", 0, 120, False), Settlement("B", 1, 200, False)]
    assert [x.id for x in aligned_items(ITEMS, [1, 2])] == ["A", "B"]
    assert acquisition_rate(s, ITEMS, [1, 2], 0) == 0.5
    assert acquisition_rate(s, ITEMS, [], 0) is None
    assert acquisition_rate(s, ITEMS, [7], 0) is None


def test_engagement():
    log = [BidEvent(1, "A", 0, "bid", 100, 1), BidEvent(2, "A", 1, "bid", 110, 1),
           BidEvent(3, "A", 0, "bid", 120, 2), BidEvent(4, "A", 1, "withdraw", 130, 2),
           Settlement("A", 0, 120, False)]
    assert engagement_counts(log) == {(0, "A"): 2, (1, "A"): 1}
    table = engagement_table(log, 3, ["A", "B"])
    assert len(table) == 6 and (2, "B", 0) in table
    assert mean_engagement(log, 0, ["A", "B"]) == 1.0
    assert mean_engagement(log, 0, []) is None


def test_trueskill_update_and_mean():
    r = trueskill_update({}, {"x": 10, "y": 0})
    assert r["x"].mu > 25 > r["y"].mu
    with pytest.raises(ValueError):
        trueskill_update({}, {"x": 1})
    assert mean([None, 1.0, 3.0]) == 2.0 and mean([None]) is None
