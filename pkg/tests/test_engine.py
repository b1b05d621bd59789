import pytest
from hypothesis import given, settings, strategies as st

from harbor.engine import (Auction, Bid, BidderSeat, BidEvent, ConfigError, PolicyError,
                           Settlement, SettlementError, min_increment, new_auction,
                           perceived_value, run_auction)

from conftest import Cap, Script, make_listing


def half_up(num: int, den: int) -> int:
    # integer-only rounding oracle: floor(num/den + 1/2) for non-negative values
    return (2 * num + den) // (2 * den)


def test_min_increment_from_rate():
    assert min_increment(180_000, 0.10) == 18_000


@pytest.mark.parametrize("start", [1, 5, 15, 25, 105, 12_345, 180_000, 999_995])
@pytest.mark.parametrize("pct", [1, 5, 10, 15, 33])
def test_min_increment_matches_integer_rounding(start, pct):
    assert min_increment(start, pct / 100) == max(1, half_up(start * pct, 100))


def test_min_increment_rounds_half_up():
    assert min_increment(25, 0.10) == 3  # 2.5 -> 3, not banker's 2
    assert min_increment(15, 0.10) == 2


def test_perceived_value_uses_exact_decimal():
    item = make_listing(true_value=427_150)
    assert perceived_value(item, 0.10) == half_up(427_150 * 110, 100)
    assert perceived_value(item, 0.0) == 427_150
    with pytest.raises(ValueError):
        perceived_value(item, -1)


def test_sole_bidder_wins_at_final_price():
    item = make_listing(start=400_000, true_value=500_000)
    auction = new_auction([item], [(1_000_000, Script([Bid(400_000)])),
                                   (1_000_000, Script([Bid(460_000)])),
                                   (1_000_000, Script([]))], 0.10)
    log, states, settlements = run_auction(auction)
    assert settlements == [Settlement(item.id, 1, 460_000, False)]
    assert states[1].remaining_budget == 540_000
    assert states[0].remaining_budget == 1_000_000


def test_poll_order_skips_high_bidder():
    item = make_listing(start=100, true_value=200)
    a, b, c = Cap(120), Cap(140), Cap(0)
    log, _, settlements = run_auction(new_auction([item], [(1000, a), (1000, b), (1000, c)],
                                                  0.10))
    events = [(e.bidder_id, e.action, e.amount) for e in log if isinstance(e, BidEvent)]
    assert events == [(0, "bid", 100), (1, "bid", 110), (2, "withdraw", None),
                      (0, "bid", 120), (1, "bid", 130), (0, "withdraw", None)]
    assert settlements[0] == Settlement(item.id, 1, 130, False)
    # the leader is never asked to act against its own bid
    assert all(v.current_high is None or v.current_high[0] != 1 for v in b.views)


def test_no_bids_passes_item():
    item = make_listing()
    _, states, settlements = run_auction(new_auction([item], [(10**6, Cap(0)), (10**6, Cap(0))]))
    assert settlements == [Settlement(item.id, None, None, True)]
    assert all(s.remaining_budget == 10**6 for s in states)


@pytest.mark.parametrize("action,reason", [
    (Bid(99_999), "below starting price"),
    (Bid(2_000_000), "exceeds budget"),
    ("nonsense", "invalid action"),
])
def test_illegal_bid_becomes_withdrawal(action, reason):
    item = make_listing()
    log, _, _ = run_auction(new_auction([item], [(1_000_000, Script([action])),
                                                 (1_000_000, Script([]))]))
    first = log[0]
    assert first.action == "withdraw" and first.annotation == reason


def test_raise_below_minimum_is_rejected():
    item = make_listing(start=100_000)
    log, _, s = run_auction(new_auction([item], [(10**6, Script([Bid(100_000)])),
                                                 (10**6, Script([Bid(105_000)]))]))
    assert log[1].action == "withdraw" and log[1].amount == 105_000
    assert log[1].annotation == "below minimum raise"
    assert s[0].winner == 0


def test_policy_error_is_a_withdrawal():
    class Boom:
        def act(self, view):
            raise PolicyError("bad reply")

    item = make_listing()
    log, _, s = run_auction(new_auction([item], [(10**6, Boom()), (10**6, Cap(10**6))]))
    assert log[0].annotation == "policy error: bad reply"
    assert s[0].winner == 1


def test_cycle_cap_settles_to_current_high():
    item = make_listing(start=100, true_value=10**9)
    auction = new_auction([item], [(10**9, Cap(10**9)), (10**9, Cap(10**9))], 0.10, cycle_cap=3)
    log, _, s = run_auction(auction)
    bids = [e for e in log if isinstance(e, BidEvent)]
    assert len(bids) == 6
    assert s[0].winner == 1 and s[0].hammer_price == 100 + 5 * 10


def test_hooks_run_in_order():
    calls = []

    class Hooked(Cap):
        def begin(self, info):
            calls.append(("begin", info.bidder_id, len(info.items)))

        def update_status(self, r):
            calls.append(("status", r.bidder_id))

        def update_profiles(self, r):
            calls.append(("profiles", r.bidder_id))

        def update_priorities(self, r):
            calls.append(("priorities", r.bidder_id))

    item = make_listing()
    run_auction(new_auction([item], [(10**6, Hooked(0)), (10**6, Hooked(0))]))
    assert calls == [("begin", 0, 1), ("begin", 1, 1), ("status", 0), ("profiles", 0),
                     ("priorities", 0), ("status", 1), ("profiles", 1), ("priorities", 1)]


def test_settling_twice_is_an_error():
    item = make_listing()
    auction = new_auction([item], [(10**6, Cap(0)), (10**6, Cap(0))])
    rnd = auction.start_item(item)
    auction.poll_cycle(rnd)
    auction.settle_item(rnd)
    with pytest.raises(SettlementError):
        auction.settle_item(rnd)


@pytest.mark.parametrize("kwargs", [
    dict(bidders=1), dict(items=0), dict(rate=0.0), dict(rate=1.5), dict(budget=0),
])
def test_invalid_configuration(kwargs):
    items = [make_listing()] * 0 if kwargs.get("items") == 0 else [make_listing()]
    seats = [BidderSeat(kwargs.get("budget", 10**6), Cap(0))
             for _ in range(kwargs.get("bidders", 2))]
    with pytest.raises(ConfigError):
        Auction(items, seats, kwargs.get("rate", 0.1))


def test_duplicate_listing_ids_rejected():
    with pytest.raises(ConfigError):
        new_auction([make_listing("A"), make_listing("A")], [(10, Cap(0)), (10, Cap(0))])


@st.composite
def auctions(draw):
    n_bidders = draw(st.integers(2, 5))
    n_items = draw(st.integers(1, 6))
    items = []
    for j in range(n_items):
        start = draw(st.integers(1, 50)) * 10_000
        items.append(make_listing(f"I{j}", start, start + draw(st.integers(0, 40)) * 5_000))
    budgets = [draw(st.integers(1, 120)) * 10_000 for _ in range(n_bidders)]
    caps = [draw(st.integers(0, 150)) * 10_000 for _ in range(n_bidders)]
    rate = draw(st.sampled_from([0.05, 0.1, 0.2]))
    return items, budgets, caps, rate


@settings(max_examples=150, deadline=None)
@given(auctions())
def test_conservation_and_legality(spec):
    items, budgets, caps, rate = spec
    log, states, settlements = run_auction(
        new_auction(items, [(b, Cap(c)) for b, c in zip(budgets, caps)], rate))
    spent = [0] * len(budgets)
    for s in settlements:
        if s.winner is not None:
            spent[s.winner] += s.hammer_price
    for st_, b, paid in zip(states, budgets, spent):
        assert st_.remaining_budget == b - paid >= 0
    assert [s.listing_id for s in settlements] == [x.id for x in items]
    for s in settlements:
        bids = [e for e in log if isinstance(e, BidEvent) and e.listing_id == s.listing_id
                and e.accepted_bid]
        if s.passed:
            assert not bids
        else:
            assert (bids[-1].bidder_id, bids[-1].amount) == (s.winner, s.hammer_price)
    seqs = [e.seq for e in log if isinstance(e, BidEvent)]
    assert seqs == list(range(1, len(seqs) + 1))
