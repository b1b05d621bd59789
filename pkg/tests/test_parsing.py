import pytest
from hypothesis import given, strategies as st

from harbor.parsing import (json_objects, parse_action, parse_priorities, parse_profile,
                            parse_recommendation, parse_status, parse_strategy_choice)

NAMES = ["First-Time Homebuyers", "Urban Dwellers", "Rural Home Seekers"]


def test_priorities_example_shape():
    text = 'My plan...\n{"Item A": 3, "Item B": 2, "Item C": 2}'
    assert parse_priorities(text, ["Item A", "Item B", "Item C"]) == {
        "Item A": 3, "Item B": 2, "Item C": 2}


def test_priorities_missing_or_bad_level():
    assert parse_priorities('{"Item A": 3}', ["Item A", "Item B"]) is None
    assert parse_priorities('{"Item A": 5}', ["Item A"]) is None
    assert parse_priorities("no json here", ["Item A"]) is None


def test_priorities_takes_last_complete_object():
    text = 'example {"Item A": 1} final {"item a": "2"}'
    assert parse_priorities(text, ["Item A"]) == {"Item A": 2}


def test_profile_nested_and_flat():
    nested = '{"Bidder 2": {"First-Time Homebuyers": 0.1, "Urban Dwellers": 0.8, ' \
             '"Rural Home Seekers": -0.2}}'
    assert parse_profile(nested, "Bidder 2", NAMES) == [0.1, 0.8, -0.2]
    flat = '{"first-time homebuyers": 0, "urban dwellers": "0.5", "rural home seekers": 0}'
    assert parse_profile(flat, "Bidder 2", NAMES) == [0.0, 0.5, 0.0]
    assert parse_profile('{"Bidder 2": {"Urban Dwellers": 1}}', "Bidder 2", NAMES) is None


@pytest.mark.parametrize("text,rule", [
    ("I chose to B because it drains their budget.", "B"),
    ('**"I chose to [E] because the margin is thin."**', "E"),
    ("I chose to a because top priority", "A"),
    ("Thinking... I chose to C. Actually I chose to F because war.", "F"),
    ("I chose to G because", None),
    ("I will bid.", None),
])
def test_strategy_choice(text, rule):
    assert parse_strategy_choice(text) == rule


@pytest.mark.parametrize("text,out", [
    ("I bid $195,000!", ("bid", 195000)),
    ("I'm out!", ("out", None)),
    ("I’m out!", ("out", None)),
    ("I bid 120000", ("bid", 120000)),
    ("I bid $1,000.60!", ("bid", 1001)),
    ("I could say I bid $5 but I'm out!", ("out", None)),
    ("I'm out! Just kidding, I bid $7!", ("bid", 7)),
    ("Hmm.", None),
])
def test_action(text, out):
    assert parse_action(text) == out


def test_recommendation():
    assert parse_recommendation("Reasoning. I recommend to bid.") == "bid"
    assert parse_recommendation("I recommend to Withdraw") == "withdraw"
    assert parse_recommendation("I recommend nothing") is None


def test_status_example_shape():
    text = ('Summary...\n```{"remaining_budget": 8000, "total_profits": {"Bidder 1": 1300, '
            '"Bidder 2": 1800, "Bidder 3": 0}, "winning_bids": {"Bidder 1": {"Item 2": 1200, '
            '"Item 3": 1000}, "Bidder 2": {"Item 1": 2000}, "Bidder 3": {}}}```')
    board = parse_status(text)
    assert board.remaining_budget == 8000
    assert board.total_profits == {"Bidder 1": 1300, "Bidder 2": 1800, "Bidder 3": 0}
    assert board.winning_bids["Bidder 1"] == {"Item 2": 1200, "Item 3": 1000}


def test_status_money_strings_and_rejects():
    board = parse_status('{"remaining_budget": "$1,500", "total_profits": {}, '
                         '"winning_bids": {}}')
    assert board.remaining_budget == 1500
    assert parse_status('{"remaining_budget": true, "total_profits": {}, '
                        '"winning_bids": {}}') is None
    assert parse_status('{"remaining_budget": 1}') is None


@given(st.text())
def test_parsers_never_raise(text):
    json_objects(text)
    parse_action(text)
    parse_strategy_choice(text)
    parse_recommendation(text)
    parse_status(text)
    parse_profile(text, "Bidder 1", NAMES)
    parse_priorities(text, ["A"])


@given(st.integers(0, 10**9))
def test_bid_amount_roundtrip(n):
    assert parse_action(f"I bid ${n:,}!") == ("bid", n)
