import json

from harbor import prompts
from harbor.agents import AgentSpec, build_system_message
from harbor.engine import BidEvent, Settlement

from conftest import make_listing

NAMES = ("Bidder 1", "Bidder 2", "Bidder 3")


def test_system_message(catalog):
    spec = AgentSpec("Bidder 1", persona_mix=((7, 1.0),))
    msg = build_system_message(spec, catalog.personas)
    assert msg.startswith("You are Bidder 1. You are an urban dweller.")
    assert "1. Item Values" in msg and "2. Winning Bid" in msg and "3. Winner Pays" in msg
    bare = build_system_message(AgentSpec("Bidder 2"), catalog.personas)
    assert bare.startswith("You are Bidder 2.  You are attending")


def test_templates_have_no_unfilled_fields(catalog):
    item = make_listing("A", 100_000, 150_050, personas=[7], name="Loft").public()
    hist = (BidEvent(1, "A", 1, "bid", 100_000, 1), BidEvent(2, "A", 0, "withdraw", None, 1))
    texts = [
        prompts.planning_prompt("Bidder 1", 10**6, [item], {"A": 165_055}),
        prompts.planning_prompt("Bidder 1", 10**6, [item], {"A": 165_055},
                                update={"prev_status": "{}", "current_profile": "{}",
                                        "prev_plan": "{}"}),
        prompts.profile_prompt("Bidder 1", "Bidder 2", item, prompts.render_history(hist, NAMES),
                               catalog.persona_names(), {"Urban Dwellers": 0.7}),
        prompts.strategy_prompt("msg", "{}", "{}", "{}", "- Bidder 2 thinks I ..."),
        prompts.action_prompt("msg", "Bidder 1", prompts.NO_ADVICE),
        prompts.status_prompt(item, "h", "hm", "wl", "Bidder 1", "{}"),
        prompts.second_order_prompt(item, "h", "{}", "Bidder 1"),
        prompts.RETRY_MESSAGE.format(hint="x"),
    ]
    for t in texts:
        assert "{bidder_name}" not in t and "{target_bidder}" not in t
        assert "{{" not in t


def test_profile_prompt_lists_all_personas(catalog):
    item = make_listing(personas=[7]).public()
    text = prompts.profile_prompt("Bidder 1", "Bidder 2", item, "-", catalog.persona_names(),
                                  None)
    assert json.dumps(catalog.persona_names()) in text
    assert "has 10 keys" in text
    assert "previous profiling" not in text


def test_auctioneer_message_forms():
    item = make_listing("A", 180_000, 250_050, name="Cottage").public()
    opening = prompts.auctioneer_message(item, (), NAMES, None, 18_000, 1, 275_055)
    assert "starting price of $180000?" in opening
    assert "(Your estimated value for Cottage is $275055.)" in opening
    hist = (BidEvent(1, "A", 1, "bid", 180_000, 1),)
    later = prompts.auctioneer_message(item, hist, NAMES, (1, 180_000), 18_000, 2)
    assert "Now we have $180000 from Bidder 2 for Cottage." in later
    assert "The minimum increase over this highest bid is $18000." in later


def test_hammer_and_win_messages():
    item = make_listing("A", name="Cottage").public()
    s = Settlement("A", 0, 120_000, False)
    assert prompts.hammer_message(item, s, NAMES) == "Sold! Cottage to Bidder 1 at $120000!"
    assert prompts.win_lose_message(item, s, 0, 130_000).startswith("Congratulations!")
    passed = Settlement("A", None, None, True)
    assert "passed in" in prompts.hammer_message(item, passed, NAMES)


def test_history_rendering():
    hist = (BidEvent(1, "A", 2, "bid", 5, 1), BidEvent(2, "A", 0, "withdraw", None, 1))
    assert prompts.render_history(hist, NAMES) == "- Bidder 3: $5\n- Bidder 1: withdrew"
    assert prompts.render_history((), NAMES) == "(no bids)"
