import json

from harbor.experiments import tom_settings, run_single
from harbor.parsing import (parse_action, parse_profile, parse_status,
                            parse_strategy_choice)
from harbor.synthetic import (SyntheticBackend, SyntheticChatModel, SyntheticPolicy,
                              curated_profile_case, curated_strategy_case)


def test_profile_case(catalog):
    agent, result = curated_profile_case(catalog)
    agent.update_profiles(result)
    urban = catalog.persona_names().index("Urban Dwellers")
    assert agent.profiles[1].weights[urban] == 0.8
    assert agent.incident_counts() == {}


def test_strategy_case(catalog):
    agent, view = curated_strategy_case(catalog)
    action = agent.act(view)
    assert action.amount == view.required
    assert dict(agent.rules) == {"B": 1}


def test_synthetic_replies_parse(catalog):
    seen = []

    class Spy(SyntheticChatModel):
        def send(self, messages, temperature=0.0):
            reply = super().send(messages, temperature)
            seen.append((messages[1]["content"], reply))
            return reply

    class Backend(SyntheticBackend):
        def chat(self, model):
            return Spy(self.catalog, model)

    cfg = tom_settings()[5]
    res = run_single(cfg, 0, cfg.seed, catalog, Backend(catalog))
    assert res.llm_calls == len(seen) > 0
    kinds = set()
    for prompt, reply in seen:
        if "six strategic actions" in prompt:
            kinds.add("strategy")
            assert parse_strategy_choice(reply)
        elif "You should either withdraw" in prompt:
            kinds.add("action")
            assert parse_action(reply)
        elif "update the status" in prompt:
            kinds.add("status")
            assert parse_status(reply)
        elif "predict the bidders' persona" in prompt:
            kinds.add("profile")
            target = prompt.split("focus on how many times ")[1].split(" rasied")[0]
            assert parse_profile(reply, target, catalog.persona_names()) is not None
        elif "assign a priority level" in prompt:
            kinds.add("planning")
            assert json.loads(reply.split("```json")[1].split("```")[0])
        elif "perceive you" in prompt:
            kinds.add("second_order")
            assert reply.startswith("- ")
    assert kinds == {"strategy", "action", "status", "profile", "planning", "second_order"}
    assert res.incidents and all("parse_failures" not in k for d in res.incidents.values()
                                 for k in d)


def test_synthetic_policy_phrases():
    msg = ("Loft, Ideal for: Urban Dwellers. Starting at $100000. Do I have any bid at the "
           "starting price of $100000? (Your estimated value for Loft is $200000.)")
    status = json.dumps({"remaining_budget": 10**6})
    assert SyntheticPolicy().recommend({"auctioneer_msg": msg, "status_text": status}).endswith(
        "I recommend to bid.")
    poor = json.dumps({"remaining_budget": 10})
    assert "withdraw" in SyntheticPolicy().recommend({"auctioneer_msg": msg,
                                                      "status_text": poor})
