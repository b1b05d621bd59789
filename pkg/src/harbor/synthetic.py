"""Offline stand-ins for a chat model and a remote policy.

``SyntheticChatModel`` recognises each prompt family by a key phrase and
answers in the shape a capable model would: reasoning text followed by the
requested phrase or JSON. It exists to author replayable fixtures without a
network; it is not used by the mock transport itself.
"""

from __future__ import annotations

import json
import re
from typing import Optional, Sequence

from .catalog import Catalog
from .parsing import json_objects
from .transport import TransportError

_IDEAL = re.compile(r"Ideal for: ([^.]+)\.")
_ITEM_LINE = re.compile(r"^- (.+?): starting price \$(\d+), your estimated value \$(\d+)\. (.*)$",
                        re.MULTILINE)
_ESTIMATE = re.compile(r"\(Your estimated value for (.+?) is \$(\d+)\.\)")
_HIGH = re.compile(r"Now we have \$(\d+) from (.+?) for .+?\. The minimum increase over this "
                   r"highest bid is \$(\d+)\.")
_START = re.compile(r"starting price of \$(\d+)\?")
_HIST_LINE = re.compile(r"^- (.+?): (?:\$(\d+)|withdrew)$", re.MULTILINE)
_SOLD = re.compile(r"Sold! (.+?) to (.+?) at \$(\d+)!")
_WAS = re.compile(r"Your estimated value for (.+?) was \$(\d+)\.")

MARGIN_FLOOR = 300


def _money(v: int) -> str:
    return f"${v:,}"


def _json_after(text: str, marker: str) -> Optional[dict]:
    i = text.find(marker)
    if i < 0:
        return None
    objs = json_objects(text[i + len(marker):])
    return objs[0] if objs else None


def _between(text: str, start: str, end: str) -> str:
    i = text.find(start)
    if i < 0:
        return ""
    i += len(start)
    j = text.find(end, i)
    return text[i:j if j >= 0 else len(text)]


class SyntheticChatModel:
    """Deterministic rule-based replies to every framework prompt."""

    def __init__(self, catalog: Catalog, model: str = "synthetic"):
        self.model = model
        self.persona_names = catalog.persona_names()
        self.snippets = {p.prompt_snippet: p.name for p in catalog.personas}

    def send(self, messages, temperature=0.0):
        if temperature != 0.0:
            raise TransportError("framework calls must use temperature 0")
        system = messages[0]["content"] if messages and messages[0]["role"] == "system" else ""
        users = [m["content"] for m in messages if m["role"] == "user"]
        if not users:
            raise TransportError("no user message")
        prompt = users[0]  # retries restate the original request
        mine = [name for snip, name in self.snippets.items() if snip in system]
        if "assign a priority level to each item" in prompt:
            return self._plan(prompt, mine)
        if "predict the bidders' persona" in prompt:
            return self._profile(prompt)
        if "six strategic actions" in prompt:
            return self._strategy(prompt)
        if "You should either withdraw" in prompt:
            return self._action(prompt)
        if "update the status of the auction" in prompt:
            return self._status(prompt)
        if "how other bidders perceive you" in prompt:
            return self._second_order(prompt)
        raise TransportError("unrecognised prompt")

    # -- planning ---------------------------------------------------------------
    def _plan(self, prompt: str, mine: Sequence[str]) -> str:
        budget = int(re.search(r"total budget of \$(\d+)", prompt).group(1))
        rows = []
        for name, start, est, desc in _ITEM_LINE.findall(prompt):
            m = _IDEAL.search(desc)
            rows.append((name, int(start), int(est), m.group(1) if m else None))
        scores, rest = {}, []
        for pos, (name, start, est, persona) in enumerate(rows):
            if persona in mine:
                scores[name] = 3
            elif start > budget:
                scores[name] = 1
            else:
                rest.append((-(est - start), pos, name))
        rest.sort()
        for rank, (_, _, name) in enumerate(rest):
            scores[name] = 3 - (3 * rank) // len(rest)
        ordered = {name: scores[name] for name, *_ in rows}
        top = [n for n, v in ordered.items() if v == 3]
        lines = [f"My budget is {_money(budget)}, so I will concentrate on the homes that suit "
                 f"me and keep the rest as opportunistic buys.",
                 f"Top priorities: {', '.join(top) if top else 'none'}.",
                 "", "```json", json.dumps(ordered), "```"]
        return "\n".join(lines)

    # -- profiling ----------------------------------------------------------------
    def _profile(self, prompt: str) -> str:
        target = re.search(r"focus on how many times (.+?) rasied price", prompt).group(1)
        history = _between(prompt, 'bidding war of ', '"\n\nYou are ')
        raises = sum(1 for who, amt in _HIST_LINE.findall(history) if who == target and amt)
        m = _IDEAL.search(_between(prompt, "items description: ", ", predict"))
        persona = m.group(1) if m else None
        prev = _json_after(prompt, f"Your previous profiling of {target} was: ")
        weights = {n: 0.0 for n in self.persona_names}
        if prev and isinstance(prev.get(target), dict):
            weights.update({k: float(v) for k, v in prev[target].items() if k in weights})
        if persona not in weights:
            return (f"{target} gave no usable signal on this item.\n\n"
                    + json.dumps({target: {n: 0 for n in self.persona_names}}))
        old = weights[persona]
        step = 0.1 * min(raises, 3) if raises else -0.1
        new = round(max(-1.0, min(1.0, old + step)), 2)
        if new == old:
            return (f"{target} did nothing informative on this item, so I keep my view.\n\n"
                    + json.dumps({target: {n: 0 for n in self.persona_names}}))
        weights[persona] = new
        verb = "Increased" if new > old else "Decreased"
        why = (f"{target} raised the price {raises} time{'s' if raises != 1 else ''}"
               if raises else f"{target} never bid")
        return (f"{why} on a home aimed at {persona} buyers.\n"
                f"- {verb} \"{persona}\" from {old:g} to {new:g}.\n\n"
                + json.dumps({target: {k: round(v, 2) for k, v in weights.items()}}))

    # -- strategy / action -----------------------------------------------------
    @staticmethod
    def _situation(msg: str):
        est_m = _ESTIMATE.search(msg)
        item, est = est_m.group(1), int(est_m.group(2))
        high = _HIGH.search(msg)
        if high:
            nxt = int(high.group(1)) + int(high.group(3))
            raises = msg.count(": $") if "round" in msg else 0
        else:
            nxt, raises = int(_START.search(msg).group(1)), 0
        ideal = _IDEAL.search(msg)
        return item, est, nxt, raises, ideal.group(1) if ideal else None

    def _strategy(self, prompt: str) -> str:
        msg = _between(prompt, 'The auctioneer says: "', '"\n\nHere is your current status')
        item, est, nxt, raises, persona = self._situation(msg)
        status = _json_after(prompt, "Here is your current status:") or {}
        plan = _json_after(prompt, "priority scale of all the items:") or {}
        profiles = _json_after(prompt, "more likely to bid on items of that type:") or {}
        budget = int(status.get("remaining_budget", 0))
        prio = int(plan.get(item, 1))
        margin = est - nxt
        keen = [(w, who) for who, ws in sorted(profiles.items())
                for p, w in ws.items() if p == persona and w >= 0.5]
        if margin <= MARGIN_FLOOR:
            choice, why = "E", f"the margin at {_money(nxt)} is only {_money(margin)}"
        elif nxt > budget:
            choice, why = "F", f"the next bid {_money(nxt)} is beyond my budget"
        elif raises >= 8 and prio < 3:
            choice, why = "F", "this has turned into a costly bidding war"
        elif prio == 3:
            choice, why = "A", f"{item} is a top priority and I can afford {_money(nxt)}"
        elif prio >= 2 and keen and nxt <= 0.9 * est:
            w, who = max(keen)
            choice, why = "B", (f"{who} highly values {persona} ({w:g}), so pushing the price "
                                f"up will drain competitors' budgets")
        elif prio == 2:
            choice, why = "C", "my budget allows it without hurting later rounds"
        else:
            choice, why = "D", "I want to conserve budget for higher-priority items"
        return (f"The next legal bid is {_money(nxt)} against my estimate of {_money(est)}.\n\n"
                f"I chose to {choice} because {why}.")

    def _action(self, prompt: str) -> str:
        msg = _between(prompt, 'the auctioneer says: "', '" As ')
        advice = _between(prompt, 'decision: "', '"\n\nFollow')
        item, est, nxt, _, _ = self._situation(msg)
        m = re.search(r"I chose to ([A-F])", advice)
        if m:
            go = m.group(1) in "ABC"
        else:
            go = nxt <= 0.8 * est
        if go:
            return f"{item} is still worth it at this price. I bid {_money(nxt)}!"
        return f"The price has passed what {item} is worth to me. I'm out!"

    # -- status ---------------------------------------------------------------
    def _status(self, prompt: str) -> str:
        me = re.search(r"As (.+?), you have to update the status", prompt).group(1)
        prev = _json_after(prompt, "Here's your previous status:") or {}
        board = {"remaining_budget": int(prev.get("remaining_budget", 0)),
                 "total_profits": dict(prev.get("total_profits", {})),
                 "winning_bids": {k: dict(v) for k, v in prev.get("winning_bids", {}).items()}}
        sold = _SOLD.search(prompt)
        was = _WAS.search(prompt)
        if sold and was:
            item, winner, hammer = sold.group(1), sold.group(2), int(sold.group(3))
            est = int(was.group(2))
            board["winning_bids"].setdefault(winner, {})[item] = hammer
            board["total_profits"][winner] = board["total_profits"].get(winner, 0) + est - hammer
            if winner == me:
                board["remaining_budget"] -= hammer
            note = f"{winner} took {item} at {_money(hammer)}."
        else:
            note = "The item passed with no bids."
        return f"{note}\n\n```json\n{json.dumps(board)}\n```"

    # -- second-order -----------------------------------------------------------
    def _second_order(self, prompt: str) -> str:
        me = re.search(r"You are (.+?)\. Based on", prompt).group(1)
        history = _between(prompt, 'bidding war of ', '"\nHere is your current status')
        status = _json_after(prompt, "Here is your current status:") or {}
        others = [n for n in status.get("total_profits", {}) if n != me]
        seen: dict[str, list[str]] = {}
        for who, amt in _HIST_LINE.findall(history):
            seen.setdefault(who, []).append(amt)
        lines = []
        for who in others:
            acts = seen.get(who, [])
            bids = sum(1 for a in acts if a)
            if bids == 0:
                lines.append(f"- {who} thinks I will fight for homes like this one. They might "
                             f"adjust their strategy by avoiding competition with me here.")
            else:
                lines.append(f"- {who} thinks I can be pushed on homes like this one. They "
                             f"might adjust their strategy by testing my limits ({bids} raises).")
        return "\n".join(lines) if lines else "- No rival has shown how they see me yet."


class SyntheticPolicy:
    """Remote-policy stand-in: recommends a bid while the margin stays healthy."""

    def recommend(self, request: dict) -> str:
        item, est, nxt, _, _ = SyntheticChatModel._situation(request["auctioneer_msg"])
        budget = json.loads(request["status_text"])["remaining_budget"]
        if nxt <= budget and nxt <= 0.9 * est and est - nxt > MARGIN_FLOOR:
            return (f"Bidding {_money(nxt)} on {item} keeps a margin of {_money(est - nxt)}. "
                    f"I recommend to bid.")
        return f"{item} is no longer a good deal at {_money(nxt)}. I recommend to withdraw."


class SyntheticBackend:
    def __init__(self, catalog: Catalog):
        self.catalog = catalog

    def chat(self, model):
        return SyntheticChatModel(self.catalog, model)

    def policy(self, endpoint):
        return SyntheticPolicy()


class CannedTransport:
    """Returns fixed replies in order; used to author hand-written fixtures."""

    def __init__(self, model: str, replies: Sequence[str]):
        self.model = model
        self._replies = list(replies)

    def send(self, messages, temperature=0.0):
        if not self._replies:
            raise TransportError("no canned reply left")
        return self._replies.pop(0)


# Two hand-written cases that pin the reply shapes the parsers must handle. The
# builders are shared by the fixture script and the tests so the request keys
# match exactly.
CURATED_MODEL = "claude-3-5-sonnet"
CURATED_NAMES = ("Bidder 1", "Bidder 2")


def _urban_listing(catalog: Catalog):
    urban = catalog.persona_names().index("Urban Dwellers")
    item = next(x for x in catalog.listings if x.matched_personas == {urban})
    others = [x for x in catalog.listings if not x.matched_personas & {urban}][:3]
    return item, others


def _curated_agent(catalog: Catalog, transport, items, strategy: str):
    from .agents import AgentSpec, BidderAgent, PolicyKind
    from .engine import perceived_value

    spec = AgentSpec(name=CURATED_NAMES[0], persona_mix=((0, 1.0),),
                     policy=PolicyKind(kind="llm", model=CURATED_MODEL, tom_level=1,
                                       persona_source="inferred", strategy=strategy))
    est = {x.id: perceived_value(x, spec.overhead) for x in items}
    return BidderAgent(spec, 0, CURATED_NAMES, catalog.personas, est, transport=transport)


def _prior_rival_profile(catalog: Catalog, urban_weight: float):
    from .profiling import ProfileVector

    names = catalog.persona_names()
    w = [0.0] * len(names)
    w[names.index("Urban Dwellers")] = urban_weight
    w[names.index("Relocation for Work")] = 0.3
    w[names.index("Rural Home Seekers")] = -0.2
    return ProfileVector(1, tuple(w))


def curated_profile_reply(target: str, persona_names: Sequence[str]) -> str:
    weights = {n: 0.0 for n in persona_names}
    weights.update({"Urban Dwellers": 0.8, "Relocation for Work": 0.3,
                    "Rural Home Seekers": -0.2})
    return (f"{target} opened the bidding on the downtown home right away, which fits a buyer "
            f"who wants to live in the city.\n\n"
            f"- Increased \"Urban Dwellers\" from 0.7 to 0.8 because of the quick bid on a "
            f"walkable downtown home.\n"
            f"- Kept \"Relocation for Work\" at 0.3 and \"Rural Home Seekers\" at -0.2.\n\n"
            + json.dumps({target: weights}))


def curated_strategy_reply(rival: str) -> str:
    return (f"{rival} puts a weight of 0.8 on Urban Dwellers (0.8) and this is an urban home, so "
            f"they will keep bidding. It is only a medium priority for me and my budget is "
            f"comfortable.\n\n"
            f"I chose to B because raising the price here will drain competitors' budgets, "
            f"especially {rival}, who highly values this kind of home.")


def curated_profile_case(catalog: Catalog, transport=None):
    """(agent, item result) where the rival bid once on an urban listing.

    The agent's prior on the rival has Urban Dwellers at 0.7. With no transport
    given, a canned transport answers with the hand-written reply.
    """
    from .engine import BidEvent, ItemResult, Settlement

    item, others = _urban_listing(catalog)
    if transport is None:
        transport = CannedTransport(CURATED_MODEL, [
            curated_profile_reply(CURATED_NAMES[1], catalog.persona_names())])
    agent = _curated_agent(catalog, transport, [item, *others], strategy="none")
    agent.profiles = {1: _prior_rival_profile(catalog, 0.7)}
    history = (BidEvent(0, item.id, 1, "bid", item.starting_price, 1),
               BidEvent(1, item.id, 0, "withdraw", None, 1))
    result = ItemResult(0, item.public(), history,
                        Settlement(item.id, 1, item.starting_price, False),
                        agent.spec.initial_budget, tuple(x.public() for x in others))
    return agent, result


def curated_strategy_case(catalog: Catalog, transport=None):
    """(agent, bid view) on an urban listing the rival is believed to value at 0.8.

    The listing is a medium priority for the agent, so the expected rule is B.
    """
    from .engine import BidEvent, BidView, min_increment
    from .planning import PriorityList

    item, others = _urban_listing(catalog)
    step = min_increment(item.starting_price, 0.1)
    high = item.starting_price
    if transport is None:
        transport = CannedTransport(CURATED_MODEL, [
            curated_strategy_reply(CURATED_NAMES[1]),
            f"Following the advice, I bid {_money(high + step)}!"])
    agent = _curated_agent(catalog, transport, [item, *others], strategy="expert")
    agent.profiles = {1: _prior_rival_profile(catalog, 0.8)}
    agent.priorities = PriorityList({item.id: 2, **{x.id: 2 for x in others}})
    remaining = tuple(x.public() for x in [item, *others])
    view = BidView(0, item.public(), 2, (1, high), step, high + step,
                   agent.spec.initial_budget,
                   (BidEvent(0, item.id, 1, "bid", high, 1),), frozenset({0, 1}), remaining)
    return agent, view
