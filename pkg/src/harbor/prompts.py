"""Prompt templates and the renderers that fill them.

Templates keep the wording (typos included) of the prompts the bidding agents
were designed around; only the persona list and key count are filled from the
catalog instead of being hard-coded.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping, Optional, Sequence

from .catalog import PublicListing
from .engine import BidEvent, Settlement

SYSTEM_TEMPLATE = """You are {bidder_name}. {persona} You are attending an ascending-bid housing auction as a bidder. This auction will have some other bidders to compete with you in bidding wars. The price is gradually raised, bidders drop out until finally only one bidder remains, and that bidder wins the item at this final price. Remember: Your primary objective is to secure the highest profit at the end of this auction, compared to all other bidders.

Here are some must-know rules for this auction:

1. Item Values: The true value of an item means its resale value in the broader market, which you don't know. You will have a personal estimation of the item value. However, note that your estimated value could deviate from the true value, due to your potential overestimation or underestimation of this item.

2. Winning Bid: The highest bid wins the item. Your profit from winning an item is determined by the difference between the item's true value and your winning bid. You should try to win an item at a bid as minimal as possible to save your budget.

3. Winner Pays: Note that only the winner pays for the bidding price of the item. Other bidder who participate in the bidding but lost do not have to pay at all."""

PLANNING_TEMPLATE = """As {bidder_name}, you have a total budget of ${budget}. This auction has a total of {item_num} items to be sequentially presented, they are: {items_info}

Please plan for your bidding strategy for the auction. A well-thought-out plan positions you advantageously against competitors, allowing you to allocate resources effectively. With a clear strategy, you can make decisions rapidly and confidently, especially under the pressure of the auction environment. Remember: Your primary objective is to secure the highest profit at the end of this auction, compared to all other bidders.

Remember to observe and learn other bidders' bidding habits overtime, and try to take advantage from their preference to maximize your gain.

After articulate your thinking, in you plan, assign a priority level to each item. Present the priorities for all items in a JSON format, each item should be represented as a key-value pair, where the key is the item name and the value is its priority on the scale from 1-3. An example output is: {{"Item A": 3, "Item B": 2, "Item C": 2}}. The descriptions of the priority scale of items are as follows.

    * 1 - This item is the least important. Consider giving it up if necessary to save money for the rest of the auction.
    * 2 - This item holds value but isn't a top priority for the bidder. Could bid on it if you have enough budget.
    * 3 - This item is of utmost importance and is a top priority for the bidder in the rest of the auction."""

PLANNING_UPDATE_CONTEXT = """

Here is your current status:
{prev_status}

Here is a profiling of your competitors' personas:
{current_profile}

Here is your previous priority scale of the remaining items:
{prev_plan}"""

PROFILE_TEMPLATE = """Here is the history of the bidding war of {current_item}: "{bidding_history}"

You are {bidder_name}. You are given a persona list: {persona_list}.

Given the bidding history you have seen so far, complete the below steps:

1. Study the bidding history, focus on how many times {target_bidder} rasied price for this item and what are the wining bids so far for each bidder. These 2 factors often say something about a person.
2. Based on {target_bidder}'s willingness to raise the price for this item, combining this items description: {house_desc}, predict the bidders' persona from the given persona list.
3. If the bidder does not show any interests for this item at all, you can reduce the weights on the personas that closely match with this item, even to the negatives.
4. Formulate your predictionn into how much weight each persona plays in {target_bidder}'s bidding. Present the prediction in the JSON format like this {{"{target_bidder}": {{{example_weights}...}}}} where the key is the persona type and the value is the weight of that persona type.
5. Make sure the range of each weights are within the range of -1 to 1. Make sure the output dictionary has {k} keys, each representing a persona type from the given list.

If {target_bidder} does not make any informative actions for a prediction, output an dictionary like {{"{target_bidder}": {{{example_zeros}...}}}} where all weights are 0. """

PROFILE_PREVIOUS_CONTEXT = """

Your previous profiling of {target_bidder} was: {prev_profile}"""

PRIORITY_SCALE = """The descriptions of the priority scale are as follows.
    * 1 - This item is the least important. Consider giving it up if necessary to save money for the rest of the auction.
    * 2 - This item holds value but isn't a top priority for the bidder. Could bid on it if you have enough budget.
    * 3 - This item is of utmost importance and is a top priority for the bidder in the rest of the auction."""

STRATEGY_TEMPLATE = """The auctioneer says: "{auctioneer_msg}"

Here is your current status:
{prev_status}

Here is your current priority scale of all the items:
{current_plan}
The descriptions of the priority scale are as follows.
    * 1 - This item is the least important. Consider giving it up if necessary to save money for the rest of the auction.
    * 2 - This item holds value but isn't a top priority for the bidder. Could bid on it if you have enough budget.
    * 3 - This item is of utmost importance and is a top priority for the bidder in the rest of the auction.

Here is a profiling of your competitors' personas. A higher weight for a particular item type suggests that a bidder is more likely to bid on items of that type:
{current_profile}

Use the knowledge of your competitors' personas, your current status, and your priority list to make a **strategic** decision. Remember: Your primary objective is to secure the highest profit at the end of this auction, compared to all other bidders. Consider the following **key bidding practices**:
1. **Do not let competitors win items too easily**--forcing them to bid higher weakens their future purchasing power.
2. **Exploit competitor weaknesses**--if a competitor values an item, consider bidding on it to drain their budget.
3. **Only the winning bidder pays**--losing bidders pay nothing, so well-placed aggressive bids can weaken competitors.
4. **Know when to stop**--if the profit margin is <= $300, it may not be worth pursuing.

You must select one of the following six strategic actions:
A. **Increase the bid if this item is a top priority.**
B. **Increase the bid to drain competitors' budgets, especially if a competitor highly values this item.**
C. **Increase the bid if your budget allows without compromising future rounds.**
D. **Quit to conserve budget for higher-priority items.**
E. **Quit because the profit margin is no longer attractive (i.e., profit margin <= $300).**
F. **Quit to avoid a costly bidding war.**

State your choice in the format:
**"I chose to [action] because [reason]."**
Make sure to **elaborate** on why you chose this action, considering your competitors' profiles, your current status, and your priority list."""

SECOND_ORDER_CONTEXT = """

Here is your analysis of how other bidders perceive you:
{report}"""

ACTION_TEMPLATE = """Now, the auctioneer says: "{auctioneer_msg}" As {bidder_name}, you have to decide whether to bid on this item or withdraw and explain why. Remember: Your primary objective is to secure the highest profit at the end of this auction, compared to all other bidders.

Here are some common practices of bidding:
1. Showing your interest by bidding with or slightly above the starting price of this item, then gradually increase your bid.
2. Think step by step of the pros and cons and the consequences of your action (e.g., remaining budget in future bidding) in order to achieve your primary objective.

Here is some professional strategic bidding advice to help you make your decision: "{strategic_reasoning}"

Follow the decision from the strategic bidding advice, then make your final decision clearly. You should either withdraw (saying "I'm out!") or make a higher bid for this item (saying "I bid $xxx!")."""

STATUS_TEMPLATE = """Here is the history of the bidding war of {cur_item}: "{bidding_history}"
The auctioneer concludes: "{hammer_msg}"

{win_lose_msg}

As {bidder_name}, you have to update the status of the auction based on this round of bidding. Here's your previous status:``` {prev_status} ```

Summarize the notable behaviors of all bidders in this round of bidding for future reference. Then, update the status JSON regarding the following information:
- 'remaining_budget': The remaining budget of you, expressed as a numerical value.
- 'total_profits': The total profits achieved so far for each bidder, where a numerical value following a bidder's name. No equation is needed, just the numerical value.
- 'winning_bids': The winning bids for every item won by each bidder, listed as key-value pairs, for example, {{"bidder_name": {{"item_name_1": winning_bid}}, {{"item_name_2": winning_bid}}, ...}}. If a bidder hasn't won any item, then the value for this bidder should be an empty dictionary {{}}.
- Only include the bidders mentioned in the given text. If a bidder is not mentioned (e.g. Bidder 4 in the following example), then do not include it in the JSON object.

After summarizing the bidding history, you must output the current status in a parsible JSON format. An example output looks like:
```{{"remaining_budget": 8000, "total_profits": {{"Bidder 1": 1300, "Bidder 2": 1800, "Bidder 3": 0}}, "winning_bids": {{"Bidder 1": {{"Item 2": 1200, "Item 3": 1000}}, "Bidder 2": {{"Item 1": 2000}}, "Bidder 3": {{}}}}}}```"""

SECOND_ORDER_TEMPLATE = """Here is the history of the bidding war of {current_item}:
"{bidding_history}"
Here is your current status:
{prev_status}
You are {bidder_name}. Based on the bidding history and current status, analyze how other bidders perceive you and how this affects their strategy.
Consider:
1. How they interpret your persona? Have they identified your preference for vacation homes? Are they using this perception to manipulate you?
2. How they adjust their bidding? Are they testing your limits, avoiding competition, or trying to drain your budget?
3. How they see you as a rival or ally  Will they cooperate, challenge, or exploit you in future rounds?
Response Format:
For each bidder, state how they perceive you and how they might adjust their strategy.
Example:
   - Bidder 1 thinks I ... They might adjust their strategy by ...
   - Bidder 2 thinks I ... They might adjust their strategy by ...

Keep your analysis concise and actionable to refine your bidding strategy."""

RETRY_MESSAGE = ("Your previous reply could not be parsed. Answer the previous request again "
                 "and follow the required output format exactly: {hint}")

NO_ADVICE = "No additional strategic advice is available; rely on your own judgement."


def system_message(bidder_name: str, snippets: Sequence[str]) -> str:
    return SYSTEM_TEMPLATE.format(bidder_name=bidder_name, persona="\n\n".join(snippets))


def money(v: int) -> str:
    return f"${v}"


def items_info(items: Sequence[PublicListing], estimates: Mapping[str, int]) -> str:
    lines = [f"\n- {x.name}: starting price {money(x.starting_price)}, your estimated value "
             f"{money(estimates[x.id])}. {x.description}" for x in items]
    return "".join(lines)


def planning_prompt(bidder_name: str, budget: int, items: Sequence[PublicListing],
                    estimates: Mapping[str, int], update: Optional[dict] = None) -> str:
    text = PLANNING_TEMPLATE.format(bidder_name=bidder_name, budget=budget,
                                    item_num=len(items), items_info=items_info(items, estimates))
    if update is not None:
        text += PLANNING_UPDATE_CONTEXT.format(**update)
    return text


def render_history(history: Iterable[BidEvent], names: Sequence[str]) -> str:
    parts = []
    for ev in history:
        if ev.accepted_bid:
            parts.append(f"- {names[ev.bidder_id]}: {money(ev.amount)}")
        else:
            parts.append(f"- {names[ev.bidder_id]}: withdrew")
    return "\n".join(parts) if parts else "(no bids)"


def profile_prompt(bidder_name: str, target: str, item: PublicListing, history_text: str,
                   persona_names: Sequence[str], prev_weights: Optional[Mapping[str, float]]
                   ) -> str:
    head = persona_names[:3]
    text = PROFILE_TEMPLATE.format(
        current_item=item.name, bidding_history=history_text, bidder_name=bidder_name,
        persona_list=json.dumps(list(persona_names)), target_bidder=target,
        house_desc=item.description, k=len(persona_names),
        example_weights=", ".join(f'"{n}": {w}' for n, w in zip(head, (0.2, 0.1, 0.1))),
        example_zeros=", ".join(f'"{n}": 0.0' for n in head),
    )
    if prev_weights is not None:
        text += PROFILE_PREVIOUS_CONTEXT.format(
            target_bidder=target, prev_profile=json.dumps({target: dict(prev_weights)}))
    return text


def auctioneer_message(item: PublicListing, history: Sequence[BidEvent], names: Sequence[str],
                       current_high: Optional[tuple[int, int]], min_increment: int,
                       cycle: int, estimate: Optional[int] = None) -> str:
    msg = f"{item.name}, {item.description} Starting at {money(item.starting_price)}."
    if current_high is None:
        msg += f" Do I have any bid at the starting price of {money(item.starting_price)}?"
    else:
        bids = [ev for ev in history if ev.accepted_bid]
        trail = " ".join(f"- {names[ev.bidder_id]}: {money(ev.amount)}" for ev in bids)
        holder, amount = current_high
        msg += (f" This is round {cycle} of bidding for this item: {trail}. Now we have "
                f"{money(amount)} from {names[holder]} for {item.name}. The minimum increase "
                f"over this highest bid is {money(min_increment)}. Do I have any advance on "
                f"{money(amount)}?")
    if estimate is not None:
        msg += f" (Your estimated value for {item.name} is {money(estimate)}.)"
    return msg


def priorities_json(scores: Mapping[str, int], id_to_name: Mapping[str, str]) -> str:
    return json.dumps({id_to_name[k]: v for k, v in scores.items()})


def profiles_json(profiles: Mapping[int, Sequence[float]], names: Sequence[str],
                  persona_names: Sequence[str]) -> str:
    return json.dumps({names[r]: {p: w for p, w in zip(persona_names, ws)}
                       for r, ws in sorted(profiles.items())})


def strategy_prompt(auctioneer_msg: str, prev_status: str, current_plan: str,
                    current_profile: str, second_order: str = "") -> str:
    text = STRATEGY_TEMPLATE.format(auctioneer_msg=auctioneer_msg, prev_status=prev_status,
                                    current_plan=current_plan, current_profile=current_profile)
    if second_order:
        text += SECOND_ORDER_CONTEXT.format(report=second_order)
    return text


def action_prompt(auctioneer_msg: str, bidder_name: str, advice: str) -> str:
    return ACTION_TEMPLATE.format(auctioneer_msg=auctioneer_msg, bidder_name=bidder_name,
                                  strategic_reasoning=advice)


def hammer_message(item: PublicListing, settlement: Settlement, names: Sequence[str]) -> str:
    if settlement.passed:
        return f"{item.name} is passed in with no bids."
    return (f"Sold! {item.name} to {names[settlement.winner]} at "
            f"{money(settlement.hammer_price)}!")


def win_lose_message(item: PublicListing, settlement: Settlement, me: int,
                     estimate: int) -> str:
    if settlement.winner == me:
        head = f"Congratulations! You won {item.name} at {money(settlement.hammer_price)}."
    else:
        head = f"You did not win {item.name}."
    return f"{head} Your estimated value for {item.name} was {money(estimate)}."


def status_prompt(item: PublicListing, history_text: str, hammer_msg: str, win_lose_msg: str,
                  bidder_name: str, prev_status: str) -> str:
    return STATUS_TEMPLATE.format(cur_item=item.name, bidding_history=history_text,
                                  hammer_msg=hammer_msg, win_lose_msg=win_lose_msg,
                                  bidder_name=bidder_name, prev_status=prev_status)


def second_order_prompt(item: PublicListing, history_text: str, prev_status: str,
                        bidder_name: str) -> str:
    return SECOND_ORDER_TEMPLATE.format(current_item=item.name, bidding_history=history_text,
                                        prev_status=prev_status, bidder_name=bidder_name)
