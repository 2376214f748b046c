"""Prompt template rendering for bridge requests.

Rendering happens on this side of the wire: clients receive final text in
the request's ``private_info`` field, with the history blocks already
substituted. Templates live as text assets next to this module and use
``{{placeholder}}`` markers.
"""
from __future__ import annotations

import re
from importlib import resources
from typing import Optional, Sequence

from ..env import Context, EpisodeState, GameSpec, Kind, Variant

_PLACEHOLDER = re.compile(r"\{\{([a-z_0-9]+)\}\}")


def load_template(template_id: str) -> str:
    path = resources.files("renego.bridge") / "templates" / f"{template_id}.txt"
    return path.read_text(encoding="utf-8").strip()


def render(template: str, variables: dict) -> str:
    def sub(match):
        key = match.group(1)
        if key not in variables:
            raise KeyError(f"template placeholder {{{{{key}}}}} not provided")
        return str(variables[key])

    return _PLACEHOLDER.sub(sub, template)


def _private_details(spec: GameSpec, side: int) -> str:
    if spec.variant == Variant.BUYER_SELLER:
        role = spec.agent1_role if side == 1 else (
            "buyer" if spec.agent1_role == "seller" else "seller")
        if role == "seller":
            return f"you are the seller; your production cost is {spec.production_cost:g}"
        return f"you are the buyer; your budget is {spec.budget:g}"
    n = (spec.n1x, spec.n1y) if side == 1 else (spec.n2x, spec.n2y)
    v = (spec.v1x, spec.v1y) if side == 1 else (spec.v2x, spec.v2y)
    return (f"you hold {n[0]} of X and {n[1]} of Y; "
            f"each X is worth {v[0]:g} to you and each Y is worth {v[1]:g}")


def _format_turn(spec: GameSpec, agent: int, action) -> str:
    if action.kind == Kind.OFFER:
        payload = (f"price {action.price:g}" if action.price is not None
                   else f"transfer (dx={action.dx}, dy={action.dy})")
        body = f"proposes {payload}"
    else:
        body = action.kind.value + ("s" if action.kind != Kind.WAIT else "s")
    return f"agent {agent} {body} [{action.message}]"


def format_history(spec: GameSpec, context: Context, trajectory) -> str:
    lines = []
    for t, record in enumerate(context, start=1):
        turns = "; ".join(_format_turn(spec, agent, action)
                          for agent, action in record.trajectory)
        outcome = record.cause.value
        if record.deal is not None:
            outcome += f" at {record.deal}"
        lines.append(f"episode {t}: {turns} -> {outcome} "
                     f"(r1={record.rewards.r1:g}, r2={record.rewards.r2:g})")
    current = "; ".join(_format_turn(spec, agent, action)
                        for agent, action in trajectory)
    lines.append(f"current episode: {current if current else '(no turns yet)'}")
    return " | ".join(lines)


def _episode_summaries(context: Context, side: int):
    deals, rewards = [], []
    for record in context:
        deals.append("no deal" if record.deal is None else str(record.deal))
        pair = record.rewards
        rewards.append(f"{pair.r1 if side == 1 else pair.r2:g}")
    return ", ".join(deals), ", ".join(rewards)


def render_request_text(
    template_id: str,
    spec: GameSpec,
    side: int,
    context: Context,
    state: EpisodeState,
    num_episodes: int,
    candidates: Optional[Sequence[str]] = None,
    persona_template: Optional[str] = None,
) -> str:
    """Final prompt text for one decision point."""
    rules_id = ("rules_buyer_seller" if spec.variant == Variant.BUYER_SELLER
                else "rules_resource_exchange")
    deals, rewards = _episode_summaries(context, side)
    variables = {
        "agent_name": f"agent {side}",
        "horizon": spec.horizon,
        "num_episodes": num_episodes,
        "current_episode": len(context) + 1,
        "message_tokens": ", ".join(spec.message_alphabet),
        "private_details": _private_details(spec, side),
        "previous_deals": deals,
        "previous_rewards": rewards,
        "nego_history": format_history(spec, context, state.trajectory),
        "response_list": "\n".join(f"({i}) {c}" for i, c in enumerate(candidates or [], 1)),
    }
    variables["rules_of_games"] = render(load_template(rules_id), variables)
    variables["episode_reminder"] = render(load_template("episode_reminder"), variables)
    text = render(load_template(template_id), variables)
    if persona_template:
        text = render(load_template(persona_template), variables) + "\n\n" + text
    return text
