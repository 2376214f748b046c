"""Scripted negotiator personas.

Each persona is a parametric concession strategy: it opens at an anchor
share of the surplus, concedes over its own turns, and accepts standing
offers that clear its thresholds. Families add reactive twists (mirroring
concessions, punishing unfairness, retaliating against insults). They are
deliberately simple so that tournaments among them are reproducible and
no single family can dominate the rest.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from ..env import (
    Action,
    Context,
    EpisodeState,
    GameSpec,
    Kind,
    ProtocolError,
    deal_rewards,
    validate_action,
)

FAMILIES = (
    "rational",
    "cunning",
    "desperate",
    "tit_for_tat",
    "fairness",
    "emotional",
    "brainstorm_mix",
)


@dataclass(frozen=True)
class PersonaParams:
    family: str
    opening_anchor: float = 0.75   # fraction of the surplus demanded at the first offer
    concession_rate: float = 0.08  # share conceded per own later turn
    accept_threshold: float = 0.0  # minimum own reward (absolute) to accept
    fairness_threshold: float = 0.0  # minimum own surplus share to ever accept
    reject_floor: float = -1.0     # own share below which the offer is rejected outright
    retaliation: float = 0.0       # extra share demanded after an insult / lowball
    temperature: float = 0.0       # grid-step jitter on emitted offers

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown persona family {self.family!r}")
        for frac in (self.opening_anchor, self.concession_rate):
            if not 0.0 <= frac <= 1.0:
                raise ValueError("fractions must lie in [0, 1]")


def _token(spec: GameSpec, name: str) -> str:
    return name if name in spec.message_alphabet else spec.message_alphabet[0]


def own_deal_reward(spec: GameSpec, side: int, payload) -> float:
    r1, r2 = deal_rewards(spec, payload)
    return r1 if side == 1 else r2


@lru_cache(maxsize=256)
def cooperative_payloads(spec: GameSpec, side: int) -> Tuple[Tuple[object, float], ...]:
    """Offer payloads sorted by own reward, restricted to deals the opponent
    could rationally accept (opponent reward >= 0)."""
    out = []
    for payload in spec.offer_payloads():
        r1, r2 = deal_rewards(spec, payload)
        own, opp = (r1, r2) if side == 1 else (r2, r1)
        if opp >= 0 and own >= 0:
            out.append((payload, own))
    out.sort(key=lambda item: item[1])
    return tuple(out)


def max_cooperative_reward(spec: GameSpec, side: int) -> float:
    frontier = cooperative_payloads(spec, side)
    return frontier[-1][1] if frontier else 0.0


def payload_at_share(spec: GameSpec, side: int, share: float) -> object:
    """Offer payload whose own reward is closest to share * attainable max."""
    frontier = cooperative_payloads(spec, side)
    if not frontier:
        raise ProtocolError("no cooperative payload exists for this spec")
    target = share * frontier[-1][1]
    best = min(frontier, key=lambda item: abs(item[1] - target))
    return best[0]


def _payload_share(spec: GameSpec, side: int, payload) -> float:
    scale = max_cooperative_reward(spec, side)
    if scale <= 0:
        return 0.0
    return own_deal_reward(spec, side, payload) / scale


def _own_turn_count(state: EpisodeState, side: int) -> int:
    return sum(1 for agent, _ in state.trajectory if agent == side)


def _last_offers_by(state: EpisodeState, side: int) -> List[object]:
    return [a.payload() for agent, a in state.trajectory
            if agent == side and a.kind == Kind.OFFER]


def _grid_rank(spec: GameSpec, side: int, payload) -> int:
    frontier = [p for p, _ in cooperative_payloads(spec, side)]
    try:
        return frontier.index(payload)
    except ValueError:
        # off-frontier payload: rank by own reward
        own = own_deal_reward(spec, side, payload)
        ranks = [i for i, p in enumerate(frontier)
                 if own_deal_reward(spec, side, p) <= own]
        return max(ranks) if ranks else 0


class Persona:
    """PolicyProvider wrapping a PersonaParams bundle."""

    def __init__(self, params: PersonaParams):
        self.params = params

    # -- decision logic --------------------------------------------------

    def act(self, side: int, state: EpisodeState, context: Context,
            rng: np.random.Generator) -> Action:
        if state.actor != side:
            raise ProtocolError("not this agent's turn")
        params = self.params
        if params.family == "brainstorm_mix":
            params = self._brainstormed_params(rng)
        standing = state.standing
        if standing is not None and standing.proposer != side:
            verdict = self._answer_standing(params, side, state)
            if verdict is not None:
                return self._jittered(verdict, side, state, params, rng)
        return self._jittered(self._counter_offer(params, side, state), side, state, params, rng)

    def action_distribution(self, side, state, context):
        if self.params.temperature > 0 or self.params.family == "brainstorm_mix":
            raise NotImplementedError("stochastic persona has no closed-form distribution")
        action = self.act(side, state, context, np.random.default_rng(0))
        return [(action, 1.0)]

    # -- pieces ----------------------------------------------------------

    def _answer_standing(self, params: PersonaParams, side: int,
                         state: EpisodeState) -> Optional[Action]:
        spec = state.spec
        payload = state.standing.payload
        own = own_deal_reward(spec, side, payload)
        share = _payload_share(spec, side, payload)
        angry = self._insult_count(side, state) >= 2
        if params.reject_floor >= 0 and share < params.reject_floor:
            token = "appeal_fairness" if params.family == "fairness" else "insult"
            return Action(Kind.REJECT, message=_token(spec, token))
        if params.retaliation > 0 and angry:
            return Action(Kind.REJECT, message=_token(spec, "insult"))
        if own >= params.accept_threshold and share >= params.fairness_threshold:
            return Action(Kind.ACCEPT, message=_token(spec, "flatter"))
        return None

    def _counter_offer(self, params: PersonaParams, side: int,
                       state: EpisodeState) -> Action:
        spec = state.spec
        k = _own_turn_count(state, side)
        target = params.opening_anchor - params.concession_rate * k
        if params.family == "tit_for_tat":
            target = self._mirrored_target(params, side, state)
        if params.retaliation > 0 and self._was_provoked(side, state):
            target = target + params.retaliation
        target = float(np.clip(target, 0.02, 0.98))
        payload = payload_at_share(spec, side, target)
        token = self._offer_message(params, side, state, target)
        return Action.offer(payload, _token(spec, token))

    def _mirrored_target(self, params: PersonaParams, side: int,
                         state: EpisodeState) -> float:
        """Concede exactly as many frontier steps as the opponent just did."""
        spec = state.spec
        other = 2 if side == 1 else 1
        theirs = _last_offers_by(state, other)
        k = _own_turn_count(state, side)
        if len(theirs) < 2 or k == 0:
            return params.opening_anchor
        # opponent's concession, measured on *their* frontier, in grid steps
        step_prev = _grid_rank(spec, other, theirs[-2])
        step_last = _grid_rank(spec, other, theirs[-1])
        conceded_steps = max(0, step_prev - step_last)
        mine = _last_offers_by(state, side)
        my_rank = _grid_rank(spec, side, mine[-1]) if mine else len(
            cooperative_payloads(spec, side)) - 1
        frontier = cooperative_payloads(spec, side)
        new_rank = int(np.clip(my_rank - conceded_steps, 0, len(frontier) - 1))
        top = frontier[-1][1]
        return frontier[new_rank][1] / top if top > 0 else 0.5

    def _offer_message(self, params: PersonaParams, side: int,
                       state: EpisodeState, target: float) -> str:
        family = params.family
        if family == "cunning":
            return "insult" if _own_turn_count(state, side) == 0 else "anchor_high"
        if family == "desperate":
            return "flatter"
        if family == "fairness":
            return "appeal_fairness"
        if family == "emotional":
            return "insult" if self._was_provoked(side, state) else "greeting"
        if family == "tit_for_tat":
            return "small_concession" if _own_turn_count(state, side) > 0 else "greeting"
        if state.h >= state.spec.horizon - 1:
            return "deadline_pressure"
        return "greeting"

    def _was_provoked(self, side: int, state: EpisodeState) -> bool:
        other = 2 if side == 1 else 1
        for agent, action in reversed(state.trajectory):
            if agent == other:
                if action.message == "insult":
                    return True
                if action.kind == Kind.OFFER:
                    return _payload_share(state.spec, side, action.payload()) < 0.1
                return False
        return False

    def _insult_count(self, side: int, state: EpisodeState) -> int:
        other = 2 if side == 1 else 1
        return sum(1 for agent, a in state.trajectory
                   if agent == other and a.message == "insult")

    def _brainstormed_params(self, rng: np.random.Generator) -> PersonaParams:
        """Per-turn draw over coarse strategy stances."""
        stance = rng.integers(0, 5)
        base = replace(self.params, family="rational")
        if stance == 0:
            return replace(base, opening_anchor=0.95, concession_rate=0.03)
        if stance == 1:
            return replace(base, opening_anchor=0.5, concession_rate=0.05)
        if stance == 2:
            return replace(base, opening_anchor=0.6, concession_rate=0.2)
        if stance == 3:
            return replace(base, opening_anchor=0.8, concession_rate=0.1)
        return replace(base, opening_anchor=0.7, concession_rate=0.15)

    def _jittered(self, action: Action, side: int, state: EpisodeState,
                  params: PersonaParams, rng: np.random.Generator) -> Action:
        """Apply temperature noise to offers, staying on the frontier."""
        if action.kind != Kind.OFFER or params.temperature <= 0:
            return action
        frontier = cooperative_payloads(state.spec, side)
        if len(frontier) < 2:
            return action
        rank = _grid_rank(state.spec, side, action.payload())
        shift = int(round(rng.normal(0.0, params.temperature)))
        rank = int(np.clip(rank + shift, 0, len(frontier) - 1))
        jittered = Action.offer(frontier[rank][0], action.message)
        ok, _ = validate_action(state, jittered)
        return jittered if ok else action


def default_personas(spec: GameSpec) -> dict:
    """Catalog of persona providers scaled to the given game."""
    scale = max_cooperative_reward(spec, 1)
    return {
        "rational": Persona(PersonaParams(
            "rational", opening_anchor=0.7, concession_rate=0.08,
            accept_threshold=0.2 * scale, temperature=0.5)),
        "cunning": Persona(PersonaParams(
            "cunning", opening_anchor=0.95, concession_rate=0.03,
            accept_threshold=0.55 * scale, temperature=0.3)),
        "desperate": Persona(PersonaParams(
            "desperate", opening_anchor=0.5, concession_rate=0.15,
            accept_threshold=0.05 * scale, temperature=0.7)),
        "tit_for_tat": Persona(PersonaParams(
            "tit_for_tat", opening_anchor=0.75, concession_rate=0.05,
            accept_threshold=0.3 * scale)),
        "fairness": Persona(PersonaParams(
            "fairness", opening_anchor=0.6, concession_rate=0.05,
            accept_threshold=0.35 * scale, fairness_threshold=0.3,
            reject_floor=0.12, temperature=0.3)),
        "emotional": Persona(PersonaParams(
            "emotional", opening_anchor=0.8, concession_rate=0.07,
            accept_threshold=0.25 * scale, retaliation=0.15, temperature=0.5)),
        "brainstorm_mix": Persona(PersonaParams(
            "brainstorm_mix", opening_anchor=0.7, concession_rate=0.08,
            accept_threshold=0.2 * scale, temperature=0.4)),
    }
