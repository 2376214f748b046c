"""Empirical opponent model with an optimism fallback.

The model buckets every opponent decision point by (turn index, standing
offer bucket, last message token) and tracks the empirical frequency of
the opponent's responses per bucket, pooled over all completed episodes
plus the current partial trajectory. Where it has never observed the
opponent, it predicts the legal response most favorable to the planning
agent (optimism in the face of uncertainty), or uniform play when optimism
is switched off.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..env import (
    Action,
    Context,
    EpisodeState,
    GameSpec,
    Kind,
    apply_action,
    deal_rewards,
    legal_actions,
    new_episode,
)
from .base import sample_distribution


@dataclass(frozen=True)
class BucketingConfig:
    offer_buckets: int = 4
    include_message: bool = True
    smoothing: float = 0.0  # pseudo-count added to every legal action
    optimism: bool = True

    def __post_init__(self):
        if self.offer_buckets < 1:
            raise ValueError("offer_buckets must be >= 1")
        if self.smoothing < 0:
            raise ValueError("smoothing must be nonnegative")


def _payload_rank(spec: GameSpec, payload) -> int:
    payloads = spec.offer_payloads()
    return payloads.index(payload)


def payload_bucket(spec: GameSpec, config: BucketingConfig, payload) -> int:
    """Quantile bucket of an offer payload within the ordered proposal set."""
    payloads = spec.offer_payloads()
    if len(payloads) == 1:
        return 0
    rank = _payload_rank(spec, payload)
    return min(config.offer_buckets - 1,
               rank * config.offer_buckets // len(payloads))


def bucket_key(spec: GameSpec, config: BucketingConfig,
               state: EpisodeState) -> Tuple:
    standing = state.standing
    offer_part = (payload_bucket(spec, config, standing.payload), standing.proposer) \
        if standing is not None else None
    message_part = state.last_message() if config.include_message else None
    return (state.h, offer_part, message_part)


def _action_key(action: Action) -> Tuple:
    return (action.kind.value, action.payload(), action.message)


class OpponentModel:
    """Bucketed conditional action distribution of one agent."""

    def __init__(self, spec: GameSpec, side: int, config: BucketingConfig):
        self.spec = spec
        self.side = side  # the modeled (opponent) agent
        self.config = config
        self.counts: Dict[Tuple, Dict[Tuple, float]] = {}
        self.observations = 0

    # -- fitting ----------------------------------------------------------

    def observe_trajectory(self, trajectory):
        state = new_episode(self.spec)
        for agent, action in trajectory:
            if agent == self.side:
                key = bucket_key(self.spec, self.config, state)
                per_key = self.counts.setdefault(key, {})
                per_key[_action_key(action)] = per_key.get(_action_key(action), 0.0) + 1.0
                self.observations += 1
            state = apply_action(state, action)

    # -- prediction ---------------------------------------------------------

    def action_distribution(self, side: int, state: EpisodeState,
                            context: Context = ()) -> List[Tuple[Action, float]]:
        """Exact predicted distribution over legal actions at this state."""
        legal = legal_actions(state)
        by_key = {_action_key(a): i for i, a in enumerate(legal)}
        weights = np.full(len(legal), self.config.smoothing, dtype=float)
        observed = self.counts.get(bucket_key(self.spec, self.config, state), {})
        for action_key, count in observed.items():
            idx = by_key.get(action_key)
            if idx is not None:  # drop observations that are illegal here
                weights[idx] += count
        total = weights.sum()
        if total <= 0:
            return self._fallback(state, legal)
        return [(a, w / total) for a, w in zip(legal, weights) if w > 0]

    def act(self, side: int, state: EpisodeState, context: Context,
            rng: np.random.Generator) -> Action:
        return sample_distribution(self.action_distribution(side, state, context), rng)

    def _fallback(self, state: EpisodeState, legal) -> List[Tuple[Action, float]]:
        if not self.config.optimism:
            p = 1.0 / len(legal)
            return [(a, p) for a in legal]
        return [(optimistic_action(self.spec, self.side, state), 1.0)]


def optimistic_action(spec: GameSpec, side: int, state: EpisodeState) -> Action:
    """Legal action by `side` that is best for the *other* agent.

    With a standing offer from the other agent worth a positive reward to
    it, that is Accept; otherwise it is the offer whose deal would pay
    the other agent the most.
    """
    planner = 2 if side == 1 else 1
    message = spec.message_alphabet[0]
    standing = state.standing
    if standing is not None and standing.proposer == planner:
        r1, r2 = deal_rewards(spec, standing.payload)
        planner_reward = r1 if planner == 1 else r2
        if planner_reward > 0:
            return Action(Kind.ACCEPT, message=message)
    best_payload, best_value = None, -np.inf
    for payload in spec.offer_payloads():
        r1, r2 = deal_rewards(spec, payload)
        value = r1 if planner == 1 else r2
        if value > best_value:
            best_payload, best_value = payload, value
    if best_payload is None:
        return Action(Kind.WAIT, message=message)
    return Action.offer(best_payload, message)


def fit_opponent_model(
    spec: GameSpec,
    opponent_side: int,
    context: Context,
    partial_trajectory=(),
    config: Optional[BucketingConfig] = None,
) -> OpponentModel:
    """Count every opponent turn in the context and the current episode.

    Pure function of its inputs: the same history always yields the same
    model.
    """
    model = OpponentModel(spec, opponent_side, config or BucketingConfig())
    for record in context:
        model.observe_trajectory(record.trajectory)
    if partial_trajectory:
        model.observe_trajectory(partial_trajectory)
    return model
