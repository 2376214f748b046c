"""Repeated-game match loop shared by the metrics and the harness."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .agents import derive_rng
from .env import (
    Context,
    GameSpec,
    append_context,
    apply_action,
    new_episode,
    record_episode,
)


@dataclass
class MatchLog:
    """Everything one repeated match produced."""

    spec: GameSpec
    seed: int
    provider_ids: Dict[int, str]
    records: Context = ()
    diagnostics: Dict[int, list] = field(default_factory=dict)  # side -> BoNDecision list

    @property
    def episodes(self) -> int:
        return len(self.records)

    def rewards(self, side: int) -> List[float]:
        return [r.rewards.r1 if side == 1 else r.rewards.r2 for r in self.records]

    def normalized_rewards(self, side: int) -> List[float]:
        return [r.rewards.normalized_1 if side == 1 else r.rewards.normalized_2
                for r in self.records]


def play_match(
    spec: GameSpec,
    providers: Dict[int, object],
    episodes: int,
    seed: int,
    provider_ids: Optional[Dict[int, str]] = None,
    on_turn=None,
    on_episode=None,
) -> MatchLog:
    """Play `episodes` episodes, accumulating the context between them.

    Every decision gets its own derived random stream keyed by
    (seed, side, episode, turn), so replays and parallel runs are
    deterministic.
    """
    context: Context = ()
    for t in range(1, episodes + 1):
        state = new_episode(spec)
        while not state.terminal:
            side = state.actor
            rng = derive_rng(seed, side, t, state.h)
            action = providers[side].act(side, state, context, rng)
            if on_turn is not None:
                on_turn(t, state, side, action)
            state = apply_action(state, action)
        record = record_episode(state)
        if on_episode is not None:
            on_episode(t, record)
        context = append_context(context, record)
    diagnostics = {side: list(getattr(provider, "diagnostics", []))
                   for side, provider in providers.items()
                   if getattr(provider, "diagnostics", None)}
    return MatchLog(
        spec=spec,
        seed=seed,
        provider_ids=provider_ids or {side: type(p).__name__ for side, p in providers.items()},
        records=context,
        diagnostics=diagnostics,
    )
