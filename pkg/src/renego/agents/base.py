"""Uniform decision interface shared by personas, models, and search agents."""
from __future__ import annotations

from typing import List, Protocol, Tuple, runtime_checkable

import numpy as np

from ..env import Action, Context, EpisodeState


@runtime_checkable
class PolicyProvider(Protocol):
    """Anything that can act at a decision point of the negotiation.

    ``act`` must return a legal action. ``action_distribution`` is optional
    (raise NotImplementedError when unavailable); the oracle module requires
    it to enumerate trajectory trees exactly.
    """

    def act(self, side: int, state: EpisodeState, context: Context,
            rng: np.random.Generator) -> Action: ...

    def action_distribution(self, side: int, state: EpisodeState,
                            context: Context) -> List[Tuple[Action, float]]: ...


def derive_rng(run_seed: int, *path: int) -> np.random.Generator:
    """Deterministic child stream for (seed, episode, turn, candidate, ...).

    Streams derived this way are identical at any degree of parallelism.
    """
    ss = np.random.SeedSequence(entropy=run_seed, spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


def sample_distribution(dist: List[Tuple[Action, float]], rng: np.random.Generator) -> Action:
    probs = np.asarray([p for _, p in dist])
    idx = rng.choice(len(dist), p=probs / probs.sum())
    return dist[int(idx)][0]


class DistributionPolicy:
    """Provider defined directly by a state-conditional distribution function."""

    def __init__(self, dist_fn):
        self._dist_fn = dist_fn

    def action_distribution(self, side, state, context):
        return self._dist_fn(side, state, context)

    def act(self, side, state, context, rng):
        return sample_distribution(self.action_distribution(side, state, context), rng)
