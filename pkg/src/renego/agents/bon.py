"""Best-of-N action search with opponent simulation.

At each of its decision points the agent samples N candidate actions from
a base policy (i.i.d., or one per high-level strategy family), estimates
each candidate by rolling the episode forward against the fitted opponent
model, and plays the candidate with the best empirical mean. Applying the
construction to its own output again ("sharpening") performs further
policy-iteration steps at inference time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..env import (
    Action,
    Context,
    EpisodeState,
    GameSpec,
    Kind,
    ProtocolError,
    apply_action,
    episode_rewards,
    validate_action,
)
from .base import PolicyProvider, derive_rng
from .opponent_model import BucketingConfig, OpponentModel, fit_opponent_model
from .personas import cooperative_payloads, own_deal_reward

STRATEGY_FAMILIES = (
    "aggressive_anchor",
    "fair_split",
    "fast_concession",
    "mirror",
    "deadline_pressure",
)


class ConfigError(ValueError):
    pass


class SimulationBudgetExceeded(RuntimeError):
    """Sharpening blew through its simulated-turn allowance."""


@dataclass(frozen=True)
class BoNConfig:
    n_candidates: int = 5
    generation_mode: str = "brainstorm"  # iid | brainstorm
    rollouts: int = 3
    sharpening: int = 1
    max_simulated_turns: Optional[int] = None

    def __post_init__(self):
        if self.n_candidates < 1:
            raise ConfigError("need at least one candidate")
        if self.rollouts < 1:
            raise ConfigError("need at least one rollout per candidate")
        if self.generation_mode not in ("iid", "brainstorm"):
            raise ConfigError(f"unknown generation mode {self.generation_mode!r}")
        if self.generation_mode == "brainstorm" and self.n_candidates > len(STRATEGY_FAMILIES):
            raise ConfigError("brainstorm supports at most one candidate per family")
        if self.sharpening < 1:
            raise ConfigError("sharpening level starts at 1")


@dataclass
class Candidate:
    action: Action
    family: str
    estimate: float = float("nan")
    samples: List[float] = field(default_factory=list)


@dataclass
class CandidateSet:
    candidates: List[Candidate]
    chosen: Optional[int] = None

    def __len__(self):
        return len(self.candidates)


def _clip_to_frontier(spec: GameSpec, side: int, target_reward: float) -> object:
    frontier = cooperative_payloads(spec, side)
    if not frontier:
        raise ProtocolError("no cooperative payload available")
    best = min(frontier, key=lambda item: abs(item[1] - target_reward))
    return best[0]


def _reference_reward(spec: GameSpec, side: int, state: EpisodeState,
                      base_action: Action) -> float:
    frontier = cooperative_payloads(spec, side)
    top = frontier[-1][1]
    if base_action.kind == Kind.OFFER:
        return own_deal_reward(spec, side, base_action.payload())
    if state.standing is not None:
        return own_deal_reward(spec, side, state.standing.payload)
    return 0.9 * top


def _brainstorm_transform(family: str, spec: GameSpec, side: int,
                          state: EpisodeState, base_action: Action) -> Action:
    """Deterministic per-family rewrite of the base action."""
    frontier = cooperative_payloads(spec, side)
    top = frontier[-1][1]
    ref = _reference_reward(spec, side, state, base_action)
    answerable = state.standing is not None and state.standing.proposer != side

    def token(name):
        return name if name in spec.message_alphabet else spec.message_alphabet[0]

    if family == "aggressive_anchor":
        target = ref + 0.5 * (top - ref)
        return Action.offer(_clip_to_frontier(spec, side, target), token("anchor_high"))
    if family == "fair_split":
        return Action.offer(_clip_to_frontier(spec, side, 0.5 * top),
                            token("appeal_fairness"))
    if family == "fast_concession":
        if answerable and own_deal_reward(spec, side, state.standing.payload) > 0:
            return Action(Kind.ACCEPT, message=token("flatter"))
        return Action.offer(_clip_to_frontier(spec, side, 0.5 * ref),
                            token("small_concession"))
    if family == "mirror":
        return base_action  # keep the base policy's own move in the set
    if family == "deadline_pressure":
        urgency = state.h / spec.horizon
        target = ref * (1.0 - 0.4 * urgency)
        return Action.offer(_clip_to_frontier(spec, side, target),
                            token("deadline_pressure"))
    raise ConfigError(f"unknown strategy family {family!r}")


def generate_candidates(
    base: PolicyProvider,
    mode: str,
    n: int,
    side: int,
    state: EpisodeState,
    context: Context,
    run_seed: int,
    seed_path: Sequence[int],
) -> CandidateSet:
    """Candidate actions only; estimates are filled in by the rollout step."""
    if mode == "brainstorm" and n > len(STRATEGY_FAMILIES):
        raise ConfigError("brainstorm supports at most one candidate per family")
    candidates = []
    if mode == "iid":
        for k in range(n):
            rng = derive_rng(run_seed, *seed_path, 1, k, 0)
            candidates.append(Candidate(base.act(side, state, context, rng), "iid"))
    else:
        rng = derive_rng(run_seed, *seed_path, 1, 0, 0)
        base_action = base.act(side, state, context, rng)
        for family in STRATEGY_FAMILIES[:n]:
            action = _brainstorm_transform(family, state.spec, side, state, base_action)
            ok, _ = validate_action(state, action)
            if not ok:
                action = base_action
            candidates.append(Candidate(action, family))
    return CandidateSet(candidates)


def simulate_rollout(
    state: EpisodeState,
    candidate: Action,
    side: int,
    base: PolicyProvider,
    oppo: OpponentModel,
    context: Context,
    rng: np.random.Generator,
    turn_meter=None,
) -> float:
    """Play the candidate, then (base, opponent-model) to the end; return
    the acting side's raw episode reward."""
    sim = apply_action(state, candidate)
    while not sim.terminal:
        if turn_meter is not None:
            turn_meter.tick()
        actor = sim.actor
        provider = base if actor == side else oppo
        sim = apply_action(sim, provider.act(actor, sim, context, rng))
    pair = episode_rewards(sim)
    return pair.r1 if side == 1 else pair.r2


class _TurnMeter:
    def __init__(self, limit: Optional[int]):
        self.limit = limit
        self.used = 0

    def tick(self):
        self.used += 1
        if self.limit is not None and self.used > self.limit:
            raise SimulationBudgetExceeded(
                f"simulated more than {self.limit} turns")


def bon_act(
    config: BoNConfig,
    base: PolicyProvider,
    oppo: OpponentModel,
    side: int,
    state: EpisodeState,
    context: Context,
    run_seed: int,
    seed_path: Sequence[int],
    turn_meter=None,
) -> Tuple[Action, CandidateSet]:
    """One best-of-N decision; ties break to the smallest candidate index."""
    if state.actor != side:
        raise ProtocolError("not this agent's turn")
    cset = generate_candidates(base, config.generation_mode, config.n_candidates,
                               side, state, context, run_seed, seed_path)
    for k, cand in enumerate(cset.candidates):
        for m in range(config.rollouts):
            rng = derive_rng(run_seed, *seed_path, 2, k, m)
            cand.samples.append(simulate_rollout(
                state, cand.action, side, base, oppo, context, rng, turn_meter))
        cand.estimate = float(np.mean(cand.samples))
    estimates = [c.estimate for c in cset.candidates]
    cset.chosen = int(np.argmax(estimates))
    return cset.candidates[cset.chosen].action, cset


@dataclass
class BoNDecision:
    episode: int
    h: int
    trajectory: Tuple
    families: List[str]
    actions: List[Action]
    estimates: List[float]
    chosen: int


class BoNAgent:
    """PolicyProvider running BoN-with-opponent-simulation at every turn."""

    def __init__(
        self,
        base: PolicyProvider,
        config: BoNConfig,
        run_seed: int,
        bucketing: Optional[BucketingConfig] = None,
        record_diagnostics: bool = True,
    ):
        self.base = base
        self.config = config
        self.run_seed = run_seed
        self.bucketing = bucketing or BucketingConfig()
        self.diagnostics: List[BoNDecision] = []
        self.record_diagnostics = record_diagnostics

    def act(self, side: int, state: EpisodeState, context: Context,
            rng: np.random.Generator) -> Action:
        opponent_side = 2 if side == 1 else 1
        oppo = fit_opponent_model(state.spec, opponent_side, context,
                                  state.trajectory, self.bucketing)
        episode = len(context) + 1
        seed_path = (side, episode, state.h)
        meter = _TurnMeter(self.config.max_simulated_turns)
        provider = self.base
        if self.config.sharpening > 1:
            provider = _Sharpened(self.base, self.config, oppo, self.run_seed,
                                  self.config.sharpening - 1, meter)
        action, cset = bon_act(self.config, provider, oppo, side, state, context,
                               self.run_seed, seed_path, meter)
        if self.record_diagnostics:
            self.diagnostics.append(BoNDecision(
                episode=episode,
                h=state.h,
                trajectory=state.trajectory,
                families=[c.family for c in cset.candidates],
                actions=[c.action for c in cset.candidates],
                estimates=[c.estimate for c in cset.candidates],
                chosen=cset.chosen,
            ))
        return action

    def action_distribution(self, side, state, context):
        raise NotImplementedError("BoN agent does not expose a closed form")


class _Sharpened:
    """Level-l BoN provider built on the level-(l-1) provider."""

    def __init__(self, base, config, oppo, run_seed, level, meter):
        self.base = base
        self.config = config
        self.oppo = oppo
        self.run_seed = run_seed
        self.level = level
        self.meter = meter

    def act(self, side, state, context, rng):
        provider = self.base
        if self.level > 1:
            provider = _Sharpened(self.base, self.config, self.oppo,
                                  self.run_seed, self.level - 1, self.meter)
        seed_path = (side, len(context) + 1, state.h, self.level)
        action, _ = bon_act(self.config, provider, self.oppo, side, state,
                            context, self.run_seed, seed_path, self.meter)
        return action

    def action_distribution(self, side, state, context):
        raise NotImplementedError


def sharpen(base: PolicyProvider, config: BoNConfig, oppo: OpponentModel,
            run_seed: int = 0) -> PolicyProvider:
    """Provider whose action at every decision point is bon_act over the
    (l-1)-level provider; level 1 recovers plain BoN over the base."""
    return _Sharpened(base, config, oppo, run_seed, config.sharpening,
                      _TurnMeter(config.max_simulated_turns))
