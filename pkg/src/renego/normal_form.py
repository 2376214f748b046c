"""Smooth fictitious play / follow-the-perturbed-leader on normal-form games.

The learner keeps an empirical-frequency belief over the opponent's past
actions and best-responds to it with additive payoff noise. The noise scale
decays like ``scale / sqrt(t)``, which makes the realized play no-regret
against arbitrary opponent sequences.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence, Union

import numpy as np


class InvalidHistoryError(ValueError):
    """Opponent history contains an out-of-range action index."""


@dataclass(frozen=True)
class NormalFormGame:
    """Bimatrix game with rewards in [0, 1]."""

    reward_1: np.ndarray
    reward_2: np.ndarray
    labels_1: Optional[Sequence[str]] = None
    labels_2: Optional[Sequence[str]] = None

    def __post_init__(self):
        r1 = np.asarray(self.reward_1, dtype=float)
        r2 = np.asarray(self.reward_2, dtype=float)
        object.__setattr__(self, "reward_1", r1)
        object.__setattr__(self, "reward_2", r2)
        if r1.shape != r2.shape or r1.ndim != 2:
            raise ValueError("reward matrices must share a 2-D shape")
        for r in (r1, r2):
            if np.any(r < 0.0) or np.any(r > 1.0):
                raise ValueError("rewards must lie in [0, 1]")

    @property
    def n_actions_1(self) -> int:
        return self.reward_1.shape[0]

    @property
    def n_actions_2(self) -> int:
        return self.reward_1.shape[1]

    @staticmethod
    def from_json(doc: Union[str, dict]) -> "NormalFormGame":
        """Parse {"reward_1": [[...]], "reward_2": [[...]]}."""
        if isinstance(doc, str):
            doc = json.loads(doc)
        return NormalFormGame(
            np.asarray(doc["reward_1"], dtype=float),
            np.asarray(doc["reward_2"], dtype=float),
            labels_1=doc.get("labels_1"),
            labels_2=doc.get("labels_2"),
        )


def validate_mixed_strategy(probs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > tol:
        raise ValueError("not a probability vector")
    return probs


@dataclass(frozen=True)
class FTPLConfig:
    noise_kind: str = "gaussian"  # gaussian | laplace | gumbel
    eta_scale: float = 1.0
    monte_carlo_draws: int = 64

    def __post_init__(self):
        if self.noise_kind not in ("gaussian", "laplace", "gumbel"):
            raise ValueError(f"unknown noise kind {self.noise_kind!r}")
        if self.eta_scale <= 0:
            raise ValueError("eta_scale must be positive")
        if self.monte_carlo_draws < 1:
            raise ValueError("monte_carlo_draws must be >= 1")

    def draw_noise(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.noise_kind == "gaussian":
            return rng.standard_normal(n)
        if self.noise_kind == "laplace":
            return rng.laplace(size=n)
        return rng.gumbel(size=n)


def form_belief(opponent_history: Sequence[int], action_count: int) -> np.ndarray:
    """Empirical frequency of the opponent's past actions.

    An action played k times over t-1 episodes gets probability k/(t-1);
    with no history the belief is uniform.
    """
    if action_count < 1:
        raise ValueError("action_count must be >= 1")
    history = np.asarray(opponent_history, dtype=int)
    if history.size == 0:
        return np.full(action_count, 1.0 / action_count)
    if history.min() < 0 or history.max() >= action_count:
        raise InvalidHistoryError("action index out of range")
    counts = np.bincount(history, minlength=action_count).astype(float)
    return counts / history.size


def perturbed_best_response(
    game: NormalFormGame, belief: np.ndarray, eta: float, noise_draw: np.ndarray
) -> int:
    """argmax_a E_{b~belief}[r1(a, b)] + eta * noise(a); ties to smallest index."""
    belief = validate_mixed_strategy(belief)
    if belief.shape[0] != game.n_actions_2:
        raise ValueError("belief dimension does not match the opponent action set")
    noise_draw = np.asarray(noise_draw, dtype=float)
    if noise_draw.shape[0] != game.n_actions_1:
        raise ValueError("noise dimension does not match the action set")
    scores = game.reward_1 @ belief + eta * noise_draw
    return int(np.argmax(scores))  # np.argmax already takes the first maximum


def eta_schedule(t: int, scale: float) -> float:
    """Decaying perturbation scale, scale / sqrt(t)."""
    if t < 1:
        raise ValueError("episode index starts at 1")
    return scale / np.sqrt(t)


def induced_distribution(
    game: NormalFormGame,
    belief: np.ndarray,
    eta: float,
    config: FTPLConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Monte Carlo estimate of the perturbed-best-response distribution.

    Diagnostic only; play itself realizes one noise draw per episode.
    """
    counts = np.zeros(game.n_actions_1)
    for _ in range(config.monte_carlo_draws):
        a = perturbed_best_response(game, belief, eta, config.draw_noise(rng, game.n_actions_1))
        counts[a] += 1
    return counts / config.monte_carlo_draws


# -- opponent schedules ----------------------------------------------------


class StationaryOpponent:
    """Plays a fixed mixed (or pure) strategy every episode."""

    def __init__(self, distribution: Sequence[float]):
        self.distribution = validate_mixed_strategy(np.asarray(distribution, dtype=float))

    def action(self, t: int, my_history, their_history, rng: np.random.Generator) -> int:
        return int(rng.choice(len(self.distribution), p=self.distribution))


class SequenceOpponent:
    """Replays a fixed action sequence."""

    def __init__(self, actions: Sequence[int]):
        self.actions = list(actions)

    def action(self, t: int, my_history, their_history, rng) -> int:
        return self.actions[t - 1]


class AdversarialOpponent:
    """Fictitious-play minimizer: plays the column that is worst for the
    learner's empirical action frequency so far."""

    def __init__(self, game: NormalFormGame):
        self.game = game
        self._counts = None

    def action(self, t: int, my_history, their_history, rng) -> int:
        if not their_history:
            return 0
        counts = np.bincount(np.asarray(their_history), minlength=self.game.n_actions_1)
        freq = counts / counts.sum()
        column_values = freq @ self.game.reward_1
        return int(np.argmin(column_values))


@dataclass
class PlayTrace:
    """Per-episode records plus the cumulative reward vector over own actions."""

    actions_1: list = field(default_factory=list)
    actions_2: list = field(default_factory=list)
    rewards_1: list = field(default_factory=list)
    cumulative_vector: Optional[np.ndarray] = None  # sum_t r1(., b^t)

    def __len__(self):
        return len(self.actions_1)


OpponentLike = Union[Sequence[int], StationaryOpponent, SequenceOpponent, AdversarialOpponent]


def _as_opponent(schedule: OpponentLike):
    if hasattr(schedule, "action"):
        return schedule
    return SequenceOpponent(schedule)


def run_sfp_episodes(
    game: NormalFormGame,
    opponent_schedule: OpponentLike,
    episodes: int,
    config: FTPLConfig,
    seed: int,
) -> PlayTrace:
    """Play T episodes of smooth fictitious play against the given schedule.

    Episode t forms the belief from episodes 1..t-1 and perturbs the best
    response with eta_schedule(t). Deterministic given the seed.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    opponent = _as_opponent(opponent_schedule)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    trace = PlayTrace(cumulative_vector=np.zeros(game.n_actions_1))
    for t in range(1, episodes + 1):
        belief = form_belief(trace.actions_2, game.n_actions_2)
        eta = eta_schedule(t, config.eta_scale)
        noise = config.draw_noise(rng, game.n_actions_1)
        a = perturbed_best_response(game, belief, eta, noise)
        b = opponent.action(t, trace.actions_2, trace.actions_1, rng)
        if not (0 <= b < game.n_actions_2):
            raise InvalidHistoryError("opponent action out of range")
        trace.actions_1.append(a)
        trace.actions_2.append(b)
        trace.rewards_1.append(float(game.reward_1[a, b]))
        trace.cumulative_vector += game.reward_1[:, b]
    return trace


def external_regret(trace: PlayTrace, game: NormalFormGame) -> float:
    """Best fixed action in hindsight minus the realized cumulative reward."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    best_fixed = float(np.max(trace.cumulative_vector))
    return best_fixed - float(np.sum(trace.rewards_1))


def run_sfp_batch(
    game: NormalFormGame,
    schedule: str,
    episodes: int,
    config: FTPLConfig,
    seeds: Sequence[int],
    stationary_dist: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """External regret of one learner per seed, vectorized across seeds.

    ``schedule`` is "stationary" (opponent draws i.i.d. from
    ``stationary_dist``, uniform by default) or "adversarial" (opponent
    plays the column minimizing the learner's empirical mixed strategy's
    payoff). Semantically one learner per seed; all seeds step in lockstep.
    """
    if schedule not in ("stationary", "adversarial"):
        raise ValueError(f"unknown schedule {schedule!r}")
    n_seeds = len(seeds)
    A, B = game.n_actions_1, game.n_actions_2
    rngs = [np.random.default_rng(np.random.SeedSequence(s)) for s in seeds]
    counts_b = np.zeros((n_seeds, B))  # opponent action counts
    counts_a = np.zeros((n_seeds, A))  # own action counts (for the adversary)
    cum_vector = np.zeros((n_seeds, A))  # sum_t r1(., b^t)
    realized = np.zeros(n_seeds)
    if stationary_dist is None:
        stationary_dist = np.full(B, 1.0 / B)
    stationary_dist = validate_mixed_strategy(np.asarray(stationary_dist, dtype=float))
    cdf = np.cumsum(stationary_dist)
    for t in range(1, episodes + 1):
        if t == 1:
            beliefs = np.full((n_seeds, B), 1.0 / B)
        else:
            beliefs = counts_b / (t - 1)
        payoffs = beliefs @ game.reward_1.T
        eta = eta_schedule(t, config.eta_scale)
        noise = np.stack([config.draw_noise(rng, A) for rng in rngs])
        actions = np.argmax(payoffs + eta * noise, axis=1)
        if schedule == "stationary":
            uniforms = np.array([rng.random() for rng in rngs])
            replies = np.searchsorted(cdf, uniforms)
            np.clip(replies, 0, B - 1, out=replies)
        else:
            if t == 1:
                replies = np.zeros(n_seeds, dtype=int)
            else:
                freq = counts_a / (t - 1)
                replies = np.argmin(freq @ game.reward_1, axis=1)
        realized += game.reward_1[actions, replies]
        cum_vector += game.reward_1[:, replies].T
        counts_a[np.arange(n_seeds), actions] += 1.0
        counts_b[np.arange(n_seeds), replies] += 1.0
    return np.max(cum_vector, axis=1) - realized


def regret_rate_sweep(
    n_games: int,
    t_grid: Sequence[int],
    seeds: Sequence[int],
    config: Optional[FTPLConfig] = None,
    master_seed: int = 0,
) -> dict:
    """Mean Regret(T)/T and Regret(T)/sqrt(T ln|A|) over random 5x5 games,
    for stationary and adversarial opponent schedules."""
    config = config or FTPLConfig()
    rng = np.random.default_rng(master_seed)
    out = {"per_round": {}, "rate": {}}
    for schedule in ("stationary", "adversarial"):
        per_round = {T: [] for T in t_grid}
        rate = {T: [] for T in t_grid}
        for g in range(n_games):
            game = NormalFormGame(rng.random((5, 5)), rng.random((5, 5)))
            dist = rng.dirichlet(np.ones(5))
            for T in t_grid:
                regrets = run_sfp_batch(game, schedule, T, config, seeds,
                                        stationary_dist=dist)
                per_round[T].append(np.mean(regrets) / T)
                rate[T].append(np.mean(regrets) / np.sqrt(T * np.log(5)))
        out["per_round"][schedule] = {T: float(np.mean(v)) for T, v in per_round.items()}
        out["rate"][schedule] = {T: float(np.mean(v)) for T, v in rate.items()}
    return out


def trace_to_csv(trace: PlayTrace, game: NormalFormGame, fh: IO[str]):
    """CSV columns: episode, action_1, action_2, reward_1, cumulative_regret."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["episode", "action_1", "action_2", "reward_1", "cumulative_regret"])
    cum_vector = np.zeros(game.n_actions_1)
    realized = 0.0
    for t, (a, b, r) in enumerate(zip(trace.actions_1, trace.actions_2, trace.rewards_1), start=1):
        cum_vector += game.reward_1[:, b]
        realized += r
        regret = float(np.max(cum_vector)) - realized
        writer.writerow([t, a, b, f"{r:.12g}", f"{regret:.12g}"])
