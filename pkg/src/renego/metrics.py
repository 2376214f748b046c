"""Tournament and diagnostics statistics over match logs.

Covers the pairwise persona matrix (with a dominance report), the
early-versus-late reward correlation, best-of-N selection accuracy against
an oracle opponent, candidate proposal dispersion, and social welfare.
All functions are pure over immutable logs; CSV writers take open file
handles.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Dict, IO, List, Optional, Sequence, Tuple

import numpy as np

from .agents import Candidate
from .env import GameSpec, Kind, RewardPair, Variant, replay
from .match import MatchLog, play_match
from .oracle import FiniteAbstraction, exact_q


class UndefinedCorrelationError(ValueError):
    """Correlation is undefined (fewer than two logs or zero variance)."""


ROLE_TURN_CONFIGS = (
    ("seller", 1), ("seller", 2), ("buyer", 1), ("buyer", 2),
)


@dataclass
class PairwiseMatrix:
    personas: List[str]
    # (role, turn) -> matrix[row, col] of the row persona's mean normalized reward
    matrices: Dict[Tuple[str, int], np.ndarray]
    aggregate: np.ndarray
    dominant_row: Optional[str]
    logs: List[MatchLog] = None  # populated when collect_logs is requested

    @property
    def has_dominant_row(self) -> bool:
        return self.dominant_row is not None


def _dominant_row(matrix: np.ndarray, labels: Sequence[str]) -> Optional[str]:
    """A row weakly dominating every other row entrywise, if any."""
    for i in range(matrix.shape[0]):
        if all(np.all(matrix[i] >= matrix[j] - 1e-12)
               for j in range(matrix.shape[0]) if j != i):
            return labels[i]
    return None


def pairwise_matrix(
    personas: Dict[str, object],
    spec: GameSpec,
    episodes: int,
    seeds: Sequence[int],
    configs: Sequence[Tuple[str, int]] = ROLE_TURN_CONFIGS,
    collect_logs: bool = False,
) -> PairwiseMatrix:
    """Round-robin of personas for every (row role, row turn) configuration.

    The row persona always plays agent 1; the spec is re-rolled so that
    agent 1 has the configured role and turn. Entries are the row's mean
    normalized reward against the column persona.
    """
    names = list(personas)
    if len(names) < 2:
        raise ValueError("need at least two personas for a pairwise matrix")
    matrices = {}
    logs = [] if collect_logs else None
    for role, turn in configs:
        game = spec
        if spec.variant == Variant.BUYER_SELLER:
            game = replace(spec, agent1_role=role, starter=turn)
        else:
            game = replace(spec, starter=turn)
        matrix = np.zeros((len(names), len(names)))
        for i, row in enumerate(names):
            for j, col in enumerate(names):
                totals = []
                for seed in seeds:
                    log = play_match(game, {1: personas[row], 2: personas[col]},
                                     episodes, seed,
                                     provider_ids={1: row, 2: col})
                    totals.append(np.mean(log.normalized_rewards(1)))
                    if collect_logs:
                        logs.append(log)
                matrix[i, j] = float(np.mean(totals))
        matrices[(role, turn)] = matrix
    aggregate = np.mean(list(matrices.values()), axis=0)
    return PairwiseMatrix(names, matrices, aggregate,
                          _dominant_row(aggregate, names), logs)


def window_correlation(logs: Sequence[MatchLog], k: int, side: int = 1) -> float:
    """Pearson correlation of (first-k mean, last-k mean) rewards across logs."""
    if len(logs) < 2:
        raise UndefinedCorrelationError("need at least two logs")
    firsts, lasts = [], []
    for log in logs:
        rewards = log.normalized_rewards(side)
        if len(rewards) < 2 * k:
            raise ValueError(f"log has fewer than {2 * k} episodes")
        firsts.append(float(np.mean(rewards[:k])))
        lasts.append(float(np.mean(rewards[-k:])))
    firsts = np.asarray(firsts)
    lasts = np.asarray(lasts)
    if np.std(firsts) == 0.0 or np.std(lasts) == 0.0:
        raise UndefinedCorrelationError("zero variance in a window")
    return float(np.corrcoef(firsts, lasts)[0, 1])


def selection_accuracy(
    log: MatchLog,
    oracle_p2,
    abstraction: FiniteAbstraction,
    base,
    side: int = 1,
    window: int = 5,
    tol: float = 1e-9,
) -> List[dict]:
    """How often best-of-N picked a candidate that is optimal under the
    *true* opponent, per episode window.

    For each recorded decision the candidates are re-scored exactly against
    `oracle_p2` (with `base` continuing for the acting side); a choice
    counts as correct when its oracle value ties the best within `tol`.
    """
    decisions = log.diagnostics.get(side)
    if not decisions:
        raise ValueError("log carries no best-of-N diagnostics for this side")
    spec = log.spec
    per_episode: Dict[int, List[bool]] = {}
    for decision in decisions:
        state = replay(spec, [a for _, a in decision.trajectory])
        values = []
        for action in decision.actions:
            p1 = base if side == 1 else oracle_p2
            p2 = oracle_p2 if side == 1 else base
            values.append(exact_q(abstraction, state, action, p1, p2,
                                  reward_side=side))
        best = max(values)
        correct = values[decision.chosen] >= best - tol
        per_episode.setdefault(decision.episode, []).append(correct)
    episodes = log.episodes
    out = []
    for start in range(1, episodes + 1, window):
        stop = min(start + window - 1, episodes)
        flags = [flag for ep in range(start, stop + 1)
                 for flag in per_episode.get(ep, [])]
        out.append({
            "window": (start, stop),
            "decisions": len(flags),
            "accuracy": float(np.mean(flags)) if flags else None,
        })
    return out


def proposal_dispersion(candidates: Sequence[Candidate]) -> Optional[float]:
    """Population standard deviation of the candidates' offer payloads.

    Non-offers are ignored; with no offers at all the dispersion is absent
    (None), not zero. Exchange payloads are measured by agent 1's deal value.
    """
    values = []
    for cand in candidates:
        action = cand.action if isinstance(cand, Candidate) else cand
        if action.kind != Kind.OFFER:
            continue
        if action.price is not None:
            values.append(float(action.price))
        else:
            values.append(float(action.dx) + float(action.dy))
    if not values:
        return None
    return float(np.std(values))


def social_welfare(rewards: RewardPair, spec: GameSpec) -> float:
    """Sum of both agents' net episode rewards."""
    return rewards.r1 + rewards.r2


# -- CSV emission -----------------------------------------------------------


def matrix_to_csv(result: PairwiseMatrix, fh: IO[str]):
    """One block per (role, turn) matrix; entries are row-vs-column means."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["# pairwise mean normalized reward of the row persona"])
    for (role, turn), matrix in result.matrices.items():
        writer.writerow([f"role={role}", f"turn={turn}"] + result.personas)
        for name, row in zip(result.personas, matrix):
            writer.writerow([name, "", *[f"{x:.10g}" for x in row]])
    writer.writerow(["aggregate", ""] + result.personas)
    for name, row in zip(result.personas, result.aggregate):
        writer.writerow([name, "", *[f"{x:.10g}" for x in row]])
    writer.writerow(["dominant_row", result.dominant_row or "none"])


def rewards_to_csv(log: MatchLog, fh: IO[str]):
    """Columns: episode, r1, r2, normalized_1, normalized_2, social_welfare."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["episode", "r1", "r2", "normalized_1", "normalized_2",
                     "social_welfare"])
    for t, record in enumerate(log.records, start=1):
        pair = record.rewards
        writer.writerow([t, f"{pair.r1:.10g}", f"{pair.r2:.10g}",
                         f"{pair.normalized_1:.10g}", f"{pair.normalized_2:.10g}",
                         f"{social_welfare(pair, log.spec):.10g}"])


def dispersion_to_csv(rows: Sequence[dict], fh: IO[str]):
    """Columns: episode, h, mode, dispersion (absent values left empty)."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["episode", "h", "mode", "dispersion"])
    for row in rows:
        value = row.get("dispersion")
        writer.writerow([row["episode"], row["h"], row["mode"],
                         "" if value is None else f"{value:.10g}"])


def correlation_to_csv(coefficient: float, n_logs: int, k: int, fh: IO[str]):
    """Columns: window_k, logs, pearson_r (early-window vs late-window means)."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["window_k", "logs", "pearson_r"])
    writer.writerow([k, n_logs, f"{coefficient:.10g}"])


def accuracy_to_csv(windows: Sequence[dict], fh: IO[str]):
    """Columns: window_start, window_stop, decisions, accuracy."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["window_start", "window_stop", "decisions", "accuracy"])
    for row in windows:
        start, stop = row["window"]
        acc = row["accuracy"]
        writer.writerow([start, stop, row["decisions"],
                         "" if acc is None else f"{acc:.10g}"])
