"""Observation-space dynamic programming for observation-Markov policies.

When both sides' policies depend only on (turn, standing offer, last
message), episode values collapse onto that compact observation space and
exact policy evaluation, best response, and iterated greedy improvement
(the exact-mode view of best-of-N sharpening) are cheap backward passes.
"""
from __future__ import annotations

from typing import Callable, List, Sequence, Tuple

import numpy as np

from .abstraction import (
    KIND_ACCEPT,
    KIND_OFFER,
    KIND_REJECT,
    AbstractionTables,
)

RowFn = Callable[[int], Sequence[Tuple[int, float]]]


def _row_of_table(table: np.ndarray) -> RowFn:
    def row(obs: int):
        ids = np.nonzero(table[obs])[0]
        return [(int(aid), float(table[obs, aid])) for aid in ids]

    return row


def _child_value(tables: AbstractionTables, v: np.ndarray, h: int, sp: int,
                 spr: int, actor: int, aid: int) -> float:
    kind = tables.kind_list[aid]
    if kind == KIND_ACCEPT:
        return tables.r1_deal_list[sp]
    if kind == KIND_REJECT or h + 1 > tables.H:
        return 0.0
    if kind == KIND_OFFER:
        nxt = tables.obs_index(h + 1, tables.pay_list[aid], actor,
                               tables.msg_list[aid])
    else:
        nxt = tables.obs_index(h + 1, sp, spr, tables.msg_list[aid])
    return float(v[nxt])


def _iter_obs_at(tables: AbstractionTables, h: int):
    for sc in range(2 * tables.P + 1):
        if sc == 0:
            sp, spr = -1, 0
        elif sc <= tables.P:
            sp, spr = sc - 1, 1
        else:
            sp, spr = sc - 1 - tables.P, 2
        for lm in range(-1, tables.M):
            yield tables.obs_index(h, sp, spr, lm), sp, spr


def dp_value(tables: AbstractionTables, p1_row: RowFn, p2_row: RowFn) -> np.ndarray:
    """Agent-1 value of every observation under the policy pair."""
    v = np.zeros(tables.n_obs)
    for h in range(tables.H, 0, -1):
        actor = tables.actor_list[h]
        row_fn = p1_row if actor == 1 else p2_row
        for obs, sp, spr in _iter_obs_at(tables, h):
            value = 0.0
            for aid, prob in row_fn(obs):
                if prob <= 0.0:
                    continue
                value += prob * _child_value(tables, v, h, sp, spr, actor, aid)
            v[obs] = value
    return v


def dp_value_of_tables(tables: AbstractionTables, p1_table: np.ndarray,
                       p2_table: np.ndarray) -> float:
    v = dp_value(tables, _row_of_table(p1_table), _row_of_table(p2_table))
    return float(v[tables.obs_index(1, -1, 0, -1)])


def dp_best_response(tables: AbstractionTables, p2_row: RowFn) -> Tuple[np.ndarray, float]:
    """Backward induction for agent 1; returns (greedy action table, root value)."""
    v = np.zeros(tables.n_obs)
    greedy = np.full(tables.n_obs, -1, dtype=np.int64)
    for h in range(tables.H, 0, -1):
        actor = tables.actor_list[h]
        for obs, sp, spr in _iter_obs_at(tables, h):
            if actor == 1:
                best, best_aid = None, -1
                for aid in tables.legal_lists[obs]:
                    q = _child_value(tables, v, h, sp, spr, actor, aid)
                    if best is None or q > best:
                        best, best_aid = q, aid
                v[obs] = best
                greedy[obs] = best_aid
            else:
                value = 0.0
                for aid, prob in p2_row(obs):
                    if prob <= 0.0:
                        continue
                    value += prob * _child_value(tables, v, h, sp, spr, actor, aid)
                v[obs] = value
    return greedy, float(v[tables.obs_index(1, -1, 0, -1)])


def sharpen_exact(
    tables: AbstractionTables,
    base_table: np.ndarray,
    oppo_table: np.ndarray,
    levels: int,
) -> List[float]:
    """Root values [V(base), V(level 1), ..., V(level `levels`)] of iterated
    exact best-of-N over the base policy's support.

    Level l acts greedily (smallest action id on ties) with respect to the
    level l-1 policy's action values against the opponent model -- one
    policy-iteration step per level, restricted to the base support.
    """
    oppo_row = _row_of_table(oppo_table)
    supports = [np.nonzero(base_table[obs])[0].astype(int).tolist()
                for obs in range(tables.n_obs)]
    current = _row_of_table(base_table)
    values = []
    v = dp_value(tables, current, oppo_row)
    values.append(float(v[tables.obs_index(1, -1, 0, -1)]))
    for _ in range(levels):
        greedy = np.full(tables.n_obs, -1, dtype=np.int64)
        for h in range(tables.H, 0, -1):
            actor = tables.actor_list[h]
            if actor != 1:
                continue
            for obs, sp, spr in _iter_obs_at(tables, h):
                best, best_aid = None, -1
                for aid in supports[obs]:
                    q = _child_value(tables, v, h, sp, spr, actor, aid)
                    if best is None or q > best:
                        best, best_aid = q, aid
                greedy[obs] = best_aid

        def greedy_row(obs, greedy=greedy):
            return [(int(greedy[obs]), 1.0)] if greedy[obs] >= 0 else []

        current = greedy_row
        v = dp_value(tables, current, oppo_row)
        values.append(float(v[tables.obs_index(1, -1, 0, -1)]))
    return values


def dp_support_best_response(tables: AbstractionTables, base_table: np.ndarray,
                             p2_row: RowFn) -> float:
    """Optimal root value among policies supported on the base policy's
    support (the saturation point of exact sharpening)."""
    supports = [np.nonzero(base_table[obs])[0].astype(int).tolist()
                for obs in range(tables.n_obs)]
    v = np.zeros(tables.n_obs)
    for h in range(tables.H, 0, -1):
        actor = tables.actor_list[h]
        for obs, sp, spr in _iter_obs_at(tables, h):
            if actor == 1:
                best = None
                for aid in supports[obs]:
                    q = _child_value(tables, v, h, sp, spr, actor, aid)
                    if best is None or q > best:
                        best = q
                v[obs] = 0.0 if best is None else best
            else:
                value = 0.0
                for aid, prob in p2_row(obs):
                    if prob <= 0.0:
                        continue
                    value += prob * _child_value(tables, v, h, sp, spr, actor, aid)
                v[obs] = value
    return float(v[tables.obs_index(1, -1, 0, -1)])
