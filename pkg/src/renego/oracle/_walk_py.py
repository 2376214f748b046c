"""Pure-Python trajectory-tree walks over prepared policy descriptors.

Reference implementation of the hot kernels; renego.oracle.core swaps in
the compiled Cython version when it is importable. Both versions perform
the same floating-point operations in the same order, so their results
agree bit for bit.
"""
from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .abstraction import (
    FNV_OFFSET,
    KIND_ACCEPT,
    KIND_OFFER,
    KIND_REJECT,
    AbstractionTables,
    AbstractionTooLarge,
    PreparedPolicy,
    splitmix64,
)

_M64 = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0
_GOLD = 0x9E3779B97F4A7C15


def _child_hash(ph: int, aid: int) -> int:
    return splitmix64(ph ^ (aid + 1))


def _node_dist(tables: AbstractionTables, prep: PreparedPolicy, obs: int,
               ph: int) -> Tuple[list, list]:
    """(ascending action ids, probabilities) of a prepared policy at a node."""
    start = prep.ptr_list[obs]
    end = prep.ptr_list[obs + 1]
    if prep.delta == 0.0:
        return prep.ids_list[start:end], prep.probs_list[start:end]
    out = {}
    for i in range(start, end):
        out[prep.ids_list[i]] = prep.probs_list[i]
    legal = tables.legal_lists[obs]
    n_legal = len(legal)
    hs = splitmix64((ph ^ prep.hash_seed) & _M64)
    buckets = {}
    total = 0.0
    for j in range(prep.hash_k):
        r = splitmix64((hs + j) & _M64)
        slot = legal[r % n_legal]
        w = (r >> 11) * _INV53 + 0.25
        buckets[slot] = buckets.get(slot, 0.0) + w
        total += w
    for slot in sorted(buckets):
        out[slot] = out.get(slot, 0.0) + prep.delta * (buckets[slot] / total)
    ids = sorted(out)
    return ids, [out[i] for i in ids]


def theorem_walk(
    tables: AbstractionTables,
    p1: PreparedPolicy,
    p2a: PreparedPolicy,
    p2b: PreparedPolicy,
    node_cap: int,
) -> Tuple[float, float, List[Tuple[int, float, float]], np.ndarray, int]:
    """Joint expected-value walk under (p1, p2a) and (p1, p2b).

    Returns (root value under a, root value under b, per agent-1 node
    records (h, v_a, v_b), per-turn max TV between p2a and p2b, node count).
    """
    H = tables.H
    obs_width = (2 * tables.P + 1) * (tables.M + 1)
    kind = tables.kind_list
    pay = tables.pay_list
    msg = tables.msg_list
    r1 = tables.r1_deal_list
    actor_of = tables.actor_list
    eps = np.zeros(H + 2)
    points: List[Tuple[int, float, float]] = []
    count = [0]

    def walk(h, sp, spr, lm, ph):
        count[0] += 1
        if count[0] > node_cap:
            raise AbstractionTooLarge(f"enumeration exceeded {node_cap} nodes")
        sc = 0 if sp < 0 else 1 + (0 if spr == 1 else tables.P) + sp
        obs = (h - 1) * obs_width + sc * (tables.M + 1) + (lm + 1)
        actor = actor_of[h]

        def child(aid):
            k = kind[aid]
            if k == KIND_ACCEPT:
                value = r1[sp]
                return value, value
            if k == KIND_REJECT or h + 1 > H:
                return 0.0, 0.0
            if k == KIND_OFFER:
                return walk(h + 1, pay[aid], actor, msg[aid], _child_hash(ph, aid))
            return walk(h + 1, sp, spr, msg[aid], _child_hash(ph, aid))

        if actor == 1:
            ids, probs = _node_dist(tables, p1, obs, ph)
            va = vb = 0.0
            for aid, p in zip(ids, probs):
                if p <= 0.0:
                    continue
                ca, cb = child(aid)
                va += p * ca
                vb += p * cb
            points.append((h, va, vb))
            return va, vb

        ids_a, probs_a = _node_dist(tables, p2a, obs, ph)
        ids_b, probs_b = _node_dist(tables, p2b, obs, ph)
        # two-pointer merge in ascending action-id order
        tv = 0.0
        va = vb = 0.0
        i = j = 0
        na, nb = len(ids_a), len(ids_b)
        while i < na or j < nb:
            if j >= nb or (i < na and ids_a[i] < ids_b[j]):
                aid, pa, pb = ids_a[i], probs_a[i], 0.0
                i += 1
            elif i >= na or ids_b[j] < ids_a[i]:
                aid, pa, pb = ids_b[j], 0.0, probs_b[j]
                j += 1
            else:
                aid, pa, pb = ids_a[i], probs_a[i], probs_b[j]
                i += 1
                j += 1
            tv += abs(pa - pb)
            if pa <= 0.0 and pb <= 0.0:
                continue
            ca, cb = child(aid)
            va += pa * ca
            vb += pb * cb
        tv *= 0.5
        if tv > eps[h]:
            eps[h] = tv
        return va, vb

    root_a, root_b = walk(1, -1, 0, -1, FNV_OFFSET)
    return root_a, root_b, points, eps, count[0]


def br_walk(
    tables: AbstractionTables,
    p2_model: PreparedPolicy,
    p2_true: PreparedPolicy,
    node_cap: int,
    eps: np.ndarray = None,
) -> Tuple[float, float, float, np.ndarray, int]:
    """Backward induction against the model, evaluated against the truth.

    Returns (best-response value against p2_model, value of that greedy
    policy against p2_true, best-response value against p2_true, per-turn
    max TV, node count). Agent-1 ties break to the smallest action id.
    """
    H = tables.H
    obs_width = (2 * tables.P + 1) * (tables.M + 1)
    kind = tables.kind_list
    pay = tables.pay_list
    msg = tables.msg_list
    r1 = tables.r1_deal_list
    actor_of = tables.actor_list
    if eps is None:
        eps = np.zeros(H + 2)
    count = [0]

    def walk(h, sp, spr, lm, ph):
        count[0] += 1
        if count[0] > node_cap:
            raise AbstractionTooLarge(f"enumeration exceeded {node_cap} nodes")
        sc = 0 if sp < 0 else 1 + (0 if spr == 1 else tables.P) + sp
        obs = (h - 1) * obs_width + sc * (tables.M + 1) + (lm + 1)
        actor = actor_of[h]

        def child(aid):
            k = kind[aid]
            if k == KIND_ACCEPT:
                value = r1[sp]
                return value, value, value
            if k == KIND_REJECT or h + 1 > H:
                return 0.0, 0.0, 0.0
            if k == KIND_OFFER:
                return walk(h + 1, pay[aid], actor, msg[aid], _child_hash(ph, aid))
            return walk(h + 1, sp, spr, msg[aid], _child_hash(ph, aid))

        if actor == 1:
            best_bm = best_gt = best_bt = None
            for aid in tables.legal_lists[obs]:
                bm, gt, bt = child(aid)
                if best_bm is None or bm > best_bm:
                    best_bm, best_gt = bm, gt
                if best_bt is None or bt > best_bt:
                    best_bt = bt
            return best_bm, best_gt, best_bt

        ids_m, probs_m = _node_dist(tables, p2_model, obs, ph)
        ids_t, probs_t = _node_dist(tables, p2_true, obs, ph)
        tv = 0.0
        vbm = vgt = vbt = 0.0
        i = j = 0
        nm, nt = len(ids_m), len(ids_t)
        while i < nm or j < nt:
            if j >= nt or (i < nm and ids_m[i] < ids_t[j]):
                aid, pm, pt = ids_m[i], probs_m[i], 0.0
                i += 1
            elif i >= nm or ids_t[j] < ids_m[i]:
                aid, pm, pt = ids_t[j], 0.0, probs_t[j]
                j += 1
            else:
                aid, pm, pt = ids_m[i], probs_m[i], probs_t[j]
                i += 1
                j += 1
            tv += abs(pm - pt)
            if pm <= 0.0 and pt <= 0.0:
                continue
            bm, gt, bt = child(aid)
            vbm += pm * bm
            vgt += pt * gt
            vbt += pt * bt
        tv *= 0.5
        if tv > eps[h]:
            eps[h] = tv
        return vbm, vgt, vbt

    v_bm, v_gt, v_bt = walk(1, -1, 0, -1, FNV_OFFSET)
    return v_bm, v_gt, v_bt, eps, count[0]
