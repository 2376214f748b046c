"""Exact oracles over general policy providers.

These walk the live environment state for arbitrary providers that expose
``action_distribution``; the descriptor kernels in core/_walk_py cover the
high-volume sweeps. Trees are expanded fully (no state merging), so the
results are valid for history-dependent policies too.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..env import (
    Action,
    EpisodeState,
    GameSpec,
    Kind,
    Variant,
    apply_action,
    deal_rewards,
    episode_rewards,
    legal_actions,
    new_episode,
    whose_turn,
)
from .abstraction import AbstractionTooLarge, FiniteAbstraction


def _reward(state: EpisodeState, side: int, normalized: bool) -> float:
    pair = episode_rewards(state)
    if normalized:
        return pair.normalized_1 if side == 1 else pair.normalized_2
    return pair.r1 if side == 1 else pair.r2


class _Counter:
    __slots__ = ("nodes", "cap")

    def __init__(self, cap: int):
        self.nodes = 0
        self.cap = cap

    def tick(self):
        self.nodes += 1
        if self.nodes > self.cap:
            raise AbstractionTooLarge(f"enumeration exceeded {self.cap} nodes")


def tv_distance(p, q) -> float:
    """Total variation distance, (1/2) * sum |p - q|.

    Accepts probability vectors over a shared support, or action
    distributions as [(Action, prob)] lists (aligned over their union).
    """
    if len(p) and isinstance(p[0], tuple):
        pd = {a: float(w) for a, w in p}
        qd = {a: float(w) for a, w in q}
        keys = set(pd) | set(qd)
        return 0.5 * sum(abs(pd.get(k, 0.0) - qd.get(k, 0.0)) for k in keys)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must share a support enumeration")
    return 0.5 * float(np.abs(p - q).sum())


def exact_value(
    p1,
    p2,
    abstraction: FiniteAbstraction,
    state: Optional[EpisodeState] = None,
    context=(),
    reward_side: int = 1,
    normalized: bool = False,
) -> float:
    """Expected reward by full trajectory-tree expansion under (p1, p2)."""
    counter = _Counter(abstraction.node_cap)

    def walk(node: EpisodeState) -> float:
        if node.terminal:
            return _reward(node, reward_side, normalized)
        counter.tick()
        provider = p1 if node.actor == 1 else p2
        value = 0.0
        for action, prob in provider.action_distribution(node.actor, node, context):
            if prob <= 0.0:
                continue
            value += prob * walk(apply_action(node, action))
        return value

    return walk(state if state is not None else new_episode(abstraction.spec))


def exact_q(
    abstraction: FiniteAbstraction,
    state: EpisodeState,
    action: Action,
    p1,
    p2,
    context=(),
    reward_side: int = 1,
    normalized: bool = False,
) -> float:
    """Value of taking `action` now, then following (p1, p2)."""
    child = apply_action(state, action)
    if child.terminal:
        return _reward(child, reward_side, normalized)
    return exact_value(p1, p2, abstraction, state=child, context=context,
                       reward_side=reward_side, normalized=normalized)


class BestResponsePolicy:
    """Deterministic optimal policy for agent 1 against a fixed opponent.

    Built by backward induction over the trajectory tree; decisions are
    memoized per full state, so off-path queries are answered lazily.
    """

    def __init__(self, p2, abstraction: FiniteAbstraction, context=(),
                 normalized: bool = False):
        self.p2 = p2
        self.abstraction = abstraction
        self.context = context
        self.normalized = normalized
        self._memo: Dict[EpisodeState, Tuple[float, Optional[Action]]] = {}
        self._counter = _Counter(abstraction.node_cap)

    def value(self, state: Optional[EpisodeState] = None) -> float:
        node = state if state is not None else new_episode(self.abstraction.spec)
        return self._solve(node)[0]

    def _solve(self, node: EpisodeState) -> Tuple[float, Optional[Action]]:
        if node.terminal:
            return _reward(node, 1, self.normalized), None
        hit = self._memo.get(node)
        if hit is not None:
            return hit
        self._counter.tick()
        if node.actor == 1:
            best_value, best_action = None, None
            for action in legal_actions(node):
                value = self._solve(apply_action(node, action))[0]
                if best_value is None or value > best_value:
                    best_value, best_action = value, action
            out = (best_value, best_action)
        else:
            value = 0.0
            for action, prob in self.p2.action_distribution(node.actor, node, self.context):
                if prob <= 0.0:
                    continue
                value += prob * self._solve(apply_action(node, action))[0]
            out = (value, None)
        self._memo[node] = out
        return out

    # -- PolicyProvider interface -----------------------------------------

    def act(self, side, state, context, rng) -> Action:
        return self._solve(state)[1]

    def action_distribution(self, side, state, context):
        return [(self._solve(state)[1], 1.0)]


def exact_best_response(p2, abstraction: FiniteAbstraction, context=(),
                        normalized: bool = False) -> Tuple[BestResponsePolicy, float]:
    policy = BestResponsePolicy(p2, abstraction, context, normalized)
    return policy, policy.value()


# -- maximum extractable reward (agent 1, opponent kept whole) -------------


@dataclass(frozen=True)
class R1Max:
    value: float
    payload: object  # extracting proposal: price, or (dx, dy)


def r1_max(spec: GameSpec, enumeration_order: str = "dx_major") -> R1Max:
    """Maximum agent-1 reward subject to a nonnegative agent-2 reward.

    Buyer-seller: the whole surplus, extracted at the opponent's
    reservation price. Resource exchange: exhaustive integer enumeration of
    in-bounds transfers under v2 . delta <= 0; the two enumeration orders
    must find the same optimum (cross-check).
    """
    if spec.variant == Variant.BUYER_SELLER:
        price = spec.budget if spec.agent1_role == "seller" else spec.production_cost
        return R1Max(spec.surplus(), price)
    lo_x, hi_x, lo_y, hi_y = spec.transfer_bounds()
    xs = range(lo_x, hi_x + 1)
    ys = range(lo_y, hi_y + 1)
    if enumeration_order == "dx_major":
        candidates = ((dx, dy) for dx in xs for dy in ys)
    elif enumeration_order == "dy_major":
        candidates = ((dx, dy) for dy in ys for dx in xs)
    else:
        raise ValueError(f"unknown enumeration order {enumeration_order!r}")
    best_value, best = 0.0, (0, 0)
    for dx, dy in candidates:
        if spec.v2x * dx + spec.v2y * dy > 0:
            continue
        value = spec.v1x * dx + spec.v1y * dy
        if value > best_value:
            best_value, best = value, (dx, dy)
    return R1Max(best_value, best)


def attainable_r1_max(spec: GameSpec) -> R1Max:
    """r1_max restricted to the spec's finite proposal set."""
    best_value, best = 0.0, None
    for payload in spec.offer_payloads():
        r1, r2 = deal_rewards(spec, payload)
        if r2 >= 0 and r1 > best_value:
            best_value, best = r1, payload
    return R1Max(best_value, best)


# -- the adversarial opponent of the non-dominance argument -----------------


class AdversarialNegotiator:
    """Opponent that only ever accepts agent 1's *least likely* first-turn
    message, paired with a proposal that keeps its own reward nonnegative.

    It answers everything else with an immediate rejection (or a neutral
    wait when there is nothing to reject), which caps agent 1's expected
    reward at r1_max / |message alphabet|.
    """

    def __init__(self, p1, abstraction: FiniteAbstraction, context=()):
        spec = abstraction.spec
        self.spec = spec
        self.designated_h = 2 if spec.starter == 1 else 3
        self.neutral = spec.message_alphabet[0]
        self.target_message = self._least_likely_message(p1, abstraction, context)

    def _least_likely_message(self, p1, abstraction, context) -> str:
        spec = abstraction.spec
        state = new_episode(spec)
        if spec.starter == 2:
            state = apply_action(state, Action(Kind.WAIT, message=self.neutral))
        mass = {message: 0.0 for message in spec.message_alphabet}
        for action, prob in p1.action_distribution(1, state, context):
            mass[action.message] += prob
        low = min(mass.values())
        for message in spec.message_alphabet:  # ties: smallest index
            if mass[message] == low:
                return message
        raise AssertionError("unreachable")

    def _decide(self, state: EpisodeState) -> Action:
        standing = state.standing
        answerable = standing is not None and standing.proposer == 1
        if state.h == self.designated_h and answerable:
            _, r2 = deal_rewards(self.spec, standing.payload)
            if state.last_message() == self.target_message and r2 >= 0:
                return Action(Kind.ACCEPT, message=self.neutral)
        if standing is not None and standing.proposer != state.actor:
            return Action(Kind.REJECT, message=self.neutral)
        return Action(Kind.WAIT, message=self.neutral)

    def act(self, side, state, context, rng) -> Action:
        return self._decide(state)

    def action_distribution(self, side, state, context):
        return [(self._decide(state), 1.0)]


def adversarial_opponent(p1, abstraction: FiniteAbstraction, context=()) -> AdversarialNegotiator:
    return AdversarialNegotiator(p1, abstraction, context)


def verify_prop1(p1, abstraction: FiniteAbstraction, tol: float = 1e-9) -> dict:
    """Check the non-dominance bound for one agent-1 policy.

    Asserts J(p1, adversary(p1)) <= r1_max / |messages| and that the exact
    best response against the constructed adversary attains r1_max.
    """
    spec = abstraction.spec
    adversary = adversarial_opponent(p1, abstraction)
    j_value = exact_value(p1, adversary, abstraction)
    cap = r1_max(spec).value
    bound = cap / len(spec.message_alphabet)
    _, br_value = exact_best_response(adversary, abstraction)
    return {
        "j_against_adversary": j_value,
        "bound": bound,
        "r1_max": cap,
        "best_response_value": br_value,
        "target_message": adversary.target_message,
        "pass": bool(j_value <= bound + tol and abs(br_value - cap) <= tol),
    }


# -- Theorem-style error propagation check (general providers) --------------


def corollary_report(j_hat: float, j_star: float, eps_sum: float,
                     tol: float = 1e-9) -> dict:
    """Optimality gap of the best response against the model.

    The provable guarantee is j_hat >= j_star - 2 * eps_sum: one eps_sum
    for evaluating the greedy policy under the wrong opponent, one for the
    gap between the two maxima. The single-eps_sum form is also reported;
    it fails on adversarial instances where the model's errors flip the
    argmax (sweeps.counterexample_single_eps constructs a minimal case).
    """
    slack = j_hat - (j_star - 2.0 * eps_sum)
    slack_single = j_hat - (j_star - eps_sum)
    return {
        "j_hat": float(j_hat),
        "j_star": float(j_star),
        "eps_sum": float(eps_sum),
        "slack": float(slack),
        "pass": bool(slack >= -tol),
        "slack_single_eps": float(slack_single),
        "pass_single_eps": bool(slack_single >= -tol),
    }


def _check_normalizable(spec: GameSpec):
    for payload in spec.offer_payloads():
        r1, _ = deal_rewards(spec, payload)
        if spec.variant == Variant.BUYER_SELLER:
            scale = spec.surplus()
        else:
            scale = spec.exchange_norm or 0.0
        if scale <= 0 or not -1e-12 <= r1 / scale <= 1.0 + 1e-12:
            raise ValueError(
                "rewards must normalize into [0, 1] for the error-bound check")


def verify_theorem1(
    abstraction: FiniteAbstraction,
    p1,
    true_p2,
    model_p2,
    instance_id: str = "instance",
    tol: float = 1e-9,
) -> dict:
    """Bound |V under model - V under truth| by the tail sum of per-turn
    opponent TV errors, at every reachable agent-1 decision point, and
    check the optimality-gap corollary. Rewards are normalized to [0, 1].
    """
    spec = abstraction.spec
    _check_normalizable(spec)
    H = spec.horizon
    eps = np.zeros(H + 2)
    points: List[Tuple[int, float, float]] = []
    counter = _Counter(abstraction.node_cap)

    def walk(node: EpisodeState) -> Tuple[float, float]:
        if node.terminal:
            value = _reward(node, 1, True)
            return value, value
        counter.tick()
        if node.actor == 1:
            v_true = v_model = 0.0
            for action, prob in p1.action_distribution(1, node, ()):
                if prob <= 0.0:
                    continue
                child_t, child_m = walk(apply_action(node, action))
                v_true += prob * child_t
                v_model += prob * child_m
            points.append((node.h, v_true, v_model))
            return v_true, v_model
        dist_t = dict_of(true_p2.action_distribution(2, node, ()))
        dist_m = dict_of(model_p2.action_distribution(2, node, ()))
        tv = 0.5 * sum(abs(dist_t.get(a, 0.0) - dist_m.get(a, 0.0))
                       for a in set(dist_t) | set(dist_m))
        if tv > eps[node.h]:
            eps[node.h] = tv
        v_true = v_model = 0.0
        for action in sorted(set(dist_t) | set(dist_m),
                             key=lambda a: (a.kind.value, str(a.payload()), a.message)):
            pt = dist_t.get(action, 0.0)
            pm = dist_m.get(action, 0.0)
            if pt <= 0.0 and pm <= 0.0:
                continue
            child_t, child_m = walk(apply_action(node, action))
            v_true += pt * child_t
            v_model += pm * child_m
        return v_true, v_model

    def dict_of(dist):
        out = {}
        for action, prob in dist:
            out[action] = out.get(action, 0.0) + prob
        return out

    walk(new_episode(spec))

    # corollary walk: backward induction against the model, with the greedy
    # choices evaluated against the truth, collecting TV at every opponent
    # node it touches (the bound's epsilons must cover those points too)
    def br_recursion(node: EpisodeState) -> Tuple[float, float, float]:
        if node.terminal:
            value = _reward(node, 1, True)
            return value, value, value
        counter.tick()
        if node.actor == 1:
            best_bm = best_gt = best_bt = None
            for action in legal_actions(node):
                bm, gt, bt = br_recursion(apply_action(node, action))
                if best_bm is None or bm > best_bm:
                    best_bm, best_gt = bm, gt
                if best_bt is None or bt > best_bt:
                    best_bt = bt
            return best_bm, best_gt, best_bt
        dist_t = dict_of(true_p2.action_distribution(2, node, ()))
        dist_m = dict_of(model_p2.action_distribution(2, node, ()))
        tv = 0.5 * sum(abs(dist_t.get(a, 0.0) - dist_m.get(a, 0.0))
                       for a in set(dist_t) | set(dist_m))
        if tv > eps[node.h]:
            eps[node.h] = tv
        v_bm = v_gt = v_bt = 0.0
        for action in set(dist_t) | set(dist_m):
            pt = dist_t.get(action, 0.0)
            pm = dist_m.get(action, 0.0)
            if pt <= 0.0 and pm <= 0.0:
                continue
            bm, gt, bt = br_recursion(apply_action(node, action))
            v_bm += pm * bm
            v_gt += pt * gt
            v_bt += pt * bt
        return v_bm, v_gt, v_bt

    _, v_hat, v_star = br_recursion(new_episode(spec))
    opp_eps_sum = float(sum(eps[h] for h in range(1, H + 1)
                            if whose_turn(h, spec.starter) == 2))

    report_points = []
    all_pass = True
    for h, v_true, v_model in points:
        rhs = float(sum(eps[h + 2 * d + 1] for d in range((H - h - 1) // 2 + 1)
                        if h + 2 * d + 1 <= H))
        lhs = abs(v_model - v_true)
        slack = rhs - lhs
        ok = slack >= -tol
        all_pass = all_pass and ok
        report_points.append({"h": h, "lhs": lhs, "rhs": rhs,
                              "slack": slack, "pass": ok})
    corollary = corollary_report(v_hat, v_star, opp_eps_sum, tol)
    return {
        "instance_id": instance_id,
        "points": report_points,
        "eps": eps[: H + 1].tolist(),
        "corollary": corollary,
        "pass": bool(all_pass and corollary["pass"]),
    }
