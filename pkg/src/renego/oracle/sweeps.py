"""Randomized verification sweeps over finite abstractions.

Drives the descriptor kernels: error-propagation bound checks on random
instances with perturbed opponent models, non-dominance (adversarial
opponent) checks over random mixed policies, and exact policy-iteration
improvement checks for sharpened best-of-N.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from ..env import GameSpec, Variant, whose_turn
from . import core
from .abstraction import (
    FNV_OFFSET,
    AbstractionTables,
    FiniteAbstraction,
    PolicyDescriptor,
    PreparedPolicy,
    child_hash,
    descriptor_distribution,
    random_table_policy,
    uniform_table_policy,
)
from .dp import (
    _row_of_table,
    dp_best_response,
    dp_support_best_response,
    sharpen_exact,
)
from .exact import corollary_report, r1_max

SWEEP_ALPHABET = ("greeting", "anchor_high", "appeal_fairness", "insult")


def random_buyer_seller_spec(rng: np.random.Generator,
                             h_max: int = 6, grid_max: int = 8,
                             alphabet_max: int = 4) -> GameSpec:
    horizon = int(rng.integers(2, h_max + 1))
    n_prices = int(rng.integers(2, grid_max + 1))
    n_msgs = int(rng.integers(1, alphabet_max + 1))
    return GameSpec(
        variant=Variant.BUYER_SELLER,
        horizon=horizon,
        starter=int(rng.integers(1, 3)),
        production_cost=0.0,
        budget=float(n_prices - 1),
        agent1_role="seller" if rng.integers(0, 2) == 0 else "buyer",
        price_grid=tuple(float(q) for q in range(n_prices)),
        message_alphabet=SWEEP_ALPHABET[:n_msgs],
    )


def _estimate_nodes(tables: AbstractionTables, branch_1: int, branch_2: int) -> int:
    total, layer = 1, 1
    for h in range(1, tables.H + 1):
        layer *= branch_1 if tables.actor_list[h] == 1 else branch_2
        total += layer
        if total > 10 ** 9:
            break
    return total


@dataclass
class TheoremInstance:
    tables: AbstractionTables
    p1: PolicyDescriptor
    true_p2: PolicyDescriptor
    model_p2: PolicyDescriptor
    instance_id: str


def random_theorem_instance(
    rng: np.random.Generator,
    instance_id: str = "instance",
    theorem_budget: int = 200_000,
    br_budget: int = 500_000,
    h_max: int = 6,
    grid_max: int = 8,
    alphabet_max: int = 4,
) -> TheoremInstance:
    """Random abstraction plus (p1, true opponent, perturbed model).

    The model is a convex table perturbation of the truth plus a small
    history-dependent hash component, so its error is genuinely non-Markov.
    Sizes are resampled until worst-case node counts fit the walk budgets.
    """
    for attempt in range(200):
        shrink = attempt // 20  # progressively bias toward small instances
        spec = random_buyer_seller_spec(
            rng, h_max=max(2, h_max - shrink), grid_max=max(2, grid_max - shrink),
            alphabet_max=max(1, alphabet_max - shrink))
        tables = AbstractionTables(FiniteAbstraction(spec), normalized=True)
        s1 = int(rng.integers(1, 4))
        s2 = int(rng.integers(1, 4))
        delta_table = float(rng.uniform(0.0, 0.5))
        delta_hash = float(rng.uniform(0.02, 0.3))
        hash_k = int(rng.integers(1, 3))
        p1_table = random_table_policy(tables, rng, max_support=s1)
        true_table = random_table_policy(tables, rng, max_support=s2)
        noise_table = random_table_policy(tables, rng, max_support=2)
        model_table = (1.0 - delta_table) * true_table + delta_table * noise_table
        p1 = PolicyDescriptor(p1_table)
        true_p2 = PolicyDescriptor(true_table)
        model_p2 = PolicyDescriptor(model_table, delta=delta_hash,
                                    hash_seed=int(rng.integers(0, 2 ** 62)),
                                    hash_k=hash_k)
        b2 = s2 + (s2 + 2) + hash_k  # true + mixed-model union, worst case
        theorem_est = _estimate_nodes(tables, s1, b2)
        br_est = _estimate_nodes(tables, tables.n_actions, b2)
        if theorem_est <= theorem_budget and br_est <= br_budget:
            return TheoremInstance(tables, p1, true_p2, model_p2, instance_id)
    raise RuntimeError("could not sample a within-budget instance")


def verify_theorem1_tabular(instance: TheoremInstance, node_cap: int = None,
                            tol: float = 1e-9) -> dict:
    """Kernel-path twin of exact.verify_theorem1 for descriptor policies."""
    tables = instance.tables
    cap = node_cap or tables.abstraction.node_cap
    H = tables.H
    p1 = PreparedPolicy(tables, instance.p1)
    p_true = PreparedPolicy(tables, instance.true_p2)
    p_model = PreparedPolicy(tables, instance.model_p2)
    _, _, points, eps, nodes = core.theorem_walk(tables, p1, p_true, p_model, cap)
    _, v_hat, v_star, eps, nodes_br = core.br_walk(tables, p_model, p_true, cap, eps)

    report_points = []
    all_pass = True
    for h, v_true, v_model in points:
        rhs = float(sum(eps[h + 2 * d + 1] for d in range((H - h - 1) // 2 + 1)))
        lhs = abs(v_model - v_true)
        slack = rhs - lhs
        ok = slack >= -tol
        all_pass = all_pass and ok
        report_points.append({"h": int(h), "lhs": lhs, "rhs": rhs,
                              "slack": slack, "pass": ok})
    spec = tables.spec
    eps_sum = float(sum(eps[h] for h in range(1, H + 1)
                        if whose_turn(h, spec.starter) == 2))
    corollary = corollary_report(v_hat, v_star, eps_sum, tol)
    return {
        "instance_id": instance.instance_id,
        "kernel": core.kernel_name(),
        "nodes": int(nodes + nodes_br),
        "points": report_points,
        "eps": np.asarray(eps[: H + 1]).tolist(),
        "corollary": corollary,
        "pass": bool(all_pass and corollary["pass"]),
    }


def counterexample_single_eps() -> TheoremInstance:
    """Deterministic instance violating the single-eps_sum optimality gap.

    Two full-surplus offers differ only in their message token. The true
    opponent accepts the first with probability 0.5 and the second with
    0.2; the model errs by -0.2 on the first and +0.2 on the second, so
    the model's best response picks the wrong offer. The realized gap is
    0.3 > eps_sum = 0.2 (and < 2 * eps_sum = 0.4).
    """
    spec = GameSpec(
        variant=Variant.BUYER_SELLER, horizon=2, starter=1,
        production_cost=0.0, budget=1.0, agent1_role="seller",
        price_grid=(0.0, 1.0), message_alphabet=("alpha", "beta"),
    )
    tables = AbstractionTables(FiniteAbstraction(spec), normalized=True)
    top = tables.payloads.index(1.0)
    offer_a = 2 * tables.M + top * tables.M + 0  # price 1, message alpha
    offer_b = 2 * tables.M + top * tables.M + 1  # price 1, message beta
    accept0, reject0 = 0, 1

    p1 = np.zeros((tables.n_obs, tables.n_actions))
    true_t = np.zeros((tables.n_obs, tables.n_actions))
    model_t = np.zeros((tables.n_obs, tables.n_actions))
    for obs in range(tables.n_obs):
        h, sp, proposer, lm = tables.decode_obs(obs)
        if tables.actor_at(h) == 1:
            p1[obs, offer_a] = 0.5
            p1[obs, offer_b] = 0.5
            continue
        answerable = sp >= 0 and proposer == 1
        if not answerable:
            wait0 = 2 * tables.M + tables.P * tables.M
            true_t[obs, wait0] = 1.0
            model_t[obs, wait0] = 1.0
            continue
        if sp == top and lm == 0:
            p_true, p_model = 0.5, 0.3
        elif sp == top and lm == 1:
            p_true, p_model = 0.2, 0.4
        else:
            p_true, p_model = 0.0, 0.0
        for table, p_accept in ((true_t, p_true), (model_t, p_model)):
            if p_accept > 0:
                table[obs, accept0] = p_accept
            table[obs, reject0] = 1.0 - p_accept
    return TheoremInstance(tables, PolicyDescriptor(p1), PolicyDescriptor(true_t),
                           PolicyDescriptor(model_t), "single-eps-counterexample")


def theorem_sweep(n_instances: int, master_seed: int = 0, **kw) -> List[dict]:
    reports = []
    for i in range(n_instances):
        rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(i,)))
        instance = random_theorem_instance(rng, instance_id=f"thm-{i:03d}", **kw)
        reports.append(verify_theorem1_tabular(instance))
    return reports


# -- Proposition-1 style sweep ----------------------------------------------


def prop1_abstraction(starter: int = 1, agent1_role: str = "seller") -> FiniteAbstraction:
    """Desk abstraction with four message tokens and the full price range."""
    spec = GameSpec(
        variant=Variant.BUYER_SELLER,
        horizon=4,
        starter=starter,
        production_cost=0.0,
        budget=6.0,
        agent1_role=agent1_role,
        price_grid=tuple(float(q) for q in range(7)),
        message_alphabet=SWEEP_ALPHABET,
    )
    return FiniteAbstraction(spec)


def adversarial_table(tables: AbstractionTables, p1: PolicyDescriptor) -> np.ndarray:
    """Tabular form of the least-likely-message adversary against p1."""
    spec = tables.spec
    designated = 2 if spec.starter == 1 else 3
    wait0 = 2 * tables.M + tables.P * tables.M  # wait with the first token
    accept0, reject0 = 0, 1

    # agent 1's first-turn distribution (root of its decision tree)
    prep = PreparedPolicy(tables, p1)
    if spec.starter == 1:
        obs = tables.obs_index(1, -1, 0, -1)
        ph = FNV_OFFSET
    else:
        obs = tables.obs_index(2, -1, 0, 0)
        ph = child_hash(FNV_OFFSET, wait0)
    dist = descriptor_distribution(tables, p1, obs, ph)
    mass = np.zeros(tables.M)
    for aid, prob in dist.items():
        mass[tables.msg[aid]] += prob
    target_msg = int(np.argmin(mass))  # argmin, ties to the smallest index

    table = np.zeros((tables.n_obs, tables.n_actions))
    side = 2
    for h in range(1, tables.H + 1):
        if tables.actor_list[h] != side:
            continue
        for sc in range(2 * tables.P + 1):
            for lm in range(-1, tables.M):
                if sc == 0:
                    sp, spr = -1, 0
                elif sc <= tables.P:
                    sp, spr = sc - 1, 1
                else:
                    sp, spr = sc - 1 - tables.P, 2
                obs = tables.obs_index(h, sp, spr, lm)
                answerable = sp >= 0 and spr == 1
                aid = wait0
                if h == designated and answerable and lm == target_msg:
                    r2 = tables.r2_deal[sp]
                    if r2 >= 0:
                        aid = accept0
                    else:
                        aid = reject0
                elif answerable:
                    aid = reject0
                table[obs, aid] = 1.0
    return table


def verify_prop1_tabular(abstraction: FiniteAbstraction, p1: PolicyDescriptor,
                         tol: float = 1e-9) -> dict:
    tables = AbstractionTables(abstraction, normalized=False)
    adv = PolicyDescriptor(adversarial_table(tables, p1))
    prep_p1 = PreparedPolicy(tables, p1)
    prep_adv = PreparedPolicy(tables, adv)
    cap = abstraction.node_cap
    j_value, _, _, _, _ = core.theorem_walk(tables, prep_p1, prep_adv, prep_adv, cap)
    br_value, _, _, _, _ = core.br_walk(tables, prep_adv, prep_adv, cap)
    cap_value = r1_max(abstraction.spec).value
    bound = cap_value / tables.M
    return {
        "j_against_adversary": float(j_value),
        "bound": float(bound),
        "r1_max": float(cap_value),
        "best_response_value": float(br_value),
        "pass": bool(j_value <= bound + tol and abs(br_value - cap_value) <= tol),
    }


def prop1_sweep(n_policies: int = 50, master_seed: int = 0) -> List[dict]:
    reports = []
    for i in range(n_policies):
        rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(7, i)))
        starter = 1 if i % 2 == 0 else 2
        role = "seller" if (i // 2) % 2 == 0 else "buyer"
        abstraction = prop1_abstraction(starter=starter, agent1_role=role)
        tables = AbstractionTables(abstraction, normalized=False)
        p1 = PolicyDescriptor(random_table_policy(tables, rng, max_support=4))
        report = verify_prop1_tabular(abstraction, p1)
        report["instance_id"] = f"prop1-{i:03d}"
        reports.append(report)
    return reports


# -- exact policy-iteration (sharpening) sweep -------------------------------


def pi_sweep(n_instances: int = 50, master_seed: int = 0, levels: int = 3,
             tol: float = 1e-9) -> List[dict]:
    """Exact best-of-N as policy iteration: improvement at every level,
    saturation at the support-restricted backward-induction optimum."""
    reports = []
    for i in range(n_instances):
        rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(11, i)))
        spec = random_buyer_seller_spec(rng, h_max=6, grid_max=5, alphabet_max=2)
        tables = AbstractionTables(FiniteAbstraction(spec), normalized=True)
        base = uniform_table_policy(tables)
        oppo = random_table_policy(tables, rng, max_support=3)
        agent1_layers = sum(1 for h in range(1, tables.H + 1)
                            if tables.actor_list[h] == 1)
        run_levels = max(levels, agent1_layers)
        values = sharpen_exact(tables, base, oppo, run_levels)
        optimum = dp_support_best_response(tables, base, _row_of_table(oppo))
        _, global_optimum = dp_best_response(tables, _row_of_table(oppo))
        monotone = all(values[l + 1] >= values[l] - tol for l in range(len(values) - 1))
        saturated = abs(values[-1] - optimum) <= tol
        # uniform base has full support, so saturation is the global optimum
        full_support = abs(optimum - global_optimum) <= tol
        reports.append({
            "instance_id": f"pi-{i:03d}",
            "values": values,
            "optimum": optimum,
            "monotone": bool(monotone),
            "saturated": bool(saturated),
            "full_support_optimum": bool(full_support),
            "pass": bool(monotone and saturated and full_support),
        })
    return reports
