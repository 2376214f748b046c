"""Acceptance suite: one test per release criterion, tolerances pinned.

Each test prints a PASS/FAIL line so `pytest -s tests/test_acceptance.py`
doubles as the acceptance report.
"""
import time

import numpy as np
import pytest

from renego.env import GameSpec, Variant
from renego.agents import (
    BoNAgent,
    BoNConfig,
    Persona,
    PersonaParams,
    default_personas,
    generate_candidates,
)
from renego.harness import default_config, run_match
from renego.match import play_match
from renego.metrics import (
    pairwise_matrix,
    proposal_dispersion,
    selection_accuracy,
    social_welfare,
)
from renego.normal_form import FTPLConfig, regret_rate_sweep
from renego.oracle import FiniteAbstraction, pi_sweep, prop1_sweep, r1_max, theorem_sweep


def report(name: str, passed: bool, detail: str = ""):
    print(f"\n[{'PASS' if passed else 'FAIL'}] {name}" + (f" -- {detail}" if detail else ""))
    assert passed, f"{name}: {detail}"


# -- no-regret rate ----------------------------------------------------------


def test_ftpl_no_regret_rate():
    start = time.monotonic()
    stats = regret_rate_sweep(3, [100, 1000, 10000], range(20), FTPLConfig(),
                              master_seed=0)
    elapsed = time.monotonic() - start
    frozen_constant = 3.0
    worst_rate = max(max(per.values()) for per in stats["rate"].values())
    decreasing = all(
        per[100] > per[1000] > per[10000] for per in stats["per_round"].values())
    report("ftpl-regret: mean Regret(T)/T strictly decreasing (both schedules)",
           decreasing, str(stats["per_round"]))
    report(f"ftpl-regret: mean Regret(T)/sqrt(T ln|A|) <= {frozen_constant}",
           worst_rate <= frozen_constant, f"worst={worst_rate:.3f}")
    report("ftpl-regret: runtime < 2 minutes", elapsed < 120.0, f"{elapsed:.1f}s")


# -- error-propagation bound -------------------------------------------------


def test_theorem1_bound_sweep():
    start = time.monotonic()
    reports = theorem_sweep(200, master_seed=2024)
    elapsed = time.monotonic() - start
    worst_slack = min(p["slack"] for r in reports for p in r["points"])
    worst_corollary = min(r["corollary"]["slack"] for r in reports)
    single_eps_violations = sum(not r["corollary"]["pass_single_eps"] for r in reports)
    n_points = sum(len(r["points"]) for r in reports)
    nontrivial = sum(p["lhs"] > 1e-6 for r in reports for p in r["points"])
    report("theorem1: |V_model - V_true| within the TV tail bound at every "
           f"agent-1 decision point (slack >= -1e-9, {n_points} points, "
           f"{nontrivial} nontrivial)", worst_slack >= -1e-9,
           f"worst slack={worst_slack:.3e}")
    report("theorem1: optimality-gap corollary holds on all 200 instances "
           "(provable two-sided constant, j_hat >= j_star - 2*eps_sum)",
           worst_corollary >= -1e-9,
           f"worst={worst_corollary:.3e}; single-eps form violated on "
           f"{single_eps_violations} instances (see the expected-failure test)")
    report("theorem1: runtime < 5 minutes", elapsed < 300.0, f"{elapsed:.1f}s")


@pytest.mark.xfail(strict=True,
                   reason="the single-eps_sum optimality-gap constant is "
                          "unattainable: model errors of -eps on the true "
                          "best action and +eps on the runner-up flip the "
                          "argmax, losing up to 2*eps_sum; the constructed "
                          "counterexample realizes a gap of 1.5*eps_sum")
def test_theorem1_corollary_as_stated():
    from renego.oracle import counterexample_single_eps, verify_theorem1_tabular

    reports = theorem_sweep(200, master_seed=2024)
    reports.append(verify_theorem1_tabular(counterexample_single_eps()))
    worst = min(r["corollary"]["slack_single_eps"] for r in reports)
    report("theorem1: optimality-gap corollary with the single eps_sum "
           "constant (as stated)", worst >= -1e-9, f"worst={worst:.3e}")


# -- non-dominance bound -----------------------------------------------------


def test_prop1_adversarial_bound():
    reports = prop1_sweep(50, master_seed=7)
    bound_ok = all(r["j_against_adversary"] <= r["bound"] + 1e-9 for r in reports)
    br_ok = all(abs(r["best_response_value"] - r["r1_max"]) <= 1e-9 for r in reports)
    worst_gap = max(r["j_against_adversary"] - r["bound"] for r in reports)
    report("prop1: J(p1, adversary(p1)) <= r1_max/4 for 50 random mixed policies",
           bound_ok, f"worst J-bound gap={worst_gap:.3e}")
    report("prop1: best response against each adversary attains exactly r1_max",
           br_ok)


# -- maximum extractable reward ----------------------------------------------


def test_r1_max_oracle():
    buyer_seller = GameSpec(variant=Variant.BUYER_SELLER,
                            production_cost=43.0, budget=63.0)
    value = r1_max(buyer_seller).value
    report("r1_max: buyer-seller with cost 43 / budget 63 equals 20",
           value == pytest.approx(20.0, abs=1e-9), f"value={value}")
    exchange = GameSpec(variant=Variant.RESOURCE_EXCHANGE,
                        n1x=25, n1y=5, n2x=25, n2y=5,
                        v1x=0.5, v1y=2.5, v2x=2.5, v2y=0.5, exchange_norm=12.0)
    first = r1_max(exchange, enumeration_order="dx_major")
    second = r1_max(exchange, enumeration_order="dy_major")
    ok = (first.value == pytest.approx(12.0, abs=1e-9)
          and first.payload == (-1, 5)
          and second.value == first.value and second.payload == first.payload)
    report("r1_max: resource exchange equals 12 at (dx, dy) = (-1, +5), "
           "cross-checked by two enumeration orders", ok,
           f"value={first.value} at {first.payload}")


# -- exact policy iteration --------------------------------------------------


def test_policy_iteration_improvement():
    reports = pi_sweep(50, master_seed=11, levels=3)
    improve_ok = all(r["values"][1] >= r["values"][0] - 1e-9 for r in reports)
    monotone_ok = all(r["monotone"] for r in reports)
    saturate_ok = all(r["saturated"] and r["full_support_optimum"] for r in reports)
    report("policy-iteration: exact-mode value vs the opponent model >= base "
           "value on all 50 instances", improve_ok)
    report("policy-iteration: sharpened values nondecreasing in the level",
           monotone_ok)
    report("policy-iteration: saturating level attains the backward-induction "
           "optimum (tolerance 1e-9)", saturate_ok)


# -- qualitative phenomena with scripted agents --------------------------------


QUAL_SEEDS = range(10)


def test_qualitative_a_no_dominant_persona():
    spec = GameSpec(starter=2)
    catalog = default_personas(spec)
    result = pairwise_matrix(catalog, spec, episodes=8, seeds=QUAL_SEEDS)
    report("qualitative(a): no persona row dominates the pairwise matrix",
           not result.has_dominant_row,
           f"dominant={result.dominant_row or 'none'}")


def _bon_agent(seed):
    base = default_personas(GameSpec())["rational"]
    return BoNAgent(base, BoNConfig(n_candidates=5, generation_mode="brainstorm",
                                    rollouts=3), run_seed=seed)


def test_qualitative_b_bon_beats_base():
    spec = GameSpec(starter=2)  # agent 1 = seller, starting second
    catalog = default_personas(spec)
    opponents = ("rational", "desperate", "fairness", "tit_for_tat", "emotional")
    diffs = []
    for name in opponents:
        for seed in QUAL_SEEDS:
            bon_log = play_match(spec, {1: _bon_agent(seed), 2: catalog[name]},
                                 20, seed)
            base_log = play_match(spec, {1: default_personas(spec)["rational"],
                                         2: catalog[name]}, 20, seed)
            diffs.append(np.mean(bon_log.normalized_rewards(1))
                         - np.mean(base_log.normalized_rewards(1)))
    diffs = np.asarray(diffs)
    rng = np.random.default_rng(0)
    boots = np.array([np.mean(rng.choice(diffs, size=len(diffs), replace=True))
                      for _ in range(10_000)])
    lower = float(np.percentile(boots, 2.5))
    report("qualitative(b): best-of-N beats its base persona over 20 episodes "
           "(paired difference positive at 95% bootstrap confidence)",
           lower > 0.0, f"mean diff={diffs.mean():.3f}, CI lower={lower:.3f}")


def _det_base():
    return Persona(PersonaParams("rational", opening_anchor=0.7,
                                 concession_rate=0.08, accept_threshold=4.0,
                                 temperature=0.0))


def _det_oppo(seed):
    return Persona(PersonaParams("fairness",
                                 opening_anchor=0.55 + 0.02 * (seed % 3),
                                 concession_rate=0.05,
                                 accept_threshold=(0.3 + 0.02 * (seed % 2)) * 20.0,
                                 fairness_threshold=0.35, reject_floor=0.1,
                                 temperature=0.0))


def test_qualitative_c_selection_accuracy_nondecreasing():
    spec = GameSpec(starter=2)
    abstraction = FiniteAbstraction(spec, node_cap=10 ** 6)
    early, late = [], []
    for seed in QUAL_SEEDS:
        bon = BoNAgent(_det_base(), BoNConfig(5, "brainstorm", 3), run_seed=seed)
        log = play_match(spec, {1: bon, 2: _det_oppo(seed)}, 20, seed)
        windows = selection_accuracy(log, _det_oppo(seed), abstraction, _det_base())
        if windows[0]["accuracy"] is not None:
            early.append(windows[0]["accuracy"])
        if windows[-1]["accuracy"] is not None:
            late.append(windows[-1]["accuracy"])
    early_mean, late_mean = float(np.mean(early)), float(np.mean(late))
    report("qualitative(c): selection accuracy vs the oracle opponent is "
           "non-decreasing from episodes 1-5 to 16-20 (mean over 10 seeds)",
           late_mean >= early_mean,
           f"early={early_mean:.3f} late={late_mean:.3f}")


def test_qualitative_d_brainstorm_dispersion():
    # opening decision (no standing offer): the base persona proposes under
    # temperature, so both modes yield five priced candidates per draw
    spec = GameSpec(starter=2)
    from renego.env import new_episode

    base = default_personas(spec)["rational"]
    state = new_episode(GameSpec(starter=1))
    brainstorm, iid = [], []
    for draw in range(100):
        for mode, sink in (("brainstorm", brainstorm), ("iid", iid)):
            cset = generate_candidates(base, mode, 5, 1, state, (), draw, (1, 1, 2))
            value = proposal_dispersion(cset.candidates)
            assert value is not None
            sink.append(value)
    b_median, i_median = float(np.median(brainstorm)), float(np.median(iid))
    report("qualitative(d): brainstorm median proposal dispersion >= iid over "
           "100 matched draws", b_median >= i_median,
           f"brainstorm={b_median:.2f} iid={i_median:.2f}")


def test_qualitative_e_social_welfare_constant():
    spec = GameSpec(starter=2)
    catalog = default_personas(spec)
    deals = 0
    for seed in QUAL_SEEDS:
        log = play_match(spec, {1: catalog["rational"], 2: catalog["desperate"]},
                         10, seed)
        for record in log.records:
            if record.deal is not None:
                deals += 1
                assert social_welfare(record.rewards, spec) == 20.0  # exact
    report("qualitative(e): deal-episode social welfare equals budget - cost "
           "exactly", deals > 0, f"{deals} deals checked")


# -- determinism ----------------------------------------------------------------


def test_determinism_byte_identical_outputs(tmp_path):
    config = default_config()
    config.run = {"episodes": 6, "seeds": [5], "out_dir": str(tmp_path)}
    run_match(config, 5, tmp_path / "a")
    run_match(config, 5, tmp_path / "b")
    same = True
    for name in ("trajectories.jsonl", "matchlog.json", "metrics/rewards.csv",
                 "metrics/dispersion.csv"):
        body_a = (tmp_path / "a" / f"{config.name}-seed5" / name).read_bytes()
        body_b = (tmp_path / "b" / f"{config.name}-seed5" / name).read_bytes()
        same = same and body_a == body_b
    report("determinism: identical config and seed produce byte-identical "
           "artifact bodies", same)
