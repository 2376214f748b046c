import numpy as np
import pytest

from renego.env import (
    Action,
    GameSpec,
    Kind,
    ProtocolError,
    Variant,
    append_context,
    apply_action,
    legal_actions,
    new_episode,
    record_episode,
    run_episode,
    validate_action,
)
from renego.agents import (
    BoNConfig,
    BucketingConfig,
    ConfigError,
    Persona,
    PersonaParams,
    STRATEGY_FAMILIES,
    bon_act,
    default_personas,
    derive_rng,
    fit_opponent_model,
    generate_candidates,
    optimistic_action,
    sharpen,
    simulate_rollout,
)
from renego.oracle import FiniteAbstraction, exact_q

ALPHABET = ("greeting", "anchor_high", "appeal_fairness", "insult",
            "flatter", "deadline_pressure", "small_concession", "final_offer")


def paper_spec(**kw):
    defaults = dict(
        variant=Variant.BUYER_SELLER,
        horizon=10,
        starter=1,
        production_cost=43.0,
        budget=63.0,
        agent1_role="seller",
        price_grid=tuple(float(q) for q in range(0, 101)),
        message_alphabet=ALPHABET,
    )
    defaults.update(kw)
    return GameSpec(**defaults)


def offer_state(spec, price, message="greeting"):
    """Agent 2's offer standing; it is agent 1's turn (starter=2)."""
    state = new_episode(spec)
    return apply_action(state, Action.offer(price, message))


class TestPersonas:
    def test_rational_seller_accepts_62(self):
        spec = paper_spec(starter=2)
        persona = Persona(PersonaParams("rational", accept_threshold=0.0))
        state = offer_state(spec, 62.0)
        action = persona.act(1, state, (), np.random.default_rng(0))
        assert action.kind == Kind.ACCEPT

    def test_fairness_buyer_never_accepts_tiny_share(self):
        spec = paper_spec(agent1_role="buyer", starter=2)
        persona = Persona(PersonaParams("fairness", fairness_threshold=0.3,
                                        reject_floor=0.0))
        state = offer_state(spec, 62.0)  # buyer share 1/20
        for seed in range(10):
            action = persona.act(1, state, (), np.random.default_rng(seed))
            assert action.kind != Kind.ACCEPT

    def test_tit_for_tat_mirrors_three_grid_steps(self):
        spec = paper_spec()
        persona = Persona(PersonaParams("tit_for_tat", opening_anchor=0.75,
                                        accept_threshold=6.0))
        rng = np.random.default_rng(0)
        state = new_episode(spec)
        first = persona.act(1, state, (), rng)
        assert first.kind == Kind.OFFER
        state = apply_action(state, first)
        state = apply_action(state, Action.offer(45.0, "greeting"))  # buyer opens
        second = persona.act(1, state, (), rng)
        state = apply_action(state, second)
        state = apply_action(state, Action.offer(48.0, "greeting"))  # concedes 3
        third = persona.act(1, state, (), rng)
        assert third.kind == Kind.OFFER
        assert second.price - third.price == pytest.approx(3.0)

    def test_wrong_turn_raises(self):
        spec = paper_spec()
        persona = Persona(PersonaParams("rational"))
        with pytest.raises(ProtocolError):
            persona.act(2, new_episode(spec), (), np.random.default_rng(0))

    def test_all_personas_emit_legal_actions(self):
        spec = paper_spec()
        catalog = default_personas(spec)
        for name, persona in catalog.items():
            for seed in range(6):
                rng = np.random.default_rng(seed)
                state = new_episode(spec)
                while not state.terminal:
                    side = state.actor
                    action = catalog_for_side(catalog, name, side).act(
                        side, state, (), rng)
                    ok, why = validate_action(state, action)
                    assert ok, f"{name}: {why}"
                    state = apply_action(state, action)

    def test_exchange_personas_play_legally(self):
        spec = GameSpec(
            variant=Variant.RESOURCE_EXCHANGE, horizon=6, starter=1,
            n1x=25, n1y=5, n2x=25, n2y=5,
            v1x=0.5, v1y=2.5, v2x=2.5, v2y=0.5,
            exchange_norm=12.0, message_alphabet=ALPHABET,
        )
        persona = default_personas(spec)["rational"]
        rng = np.random.default_rng(1)
        state = new_episode(spec)
        while not state.terminal:
            action = persona.act(state.actor, state, (), rng)
            ok, why = validate_action(state, action)
            assert ok, why
            state = apply_action(state, action)


def catalog_for_side(catalog, name, side):
    return catalog[name]


def play_match(spec, provider_1, provider_2, episodes, seed):
    context = ()
    for t in range(1, episodes + 1):
        rng = {1: derive_rng(seed, 1, t), 2: derive_rng(seed, 2, t)}
        state = run_episode(
            spec,
            {side: (lambda s, side=side: (provider_1 if side == 1 else provider_2)
                    .act(side, s, context, rng[side])) for side in (1, 2)},
            context,
        )
        context = append_context(context, record_episode(state))
    return context


class TestOpponentModel:
    def test_predicts_deterministic_opponent_exactly(self):
        spec = paper_spec()
        seller = Persona(PersonaParams("rational", opening_anchor=0.8,
                                       concession_rate=0.1, accept_threshold=5.0))
        buyer = Persona(PersonaParams("rational", opening_anchor=0.7,
                                      concession_rate=0.08, accept_threshold=4.0))
        context = play_match(spec, seller, buyer, 10, seed=3)
        config = BucketingConfig(offer_buckets=len(spec.price_grid))
        model = fit_opponent_model(spec, 2, context, config=config)
        checked = 0
        for record in context:
            state = new_episode(spec)
            for agent, action in record.trajectory:
                if agent == 2:
                    dist = model.action_distribution(2, state)
                    assert dist == [(action, 1.0)]
                    checked += 1
                state = apply_action(state, action)
        assert checked >= 10

    def test_empty_context_falls_back_to_optimism(self):
        spec = paper_spec()
        model = fit_opponent_model(spec, 2, ())
        state = offer_state(paper_spec(starter=1), 55.0)
        # agent 1 (seller) offered 55; reward 12 > 0, so optimistic accept
        state = apply_action(new_episode(spec), Action.offer(55.0, "greeting"))
        dist = model.action_distribution(2, state)
        assert dist == [(Action(Kind.ACCEPT, message=ALPHABET[0]), 1.0)]

    def test_optimism_off_gives_uniform(self):
        spec = paper_spec()
        model = fit_opponent_model(spec, 2, (), config=BucketingConfig(optimism=False))
        state = apply_action(new_episode(spec), Action.offer(55.0, "greeting"))
        dist = model.action_distribution(2, state)
        legal = legal_actions(state)
        assert len(dist) == len(legal)
        assert all(p == pytest.approx(1.0 / len(legal)) for _, p in dist)

    def test_empirical_frequencies_no_smoothing(self):
        spec = paper_spec()
        model = fit_opponent_model(spec, 2, ())
        state = apply_action(new_episode(spec), Action.offer(50.0, "greeting"))
        key_state = state
        offer = Action.offer(55.0, "anchor_high")
        reject = Action(Kind.REJECT, message="greeting")
        for action, count in ((offer, 4), (reject, 1)):
            for _ in range(count):
                sub = apply_action(key_state, action)
                model.observe_trajectory(key_state.trajectory + ((2, action),))
        dist = dict(model.action_distribution(2, key_state))
        assert dist[offer] == pytest.approx(0.8)
        assert dist[reject] == pytest.approx(0.2)

    def test_unfavorable_standing_counter_offers_best_deal(self):
        spec = paper_spec()
        model = fit_opponent_model(spec, 2, ())
        state = apply_action(new_episode(spec), Action.offer(30.0, "greeting"))
        # seller reward would be -13: optimistic buyer counter-offers the
        # seller's best price instead of accepting
        action = optimistic_action(spec, 2, state)
        assert action.kind == Kind.OFFER
        assert action.price == 100.0

    def test_fit_is_pure_function_of_inputs(self):
        spec = paper_spec()
        catalog = default_personas(spec)
        context = play_match(spec, catalog["rational"], catalog["desperate"], 6, seed=9)
        m1 = fit_opponent_model(spec, 2, context)
        m2 = fit_opponent_model(spec, 2, context)
        assert m1.counts == m2.counts
        assert m1.observations == m2.observations

    def test_stationary_frequency_concentrates(self):
        # law of large numbers at a single bucket
        spec = paper_spec()
        rng = np.random.default_rng(0)
        truth = 0.7
        for k in (25, 400):
            model = fit_opponent_model(spec, 2, ())
            base = apply_action(new_episode(spec), Action.offer(50.0, "greeting"))
            hi = Action.offer(55.0, "greeting")
            lo = Action.offer(45.0, "greeting")
            draws = rng.random(k) < truth
            for d in draws:
                model.observe_trajectory(base.trajectory + ((2, hi if d else lo),))
            freq = dict(model.action_distribution(2, base)).get(hi, 0.0)
            assert abs(freq - truth) <= 4.0 / np.sqrt(k)


class TestCandidates:
    def _decision(self, spec):
        state = offer_state(spec, 50.0)
        return state

    def test_brainstorm_five_distinct_families(self):
        spec = paper_spec(starter=2)
        base = default_personas(spec)["rational"]
        cset = generate_candidates(base, "brainstorm", 5, 1,
                                   self._decision(spec), (), 0, (1, 1, 2))
        assert len(cset) == 5
        assert sorted(c.family for c in cset.candidates) == sorted(STRATEGY_FAMILIES)
        for cand in cset.candidates:
            ok, why = validate_action(self._decision(spec), cand.action)
            assert ok, why

    def test_iid_single_sample(self):
        spec = paper_spec(starter=2)
        base = default_personas(spec)["rational"]
        cset = generate_candidates(base, "iid", 1, 1, self._decision(spec), (), 0, (1, 1, 2))
        assert len(cset) == 1
        assert cset.candidates[0].family == "iid"

    def test_brainstorm_over_family_count_rejected(self):
        with pytest.raises(ConfigError):
            BoNConfig(n_candidates=6, generation_mode="brainstorm")


class _ScriptedOpponent:
    """Accepts anything (used to make rollout values equal offer values)."""

    def act(self, side, state, context, rng):
        if state.standing is not None and state.standing.proposer != side:
            return Action(Kind.ACCEPT, message="greeting")
        return Action(Kind.WAIT, message="greeting")


class _RejectingOpponent:
    def act(self, side, state, context, rng):
        if state.standing is not None and state.standing.proposer != side:
            return Action(Kind.REJECT, message="greeting")
        return Action(Kind.WAIT, message="greeting")


class _SequenceBase:
    """Emits a scripted sequence of offers (candidate generation stub)."""

    def __init__(self, prices):
        self.prices = list(prices)
        self.i = 0

    def act(self, side, state, context, rng):
        price = self.prices[min(self.i, len(self.prices) - 1)]
        self.i += 1
        return Action.offer(price, "greeting")


class TestRollouts:
    def test_accept_candidate_returns_immediate_reward(self):
        spec = paper_spec(starter=2)
        state = offer_state(spec, 50.0)
        reward = simulate_rollout(state, Action(Kind.ACCEPT, message="greeting"),
                                  1, None, None, (), np.random.default_rng(0))
        assert reward == pytest.approx(7.0)

    def test_rejecting_opponent_zeroes_every_offer(self):
        spec = paper_spec()
        state = new_episode(spec)
        for price in (50.0, 60.0, 70.0):
            reward = simulate_rollout(state, Action.offer(price, "greeting"), 1,
                                      _SequenceBase([55.0]), _RejectingOpponent(),
                                      (), np.random.default_rng(0))
            assert reward == 0.0

    def test_candidate_at_last_turn_times_out(self):
        spec = paper_spec(horizon=1)
        state = new_episode(spec)
        reward = simulate_rollout(state, Action.offer(60.0, "greeting"), 1,
                                  None, None, (), np.random.default_rng(0))
        assert reward == 0.0


class TestBonAct:
    def test_single_candidate_returned_unconditionally(self):
        spec = paper_spec()
        config = BoNConfig(n_candidates=1, generation_mode="iid", rollouts=1)
        base = _SequenceBase([55.0])
        action, cset = bon_act(config, base, _RejectingOpponent(), 1,
                               new_episode(spec), (), 0, (1, 1, 1))
        assert action == Action.offer(55.0, "greeting")
        assert cset.chosen == 0

    def test_tie_breaks_to_first_maximum(self):
        spec = paper_spec()
        config = BoNConfig(n_candidates=3, generation_mode="iid", rollouts=1)
        base = _SequenceBase([50.0, 57.0, 57.0])  # estimates 7, 14, 14
        action, cset = bon_act(config, base, _ScriptedOpponent(), 1,
                               new_episode(spec), (), 0, (1, 1, 1))
        assert [round(c.estimate, 6) for c in cset.candidates] == [7.0, 14.0, 14.0]
        assert cset.chosen == 1

    def test_exact_mode_matches_oracle_argmax(self):
        # deterministic base and opponent: a single rollout is the exact Q,
        # so the chosen candidate must maximize the oracle Q values
        spec = paper_spec(horizon=4)
        abstraction = FiniteAbstraction(spec)
        base = Persona(PersonaParams("rational", opening_anchor=0.7,
                                     concession_rate=0.1, accept_threshold=5.0))
        oppo = Persona(PersonaParams("desperate", opening_anchor=0.4,
                                     concession_rate=0.15, accept_threshold=1.0))
        config = BoNConfig(n_candidates=5, generation_mode="brainstorm", rollouts=1)
        state = new_episode(spec)
        action, cset = bon_act(config, base, oppo, 1, state, (), 0, (1, 1, 1))
        qs = [exact_q(abstraction, state, c.action, base, oppo) for c in cset.candidates]
        for estimate, q in zip([c.estimate for c in cset.candidates], qs):
            assert estimate == pytest.approx(q)
        assert max(qs) == pytest.approx(qs[cset.chosen])

    def test_sharpen_level_one_equals_bon_act(self):
        spec = paper_spec()
        base = default_personas(spec)["rational"]
        context = ()
        model = fit_opponent_model(spec, 2, context)
        config = BoNConfig(n_candidates=3, generation_mode="brainstorm", rollouts=2,
                           sharpening=1)
        provider = sharpen(base, config, model, run_seed=5)
        state = new_episode(spec)
        direct, _ = bon_act(config, base, model, 1, state, context, 5, (1, 1, 1, 1))
        assert provider.act(1, state, context, np.random.default_rng(0)) == direct

    def test_budget_guard_trips(self):
        from renego.agents import SimulationBudgetExceeded

        spec = paper_spec()
        base = default_personas(spec)["rational"]
        model = fit_opponent_model(spec, 2, ())
        config = BoNConfig(n_candidates=5, generation_mode="brainstorm", rollouts=3,
                           sharpening=2, max_simulated_turns=10)
        provider = sharpen(base, config, model, run_seed=1)
        with pytest.raises(SimulationBudgetExceeded):
            provider.act(1, new_episode(spec), (), np.random.default_rng(0))
