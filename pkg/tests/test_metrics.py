import io

import numpy as np
import pytest

from renego.env import Action, GameSpec, Kind, RewardPair, Variant
from renego.agents import Candidate, Persona, PersonaParams, default_personas
from renego.match import MatchLog, play_match
from renego.metrics import (
    UndefinedCorrelationError,
    matrix_to_csv,
    pairwise_matrix,
    proposal_dispersion,
    rewards_to_csv,
    social_welfare,
    window_correlation,
)


def paper_spec(**kw):
    defaults = dict(variant=Variant.BUYER_SELLER, horizon=10, starter=1,
                    production_cost=43.0, budget=63.0, agent1_role="seller")
    defaults.update(kw)
    return GameSpec(**defaults)


def fake_log(rewards, scale=20.0):
    from renego.env import EpisodeRecord, Cause

    records = tuple(
        EpisodeRecord((), Cause.ACCEPTED, 50.0,
                      RewardPair(r, scale - r, r / scale, (scale - r) / scale))
        for r in rewards)
    return MatchLog(spec=paper_spec(), seed=0, provider_ids={}, records=records)


class TestPairwiseMatrix:
    def test_self_play_shares_sum_to_one_on_deals(self):
        spec = paper_spec()
        persona = default_personas(spec)["rational"]
        log = play_match(spec, {1: persona, 2: persona}, 6, seed=0)
        for record in log.records:
            total = record.rewards.normalized_1 + record.rewards.normalized_2
            if record.deal is not None:
                assert total == pytest.approx(1.0)
            else:
                assert total == 0.0

    def test_always_reject_row_and_column_zero(self):
        spec = paper_spec(horizon=4)

        class Rejector:
            def act(self, side, state, context, rng):
                if state.standing is not None and state.standing.proposer != side:
                    return Action(Kind.REJECT, message="greeting")
                return Action(Kind.WAIT, message="greeting")

        dealer = default_personas(spec)["rational"]
        result = pairwise_matrix({"rejector": Rejector(), "dealer": dealer},
                                 spec, episodes=3, seeds=[0, 1])
        i = result.personas.index("rejector")
        j = result.personas.index("dealer")
        assert np.allclose(result.aggregate[i, :], 0.0)
        assert result.aggregate[j, i] == pytest.approx(0.0)

    def test_desk_matrix_has_no_dominant_row(self):
        spec = paper_spec()
        catalog = default_personas(spec)
        names = ["rational", "cunning", "desperate", "fairness", "emotional"]
        result = pairwise_matrix({n: catalog[n] for n in names}, spec,
                                 episodes=5, seeds=[0, 1])
        assert not result.has_dominant_row

    def test_single_persona_rejected(self):
        spec = paper_spec()
        with pytest.raises(ValueError):
            pairwise_matrix({"only": default_personas(spec)["rational"]},
                            spec, episodes=2, seeds=[0])

    def test_csv_contains_labels(self):
        spec = paper_spec(horizon=4)
        catalog = default_personas(spec)
        result = pairwise_matrix({n: catalog[n] for n in ("rational", "desperate")},
                                 spec, episodes=2, seeds=[0])
        buf = io.StringIO()
        matrix_to_csv(result, buf)
        text = buf.getvalue()
        assert "rational" in text and "desperate" in text
        assert "dominant_row," in text


class TestWindowCorrelation:
    def test_identical_windows_correlate_perfectly(self):
        logs = [fake_log([r] * 10) for r in (4.0, 8.0, 12.0)]
        assert window_correlation(logs, 5) == pytest.approx(1.0)

    def test_antisymmetric_windows_anticorrelate(self):
        logs = [fake_log([r] * 5 + [20.0 - r] * 5) for r in (4.0, 8.0, 12.0)]
        assert window_correlation(logs, 5) == pytest.approx(-1.0)

    def test_zero_variance_is_undefined(self):
        logs = [fake_log([5.0] * 10), fake_log([5.0] * 10)]
        with pytest.raises(UndefinedCorrelationError):
            window_correlation(logs, 5)

    def test_single_log_is_undefined(self):
        with pytest.raises(UndefinedCorrelationError):
            window_correlation([fake_log([5.0] * 10)], 5)


class TestDispersion:
    def test_constant_payloads(self):
        cands = [Candidate(Action.offer(50.0, "greeting"), "iid") for _ in range(3)]
        assert proposal_dispersion(cands) == 0.0

    def test_two_point_payloads(self):
        cands = [Candidate(Action.offer(48.0, "greeting"), "iid"),
                 Candidate(Action.offer(52.0, "greeting"), "iid")]
        assert proposal_dispersion(cands) == pytest.approx(2.0)

    def test_no_offers_is_absent(self):
        cands = [Candidate(Action(Kind.WAIT, message="greeting"), "iid")]
        assert proposal_dispersion(cands) is None


class TestSocialWelfare:
    def test_exchange_transfer(self):
        spec = GameSpec(variant=Variant.RESOURCE_EXCHANGE,
                        n1x=25, n1y=5, n2x=5, n2y=25,
                        v1x=0.5, v1y=2.5, v2x=2.5, v2y=0.5, exchange_norm=12.0)
        assert social_welfare(RewardPair(12.0, 0.0), spec) == pytest.approx(12.0)

    def test_no_deal_is_zero(self):
        assert social_welfare(RewardPair(0.0, 0.0), paper_spec()) == 0.0

    def test_buyer_seller_deal_is_surplus(self):
        spec = paper_spec()
        for q in (45.0, 50.0, 62.0):
            pair = RewardPair(q - 43.0, 63.0 - q)
            assert social_welfare(pair, spec) == pytest.approx(20.0)


def test_rewards_csv_shape():
    log = fake_log([4.0, 8.0])
    buf = io.StringIO()
    rewards_to_csv(log, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0].startswith("episode,r1,r2,")
    assert len(lines) == 3


class TestRoleSwapSymmetry:
    def test_swapped_roles_reproduce_the_same_match(self):
        # deterministic personas: labeling the same physical pairing as
        # (agent1=seller starting) or (agent1=buyer, seller starts) must
        # produce the identical episode and transposed normalized rewards

        seller = Persona(PersonaParams("rational", opening_anchor=0.8,
                                       concession_rate=0.1, accept_threshold=5.0))
        buyer = Persona(PersonaParams("rational", opening_anchor=0.6,
                                      concession_rate=0.12, accept_threshold=3.0))
        spec_a = paper_spec(agent1_role="seller", starter=1)
        spec_b = paper_spec(agent1_role="buyer", starter=2)
        log_a = play_match(spec_a, {1: seller, 2: buyer}, 5, seed=0)
        log_b = play_match(spec_b, {1: buyer, 2: seller}, 5, seed=0)
        for rec_a, rec_b in zip(log_a.records, log_b.records):
            assert rec_a.deal == rec_b.deal
            assert rec_a.rewards.normalized_1 == pytest.approx(
                rec_b.rewards.normalized_2)
            assert rec_a.rewards.normalized_2 == pytest.approx(
                rec_b.rewards.normalized_1)


class TestSelectionAccuracy:
    def _deterministic_pair(self):
        base = Persona(PersonaParams("rational", opening_anchor=0.7,
                                     concession_rate=0.08, accept_threshold=4.0))
        oppo = Persona(PersonaParams("desperate", opening_anchor=0.4,
                                     concession_rate=0.15, accept_threshold=1.0))
        return base, oppo

    def test_exact_model_scores_one(self):
        # when best-of-N simulates against the *true* opponent with
        # deterministic providers, every choice is oracle-optimal
        from renego.agents import BoNAgent, BoNConfig
        from renego.metrics import selection_accuracy
        from renego.oracle import FiniteAbstraction

        spec = paper_spec(horizon=6, starter=2)
        base, oppo = self._deterministic_pair()

        class TrueModelBoN(BoNAgent):
            def act(self, side, state, context, rng):
                from renego.agents.bon import bon_act

                action, cset = bon_act(self.config, self.base, oppo, side, state,
                                       context, self.run_seed,
                                       (side, len(context) + 1, state.h))
                from renego.agents.bon import BoNDecision

                self.diagnostics.append(BoNDecision(
                    episode=len(context) + 1, h=state.h,
                    trajectory=state.trajectory,
                    families=[c.family for c in cset.candidates],
                    actions=[c.action for c in cset.candidates],
                    estimates=[c.estimate for c in cset.candidates],
                    chosen=cset.chosen))
                return action

        agent = TrueModelBoN(base, BoNConfig(5, "brainstorm", 1), run_seed=0)
        log = play_match(spec, {1: agent, 2: oppo}, 4, seed=0)
        windows = selection_accuracy(log, oppo, FiniteAbstraction(spec, 10 ** 6),
                                     base, window=4)
        for row in windows:
            if row["decisions"]:
                assert row["accuracy"] == 1.0

    def test_missing_diagnostics_errors(self):
        from renego.metrics import selection_accuracy
        from renego.oracle import FiniteAbstraction

        spec = paper_spec()
        base, oppo = self._deterministic_pair()
        log = play_match(spec, {1: base, 2: oppo}, 2, seed=0)
        with pytest.raises(ValueError):
            selection_accuracy(log, oppo, FiniteAbstraction(spec), base)
