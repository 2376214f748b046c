import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from renego.normal_form import (
    AdversarialOpponent,
    FTPLConfig,
    InvalidHistoryError,
    NormalFormGame,
    SequenceOpponent,
    StationaryOpponent,
    eta_schedule,
    external_regret,
    form_belief,
    perturbed_best_response,
    run_sfp_episodes,
    trace_to_csv,
)


def matching_pennies():
    r1 = np.array([[1.0, 0.0], [0.0, 1.0]])
    return NormalFormGame(r1, 1.0 - r1)


class TestFormBelief:
    def test_empirical_frequency(self):
        assert np.allclose(form_belief([1, 1, 2], 3), [0.0, 2 / 3, 1 / 3])

    def test_empty_history_uniform(self):
        assert np.allclose(form_belief([], 3), [1 / 3, 1 / 3, 1 / 3])

    def test_single_observed_action(self):
        assert np.allclose(form_belief([0] * 5, 2), [1.0, 0.0])

    def test_out_of_range_raises(self):
        with pytest.raises(InvalidHistoryError):
            form_belief([0, 3], 2)

    @given(st.lists(st.integers(0, 3), max_size=40))
    def test_output_is_distribution(self, history):
        belief = form_belief(history, 4)
        assert np.all(belief >= 0)
        assert abs(belief.sum() - 1.0) < 1e-9


class TestPerturbedBestResponse:
    def test_unperturbed_argmax(self):
        game = NormalFormGame(np.array([[0.2], [0.9]]), np.zeros((2, 1)))
        assert perturbed_best_response(game, np.array([1.0]), 0.0, np.zeros(2)) == 1

    def test_noise_decides_tie(self):
        game = NormalFormGame(np.array([[0.5], [0.5]]), np.zeros((2, 1)))
        assert perturbed_best_response(game, np.array([1.0]), 1.0, np.array([0.1, 0.3])) == 1

    def test_matching_pennies_pure_best_response(self):
        game = matching_pennies()
        assert perturbed_best_response(game, np.array([1.0, 0.0]), 0.0, np.zeros(2)) == 0

    def test_dimension_mismatch(self):
        game = matching_pennies()
        with pytest.raises(ValueError):
            perturbed_best_response(game, np.array([1.0]), 0.0, np.zeros(2))

    def test_ties_break_to_smallest_index(self):
        game = NormalFormGame(np.full((3, 1), 0.5), np.zeros((3, 1)))
        assert perturbed_best_response(game, np.array([1.0]), 0.0, np.zeros(3)) == 0

    @given(
        payoffs=st.lists(st.floats(0, 1), min_size=2, max_size=5),
        shift=st.floats(-0.4, 0.4),
    )
    def test_argmax_shift_invariance(self, payoffs, shift):
        n = len(payoffs)
        base = np.clip(np.asarray(payoffs), 0.0, 1.0)
        shifted = np.clip(base + shift, 0.0, 1.0)
        # keep the shift exact by embedding both columns in valid games
        if not np.allclose(shifted - base, shift):
            return
        noise = np.linspace(-0.3, 0.3, n)
        g1 = NormalFormGame(base.reshape(-1, 1), np.zeros((n, 1)))
        g2 = NormalFormGame(shifted.reshape(-1, 1), np.zeros((n, 1)))
        belief = np.array([1.0])
        assert perturbed_best_response(g1, belief, 1.0, noise) == perturbed_best_response(
            g2, belief, 1.0, noise
        )


class TestEtaSchedule:
    def test_values(self):
        assert eta_schedule(1, 1.0) == 1.0
        assert eta_schedule(4, 1.0) == 0.5
        assert eta_schedule(100, 2.0) == pytest.approx(0.2)

    def test_zero_raises(self):
        with pytest.raises(ValueError):
            eta_schedule(0, 1.0)


class TestRunEpisodes:
    def test_converges_to_best_response_against_stationary_pure(self):
        # a1 is the strict best response to b0
        game = NormalFormGame(
            np.array([[0.2, 0.9], [0.8, 0.1]]), np.zeros((2, 2))
        )
        trace = run_sfp_episodes(game, SequenceOpponent([0] * 1000), 1000, FTPLConfig(), seed=7)
        tail = np.asarray(trace.actions_1[-100:])
        assert np.mean(tail == 1) > 0.9

    def test_determinism(self):
        game = matching_pennies()
        cfg = FTPLConfig(noise_kind="gumbel")
        t1 = run_sfp_episodes(game, StationaryOpponent([0.5, 0.5]), 200, cfg, seed=11)
        t2 = run_sfp_episodes(game, StationaryOpponent([0.5, 0.5]), 200, cfg, seed=11)
        assert t1.actions_1 == t2.actions_1
        assert t1.actions_2 == t2.actions_2
        assert np.array_equal(t1.cumulative_vector, t2.cumulative_vector)

    def test_single_episode_runs(self):
        game = matching_pennies()
        trace = run_sfp_episodes(game, [1], 1, FTPLConfig(), seed=0)
        assert len(trace) == 1

    def test_cumulative_vector_matches_columns(self):
        game = matching_pennies()
        trace = run_sfp_episodes(game, StationaryOpponent([0.3, 0.7]), 50, FTPLConfig(), seed=3)
        expected = np.zeros(2)
        for b in trace.actions_2:
            expected += game.reward_1[:, b]
        assert np.allclose(trace.cumulative_vector, expected)


class TestExternalRegret:
    def test_zero_when_always_best(self):
        game = NormalFormGame(np.array([[1.0, 1.0], [0.0, 0.0]]), np.zeros((2, 2)))
        trace = run_sfp_episodes(game, [0, 1, 0, 1], 4, FTPLConfig(eta_scale=1e-9), seed=5)
        assert trace.actions_1 == [0] * 4 or external_regret(trace, game) == pytest.approx(0.0)

    def test_hand_computed_gap(self):
        game = NormalFormGame(np.array([[0.0, 0.0], [1.0, 1.0]]), np.zeros((2, 2)))
        from renego.normal_form import PlayTrace

        trace = PlayTrace(
            actions_1=[0, 0],
            actions_2=[0, 1],
            rewards_1=[0.0, 0.0],
            cumulative_vector=game.reward_1[:, 0] + game.reward_1[:, 1],
        )
        assert external_regret(trace, game) == pytest.approx(2.0)


def _mean_regret(game, schedule_factory, T, seeds, cfg):
    out = []
    for seed in seeds:
        trace = run_sfp_episodes(game, schedule_factory(), T, cfg, seed=seed)
        out.append(external_regret(trace, game))
    return float(np.mean(out))


def test_no_regret_rate_and_monotonicity_small():
    # smaller version of the acceptance sweep for quick feedback
    rng = np.random.default_rng(0)
    game = NormalFormGame(rng.random((5, 5)), rng.random((5, 5)))
    cfg = FTPLConfig()
    seeds = range(8)
    grid = [100, 1000]
    for factory in (lambda: StationaryOpponent([0.2] * 5), lambda: AdversarialOpponent(game)):
        averages = [_mean_regret(game, factory, T, seeds, cfg) for T in grid]
        per_round = [avg / T for avg, T in zip(averages, grid)]
        assert per_round[0] > per_round[1]
        for avg, T in zip(averages, grid):
            assert avg / np.sqrt(T * np.log(5)) < 3.0


def test_csv_trace_format():
    game = matching_pennies()
    trace = run_sfp_episodes(game, [0, 1, 1], 3, FTPLConfig(), seed=2)
    buf = io.StringIO()
    trace_to_csv(trace, game, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "episode,action_1,action_2,reward_1,cumulative_regret"
    assert len(lines) == 4
    final_regret = float(lines[-1].split(",")[-1])
    assert final_regret == pytest.approx(external_regret(trace, game))


def test_game_from_json_and_validation():
    doc = '{"reward_1": [[0.0, 1.0]], "reward_2": [[1.0, 0.0]]}'
    game = NormalFormGame.from_json(doc)
    assert game.n_actions_1 == 1 and game.n_actions_2 == 2
    with pytest.raises(ValueError):
        NormalFormGame(np.array([[2.0]]), np.array([[0.0]]))
