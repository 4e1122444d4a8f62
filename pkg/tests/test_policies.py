import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from sat2mdp import (
    Formula,
    PolicyParams,
    best_greedy,
    build_mdp,
    enumerate_trajectories,
    eval_q_greedy,
    eval_q_softmax,
    greedy_weight,
    is_zeta_satisfiable,
    lookahead_state,
    realizability_feature,
    reward,
    sample_trajectory,
    state_value_greedy,
    state_value_softmax,
    tabulate_policy_value,
)
from sat2mdp.features import greedy_action
from sat2mdp.mdp import MdpError, initial_state, stage
from sat2mdp.policies import iter_states
from sat2mdp.verify import random_formula

ALL_TRUE = PolicyParams((1.0, 1.0, 1.0))


class TestEvalQGreedy:
    def test_example1_golden_cell(self, example1_instance):
        assert eval_q_greedy(example1_instance, ALL_TRUE, (1, -1, -1), 0) == Fraction(1, 2)

    def test_root_true_full_reward(self, example1_instance):
        assert eval_q_greedy(example1_instance, ALL_TRUE, (-1, -1, -1), 1) == 1

    def test_terminal_rejected(self, example1_instance):
        with pytest.raises(MdpError):
            eval_q_greedy(example1_instance, ALL_TRUE, (0, 1, 0), 1)

    def test_equals_lookahead_leaf_reward(self):
        rng = np.random.default_rng(12)
        for _ in range(60):
            n = int(rng.integers(1, 8))
            formula = random_formula(n, rng)
            instance = build_mdp(formula)
            params = PolicyParams(tuple(float(v) for v in rng.uniform(-2, 2, size=n)))
            h = int(rng.integers(1, n + 1))
            state = tuple(int(v) for v in rng.integers(0, 2, size=h - 1)) + (-1,) * (n - h + 1)
            action = int(rng.integers(0, 2))
            leaf = lookahead_state(state, action, params)
            assert eval_q_greedy(instance, params, state, action) == reward(instance, leaf)

    def test_values_in_unit_interval(self, example1_instance):
        for state in iter_states(3):
            for action in (0, 1):
                q = eval_q_greedy(example1_instance, ALL_TRUE, state, action)
                assert 0 <= q <= 1


class TestEvalQSoftmax:
    def test_uniform_policy_root(self, example1_instance):
        params = PolicyParams((0.0, 0.0, 0.0))
        # four equiprobable leaves of the True subtree; (1,0,1) pays 1/2
        got = eval_q_softmax(example1_instance, params, (-1, -1, -1), 1)
        assert got == pytest.approx(7 / 8, abs=1e-15)

    def test_saturated_matches_greedy(self, example1_instance):
        params = PolicyParams((20.0, 20.0, 20.0))
        for state in iter_states(3):
            for action in (0, 1):
                soft = eval_q_softmax(example1_instance, params, state, action)
                hard = float(eval_q_greedy(example1_instance, ALL_TRUE, state, action))
                assert abs(soft - hard) < 1e-6

    def test_dp_equals_enumeration(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            n = int(rng.integers(1, 6))
            formula = random_formula(n, rng)
            instance = build_mdp(formula)
            params = PolicyParams(tuple(float(v) for v in rng.uniform(-3, 3, size=n)))
            h = int(rng.integers(1, n + 1))
            state = tuple(int(v) for v in rng.integers(0, 2, size=h - 1)) + (-1,) * (n - h + 1)
            action = int(rng.integers(0, 2))
            dp = eval_q_softmax(instance, params, state, action)
            brute = eval_q_softmax(instance, params, state, action, method="enumerate")
            assert abs(dp - brute) <= 1e-12

    def test_unknown_method(self, example1_instance):
        with pytest.raises(ValueError):
            eval_q_softmax(example1_instance, ALL_TRUE, (-1, -1, -1), 1, method="guess")


class TestTrajectories:
    def test_no_free_stages_single_trajectory(self, example1_instance):
        params = PolicyParams((0.0, 0.0, 0.0))
        got = enumerate_trajectories(example1_instance, params, (0, 1, -1), 1)
        assert len(got) == 1
        assert got[0].probability == 1.0
        assert got[0].final == (0, 1, 1)

    def test_root_has_four(self, example1_instance):
        params = PolicyParams((0.3, -0.2, 0.9))
        got = enumerate_trajectories(example1_instance, params, (-1, -1, -1), 1)
        assert len(got) == 4
        assert sum(t.probability for t in got) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_policy_equiprobable(self, example1_instance):
        params = PolicyParams((0.0, 0.0, 0.0))
        got = enumerate_trajectories(example1_instance, params, (-1, -1, -1), 0)
        assert all(t.probability == pytest.approx(0.25, abs=1e-15) for t in got)

    def test_steps_are_linked(self, example1_instance):
        params = PolicyParams((1.0, -1.0, 0.5))
        for traj in enumerate_trajectories(example1_instance, params, (-1, -1, -1), 1):
            state = (-1, -1, -1)
            for seen, action in traj.steps:
                assert seen == state
                state = state[: stage(state) - 1] + (action,) + state[stage(state):]
            assert state == traj.final

    def test_cap(self, example1_instance):
        with pytest.raises(MdpError, match="cap"):
            enumerate_trajectories(example1_instance, ALL_TRUE, (-1, -1, -1), 1, cap=1)


class TestSampleTrajectory:
    def test_deterministic_given_seed(self, example1_instance):
        params = PolicyParams((0.4, -0.8, 1.2))
        a = sample_trajectory(example1_instance, params, 123)
        b = sample_trajectory(example1_instance, params, 123)
        assert a == b

    def test_saturated_walks_all_true(self, example1_instance):
        params = PolicyParams((20.0, 20.0, 20.0))
        traj = sample_trajectory(example1_instance, params, 7)
        assert traj.final == (1, 1, 1)

    def test_monte_carlo_mean_matches_expectation(self):
        rng = np.random.default_rng(3)
        formula = random_formula(6, rng, clause_count=8)
        instance = build_mdp(formula)
        params = PolicyParams(tuple(float(v) for v in rng.uniform(-1, 1, size=6)))
        trials = 20000
        seeds = np.random.SeedSequence(11).generate_state(trials, dtype=np.uint64)
        total = 0.0
        for s in seeds:
            traj = sample_trajectory(instance, params, int(s))
            total += float(reward(instance, traj.final))
        mean = total / trials
        expected = state_value_softmax(instance, params, initial_state(6))
        sigma = math.sqrt(max(expected * (1 - expected), 1e-6) / trials)
        assert abs(mean - expected) < 3 * sigma + 1e-9


class TestBestGreedy:
    def test_example1_reaches_one(self, example1_instance):
        params, value = best_greedy(example1_instance)
        assert value == 1
        leaf = tuple(greedy_action(h, params) for h in (1, 2, 3))
        assert reward(example1_instance, leaf) == 1

    def test_contradiction_caps_at_half(self, contradiction):
        _, value = best_greedy(build_mdp(contradiction))
        assert value == Fraction(1, 2)

    def test_matches_assignment_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            formula = random_formula(n, rng, clause_count=2 * n)
            _, value = best_greedy(build_mdp(formula))
            _, _, zmax = is_zeta_satisfiable(formula, 0)
            assert value == zmax

    def test_cap(self):
        instance = build_mdp(Formula.from_ints(4, [[1]]))
        with pytest.raises(MdpError):
            best_greedy(instance, cap=3)

    def test_reference_optimum_flags_softmax_sup(self, example1_instance):
        from sat2mdp import reference_optimum

        hard = reference_optimum(example1_instance, "greedy")
        soft = reference_optimum(example1_instance, "softmax")
        assert hard.value == soft.value == 1
        assert hard.attained and not soft.attained
        # the reported ray direction approaches the sup at saturation
        scaled = PolicyParams(tuple(20.0 * v for v in soft.params.theta_prime))
        approach = state_value_softmax(example1_instance, scaled, initial_state(3))
        assert abs(approach - float(soft.value)) < 1e-6


class TestIdentities:
    def test_decomposition(self, example1_instance):
        # q equals (satisfied count + undecided/continuation product) / |C|,
        # recomputed from the raw integer parts
        for signs in product((0, 1), repeat=3):
            params = PolicyParams.from_signs(signs)
            for state in iter_states(3):
                h = stage(state)
                w = greedy_weight(example1_instance, params, h)
                for action in (0, 1):
                    phi = realizability_feature(example1_instance, state, action)
                    inner = sum(m * w.entry_int(i) for i, m in phi.y_counts.items())
                    q = eval_q_greedy(example1_instance, params, state, action)
                    assert q == Fraction(phi.b + inner, 2)

    def test_telescoping_along_greedy_trajectories(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            n = int(rng.integers(2, 8))
            formula = random_formula(n, rng)
            instance = build_mdp(formula)
            for signs in product((0, 1), repeat=n):
                params = PolicyParams.from_signs(signs)
                state = initial_state(n)
                parts = []
                for h in range(1, n + 1):
                    action = greedy_action(h, params)
                    phi = realizability_feature(instance, state, action)
                    w = greedy_weight(instance, params, h)
                    inner = sum(m * w.entry_int(i) for i, m in phi.y_counts.items())
                    parts.append((phi.b, inner))
                    state = state[: h - 1] + (action,) + state[h:]
                for h in range(2, n + 1):
                    b_prev, in_prev = parts[h - 2]
                    b_cur, in_cur = parts[h - 1]
                    assert in_prev - in_cur == b_cur - b_prev


class TestPolicyValue:
    def test_greedy_tabulation_consistent(self, example1_instance):
        table = tabulate_policy_value(example1_instance, ALL_TRUE, "greedy")
        assert len(table.q) == 2 * 7 and len(table.v) == 7
        for state in iter_states(3):
            assert table.v[state] == table.q[(state, greedy_action(stage(state), ALL_TRUE))]
            assert 0 <= table.v[state] <= 1
        assert table.v[(-1, -1, -1)] == state_value_greedy(
            example1_instance, ALL_TRUE, (-1, -1, -1)
        )

    def test_softmax_tabulation_mixes_actions(self, example1_instance):
        params = PolicyParams((0.0, 0.0, 0.0))
        table = tabulate_policy_value(example1_instance, params, "softmax")
        for state in iter_states(3):
            mix = 0.5 * table.q[(state, 0)] + 0.5 * table.q[(state, 1)]
            assert table.v[state] == pytest.approx(mix, abs=1e-15)
