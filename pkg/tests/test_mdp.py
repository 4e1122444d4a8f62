from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from sat2mdp import (
    Formula,
    MdpError,
    build_mdp,
    generative_query,
    initial_state,
    is_terminal,
    reward,
    satisfied_fraction,
    stage,
    transition,
)
from sat2mdp.mdp import validate_state
from sat2mdp.verify import random_formula


class TestBuild:
    def test_example1_dimensions(self, example1_instance):
        inst = example1_instance
        assert inst.horizon == 4
        assert inst.d == 27
        assert inst.d_prime == 3
        assert inst.implied_state_count == 15

    def test_n1_dimensions(self):
        inst = build_mdp(Formula.from_ints(1, [[1]]))
        assert inst.horizon == 2
        assert inst.d == 3
        assert inst.d_prime == 1

    def test_dimension_grows_cubically(self):
        # d = Theta(n^3): the ratio at doubled n approaches 8
        d10 = build_mdp(Formula.from_ints(10, [[1]])).d
        d20 = build_mdp(Formula.from_ints(20, [[1]])).d
        assert 6 < d20 / d10 < 10
        for n in (1, 5, 9):
            inst = build_mdp(Formula.from_ints(n, [[1]]))
            assert inst.horizon == n + 1

    def test_json_descriptor(self, example1_instance):
        data = example1_instance.to_json()
        assert data["H"] == 4 and data["d"] == 27 and data["d_prime"] == 3


class TestStates:
    def test_initial_and_stage(self):
        s = initial_state(3)
        assert s == (-1, -1, -1)
        assert stage(s) == 1
        assert stage((0, 1, -1)) == 3
        assert stage((0, 1, 1)) == 4

    def test_prefix_form_enforced(self):
        with pytest.raises(MdpError, match="prefix"):
            validate_state((-1, 0, -1))
        with pytest.raises(MdpError):
            validate_state((2, -1, -1))

    def test_terminal_detection(self):
        assert not is_terminal((-1, -1))
        assert is_terminal((0, 1))


class TestTransition:
    def test_root_true(self):
        assert transition((-1, -1, -1), 1) == (1, -1, -1)

    def test_left_subtree(self):
        assert transition((0, -1, -1), 0) == (0, 0, -1)

    def test_terminal_rejected(self):
        with pytest.raises(MdpError, match="terminal"):
            transition((1, 0, 1), 0)

    def test_bad_action(self):
        with pytest.raises(MdpError):
            transition((-1, -1), 2)


class TestReward:
    def test_bad_leaves_pay_half(self, example1_instance):
        assert reward(example1_instance, (0, 1, 0)) == Fraction(1, 2)
        assert reward(example1_instance, (1, 0, 1)) == Fraction(1, 2)

    def test_good_leaf_pays_one(self, example1_instance):
        assert reward(example1_instance, (0, 0, 0)) == 1

    def test_internal_states_pay_zero(self, example1_instance):
        assert reward(example1_instance, (0, -1, -1)) == 0


class TestGenerativeQuery:
    def test_blue_subtree(self, example1_instance):
        assert generative_query(example1_instance, (1, -1, -1), 0) == ((1, 0, -1), 0)

    def test_blue_terminal(self, example1_instance):
        assert generative_query(example1_instance, (1, 0, -1), 1) == (
            (1, 0, 1),
            Fraction(1, 2),
        )

    def test_true_branch_full_reward(self, example1_instance):
        assert generative_query(example1_instance, (0, 0, -1), 1) == ((0, 0, 1), 1)

    def test_pure(self, example1_instance):
        first = generative_query(example1_instance, (-1, -1, -1), 1)
        assert all(
            generative_query(example1_instance, (-1, -1, -1), 1) == first
            for _ in range(5)
        )


class TestPathStructure:
    @pytest.mark.parametrize("seed", range(4))
    def test_every_path_pays_its_leaf(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        formula = random_formula(n, rng)
        instance = build_mdp(formula)
        for assignment in product((0, 1), repeat=n):
            state = initial_state(n)
            total = Fraction(0)
            steps = 0
            for action in assignment:
                state, r = generative_query(instance, state, action)
                total += r
                steps += 1
            assert steps == n and is_terminal(state)
            assert state == assignment
            assert total == satisfied_fraction(formula, assignment)

    def test_n10_exhaustive_path_sweep(self):
        rng = np.random.default_rng(99)
        formula = random_formula(10, rng, clause_count=15)
        instance = build_mdp(formula)
        for assignment in product((0, 1), repeat=10):
            state = initial_state(10)
            for action in assignment:
                state = transition(state, action)
            assert reward(instance, state) == satisfied_fraction(formula, assignment)
