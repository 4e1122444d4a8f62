"""Exact policy evaluation on the assignment-tree MDP.

Greedy values are computed by deterministic roll-out and returned as exact
Fractions.  Softmax values default to the per-clause probability path
(polynomial) with an exhaustive trajectory sum available as the oracle
route.  ``best_greedy`` sweeps all 2^n sign patterns, which covers every
distinct greedy behavior because actions depend on the stage only.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .cnf import eval_clause
from .features import PolicyParams, greedy_action, sign_patterns, softmax_prob
from .mdp import (
    ACTIONS,
    MdpError,
    MdpInstance,
    State,
    assigned_prefix,
    initial_state,
    is_terminal,
    reward,
    stage,
    transition,
    validate_state,
)

DEFAULT_ENUMERATION_CAP = 20


@dataclass(frozen=True)
class Trajectory:
    """A root-to-leaf suffix: (state, action) steps, terminal state, probability."""

    steps: tuple[tuple[State, int], ...]
    final: State
    probability: float

    @property
    def actions(self) -> tuple[int, ...]:
        return tuple(a for _, a in self.steps)


def eval_q_greedy(
    instance: MdpInstance, params: PolicyParams, state: Sequence[int], action: int
) -> Fraction:
    """q(state, action) under the greedy policy: apply the action, then roll out."""
    current = transition(state, action)
    while not is_terminal(current):
        current = transition(current, greedy_action(stage(current), params))
    return reward(instance, current)


def state_value_greedy(
    instance: MdpInstance, params: PolicyParams, state: Sequence[int]
) -> Fraction:
    return eval_q_greedy(instance, params, state, greedy_action(stage(state), params))


def eval_q_softmax(
    instance: MdpInstance,
    params: PolicyParams,
    state: Sequence[int],
    action: int,
    method: str = "dp",
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Expected terminal reward after (state, action) under the softmax policy.

    method="dp" sums per-clause satisfaction probabilities (default);
    method="enumerate" sums over all remaining trajectories and is meant as
    the independent cross-check.
    """
    if method == "enumerate":
        total = 0.0
        for traj in enumerate_trajectories(instance, params, state, action, cap=cap):
            total += traj.probability * float(reward(instance, traj.final))
        return total
    if method != "dp":
        raise ValueError(f"unknown method {method!r}")
    values = validate_state(state)
    if is_terminal(values):
        raise MdpError(f"terminal state {values} has no q-value")
    prefix = assigned_prefix(values) + (action,)
    h = len(prefix)
    probs = [0.0] * (instance.n + 1)
    for j in range(h + 1, instance.n + 1):
        probs[j] = softmax_prob(j, params)
    acc = 0.0
    for clause in instance.formula.clauses:
        status = eval_clause(clause, prefix)
        if status.is_satisfied:
            acc += 1.0
        elif status.is_undecided:
            p_all_false = 1.0
            for lit in status.simplified.literals:
                p_true = probs[lit.variable_index]
                p_all_false *= p_true if lit.negated else 1.0 - p_true
            acc += 1.0 - p_all_false
    return acc / instance.formula.clause_count


def state_value_softmax(
    instance: MdpInstance, params: PolicyParams, state: Sequence[int], method: str = "dp"
) -> float:
    h = stage(state)
    p1 = softmax_prob(h, params)
    q0 = eval_q_softmax(instance, params, state, 0, method=method)
    q1 = eval_q_softmax(instance, params, state, 1, method=method)
    return (1.0 - p1) * q0 + p1 * q1


def enumerate_trajectories(
    instance: MdpInstance,
    params: PolicyParams,
    state: Sequence[int],
    action: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[Trajectory]:
    """All 2^(H-h-1) continuations of (state, action), with their probabilities.

    The given action is taken with probability 1; only the later stages
    contribute probability factors.
    """
    values = validate_state(state)
    if is_terminal(values):
        raise MdpError(f"terminal state {values} has no trajectories")
    h = stage(values)
    free = instance.n - h
    if free > cap:
        raise MdpError(f"{free} free stages exceed the enumeration cap {cap}")
    p1 = [softmax_prob(j, params) for j in range(h + 1, instance.n + 1)]
    out: list[Trajectory] = []
    for suffix in product(ACTIONS, repeat=free):
        steps = [(values, action)]
        current = transition(values, action)
        probability = 1.0
        for offset, a in enumerate(suffix):
            steps.append((current, a))
            current = transition(current, a)
            probability *= p1[offset] if a == 1 else 1.0 - p1[offset]
        out.append(Trajectory(steps=tuple(steps), final=current, probability=probability))
    return out


def sample_trajectory(
    instance: MdpInstance,
    params: PolicyParams,
    seed: int | np.random.Generator,
) -> Trajectory:
    """One full episode from the initial state under the softmax policy.

    Reproducible: the same integer seed always yields the same trajectory.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    current = initial_state(instance.n)
    steps: list[tuple[State, int]] = []
    probability = 1.0
    for h in range(1, instance.n + 1):
        p1 = softmax_prob(h, params)
        action = 1 if rng.random() < p1 else 0
        steps.append((current, action))
        probability *= p1 if action == 1 else 1.0 - p1
        current = transition(current, action)
    return Trajectory(steps=tuple(steps), final=current, probability=probability)


def sign_pattern_for_assignment(assignment: Sequence[int]) -> PolicyParams:
    """The +-1 parameter vector whose greedy policy plays out the assignment."""
    return PolicyParams.from_signs(assignment)


def best_greedy(instance: MdpInstance, cap: int = 24) -> tuple[PolicyParams, Fraction]:
    """Sweep all 2^n sign patterns; return the first argmax and its value at the root.

    Every greedy policy behaves like one of these patterns (actions depend
    only on the stage), so the sweep is exact over the whole class.
    """
    if instance.n > cap:
        raise MdpError(f"brute-force cap exceeded: n={instance.n} > {cap}")
    root = initial_state(instance.n)
    best_params: PolicyParams | None = None
    best_value = Fraction(-1)
    for params in sign_patterns(instance.n):
        value = state_value_greedy(instance, params, root)
        if value > best_value:
            best_params, best_value = params, value
    assert best_params is not None
    return best_params, best_value


@dataclass(frozen=True)
class ReferenceOptimum:
    """Best root value achievable inside a policy class.

    The greedy class attains its max at a sign pattern.  The softmax class
    only approaches the same value along saturation rays, so its optimum is
    a supremum: ``attained`` is False and ``params`` gives the ray
    direction.
    """

    value: Fraction
    attained: bool
    params: PolicyParams


def reference_optimum(
    instance: MdpInstance, policy_class: str = "greedy", cap: int = 24
) -> ReferenceOptimum:
    if policy_class not in ("greedy", "softmax"):
        raise ValueError(f"unknown policy class {policy_class!r}")
    params, value = best_greedy(instance, cap=cap)
    return ReferenceOptimum(value=value, attained=policy_class == "greedy", params=params)


@dataclass(frozen=True)
class PolicyValue:
    """Tabulated q and v over every non-terminal state of a small instance."""

    q: dict[tuple[State, int], Fraction | float]
    v: dict[State, Fraction | float]


def iter_states(n: int, terminal: bool = False) -> Iterable[State]:
    """All states in stage order; terminal ones only if requested."""
    top = n + 1 if terminal else n
    for h in range(1, top + 1):
        for prefix in product((0, 1), repeat=h - 1):
            yield prefix + (-1,) * (n - h + 1)


def tabulate_policy_value(
    instance: MdpInstance, params: PolicyParams, policy_class: str = "greedy", cap: int = 16
) -> PolicyValue:
    """Materialize q/v maps for every non-terminal state. Desk scale only."""
    if instance.n > cap:
        raise MdpError(f"tabulation cap exceeded: n={instance.n} > {cap}")
    q: dict[tuple[State, int], Fraction | float] = {}
    v: dict[State, Fraction | float] = {}
    for state in iter_states(instance.n):
        for action in ACTIONS:
            if policy_class == "greedy":
                q[(state, action)] = eval_q_greedy(instance, params, state, action)
            elif policy_class == "softmax":
                q[(state, action)] = eval_q_softmax(instance, params, state, action)
            else:
                raise ValueError(f"unknown policy class {policy_class!r}")
        if policy_class == "greedy":
            v[state] = q[(state, greedy_action(stage(state), params))]
        else:
            p1 = softmax_prob(stage(state), params)
            v[state] = (1.0 - p1) * q[(state, 0)] + p1 * q[(state, 1)]
    return PolicyValue(q=q, v=v)
