"""The assignment-tree MDP built from a formula.

States are n-tuples over {-1, 0, 1} whose assigned entries form a prefix;
stage h has h-1 assigned variables.  Taking action a at stage h writes a
into the first unassigned slot.  Reward is 0 everywhere except terminal
states, which pay the exact satisfied fraction of the formula.  The
2^(n+1) - 1 states are never materialized; everything is computed on
demand from the formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .cnf import ClauseUniverse, Formula, enumerate_universe, satisfied_fraction

State = tuple[int, ...]
ACTIONS = (0, 1)


class MdpError(ValueError):
    """Invalid state, action, or query against the constructed MDP."""


@dataclass(frozen=True, eq=False)
class MdpInstance:
    """Immutable bundle: formula, clause universe, and derived dimensions.

    horizon H = n + 1, policy-parameter dimension d_prime = n, and
    realizability dimension d = 1 + |universe|.
    """

    formula: Formula
    universe: ClauseUniverse
    horizon: int
    d: int
    d_prime: int
    action_count: int = 2

    @property
    def n(self) -> int:
        return self.formula.n

    @property
    def implied_state_count(self) -> int:
        return 2 ** (self.n + 1) - 1

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "H": self.horizon,
            "d": self.d,
            "d_prime": self.d_prime,
            "action_count": self.action_count,
            "implied_state_count": self.implied_state_count,
            "formula": self.formula.to_json(),
        }


def build_mdp(formula: Formula) -> MdpInstance:
    """Construct the MDP instance for a formula, enumerating its clause universe."""
    universe = enumerate_universe(formula.n)
    return MdpInstance(
        formula=formula,
        universe=universe,
        horizon=formula.n + 1,
        d=1 + universe.size,
        d_prime=formula.n,
    )


def initial_state(n: int) -> State:
    return (-1,) * n


def validate_state(state: Sequence[int]) -> State:
    """Check prefix form: assigned 0/1 entries, then all -1."""
    values = tuple(state)
    seen_unassigned = False
    for i, v in enumerate(values):
        if v not in (-1, 0, 1):
            raise MdpError(f"state entry {i} is {v}, expected -1, 0, or 1")
        if v == -1:
            seen_unassigned = True
        elif seen_unassigned:
            raise MdpError(f"state {values} is not in prefix form")
    return values


def stage(state: Sequence[int]) -> int:
    """1 + number of assigned entries; ranges over [1, n+1]."""
    assigned = 0
    for v in state:
        if v == -1:
            break
        assigned += 1
    return 1 + assigned


def is_terminal(state: Sequence[int]) -> bool:
    return -1 not in state


def assigned_prefix(state: Sequence[int]) -> tuple[int, ...]:
    return tuple(state[: stage(state) - 1])


def transition(state: Sequence[int], action: int) -> State:
    """Deterministic next state: the first -1 entry becomes the action value."""
    values = validate_state(state)
    if action not in ACTIONS:
        raise MdpError(f"action must be 0 or 1, got {action!r}")
    if is_terminal(values):
        raise MdpError(f"cannot transition from terminal state {values}")
    h = stage(values)
    return values[: h - 1] + (action,) + values[h:]


def reward(instance: MdpInstance, state: Sequence[int]) -> Fraction:
    """0 before the final stage; exact satisfied fraction at a terminal state."""
    values = validate_state(state)
    if len(values) != instance.n:
        raise MdpError(f"state length {len(values)} != n={instance.n}")
    if not is_terminal(values):
        return Fraction(0)
    return satisfied_fraction(instance.formula, values)


def generative_query(
    instance: MdpInstance, state: Sequence[int], action: int
) -> tuple[State, Fraction]:
    """Simulator access: (next state, reward of the next state). Deterministic."""
    nxt = transition(state, action)
    return nxt, reward(instance, nxt)
