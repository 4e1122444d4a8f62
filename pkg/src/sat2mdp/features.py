"""Feature and weight vectors for the two policy classes.

Two vector families live here:

* policy-parameterization vectors: the one-hot stage feature (+-1 at
  coordinate h) and the weight theta' that induces a greedy policy (sign
  of theta'_h picks the action) or a softmax policy (logistic in theta'_h).

* realizability vectors: for a state-action pair, the feature packs
  [satisfied-count, undecided-clause multiplicities] / |C| over the clause
  universe; the stage weight packs [1, per-clause continuation result],
  where the continuation entry of a clause on wholly-unassigned variables
  is its truth value (greedy) or satisfaction probability (softmax) under
  the policy's roll-out, and 0 for any clause touching an assigned
  variable.

Greedy-path arithmetic is exact (ints and Fractions); softmax entries are
64-bit floats.  Weights never read the state or action: they are built
from (formula, theta', h) alone, with the per-clause continuation results
cached per (universe, policy) and sliced by stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .cnf import Clause, ClauseUniverse, Formula, eval_clause
from .mdp import MdpInstance, MdpError, State, assigned_prefix, is_terminal, stage, validate_state

GREEDY = "greedy"
SOFTMAX = "softmax"


@dataclass(frozen=True)
class PolicyParams:
    """The weight vector theta' shared by both policy classes."""

    theta_prime: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.theta_prime:
            raise ValueError("theta_prime must be non-empty")
        if any(not math.isfinite(v) for v in self.theta_prime):
            raise ValueError("theta_prime entries must be finite")

    @property
    def d_prime(self) -> int:
        return len(self.theta_prime)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "PolicyParams":
        return cls(tuple(float(v) for v in values))

    @classmethod
    def from_signs(cls, signs: Sequence[int] | str, magnitude: float = 1.0) -> "PolicyParams":
        """Sign pattern to parameters: '+-+' or (1, 0, 1) style bits.

        Entries <= 0 (or '-') become -magnitude, positive ones +magnitude.
        """
        if isinstance(signs, str):
            bad = set(signs) - set("+-")
            if bad:
                raise ValueError(f"sign string may only contain '+'/'-', got {sorted(bad)}")
            bits = [1 if ch == "+" else 0 for ch in signs]
        else:
            bits = [1 if v > 0 else 0 for v in signs]
        return cls(tuple(magnitude if b else -magnitude for b in bits))

    def to_json(self) -> dict:
        return {"theta_prime": list(self.theta_prime)}


@dataclass(frozen=True)
class PspFeature:
    """One-hot stage feature: +1 at coordinate h for action 1, -1 for action 0."""

    h: int
    action: int
    vector: tuple[int, ...]


def sign_patterns(n: int):
    """All 2^n canonical +-1 parameter vectors, in assignment order."""
    for bits in product((0, 1), repeat=n):
        yield PolicyParams.from_signs(bits)


def psp_feature(h: int, action: int, d_prime: int) -> PspFeature:
    if not 1 <= h <= d_prime:
        raise ValueError(f"stage h={h} out of range [1, {d_prime}]")
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action!r}")
    vec = [0] * d_prime
    vec[h - 1] = 1 if action == 1 else -1
    return PspFeature(h=h, action=action, vector=tuple(vec))


def greedy_action(h: int, params: PolicyParams) -> int:
    """argmax over actions of <one-hot feature, theta'>; ties go to action 0."""
    _check_stage(h, params)
    return 1 if params.theta_prime[h - 1] > 0 else 0


def f_threshold(params: PolicyParams, h: int) -> int:
    """0 if theta'_h <= 0 else 1. Coincides with greedy_action by construction."""
    _check_stage(h, params)
    return 0 if params.theta_prime[h - 1] <= 0 else 1


def softmax_prob(h: int, params: PolicyParams) -> float:
    """Probability of action 1 at stage h: e^t / (e^t + e^-t) for t = theta'_h."""
    _check_stage(h, params)
    t = params.theta_prime[h - 1]
    # logistic(2t), evaluated on the stable side
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-2.0 * t))
    e = math.exp(2.0 * t)
    return e / (1.0 + e)


def _check_stage(h: int, params: PolicyParams) -> None:
    if not 1 <= h <= params.d_prime:
        raise ValueError(f"stage h={h} out of range [1, {params.d_prime}]")


def undecided_multiset(formula: Formula, prefix: Sequence[int]) -> list[Clause]:
    """Simplified undecided clause instances after assigning the prefix.

    One entry per surviving clause instance, in formula order; satisfied
    and falsified instances are dropped.
    """
    out = []
    for clause in formula.clauses:
        status = eval_clause(clause, prefix)
        if status.is_undecided:
            out.append(status.simplified)
    return out


@dataclass(frozen=True)
class RealizabilityFeature:
    """The (1/|C|) * [satisfied-count, undecided multiplicities] vector.

    ``y_counts`` stores the nonzero coordinates of the multiplicity block
    sparsely; ``dim`` is the full vector length 1 + |universe|.
    """

    b: int
    y_counts: dict[int, int] = field(repr=False)
    clause_count: int
    dim: int

    def __post_init__(self) -> None:
        # satisfied instances can never outnumber the decided ones
        if self.b > self.clause_count - self.y_sum:
            raise ValueError(
                f"b={self.b} exceeds decided count {self.clause_count - self.y_sum}"
            )

    @property
    def scale(self) -> Fraction:
        return Fraction(1, self.clause_count)

    @property
    def y_sum(self) -> int:
        return sum(self.y_counts.values())

    def y_dense(self) -> list[int]:
        dense = [0] * (self.dim - 1)
        for idx, mult in self.y_counts.items():
            dense[idx] = mult
        return dense

    def dense_unscaled(self) -> list[int]:
        """[b, y_1, ..., y_{d-1}] without the 1/|C| scaling."""
        return [self.b] + self.y_dense()

    def dot(self, weight: "RealizabilityWeight") -> Fraction | float:
        """Inner product with a stage weight, including the 1/|C| scale.

        Exact Fraction against greedy weights, float against softmax ones.
        """
        if weight.dim != self.dim:
            raise ValueError(f"dimension mismatch: feature {self.dim} vs weight {weight.dim}")
        if weight.kind == GREEDY:
            acc = weight.head_int * self.b
            for idx, mult in self.y_counts.items():
                acc += mult * weight.entry_int(idx)
            return Fraction(acc, self.clause_count)
        acc = weight.head * float(self.b)
        for idx, mult in self.y_counts.items():
            acc += mult * weight.entry(idx)
        return acc / self.clause_count

    def to_json(self) -> dict:
        return {
            "scale_num": 1,
            "scale_den": self.clause_count,
            "entries": self.dense_unscaled(),
        }


def realizability_feature(
    instance: MdpInstance, state: Sequence[int], action: int
) -> RealizabilityFeature:
    """Feature of (state, action): counts after extending the prefix by the action."""
    values = validate_state(state)
    if is_terminal(values):
        raise MdpError(f"terminal state {values} has no feature")
    if action not in (0, 1):
        raise MdpError(f"action must be 0 or 1, got {action!r}")
    prefix = assigned_prefix(values) + (action,)
    b = 0
    counts: dict[int, int] = {}
    for clause in instance.formula.clauses:
        status = eval_clause(clause, prefix)
        if status.is_satisfied:
            b += 1
        elif status.is_undecided:
            idx = instance.universe.index_of(status.simplified)
            counts[idx] = counts.get(idx, 0) + 1
    return RealizabilityFeature(
        b=b,
        y_counts=counts,
        clause_count=instance.formula.clause_count,
        dim=instance.d,
    )


@dataclass(frozen=True, eq=False)
class RealizabilityWeight:
    """Stage weight [1, m] over universe coordinates.

    m[i] is nonzero only for clauses whose smallest variable exceeds the
    stage cutoff h; there it carries the clause's truth value under the
    greedy continuation (0/1 int) or its satisfaction probability under
    the softmax continuation (float in [0, 1]).  The dense vector is
    materialized lazily; building the weight itself is O(1) after a cached
    per-(universe, policy) pass.
    """

    kind: str
    cutoff: int
    _min_var: np.ndarray = field(repr=False)
    _continuation: np.ndarray = field(repr=False)

    @property
    def head(self) -> float:
        return 1.0

    @property
    def head_int(self) -> int:
        return 1

    @property
    def dim(self) -> int:
        return len(self._min_var) + 1

    def entry(self, index: int) -> float:
        if self._min_var[index] > self.cutoff:
            return float(self._continuation[index])
        return 0.0

    def entry_int(self, index: int) -> int:
        if self.kind != GREEDY:
            raise ValueError("entry_int is only defined for greedy weights")
        if self._min_var[index] > self.cutoff:
            return int(self._continuation[index])
        return 0

    def m_dense(self) -> np.ndarray:
        """The m block as a dense array (int8 for greedy, float64 for softmax)."""
        live = self._min_var > self.cutoff
        if self.kind == GREEDY:
            return (live & self._continuation).astype(np.int8)
        return np.where(live, self._continuation, 0.0)

    def to_json(self) -> dict:
        if self.kind == GREEDY:
            entries: list = [1] + [int(v) for v in self.m_dense()]
        else:
            entries = ["1"] + [repr(float(v)) for v in self.m_dense()]
        return {"scale_num": 1, "scale_den": 1, "entries": entries}


@lru_cache(maxsize=512)
def _universe_arrays(universe: ClauseUniverse) -> tuple[np.ndarray, np.ndarray]:
    """(padded literal-key matrix, min-variable array) for vectorized clause eval."""
    size = universe.size
    keys = np.full((size, 3), -1, dtype=np.int64)
    min_var = np.empty(size, dtype=np.int64)
    for i, clause in enumerate(universe.entries):
        for j, lit in enumerate(clause.literals):
            keys[i, j] = lit.key
        min_var[i] = clause.min_variable
    return keys, min_var


@lru_cache(maxsize=512)
def _greedy_continuation(universe: ClauseUniverse, pattern: tuple[int, ...]) -> np.ndarray:
    """Truth value of every universe clause under the full look-ahead assignment."""
    keys, _ = _universe_arrays(universe)
    valid = keys >= 0
    var0 = np.where(valid, keys >> 1, 0)
    neg = np.where(valid, keys & 1, 0)
    values = np.asarray(pattern, dtype=np.int64)[var0]
    lit_true = valid & (values != neg)
    return lit_true.any(axis=1)


@lru_cache(maxsize=512)
def _softmax_continuation(universe: ClauseUniverse, probs: tuple[float, ...]) -> np.ndarray:
    """Satisfaction probability of every universe clause under independent draws."""
    keys, _ = _universe_arrays(universe)
    valid = keys >= 0
    var0 = np.where(valid, keys >> 1, 0)
    neg = np.where(valid, keys & 1, 0)
    p_true_var = np.asarray(probs, dtype=np.float64)[var0]
    p_lit_true = np.where(neg == 1, 1.0 - p_true_var, p_true_var)
    p_lit_false = np.where(valid, 1.0 - p_lit_true, 1.0)
    return 1.0 - p_lit_false.prod(axis=1)


def _check_weight_stage(instance: MdpInstance, params: PolicyParams, h: int) -> None:
    if params.d_prime != instance.d_prime:
        raise ValueError(
            f"theta' has {params.d_prime} entries, instance needs {instance.d_prime}"
        )
    if not 1 <= h <= instance.horizon - 1:
        raise ValueError(f"stage h={h} out of range [1, {instance.horizon - 1}]")


def greedy_weight(instance: MdpInstance, params: PolicyParams, h: int) -> RealizabilityWeight:
    """Stage-h weight for the greedy policy induced by theta'. State-independent."""
    _check_weight_stage(instance, params, h)
    pattern = tuple(f_threshold(params, j) for j in range(1, instance.n + 1))
    _, min_var = _universe_arrays(instance.universe)
    continuation = _greedy_continuation(instance.universe, pattern)
    return RealizabilityWeight(kind=GREEDY, cutoff=h, _min_var=min_var, _continuation=continuation)


def softmax_weight(instance: MdpInstance, params: PolicyParams, h: int) -> RealizabilityWeight:
    """Stage-h weight for the softmax policy induced by theta'. State-independent."""
    _check_weight_stage(instance, params, h)
    probs = tuple(softmax_prob(j, params) for j in range(1, instance.n + 1))
    _, min_var = _universe_arrays(instance.universe)
    continuation = _softmax_continuation(instance.universe, probs)
    return RealizabilityWeight(kind=SOFTMAX, cutoff=h, _min_var=min_var, _continuation=continuation)


def lookahead_state(state: Sequence[int], action: int, params: PolicyParams) -> State:
    """Terminal state reached from (state, action) by following the greedy policy.

    A terminal input is returned unchanged.
    """
    values = validate_state(state)
    if is_terminal(values):
        return values
    h = stage(values)
    tail = tuple(f_threshold(params, j) for j in range(h + 1, len(values) + 1))
    if action not in (0, 1):
        raise MdpError(f"action must be 0 or 1, got {action!r}")
    return values[: h - 1] + (action,) + tail

