"""Named verification suites with machine-readable results.

Each suite sweeps a seeded family of random instances and records every
violated identity with enough inputs to reproduce it.  Suites are
deterministic given their seed; failures are sorted canonically before
serialization so result JSON is stable (wall time is reported separately
and excluded from the canonical form).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from . import features as ft
from .cnf import Formula, enumerate_universe, occurrence_bound, universe_block_sizes
from .features import PolicyParams, f_threshold, greedy_action
from .mdp import ACTIONS, MdpInstance, build_mdp, generative_query, reward, stage
from .policies import (
    best_greedy,
    eval_q_greedy,
    eval_q_softmax,
    iter_states,
)
from .reduction import (
    calibration_t,
    decide_max3sat,
    empirical_mcdiarmid,
    epsilon_bound_greedy,
    epsilon_bound_softmax,
    exact_solver,
    extract_assignment_greedy,
    extract_assignment_softmax,
    frac_str,
    gap3sat_to_delta_b,
    mcdiarmid_tail,
    planted_instance,
)
from .cnf import is_zeta_satisfiable


@dataclass
class SuiteResult:
    suite: str
    cases: int
    failures: list[dict]
    seed: int | None
    params: dict
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    def sorted_failures(self) -> list[dict]:
        return sorted(self.failures, key=lambda f: json.dumps(f, sort_keys=True, default=str))

    def to_json(self, include_wall_time: bool = True) -> dict:
        out = {
            "suite": self.suite,
            "cases": self.cases,
            "failures": self.sorted_failures(),
            "seed": self.seed,
            "params": self.params,
            "passed": self.passed,
        }
        if include_wall_time:
            out["wall_time_s"] = round(self.wall_time, 6)
        return out

    def canonical_json(self) -> str:
        """Byte-stable serialization: canonical failure order, no timing."""
        return json.dumps(self.to_json(include_wall_time=False), sort_keys=True, default=str)


def random_formula(
    n: int,
    rng: np.random.Generator,
    max_occurrences: int = 3,
    clause_count: int | None = None,
) -> Formula:
    """Random formula with every variable in at most max_occurrences clauses.

    Clause sizes are drawn from {1, 2, 3} as capacity allows; generation
    stops early if no variable has occurrences left, so the result may be
    shorter than requested (but never empty).
    """
    target = clause_count if clause_count is not None else max(1, n)
    remaining = [max_occurrences] * (n + 1)
    clauses: list[list[int]] = []
    for _ in range(target):
        pool = [v for v in range(1, n + 1) if remaining[v] > 0]
        if not pool:
            break
        size = min(int(rng.integers(1, 4)), len(pool))
        chosen = rng.choice(pool, size=size, replace=False)
        lits = []
        for v in chosen:
            v = int(v)
            remaining[v] -= 1
            lits.append(v if int(rng.integers(0, 2)) == 1 else -v)
        clauses.append(lits)
    return Formula.from_ints(n, clauses)


def _formula_repro(formula: Formula) -> list[list[int]]:
    return [c.to_ints() for c in formula.clauses]


def check_realizability_greedy(
    n_max: int = 6,
    formulas_per_n: int = 20,
    seed: int = 0,
) -> SuiteResult:
    """Exact linear realizability of greedy q-values on random instances.

    For every formula, every sign pattern, and every non-terminal
    (state, action): the rolled-out q equals the feature/weight inner
    product as a rational, with zero tolerance.  The final two stages are
    additionally checked against their closed forms, the telescoping
    identity is checked along each greedy trajectory, and the two
    tie-breaking rules are checked to agree.
    """
    if n_max > 8:
        raise ValueError(f"full greedy sweep is O(4^n); n_max={n_max} > 8")
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    failures: list[dict] = []
    cases = 0
    for n in range(1, n_max + 1):
        for _ in range(formulas_per_n):
            formula = random_formula(n, rng, max_occurrences=3)
            instance = build_mdp(formula)
            C = formula.clause_count
            for bits in product((0, 1), repeat=n):
                params = PolicyParams.from_signs(bits)
                repro = {"formula": _formula_repro(formula), "n": n, "signs": list(bits)}
                weights = {h: ft.greedy_weight(instance, params, h) for h in range(1, n + 1)}
                for h in range(1, n + 1):
                    cases += 1
                    if greedy_action(h, params) != f_threshold(params, h):
                        failures.append({**repro, "h": h, "kind": "tie_rule_mismatch"})
                for state in iter_states(n):
                    h = stage(state)
                    for action in ACTIONS:
                        cases += 1
                        q = eval_q_greedy(instance, params, state, action)
                        phi = ft.realizability_feature(instance, state, action)
                        got = phi.dot(weights[h])
                        if q != got:
                            failures.append(
                                {
                                    **repro,
                                    "state": list(state),
                                    "action": action,
                                    "kind": "dot_mismatch",
                                    "q": frac_str(q),
                                    "dot": frac_str(got),
                                }
                            )
                            continue
                        if h == n:
                            # last decision stage: no undecided clauses remain
                            ym = sum(
                                mult * weights[h].entry_int(i)
                                for i, mult in phi.y_counts.items()
                            )
                            if ym != 0 or q != Fraction(phi.b, C):
                                failures.append(
                                    {**repro, "state": list(state), "action": action,
                                     "kind": "last_stage_form"}
                                )
                        elif h == n - 1:
                            # one stage out: q must equal the look-ahead leaf reward
                            leaf = ft.lookahead_state(state, action, params)
                            if q != reward(instance, leaf):
                                failures.append(
                                    {**repro, "state": list(state), "action": action,
                                     "kind": "lookahead_form"}
                                )
                # telescoping along the greedy trajectory from the root
                trace = []
                state = (-1,) * n
                for h in range(1, n + 1):
                    action = greedy_action(h, params)
                    phi = ft.realizability_feature(instance, state, action)
                    ym = sum(
                        mult * weights[h].entry_int(i) for i, mult in phi.y_counts.items()
                    )
                    trace.append((phi.b, ym))
                    state = state[: h - 1] + (action,) + state[h:]
                for h in range(2, n + 1):
                    cases += 1
                    b_prev, ym_prev = trace[h - 2]
                    b_cur, ym_cur = trace[h - 1]
                    if ym_prev - ym_cur != b_cur - b_prev:
                        failures.append({**repro, "h": h, "kind": "telescoping"})
    return SuiteResult(
        suite="realizability_greedy",
        cases=cases,
        failures=failures,
        seed=seed,
        params={"n_max": n_max, "formulas_per_n": formulas_per_n, "tolerance": 0},
        wall_time=time.perf_counter() - started,
    )


def softmax_weight_by_enumeration(
    instance: MdpInstance, params: PolicyParams, h: int
) -> tuple[float, np.ndarray]:
    """Stage weight from the definition: probability-weighted sum over all
    continuations of the per-continuation 0/1 weight vectors.

    Exponential in n - h; this is the oracle the closed form is checked
    against.
    """
    n = instance.n
    keys, min_var = ft._universe_arrays(instance.universe)
    valid = keys >= 0
    var0 = np.where(valid, keys >> 1, 0)
    neg = np.where(valid, keys & 1, 0)
    live = min_var > h
    probs = [ft.softmax_prob(j, params) for j in range(h + 1, n + 1)]
    head = 0.0
    m = np.zeros(instance.universe.size, dtype=np.float64)
    values = np.zeros(n, dtype=np.int64)
    for suffix in product((0, 1), repeat=n - h):
        p = 1.0
        for j, a in enumerate(suffix):
            p *= probs[j] if a == 1 else 1.0 - probs[j]
        values[h:] = suffix
        lit_true = valid & (values[var0] != neg)
        sat = lit_true.any(axis=1) & live
        head += p
        m += p * sat
    return head, m


def check_realizability_softmax(
    n_max: int = 5,
    formulas_per_n: int = 10,
    thetas_per_formula: int = 50,
    tol: float = 1e-9,
    weight_tol: float = 1e-12,
    seed: int = 0,
) -> SuiteResult:
    """Linear realizability of softmax q-values plus the weight-definition check.

    q (per-clause probability path) must match the feature/weight inner
    product within tol on every non-terminal cell, and the closed-form
    weights must match the enumeration-defined weights within weight_tol.
    """
    if n_max > 5:
        raise ValueError(f"trajectory-sum oracle is exponential; n_max={n_max} > 5")
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    failures: list[dict] = []
    cases = 0
    for n in range(1, n_max + 1):
        for _ in range(formulas_per_n):
            formula = random_formula(n, rng, max_occurrences=3)
            instance = build_mdp(formula)
            for _ in range(thetas_per_formula):
                theta = tuple(float(v) for v in rng.uniform(-3.0, 3.0, size=n))
                params = PolicyParams(theta)
                repro = {"formula": _formula_repro(formula), "n": n, "theta": list(theta)}
                weights = {h: ft.softmax_weight(instance, params, h) for h in range(1, n + 1)}
                for h in range(1, n + 1):
                    cases += 1
                    head, m_oracle = softmax_weight_by_enumeration(instance, params, h)
                    if abs(head - 1.0) > weight_tol:
                        failures.append({**repro, "h": h, "kind": "head_sum", "head": head})
                    diff = float(np.max(np.abs(weights[h].m_dense() - m_oracle)))
                    if diff > weight_tol:
                        failures.append(
                            {**repro, "h": h, "kind": "weight_oracle", "max_diff": diff}
                        )
                root = (-1,) * n
                for action in ACTIONS:
                    cases += 1
                    dp = eval_q_softmax(instance, params, root, action)
                    brute = eval_q_softmax(instance, params, root, action, method="enumerate")
                    if abs(dp - brute) > weight_tol:
                        failures.append(
                            {**repro, "action": action, "kind": "dp_vs_enumeration",
                             "dp": dp, "enumeration": brute}
                        )
                for state in iter_states(n):
                    h = stage(state)
                    for action in ACTIONS:
                        cases += 1
                        q = eval_q_softmax(instance, params, state, action)
                        phi = ft.realizability_feature(instance, state, action)
                        got = phi.dot(weights[h])
                        if abs(q - got) > tol:
                            failures.append(
                                {
                                    **repro,
                                    "state": list(state),
                                    "action": action,
                                    "kind": "dot_mismatch",
                                    "q": q,
                                    "dot": got,
                                }
                            )
    return SuiteResult(
        suite="realizability_softmax",
        cases=cases,
        failures=failures,
        seed=seed,
        params={
            "n_max": n_max,
            "formulas_per_n": formulas_per_n,
            "thetas_per_formula": thetas_per_formula,
            "tol": tol,
            "weight_tol": weight_tol,
        },
        wall_time=time.perf_counter() - started,
    )


def _timed(fn, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def check_construction_scaling(
    n_list: Sequence[int] = (5, 10, 20, 40),
    greedy_slope_max: float = 3.5,
    softmax_slope_max: float = 4.5,
    size_check_max: int = 40,
    seed: int = 0,
) -> SuiteResult:
    """Polynomial-time construction: exact universe sizes and log-log slopes.

    Universe block sizes are compared against their closed forms for every
    n up to size_check_max.  Wall times for universe enumeration, a full
    stage sweep of features, and all-stage weight construction are fitted
    with a log-log slope over n_list; slopes above the caps fail.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    failures: list[dict] = []
    cases = 0
    for n in range(1, size_check_max + 1):
        cases += 1
        universe = enumerate_universe(n)
        by_len = [0, 0, 0]
        for clause in universe.entries:
            by_len[len(clause) - 1] += 1
        if tuple(by_len) != universe_block_sizes(n):
            failures.append(
                {"n": n, "kind": "universe_size", "counted": by_len,
                 "closed_form": list(universe_block_sizes(n))}
            )

    timings: dict[str, list[float]] = {"universe": [], "features": [], "greedy_weights": [], "softmax_weights": []}
    for n in n_list:
        formula = random_formula(n, rng, max_occurrences=3, clause_count=n)
        instance = build_mdp(formula)
        signs = tuple(int(v) for v in rng.integers(0, 2, size=n))
        g_params = PolicyParams.from_signs(signs)
        s_params = PolicyParams(tuple(float(v) for v in rng.uniform(-2.0, 2.0, size=n)))

        timings["universe"].append(_timed(lambda: enumerate_universe(n)))

        def feature_sweep() -> None:
            for h in range(1, n + 1):
                state = (0,) * (h - 1) + (-1,) * (n - h + 1)
                ft.realizability_feature(instance, state, 0)

        timings["features"].append(_timed(feature_sweep))

        def greedy_sweep() -> None:
            ft._greedy_continuation.cache_clear()
            ft._universe_arrays.cache_clear()
            for h in range(1, n + 1):
                ft.greedy_weight(instance, g_params, h)

        timings["greedy_weights"].append(_timed(greedy_sweep))

        def softmax_sweep() -> None:
            ft._softmax_continuation.cache_clear()
            ft._universe_arrays.cache_clear()
            for h in range(1, n + 1):
                ft.softmax_weight(instance, s_params, h)

        timings["softmax_weights"].append(_timed(softmax_sweep))

    slopes: dict[str, float] = {}
    log_n = np.log(np.asarray(n_list, dtype=float))
    for name, times in timings.items():
        cases += 1
        slope = float(np.polyfit(log_n, np.log(np.asarray(times)), 1)[0])
        slopes[name] = slope
        cap = softmax_slope_max if name == "softmax_weights" else greedy_slope_max
        if slope > cap:
            failures.append(
                {"kind": "slope", "item": name, "slope": slope, "cap": cap,
                 "times_s": times}
            )
    return SuiteResult(
        suite="construction_scaling",
        cases=cases,
        failures=failures,
        seed=seed,
        params={
            "n_list": list(n_list),
            "greedy_slope_max": greedy_slope_max,
            "softmax_slope_max": softmax_slope_max,
            "size_check_max": size_check_max,
            "slopes": slopes,
            "timings_s": timings,
        },
        wall_time=time.perf_counter() - started,
    )


def check_reduction_roundtrip(
    count: int = 100,
    n: int = 10,
    delta: Fraction | float | str = Fraction(1, 10),
    epsilon: Fraction | float | str = Fraction(1, 20),
    seed: int = 0,
) -> SuiteResult:
    """Planted near-satisfiable instances all decide Yes with verified certificates.

    Instances are generated to be (1 - delta + 2 epsilon)-satisfiable, so
    the exact solver must answer Yes; each certificate is re-verified by an
    independent clause-by-clause recount.  A contradictory instance must
    answer No, and the bound helpers and both extraction modes are
    exercised on the side.
    """
    from .reduction import as_fraction

    d, eps = as_fraction(delta), as_fraction(epsilon)
    if eps > d / 2:
        raise ValueError(f"roundtrip premise needs epsilon <= delta/2, got {eps} > {d / 2}")
    started = time.perf_counter()
    failures: list[dict] = []
    cases = 0
    zeta = 1 - d + 2 * eps
    for i in range(count):
        cases += 1
        formula, planted = planted_instance(n, clause_count=3 * n, zeta=zeta, seed=seed + i)
        report = decide_max3sat(formula, d, exact_solver, "greedy", eps)
        repro = {"formula": _formula_repro(formula), "planted": list(planted), "i": i}
        if not report.decision:
            failures.append({**repro, "kind": "expected_yes",
                             "achieved": frac_str(report.achieved_fraction)})
            continue
        # independent recount of the certificate
        hit = 0
        for clause in formula.clauses:
            for lit in clause.to_ints():
                v = report.extracted[abs(lit) - 1]
                if (lit > 0 and v == 1) or (lit < 0 and v == 0):
                    hit += 1
                    break
        if Fraction(hit, formula.clause_count) != report.achieved_fraction:
            failures.append({**repro, "kind": "certificate_recount"})
        if Fraction(hit, formula.clause_count) < 1 - d:
            failures.append({**repro, "kind": "certificate_below_threshold"})
        if i < 10:
            # cross-check the reference optimum two independent ways
            _, best_value = best_greedy(build_mdp(formula))
            ok, _, zmax = is_zeta_satisfiable(formula, zeta)
            if best_value != zmax or not ok:
                failures.append({**repro, "kind": "optimum_cross_check"})

    # a contradictory pair can never reach 1 - delta
    cases += 1
    contradiction = Formula.from_ints(1, [[1], [-1]])
    report = decide_max3sat(contradiction, d, exact_solver, "greedy", eps)
    if report.decision or report.achieved_fraction != Fraction(1, 2):
        failures.append({"kind": "expected_no", "formula": _formula_repro(contradiction)})

    # side checks: bounds, transforms, extraction modes, concentration
    cases += 1
    if epsilon_bound_greedy(Fraction(1, 10)) != Fraction(1, 20):
        failures.append({"kind": "greedy_bound"})
    cases += 1
    t8 = calibration_t(13, 3, 12, 0.125)
    if abs(mcdiarmid_tail(t8, 13, 3, 12) - 0.125) > 1e-15:
        failures.append({"kind": "tail_calibration"})
    cases += 1
    sample_formula, _ = planted_instance(
        n, clause_count=n, zeta=zeta, seed=seed + count, max_occurrences=3
    )
    if gap3sat_to_delta_b(sample_formula, 3, eps / 2, d).clauses != sample_formula.clauses:
        failures.append({"kind": "gap_transform_identity"})
    cases += 1
    inst = build_mdp(sample_formula)
    soft_params = exact_solver(inst, lambda s, a: generative_query(inst, s, a), eps, "softmax")
    soft = decide_max3sat(sample_formula, d, exact_solver, "softmax", eps, seed=seed,
                          extraction_mode="sample")
    rounded = extract_assignment_softmax(soft_params, n, mode="round")
    if not soft.decision or rounded != extract_assignment_greedy(soft_params, n):
        failures.append({"kind": "softmax_decide",
                         "achieved": frac_str(soft.achieved_fraction)})
    cases += 1
    params = PolicyParams(tuple(float(v) for v in np.random.default_rng(seed).uniform(-1, 1, size=n)))
    emp, bound, ok = empirical_mcdiarmid(inst, params, trials=2000,
                                         t=calibration_t(inst.horizon, occurrence_bound(sample_formula),
                                                         sample_formula.clause_count, 0.125),
                                         seed=seed)
    if not ok:
        failures.append({"kind": "empirical_tail", "empirical": emp, "bound": bound})
    cases += 1
    if epsilon_bound_softmax(1.0, 4, 2, 200, 0.1, 0.125) <= 0:
        failures.append({"kind": "softmax_bound_positivity"})

    return SuiteResult(
        suite="reduction_roundtrip",
        cases=cases,
        failures=failures,
        seed=seed,
        params={"count": count, "n": n, "delta": frac_str(d), "epsilon": frac_str(eps)},
        wall_time=time.perf_counter() - started,
    )


# which suites exercise which operations; tests assert this map is complete
SUITE_COVERAGE: dict[str, list[str]] = {
    "features.psp_feature": ["realizability_greedy"],
    "features.greedy_action": ["realizability_greedy"],
    "features.f_threshold": ["realizability_greedy"],
    "features.softmax_prob": ["realizability_softmax"],
    "features.undecided_multiset": ["realizability_greedy"],
    "features.realizability_feature": ["realizability_greedy", "realizability_softmax"],
    "features.greedy_weight": ["realizability_greedy", "construction_scaling"],
    "features.softmax_weight": ["realizability_softmax", "construction_scaling"],
    "features.lookahead_state": ["realizability_greedy"],
    "policies.eval_q_greedy": ["realizability_greedy"],
    "policies.eval_q_softmax": ["realizability_softmax"],
    "policies.enumerate_trajectories": ["realizability_softmax"],
    "policies.best_greedy": ["reduction_roundtrip"],
    "policies.sample_trajectory": ["reduction_roundtrip"],
    "reduction.extract_assignment_greedy": ["reduction_roundtrip"],
    "reduction.extract_assignment_softmax": ["reduction_roundtrip"],
    "reduction.decide_max3sat": ["reduction_roundtrip"],
    "reduction.epsilon_bound_greedy": ["reduction_roundtrip"],
    "reduction.mcdiarmid_tail": ["reduction_roundtrip"],
    "reduction.epsilon_bound_softmax": ["reduction_roundtrip"],
    "reduction.gap3sat_to_delta_b": ["reduction_roundtrip"],
    "reduction.empirical_mcdiarmid": ["reduction_roundtrip"],
}

SUITES = {
    "greedy": check_realizability_greedy,
    "softmax": check_realizability_softmax,
    "scaling": check_construction_scaling,
    "roundtrip": check_reduction_roundtrip,
}


def run_suites(names: Sequence[str], overrides: dict | None = None) -> list[SuiteResult]:
    """Run the named suites with optional per-suite keyword overrides."""
    overrides = overrides or {}
    results = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; available: {sorted(SUITES)}")
        results.append(SUITES[name](**overrides.get(name, {})))
    return results
