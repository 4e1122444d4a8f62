"""3-CNF formulas: canonical clauses, DIMACS parsing, exhaustive evaluation,
and the ordered universe of all valid clauses over n variables.

Clauses are canonicalized at construction: literals sorted by key
(2*(var-1) + negated), duplicates removed, complementary pairs rejected.
The clause universe lists every non-tautological clause of size 1-3 in
block order (all 1-clauses, then 2-clauses, then 3-clauses), lexicographic
by literal-key sequence within a block.  Its coordinates index the
realizability feature and weight vectors built elsewhere.

All arithmetic here is exact: counts are ints, fractions are
``fractions.Fraction``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import comb
from typing import Iterable, NamedTuple, Sequence

MAX_CLAUSE_SIZE = 3

# Exhaustive assignment sweeps refuse to run past this many variables
# unless the caller raises the cap explicitly.
DEFAULT_BRUTE_FORCE_CAP = 24


class CnfError(ValueError):
    """Malformed clause, formula, or DIMACS input."""


class Literal(NamedTuple):
    """A variable (1-based index) or its negation."""

    variable_index: int
    negated: bool

    @property
    def key(self) -> int:
        """Canonical encoding: 2*(var-1) + (1 if negated else 0)."""
        return 2 * (self.variable_index - 1) + (1 if self.negated else 0)

    @classmethod
    def from_key(cls, key: int) -> "Literal":
        return cls(key // 2 + 1, bool(key % 2))

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        """Build from a signed DIMACS literal (nonzero int)."""
        if lit == 0:
            raise CnfError("literal 0 is reserved as the clause terminator")
        return cls(abs(lit), lit < 0)

    def to_int(self) -> int:
        return -self.variable_index if self.negated else self.variable_index

    def truth(self, value: int) -> bool:
        """Truth of this literal when its variable is assigned value (0 or 1)."""
        return value != (1 if self.negated else 0)

    def __str__(self) -> str:
        return ("~x%d" if self.negated else "x%d") % self.variable_index


@dataclass(frozen=True)
class Clause:
    """A disjunction of 1-3 distinct, non-complementary literals, kept sorted."""

    literals: tuple[Literal, ...]

    def __post_init__(self) -> None:
        lits = self.literals
        if not 1 <= len(lits) <= MAX_CLAUSE_SIZE:
            raise CnfError(f"clause must have 1..{MAX_CLAUSE_SIZE} literals, got {len(lits)}")
        if list(lits) != sorted(lits):
            raise CnfError("clause literals must be sorted by canonical key")
        seen_vars = [lit.variable_index for lit in lits]
        if len(set(seen_vars)) != len(seen_vars):
            # same variable twice: either a duplicate literal or x with ~x
            a, b = sorted(lits)[0], None
            for i in range(1, len(lits)):
                if lits[i].variable_index == lits[i - 1].variable_index:
                    a, b = lits[i - 1], lits[i]
                    break
            if a == b:
                raise CnfError(f"duplicate literal {a} in clause")
            raise CnfError(f"tautological clause: contains both {a} and {b}")

    @classmethod
    def from_literals(cls, literals: Iterable[Literal]) -> "Clause":
        """Canonicalize: sort and drop exact duplicates. Complementary pairs raise."""
        return cls(tuple(sorted(set(literals))))

    @classmethod
    def from_ints(cls, lits: Iterable[int]) -> "Clause":
        return cls.from_literals(Literal.from_int(v) for v in lits)

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(lit.key for lit in self.literals)

    @property
    def min_variable(self) -> int:
        return self.literals[0].variable_index

    @property
    def max_variable(self) -> int:
        return self.literals[-1].variable_index

    def to_ints(self) -> list[int]:
        return [lit.to_int() for lit in self.literals]

    def __len__(self) -> int:
        return len(self.literals)

    def __str__(self) -> str:
        return "(" + " | ".join(str(lit) for lit in self.literals) + ")"


@dataclass(frozen=True)
class ClauseStatus:
    """Result of evaluating a clause under a partial assignment."""

    kind: str  # "satisfied" | "falsified" | "undecided"
    simplified: Clause | None = None

    @property
    def is_satisfied(self) -> bool:
        return self.kind == "satisfied"

    @property
    def is_falsified(self) -> bool:
        return self.kind == "falsified"

    @property
    def is_undecided(self) -> bool:
        return self.kind == "undecided"


SATISFIED = ClauseStatus("satisfied")
FALSIFIED = ClauseStatus("falsified")


@dataclass(frozen=True)
class Formula:
    """A multiset of clauses over variables x1..xn. Duplicate instances count."""

    n: int
    clauses: tuple[Clause, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise CnfError(f"formula needs at least one variable, got n={self.n}")
        if not self.clauses:
            raise CnfError("formula needs at least one clause")
        for i, clause in enumerate(self.clauses):
            if clause.max_variable > self.n:
                raise CnfError(
                    f"clause {i}: variable x{clause.max_variable} exceeds n={self.n}"
                )

    @property
    def clause_count(self) -> int:
        return len(self.clauses)

    @classmethod
    def from_ints(cls, n: int, clauses: Iterable[Iterable[int]]) -> "Formula":
        return cls(n, tuple(Clause.from_ints(c) for c in clauses))

    def to_json(self) -> dict:
        return {"n": self.n, "clauses": [c.to_ints() for c in self.clauses]}

    @classmethod
    def from_json(cls, data: dict) -> "Formula":
        return cls.from_ints(int(data["n"]), data["clauses"])

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n} {self.clause_count}"]
        lines += [" ".join(map(str, c.to_ints())) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return " & ".join(str(c) for c in self.clauses)


# An assignment is a plain tuple of 0/1 values, one per variable.
Assignment = tuple[int, ...]


def parse_dimacs(text: str) -> Formula:
    """Parse DIMACS CNF text into a canonicalized Formula.

    Clauses may span lines and are terminated by 0.  Comment lines start
    with 'c'.  The declared clause count must match the clauses found.
    Duplicate literals inside one clause are dropped; complementary pairs,
    clauses with more than three distinct variables, and out-of-range
    variables are errors.
    """
    n = None
    declared = None
    clauses: list[Clause] = []
    pending: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            if n is not None:
                raise CnfError(f"line {lineno}: duplicate problem line")
            fields = line.split()
            if len(fields) != 4 or fields[1] != "cnf":
                raise CnfError(f"line {lineno}: bad problem line {line!r}, expected 'p cnf <n> <m>'")
            try:
                n, declared = int(fields[2]), int(fields[3])
            except ValueError:
                raise CnfError(f"line {lineno}: non-integer counts in problem line") from None
            continue
        if n is None:
            raise CnfError(f"line {lineno}: clause before 'p cnf' header")
        try:
            values = [int(tok) for tok in line.split()]
        except ValueError:
            raise CnfError(f"line {lineno}: non-integer token in clause") from None
        for value in values:
            if value == 0:
                if not pending:
                    raise CnfError(f"line {lineno}: empty clause")
                try:
                    clause = Clause.from_ints(pending)
                except CnfError as exc:
                    raise CnfError(f"line {lineno} (clause {len(clauses) + 1}): {exc}") from None
                if clause.max_variable > n:
                    raise CnfError(
                        f"line {lineno}: variable x{clause.max_variable} out of range (n={n})"
                    )
                clauses.append(clause)
                pending = []
            else:
                pending.append(value)
    if n is None:
        raise CnfError("missing 'p cnf' header")
    if pending:
        raise CnfError("last clause is not 0-terminated")
    if declared != len(clauses):
        raise CnfError(f"header declares {declared} clauses but {len(clauses)} were found")
    return Formula(n, tuple(clauses))


def eval_clause(clause: Clause, prefix: Sequence[int]) -> ClauseStatus:
    """Evaluate a clause under a partial assignment.

    ``prefix[i]`` gives the value of variable i+1; entries of -1 and
    positions beyond the sequence are unassigned.  Returns SATISFIED if any
    assigned literal is true, FALSIFIED if every literal is assigned and
    false, otherwise an undecided status carrying the canonical clause over
    the remaining unassigned literals.
    """
    remaining: list[Literal] = []
    for lit in clause.literals:
        pos = lit.variable_index - 1
        value = prefix[pos] if pos < len(prefix) else -1
        if value == -1:
            remaining.append(lit)
        elif lit.truth(value):
            return SATISFIED
    if not remaining:
        return FALSIFIED
    return ClauseStatus("undecided", Clause(tuple(remaining)))


def count_satisfied(formula: Formula, prefix: Sequence[int]) -> int:
    """Number of clause instances already satisfied under a (partial) assignment."""
    return sum(1 for c in formula.clauses if eval_clause(c, prefix).is_satisfied)


def satisfied_fraction(formula: Formula, assignment: Sequence[int]) -> Fraction:
    """Exact fraction of clause instances satisfied by a full assignment."""
    if len(assignment) != formula.n:
        raise CnfError(f"assignment length {len(assignment)} != n={formula.n}")
    if any(v not in (0, 1) for v in assignment):
        raise CnfError("assignment entries must be 0 or 1")
    return Fraction(count_satisfied(formula, assignment), formula.clause_count)


def occurrence_bound(formula: Formula) -> int:
    """Max over variables of the number of clause instances the variable appears in."""
    counts = [0] * (formula.n + 1)
    for clause in formula.clauses:
        for lit in clause.literals:
            counts[lit.variable_index] += 1
    return max(counts)


def is_zeta_satisfiable(
    formula: Formula,
    zeta: Fraction | float | int,
    cap: int = DEFAULT_BRUTE_FORCE_CAP,
) -> tuple[bool, Assignment, Fraction]:
    """Exhaustively maximize the satisfied fraction over all 2^n assignments.

    Returns (max >= zeta, argmax assignment, max fraction).  The argmax is
    the lexicographically first maximizer over tuples ordered 0 < 1.
    """
    if formula.n > cap:
        raise CnfError(f"brute-force cap exceeded: n={formula.n} > {cap}")
    best_count = -1
    best: Assignment = ()
    for assignment in product((0, 1), repeat=formula.n):
        got = count_satisfied(formula, assignment)
        if got > best_count:
            best_count, best = got, assignment
    value = Fraction(best_count, formula.clause_count)
    return value >= zeta, best, value


def universe_block_sizes(n: int) -> tuple[int, int, int]:
    """Closed-form counts of valid 1-, 2-, and 3-clauses over n variables."""
    if n < 1:
        raise CnfError(f"need n >= 1, got {n}")
    ell1 = 2 * n
    ell2 = comb(2 * n, 2) - n
    ell3 = comb(2 * n, 3) - 2 * n * n + 2 * n
    return ell1, ell2, ell3


@dataclass(frozen=True, eq=False)
class ClauseUniverse:
    """The ordered list of every valid clause of size 1-3 over n variables.

    ``entries[i]`` is the clause at coordinate i; ``index_map`` inverts it.
    Blocks: 1-clauses, then 2-clauses, then 3-clauses; lexicographic by
    literal-key sequence inside each block.
    """

    n: int
    entries: tuple[Clause, ...]
    index_map: dict[Clause, int] = field(repr=False)
    block_sizes: tuple[int, int, int]

    @property
    def size(self) -> int:
        return len(self.entries)

    def index_of(self, clause: Clause) -> int:
        try:
            return self.index_map[clause]
        except KeyError:
            raise CnfError(f"clause {clause} is not in the universe (n={self.n})") from None

    def to_json(self) -> dict:
        return {"n": self.n, "clauses": [c.to_ints() for c in self.entries]}


def enumerate_universe(n: int) -> ClauseUniverse:
    """Enumerate the full valid-clause universe for n variables in canonical order."""
    sizes = universe_block_sizes(n)
    keys = range(2 * n)
    entries: list[Clause] = []
    for width in (1, 2, 3):
        for combo in combinations(keys, width):
            # two keys on the same variable differ only in the low bit
            if any(combo[i] >> 1 == combo[i + 1] >> 1 for i in range(width - 1)):
                continue
            entries.append(Clause(tuple(Literal.from_key(k) for k in combo)))
    universe = ClauseUniverse(
        n=n,
        entries=tuple(entries),
        index_map={clause: i for i, clause in enumerate(entries)},
        block_sizes=sizes,
    )
    if universe.size != sum(sizes):
        raise CnfError(
            f"universe size {universe.size} disagrees with closed form {sum(sizes)}"
        )
    return universe

