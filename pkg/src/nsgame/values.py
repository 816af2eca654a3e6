"""Classical, non-signaling, and almost-non-signaling game values, plus the
robustness constant pipeline c(G), c'(G), mu, nu.

Everything that feeds a verdict is exact: values and witnesses are
rationals, and the only floating-point quantity (nu) is reported alongside
its exact exponent argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from typing import Sequence

from . import lp
from .dist import round_up
from .errors import BudgetExceeded, CapExceeded, NoCompleteSupport, ShapeMismatch
from .games import (
    Game,
    Strategy,
    TupleIndexer,
    cell_cap,
    deterministic_strategy,
    has_complete_support,
    uniform_strategy,
)


@dataclass(frozen=True)
class ValueResult:
    """An exactly computed game value together with an optimal witness."""

    value: Fraction
    witness: Strategy
    kind: str  # classical | ns | almost_ns
    slack: Fraction | None = None


@dataclass(frozen=True)
class SignalingReport:
    """Largest non-signaling violation of a strategy and where it occurs."""

    epsilon: Fraction
    argmax: tuple | None  # (I, a_I, x_I, x_J, x_J') with 0-based players


@dataclass(frozen=True)
class ConstantsReport:
    """The robustness constant pipeline for one game.

    `delta_provenance` records whether delta is the exact submatrix-inverse
    maximum or the Hadamard-style upper bound; an upper bound only weakens
    downstream bounds, never invalidates them. `nu` is exp(-nu_exponent)
    rounded up; `nu_exponent` is exact, so `nu < 1` iff `nu_exponent > 0`
    iff the game value is below one.
    """

    game_name: str
    m: int
    n_questions: int
    n_answers: int
    pi_min: Fraction
    v_ns: Fraction
    delta: Fraction
    delta_provenance: str  # exact | hadamard
    c: Fraction
    c_prime: Fraction
    mu: Fraction
    nu_exponent: Fraction
    nu: float
    notes: tuple[str, ...] = ()


def _det_tuple_iter(g: Game):
    """Deterministic strategy tuples in lexicographic (smallest-first) order."""
    spaces = [
        list(product(range(g.answer_sizes[i]), repeat=g.question_sizes[i]))
        for i in range(g.m)
    ]
    return product(*spaces)


@lru_cache(maxsize=128)
def classical_value(g: Game) -> ValueResult:
    """Exact classical value by exhausting deterministic strategy tuples.

    Shared randomness cannot beat the best deterministic tuple, since the
    classical value is a convex combination over it.
    """
    count = 1
    for i in range(g.m):
        count *= g.answer_sizes[i] ** g.question_sizes[i]
    cap = cell_cap()
    if count > cap:
        raise CapExceeded(
            f"classical enumeration needs {count} tuples, cap is {cap}"
        )
    xi = g.x_indexer
    ai = g.a_indexer
    na = g.n_answers
    x_tuples = [xi.decode(fx) for fx in range(xi.size)]
    best = Fraction(-1)
    best_fs = None
    for fs in _det_tuple_iter(g):
        v = Fraction(0)
        for fx, p in enumerate(g.pi):
            if p == 0:
                continue
            x = x_tuples[fx]
            a = tuple(fs[i][x[i]] for i in range(g.m))
            if g.predicate[fx * na + ai.encode(a)]:
                v += p
        if v > best:
            best = v
            best_fs = fs
    witness = deterministic_strategy(g.shape, best_fs)
    return ValueResult(value=best, witness=witness, kind="classical")


def _subset_tuples(m: int):
    """Nonempty proper subsets of the player set, as index tuples."""
    out = []
    for mask in range(1, (1 << m) - 1):
        out.append(tuple(i for i in range(m) if mask >> i & 1))
    return out


def _combine(m, I, x_I, J, x_J):
    out = [0] * m
    for pos, i in enumerate(I):
        out[i] = x_I[pos]
    for pos, j in enumerate(J):
        out[j] = x_J[pos]
    return tuple(out)


def build_ns_lp(
    g: Game, slack: Fraction | int = 0, all_pairs: bool = False
) -> lp.LinearProgram:
    """LP whose optimum is the (slack-relaxed) non-signaling value.

    Variables are q(a|x) in x-major order. Rows: positivity, one
    normalization equality per question tuple, then the non-signaling rows.
    With slack 0 these are equalities against the all-zeros reference
    question of the complementary subset (equivalent to all pairs by
    transitivity) unless `all_pairs` asks for the redundant full set; with
    slack > 0 every ordered pair of distinct complementary questions gets a
    one-sided <= slack row.
    """
    slack = Fraction(slack)
    if slack < 0:
        raise ShapeMismatch("slack must be nonnegative")
    nx, na = g.n_questions, g.n_answers
    xi, ai = g.x_indexer, g.a_indexer

    c = [Fraction(0)] * (nx * na)
    for fx, p in enumerate(g.pi):
        if p == 0:
            continue
        base = fx * na
        for fa in range(na):
            if g.predicate[base + fa]:
                c[base + fa] = p

    rows = []
    for v in range(nx * na):
        rows.append((((v, Fraction(1)),), ">=", Fraction(0)))
    for fx in range(nx):
        coeffs = tuple((fx * na + fa, Fraction(1)) for fa in range(na))
        rows.append((coeffs, "=", Fraction(1)))

    a_tuples = [ai.decode(fa) for fa in range(na)]
    for I in _subset_tuples(g.m):
        J = tuple(j for j in range(g.m) if j not in I)
        xI_ix = TupleIndexer(tuple(g.question_sizes[i] for i in I))
        xJ_ix = TupleIndexer(tuple(g.question_sizes[j] for j in J))
        aI_ix = TupleIndexer(tuple(g.answer_sizes[i] for i in I))
        # flat a grouped by its I-projection
        by_aI: list[list[int]] = [[] for _ in range(aI_ix.size)]
        for fa, a in enumerate(a_tuples):
            by_aI[aI_ix.encode(tuple(a[i] for i in I))].append(fa)

        def x_flat(x_I, x_J):
            return xi.encode(_combine(g.m, I, x_I, J, x_J))

        xJ_tuples = list(xJ_ix.all_tuples())
        if slack == 0 and not all_pairs:
            ref = xJ_tuples[0]  # all-zeros tuple
            pairs = [(xj, ref) for xj in xJ_tuples[1:]]
            sense, rhs = "=", Fraction(0)
        elif slack == 0:
            pairs = list(combinations(xJ_tuples, 2))
            sense, rhs = "=", Fraction(0)
        else:
            pairs = [
                (u, v) for u in xJ_tuples for v in xJ_tuples if u != v
            ]
            sense, rhs = "<=", slack
        for x_I in xI_ix.all_tuples():
            for xj1, xj2 in pairs:
                fx1, fx2 = x_flat(x_I, xj1), x_flat(x_I, xj2)
                for group in by_aI:
                    coeffs = [(fx1 * na + fa, Fraction(1)) for fa in group]
                    coeffs += [(fx2 * na + fa, Fraction(-1)) for fa in group]
                    rows.append((tuple(sorted(coeffs)), sense, rhs))

    kind = "ns" if slack == 0 else f"almost-ns(eps={slack})"
    return lp.LinearProgram.build(
        c, rows, name=f"{kind} value of {g.name}"
    )


def _strategy_from_point(g: Game, point: Sequence[Fraction]) -> Strategy:
    return Strategy(game_shape=g.shape, q=tuple(point))


def _constant_predicate_result(g: Game, kind: str, slack=None) -> ValueResult | None:
    """Trivial optimum when the predicate is constant: any strategy works."""
    if not any(g.predicate):
        return ValueResult(Fraction(0), uniform_strategy(g.shape), kind, slack)
    if all(g.predicate):
        return ValueResult(Fraction(1), uniform_strategy(g.shape), kind, slack)
    return None


@lru_cache(maxsize=64)
def ns_value(g: Game) -> ValueResult:
    """Exact non-signaling value via the slack-0 LP."""
    trivial = _constant_predicate_result(g, "ns")
    if trivial is not None:
        return trivial
    sol = lp.solve(build_ns_lp(g, 0))
    assert sol.status == "optimal"  # the NS polytope is nonempty and bounded
    return ValueResult(
        value=sol.value,
        witness=_strategy_from_point(g, sol.point),
        kind="ns",
    )


@lru_cache(maxsize=64)
def almost_ns_value(g: Game, epsilon: Fraction | int = 0) -> ValueResult:
    """Exact value over epsilon-almost non-signaling strategies."""
    epsilon = Fraction(epsilon)
    if epsilon == 0:
        base = ns_value(g)
        return ValueResult(base.value, base.witness, "almost_ns", Fraction(0))
    trivial = _constant_predicate_result(g, "almost_ns", epsilon)
    if trivial is not None:
        return trivial
    sol = lp.solve(build_ns_lp(g, epsilon))
    assert sol.status == "optimal"
    return ValueResult(
        value=sol.value,
        witness=_strategy_from_point(g, sol.point),
        kind="almost_ns",
        slack=epsilon,
    )


@lru_cache(maxsize=256)
def signaling_epsilon(
    g_shape: tuple[tuple[int, ...], tuple[int, ...]], s: Strategy
) -> SignalingReport:
    """Largest marginal deviation over all subsets and question pairs."""
    if s.game_shape != g_shape:
        raise ShapeMismatch("strategy shape does not match game shape")
    qs, asz = g_shape
    m = len(qs)
    xi, ai = TupleIndexer(qs), TupleIndexer(asz)
    nx, na = xi.size, ai.size
    best = Fraction(0)
    best_arg = None
    a_tuples = [ai.decode(fa) for fa in range(na)]
    for I in _subset_tuples(m):
        J = tuple(j for j in range(m) if j not in I)
        xI_ix = TupleIndexer(tuple(qs[i] for i in I))
        xJ_ix = TupleIndexer(tuple(qs[j] for j in J))
        aI_ix = TupleIndexer(tuple(asz[i] for i in I))
        proj = [aI_ix.encode(tuple(a[i] for i in I)) for a in a_tuples]
        marg = [[Fraction(0)] * aI_ix.size for _ in range(nx)]
        for fx in range(nx):
            row = marg[fx]
            base = fx * na
            for fa in range(na):
                v = s.q[base + fa]
                if v:
                    row[proj[fa]] += v
        xJ_tuples = list(xJ_ix.all_tuples())
        for x_I in xI_ix.all_tuples():
            flats = [
                xi.encode(_combine(m, I, x_I, J, xj)) for xj in xJ_tuples
            ]
            for (p1, f1), (p2, f2) in combinations(zip(xJ_tuples, flats), 2):
                r1, r2 = marg[f1], marg[f2]
                for a_flat in range(aI_ix.size):
                    d = abs(r1[a_flat] - r2[a_flat])
                    if d > best:
                        best = d
                        best_arg = (I, aI_ix.decode(a_flat), x_I, p1, p2)
    return SignalingReport(epsilon=best, argmax=best_arg)


def is_non_signaling(g: Game, s: Strategy) -> bool:
    return signaling_epsilon(g.shape, s).epsilon == 0


def mu_from_c_prime(c_prime: Fraction) -> Fraction:
    """mu = 1 / (2 * 3^5 * c'^2)."""
    return Fraction(1, 2 * 3**5) / (c_prime * c_prime)


def _parse_delta_mode(delta_mode) -> tuple[str, int]:
    if isinstance(delta_mode, tuple):
        return delta_mode[0], int(delta_mode[1])
    if delta_mode == "hadamard":
        return "hadamard", 0
    if delta_mode == "exact":
        return "exact", 6
    if isinstance(delta_mode, str) and delta_mode.startswith("exact:"):
        return "exact", int(delta_mode.split(":", 1)[1])
    raise ShapeMismatch(f"unknown delta mode {delta_mode!r}")


@lru_cache(maxsize=64)
def constants(g: Game, delta_mode: str = "hadamard") -> ConstantsReport:
    """Robustness pipeline: pi_min, delta, c, c', mu, nu.

    delta_mode "exact:CAP" enumerates submatrix inverses up to dimension
    CAP within the default budget and falls back to the Hadamard bound
    (flagged) when the budget is exhausted.
    """
    support = has_complete_support(g)
    if not support:
        raise NoCompleteSupport(f"game {g.name!r} has a zero-probability question")
    mode, cap = _parse_delta_mode(delta_mode)
    notes: list[str] = []

    program = build_ns_lp(g, 0)
    a, _b, _c = lp.standard_leq_form(program)
    n_rows, n_cols = len(a), program.n_vars

    if mode == "exact":
        try:
            delta = lp.sensitivity_delta_exact(a, cap)
            provenance = "exact"
        except BudgetExceeded as e:
            delta = lp.hadamard_delta_rational(n_rows, n_cols)
            provenance = "hadamard"
            notes.append(
                f"exact delta budget exhausted after {e.visited} submatrices; "
                f"using the Hadamard upper bound"
            )
    else:
        delta = lp.hadamard_delta_rational(n_rows, n_cols)
        provenance = "hadamard"
    if provenance == "hadamard":
        notes.append("delta is an upper bound; bounds using it remain valid")

    nx, na = g.n_questions, g.n_answers
    v = ns_value(g).value
    c_const = 2 * nx * na * na * delta
    c_prime = 3 * (2**g.m) * c_const / support.pi_min
    mu = mu_from_c_prime(c_prime)
    nu_exponent = (1 - v) ** 4 * mu
    try:
        nu = round_up(math.exp(-float(nu_exponent)))
    except OverflowError:
        nu = 1.0
    nu = min(nu, 1.0)
    if v == 1:
        notes.append("v_ns = 1: nu = 1 and repetition bounds are vacuous")
    return ConstantsReport(
        game_name=g.name,
        m=g.m,
        n_questions=nx,
        n_answers=na,
        pi_min=support.pi_min,
        v_ns=v,
        delta=delta,
        delta_provenance=provenance,
        c=c_const,
        c_prime=c_prime,
        mu=mu,
        nu_exponent=nu_exponent,
        nu=nu,
        notes=tuple(notes),
    )
