"""Exact probability tables: distances, marginals, conditionals, and the
tail-bound calculators used by the repetition checks.

Probabilities are exact rationals. Square roots and exponentials are
evaluated in floating point and rounded outward (up) so that any
"holds" verdict derived from them is sound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .errors import (
    EmptySubset,
    NonPositiveEpsilon,
    ShapeMismatch,
    SumNotOne,
    ZeroProbabilityEvent,
)
from .games import TupleIndexer

# Relative outward-rounding slack for float upper bounds; a handful of ULPs
# would do, this is comfortably larger and still tight for reporting.
_UP = 1e-12


def round_up(x: float) -> float:
    """Round a float upper bound outward."""
    if x == 0.0:
        return 0.0
    bumped = x + abs(x) * _UP
    return math.nextafter(bumped, math.inf)


def log2_of_reciprocal(p: Fraction) -> float:
    """log2(1/p) for exact rational p in (0, 1], rounded up."""
    if p <= 0:
        raise ZeroProbabilityEvent("log of reciprocal needs p > 0")
    if p == 1:
        return 0.0
    # log2 on arbitrary-size integers keeps precision for tiny p.
    val = math.log2(p.denominator) - math.log2(p.numerator)
    return round_up(val)


@dataclass(frozen=True)
class JointDistribution:
    """Exact probability table over a product sample space."""

    radices: tuple[int, ...]
    table: tuple[Fraction, ...]

    def __post_init__(self):
        size = math.prod(self.radices)
        if len(self.table) != size:
            raise ShapeMismatch(
                f"table has {len(self.table)} entries, expected {size}"
            )
        if any(p < 0 for p in self.table):
            raise ShapeMismatch("probabilities must be nonnegative")
        total = sum(self.table, Fraction(0))
        if total != 1:
            raise SumNotOne(total, context="joint distribution")

    @classmethod
    def from_entries(cls, radices: Sequence[int], entries) -> "JointDistribution":
        """Build from a mapping of tuples (or flat indices) to weights."""
        radices = tuple(radices)
        ix = TupleIndexer(radices)
        table = [Fraction(0)] * ix.size
        items = entries.items() if hasattr(entries, "items") else entries
        for key, p in items:
            flat = key if isinstance(key, int) else ix.encode(key)
            table[flat] += Fraction(p)
        return cls(radices, tuple(table))

    @property
    def indexer(self) -> TupleIndexer:
        return TupleIndexer(self.radices)

    def prob(self, t: Sequence[int]) -> Fraction:
        return self.table[self.indexer.encode(t)]


@dataclass(frozen=True)
class Event:
    """Subset of a product sample space, stored as an indicator table."""

    radices: tuple[int, ...]
    indicator: tuple[bool, ...]

    def __post_init__(self):
        if len(self.indicator) != math.prod(self.radices):
            raise ShapeMismatch("indicator length does not match radices")

    @classmethod
    def from_predicate(
        cls, radices: Sequence[int], pred: Callable[[tuple[int, ...]], bool]
    ) -> "Event":
        radices = tuple(radices)
        ix = TupleIndexer(radices)
        return cls(radices, tuple(bool(pred(ix.decode(i))) for i in range(ix.size)))

    @classmethod
    def full_space(cls, radices: Sequence[int]) -> "Event":
        radices = tuple(radices)
        return cls(radices, (True,) * math.prod(radices))

    def probability(self, p: JointDistribution) -> Fraction:
        if p.radices != self.radices:
            raise ShapeMismatch("event and distribution spaces differ")
        return sum(
            (pi for pi, ind in zip(p.table, self.indicator) if ind), Fraction(0)
        )


def variational_distance(p: JointDistribution, q: JointDistribution) -> Fraction:
    """Half the l1 distance between two tables on the same space."""
    if p.radices != q.radices:
        raise ShapeMismatch("distributions live on different spaces")
    return sum((abs(a - b) for a, b in zip(p.table, q.table)), Fraction(0)) / 2


def marginal(p: JointDistribution, keep: Sequence[int]) -> JointDistribution:
    """Sum out every component not in `keep` (given as component indices)."""
    keep = sorted(set(keep))
    if not keep:
        raise EmptySubset("must keep at least one component")
    if any(not 0 <= k < len(p.radices) for k in keep):
        raise ShapeMismatch(f"keep indices {keep} out of range")
    out_radices = tuple(p.radices[k] for k in keep)
    out_ix = TupleIndexer(out_radices)
    table = [Fraction(0)] * out_ix.size
    ix = p.indexer
    for flat, prob in enumerate(p.table):
        if prob == 0:
            continue
        t = ix.decode(flat)
        table[out_ix.encode(tuple(t[k] for k in keep))] += prob
    return JointDistribution(out_radices, tuple(table))


def condition(p: JointDistribution, e: Event) -> JointDistribution:
    """Exact conditional distribution given the event."""
    if e.radices != p.radices:
        raise ShapeMismatch("event and distribution spaces differ")
    pe = e.probability(p)
    if pe == 0:
        raise ZeroProbabilityEvent("cannot condition on a null event")
    table = tuple(
        (prob / pe if ind else Fraction(0))
        for prob, ind in zip(p.table, e.indicator)
    )
    return JointDistribution(p.radices, table)


def product_with_kernel(
    p: JointDistribution, kernel: Sequence[Sequence[Fraction]]
) -> JointDistribution:
    """Extend a distribution by one component drawn from a conditional table.

    `kernel[t][u]` is the probability of the new component being u when the
    existing (flattened) outcome is t; rows must sum to one.
    """
    nt = math.prod(p.radices)
    if len(kernel) != nt:
        raise ShapeMismatch(f"kernel has {len(kernel)} rows, expected {nt}")
    nu = len(kernel[0])
    table = []
    for t in range(nt):
        row = kernel[t]
        if len(row) != nu:
            raise ShapeMismatch("kernel rows have inconsistent lengths")
        row_sum = sum((Fraction(v) for v in row), Fraction(0))
        if row_sum != 1:
            raise SumNotOne(row_sum, context=f"kernel row t={t}")
    # new component becomes the most significant digit
    for u in range(nu):
        for t in range(nt):
            table.append(p.table[t] * Fraction(kernel[t][u]))
    return JointDistribution(p.radices + (nu,), tuple(table))


def holenstein_gap(
    pT: JointDistribution,
    kernels: Sequence[Sequence[Sequence[Fraction]]],
    e: Event,
) -> tuple[Fraction, float, bool]:
    """Conditional-independence leakage against sqrt(L log2(1/Pr[e])).

    The joint is P_T times the product of the per-branch kernels (branches
    conditionally independent given T, flattened to one axis). Returns the
    exact left side, the outward-rounded right side, and whether lhs <= rhs.
    """
    L = len(kernels)
    if L == 0:
        raise ShapeMismatch("need at least one kernel")
    nt = math.prod(pT.radices)
    joint = JointDistribution((nt,), pT.table)
    for kernel in kernels:
        # each kernel conditions on T only: rows indexed by t regardless of
        # previously added branches
        prev = math.prod(joint.radices)
        expanded = []
        for flat_prev in range(prev):
            t = flat_prev % nt
            expanded.append(kernel[t])
        joint = product_with_kernel(joint, expanded)

    if e.radices != joint.radices:
        raise ShapeMismatch(
            f"event space {e.radices} != joint space {joint.radices}"
        )
    pe = e.probability(joint)
    if pe == 0:
        raise ZeroProbabilityEvent("holenstein gap needs Pr[event] > 0")

    cond = condition(joint, e)
    lhs = Fraction(0)
    for ell in range(L):
        # distance between P_{T U_ell | e} and P_{T | e} * P_{U_ell | T}
        pair = marginal(cond, [0, 1 + ell])
        t_cond = marginal(cond, [0])
        nu = joint.radices[1 + ell]
        ref = []
        for u in range(nu):
            for t in range(nt):
                ref.append(t_cond.table[t] * Fraction(kernels[ell][t][u]))
        lhs += variational_distance(pair, JointDistribution((nt, nu), tuple(ref)))

    rhs = round_up(math.sqrt(L * log2_of_reciprocal(pe)))
    return lhs, rhs, lhs <= Fraction(rhs)


def hoeffding_bound(epsilon: float, K: int) -> float:
    """Tail bound exp(-2 eps^2 K) for sampling without replacement."""
    if epsilon <= 0:
        raise NonPositiveEpsilon(f"epsilon must be > 0, got {epsilon}")
    if K < 1:
        raise NonPositiveEpsilon(f"K must be a positive integer, got {K}")
    return round_up(math.exp(-2 * float(epsilon) ** 2 * K))


def azuma_bound(epsilon: float, K: int) -> float:
    """Supermartingale tail bound exp(-eps^2 K / 2); epsilon 0 is allowed."""
    if epsilon < 0:
        raise NonPositiveEpsilon(f"epsilon must be >= 0, got {epsilon}")
    if K < 1:
        raise NonPositiveEpsilon(f"K must be a positive integer, got {K}")
    if epsilon == 0:
        return 1.0
    return round_up(math.exp(-float(epsilon) ** 2 * K / 2))
