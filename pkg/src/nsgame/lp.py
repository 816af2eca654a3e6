"""Exact-rational linear programming.

The solver is a two-phase primal simplex over `fractions.Fraction` with
smallest-index (Bland) pivoting, so it terminates on every input. For large
programs a floating-point presolve (scipy/HiGHS) may propose the optimal
support first; the proposal is then turned into an exact basic solution and
an exact dual certificate by rational elimination, and is accepted only if
primal feasibility, dual feasibility and strong duality all verify in exact
arithmetic. Floats never decide a verdict; if certification fails the exact
simplex runs from scratch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .errors import (
    BudgetExceeded,
    NonIntegerEntries,
    NumericOverflowCap,
    ShapeMismatch,
)

SENSES = ("<=", "=", ">=")

# standardized size (rows * columns) above which the float-guided path is
# tried before the tableau simplex
GUIDED_THRESHOLD = 20_000

DEFAULT_BIT_CAP = 1 << 20
DEFAULT_SUBMATRIX_BUDGET = 10**6


def _fr(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class LinearProgram:
    """Maximize c.x subject to rows `a.x (<=|=|>=) b`; variables are free.

    Rows are stored sparsely as tuples of (column, coefficient). Variable
    nonnegativity, when wanted, is expressed as explicit `x >= 0` rows.
    """

    c: tuple[Fraction, ...]
    rows: tuple[tuple[tuple[tuple[int, Fraction], ...], str, Fraction], ...]
    name: str = "lp"

    def __post_init__(self):
        n = len(self.c)
        for coeffs, sense, _rhs in self.rows:
            if sense not in SENSES:
                raise ShapeMismatch(f"unknown row sense {sense!r}")
            for j, _v in coeffs:
                if not 0 <= j < n:
                    raise ShapeMismatch(f"column {j} outside 0..{n - 1}")

    @classmethod
    def build(cls, c, rows, name: str = "lp") -> "LinearProgram":
        """Build from any mix of dict/sequence coefficient containers."""
        cc = tuple(_fr(v) for v in c)
        norm_rows = []
        for coeffs, sense, rhs in rows:
            if hasattr(coeffs, "items"):
                items = coeffs.items()
            else:
                items = coeffs
            co = tuple(
                sorted((int(j), _fr(v)) for j, v in items if _fr(v) != 0)
            )
            norm_rows.append((co, sense, _fr(rhs)))
        return cls(c=cc, rows=tuple(norm_rows), name=name)

    @classmethod
    def from_dense(cls, c, a, senses, b, name: str = "lp") -> "LinearProgram":
        rows = []
        for row, sense, rhs in zip(a, senses, b):
            rows.append((list(enumerate(row)), sense, rhs))
        return cls.build(c, rows, name=name)

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def with_rhs(self, b_new: Sequence) -> "LinearProgram":
        if len(b_new) != self.n_rows:
            raise ShapeMismatch("rhs length != row count")
        rows = tuple(
            (coeffs, sense, _fr(nb))
            for (coeffs, sense, _), nb in zip(self.rows, b_new)
        )
        return LinearProgram(c=self.c, rows=rows, name=self.name)

    def rhs(self) -> tuple[Fraction, ...]:
        return tuple(r for _, _, r in self.rows)

    def row_value(self, i: int, x: Sequence[Fraction]) -> Fraction:
        coeffs, _, _ = self.rows[i]
        return sum((v * x[j] for j, v in coeffs), Fraction(0))

    def is_feasible_point(self, x: Sequence[Fraction]) -> bool:
        for coeffs, sense, rhs in self.rows:
            lhs = sum((v * x[j] for j, v in coeffs), Fraction(0))
            if sense == "<=" and lhs > rhs:
                return False
            if sense == ">=" and lhs < rhs:
                return False
            if sense == "=" and lhs != rhs:
                return False
        return True

    def objective(self, x: Sequence[Fraction]) -> Fraction:
        return sum((cj * xj for cj, xj in zip(self.c, x)), Fraction(0))


@dataclass(frozen=True)
class LpSolution:
    """Certified outcome of a solve."""

    status: str  # optimal | infeasible | unbounded
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None
    basis: tuple[str, ...] | None = None
    iterations: int = 0
    method: str = "simplex"
    verified: bool = False


# ---------------------------------------------------------------------------
# standardization: max c.z, A z = b, z >= 0, b >= 0


class _Standardized:
    def __init__(self, p: LinearProgram):
        self.program = p
        n = p.n_vars
        nonneg = [False] * n
        self.bound_rows: list[int] = []  # rows absorbed as variable bounds
        for i, (coeffs, sense, rhs) in enumerate(p.rows):
            if len(coeffs) == 1 and rhs == 0:
                j, v = coeffs[0]
                if (sense == ">=" and v > 0) or (sense == "<=" and v < 0):
                    nonneg[j] = True
                    self.bound_rows.append(i)
        absorbed = set(self.bound_rows)

        # column map: original var -> (plus column, minus column or None)
        self.col_of: list[tuple[int, int | None]] = []
        self.labels: list[str] = []
        for j in range(n):
            plus = len(self.labels)
            self.labels.append(f"x{j}")
            if nonneg[j]:
                self.col_of.append((plus, None))
            else:
                minus = len(self.labels)
                self.labels.append(f"x{j}-")
                self.col_of.append((plus, minus))

        rows: list[dict[int, Fraction]] = []
        rhs_vec: list[Fraction] = []
        slack_of_row: list[int | None] = []
        for i, (coeffs, sense, rhs) in enumerate(p.rows):
            if i in absorbed:
                continue
            row: dict[int, Fraction] = {}
            for j, v in coeffs:
                plus, minus = self.col_of[j]
                row[plus] = row.get(plus, Fraction(0)) + v
                if minus is not None:
                    row[minus] = row.get(minus, Fraction(0)) - v
            slack = None
            if sense != "=":
                slack = len(self.labels)
                self.labels.append(f"s{i}")
                row[slack] = Fraction(1) if sense == "<=" else Fraction(-1)
            if rhs < 0:
                row = {j: -v for j, v in row.items()}
                rhs = -rhs
            row = {j: v for j, v in row.items() if v != 0}
            rows.append(row)
            rhs_vec.append(rhs)
            slack_of_row.append(slack)

        self.rows = rows
        self.b = rhs_vec
        self.slack_of_row = slack_of_row
        self.n_cols = len(self.labels)
        c_std = [Fraction(0)] * self.n_cols
        for j, cj in enumerate(p.c):
            plus, minus = self.col_of[j]
            c_std[plus] += cj
            if minus is not None:
                c_std[minus] -= cj
        self.c = c_std

    def unmap(self, z: Sequence[Fraction]) -> tuple[Fraction, ...]:
        out = []
        for plus, minus in self.col_of:
            v = z[plus]
            if minus is not None:
                v -= z[minus]
            out.append(v)
        return tuple(out)


# ---------------------------------------------------------------------------
# exact two-phase tableau simplex, Bland's rule


class _Tableau:
    def __init__(self, std: _Standardized, bit_cap: int):
        self.std = std
        self.bit_cap = bit_cap
        self.iterations = 0
        m = len(std.rows)
        self.labels = list(std.labels)
        n_real = std.n_cols

        # rows as dense lists over real columns; artificials appended later
        self.rows = []
        for row, rhs in zip(std.rows, std.b):
            dense = [Fraction(0)] * n_real
            for j, v in row.items():
                dense[j] = v
            dense.append(rhs)
            self.rows.append(dense)
        self.n_real = n_real
        self.basis: list[int] = []
        self.artificials: list[int] = []

        # initial basis: reuse +1 slack columns, artificials elsewhere
        need_art = []
        for i in range(m):
            s = std.slack_of_row[i]
            if s is not None and self.rows[i][s] == 1:
                self.basis.append(s)
            else:
                self.basis.append(-1)
                need_art.append(i)
        for i in need_art:
            col = n_real + len(self.artificials)
            self.artificials.append(col)
            self.labels.append(f"a{i}")
            for k, row in enumerate(self.rows):
                row.insert(len(row) - 1, Fraction(1 if k == i else 0))
            self.basis[i] = col
        self.n_cols = n_real + len(self.artificials)

    def _check_bits(self, row):
        cap = self.bit_cap
        for v in row:
            if v.numerator.bit_length() > cap or v.denominator.bit_length() > cap:
                raise NumericOverflowCap(
                    f"entry bit-size exceeded cap of {cap} bits"
                )

    def _price(self, c: list[Fraction]) -> list[Fraction]:
        """Reduced-cost row for objective c (length n_cols), plus -value."""
        obj = list(c) + [Fraction(0)]
        for i, bcol in enumerate(self.basis):
            cb = c[bcol]
            if cb == 0:
                continue
            row = self.rows[i]
            for j in range(self.n_cols + 1):
                if row[j] != 0:
                    obj[j] -= cb * row[j]
        return obj

    def _pivot(self, obj, pr: int, pc: int):
        rows = self.rows
        piv_row = rows[pr]
        pv = piv_row[pc]
        if pv != 1:
            inv = 1 / pv
            rows[pr] = piv_row = [v * inv for v in piv_row]
        ncols = self.n_cols
        for r in rows + [obj]:
            if r is piv_row:
                continue
            f = r[pc]
            if f == 0:
                continue
            for j in range(ncols + 1):
                pj = piv_row[j]
                if pj != 0:
                    r[j] -= f * pj
        self.basis[pr] = pc
        self.iterations += 1
        self._check_bits(piv_row)
        self._check_bits(obj)

    def _run(self, obj, allowed_cols) -> str:
        """Bland iterations until optimal or unbounded."""
        while True:
            enter = -1
            for j in allowed_cols:
                if obj[j] > 0:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            # ratio test; ties resolved toward the smallest basis label index
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self._pivot(obj, best[1], enter)

    def solve(self) -> tuple[str, list[Fraction], Fraction]:
        # phase 1: drive artificials to zero
        if self.artificials:
            c1 = [Fraction(0)] * self.n_cols
            for col in self.artificials:
                c1[col] = Fraction(-1)
            obj1 = self._price(c1)
            status = self._run(obj1, range(self.n_cols))
            assert status == "optimal"  # phase-1 objective is bounded
            if obj1[-1] != 0:  # stored as -value; value < 0 means infeasible
                return "infeasible", [], Fraction(0)
            # pivot out any basic artificial, dropping redundant rows
            art_set = set(self.artificials)
            drop = []
            for i in range(len(self.rows)):
                if self.basis[i] in art_set:
                    row = self.rows[i]
                    pc = next(
                        (j for j in range(self.n_real) if row[j] != 0), None
                    )
                    if pc is None:
                        drop.append(i)
                    else:
                        self._pivot(obj1, i, pc)
            for i in reversed(drop):
                del self.rows[i]
                del self.basis[i]

        # phase 2
        c2 = list(self.std.c) + [Fraction(0)] * len(self.artificials)
        obj2 = self._price(c2)
        status = self._run(obj2, range(self.n_real))
        if status != "optimal":
            return status, [], Fraction(0)
        z = [Fraction(0)] * self.n_real
        for i, bcol in enumerate(self.basis):
            if bcol < self.n_real:
                z[bcol] = self.rows[i][-1]
        return "optimal", z, -obj2[-1]

    def basis_labels(self) -> tuple[str, ...]:
        return tuple(self.labels[b] for b in self.basis)


# ---------------------------------------------------------------------------
# float-guided exact certification for large programs


class _IntSystem:
    """Sparse integer linear system A x = b for exact elimination.

    Rows are dicts col->int after clearing denominators; gcd reduction after
    every update keeps entries small on the near-unimodular matrices this
    package produces.
    """

    def __init__(self, rows: Sequence[dict], rhs: Sequence[Fraction]):
        self.rows: list[dict[int, int]] = []
        self.rhs: list[int] = []
        for row, b in zip(rows, rhs):
            den = _fr(b).denominator
            for v in row.values():
                den = den * _fr(v).denominator // math.gcd(
                    den, _fr(v).denominator
                )
            irow = {j: int(_fr(v) * den) for j, v in row.items() if v != 0}
            self.rows.append(irow)
            self.rhs.append(int(_fr(b) * den))
        self.m = len(self.rows)
        self.col_rows: dict[int, set[int]] = {}
        for i, row in enumerate(self.rows):
            for j in row:
                self.col_rows.setdefault(j, set()).add(i)
        self.pivoted = [False] * self.m
        self.pivots: list[tuple[int, int]] = []

    def _holders(self, col) -> list[int]:
        rows = self.col_rows.get(col)
        if not rows:
            return []
        stale = [i for i in rows if col not in self.rows[i]]
        for i in stale:
            rows.discard(i)
        return [i for i in rows if not self.pivoted[i]]

    def _reduce_row(self, i: int):
        row = self.rows[i]
        g = abs(self.rhs[i])
        for v in row.values():
            g = math.gcd(g, abs(v))
            if g == 1:
                return
        if g > 1:
            self.rows[i] = {j: v // g for j, v in row.items()}
            self.rhs[i] //= g

    def _pivot(self, pr: int, col: int):
        piv_row = self.rows[pr]
        a_pc = piv_row[col]
        for i in self._holders(col):
            if i == pr:
                continue
            row = self.rows[i]
            a_ic = row[col]
            g = math.gcd(abs(a_pc), abs(a_ic))
            mi, mp = a_pc // g, a_ic // g
            for j, v in piv_row.items():
                nv = mi * row.get(j, 0) - mp * v
                if nv == 0:
                    row.pop(j, None)
                else:
                    if j not in row:
                        self.col_rows.setdefault(j, set()).add(i)
                    row[j] = nv
            if mi != 1:
                for j in list(row):
                    if j not in piv_row:
                        row[j] = mi * row[j]
            self.rhs[i] = mi * self.rhs[i] - mp * self.rhs[pr]
            self._reduce_row(i)
        self.pivoted[pr] = True
        self.pivots.append((pr, col))

    def eliminate(self, col_classes: Sequence[Sequence[int]]) -> bool:
        """Min-degree elimination, exhausting each column class in order.

        Returns False if the system is inconsistent.
        """
        import heapq

        n_piv = 0
        for cls, cols in enumerate(col_classes):
            heap = []
            for col in cols:
                holders = self._holders(col)
                if holders:
                    heapq.heappush(heap, (len(holders), col))
            while heap and n_piv < self.m:
                deg, col = heapq.heappop(heap)
                holders = self._holders(col)
                if not holders:
                    continue
                if len(holders) != deg:
                    heapq.heappush(heap, (len(holders), col))
                    continue
                pr = min(
                    holders,
                    key=lambda i: (len(self.rows[i]), abs(self.rows[i][col]), i),
                )
                self._pivot(pr, col)
                n_piv += 1
            if n_piv == self.m:
                break
        for i in range(self.m):
            if not self.pivoted[i] and (self.rows[i] or self.rhs[i]):
                if self.rows[i]:
                    return False
                if self.rhs[i] != 0:
                    return False
        return True

    def back_substitute(self) -> dict[int, Fraction]:
        """Values of the pivot columns, all other columns fixed to zero."""
        x: dict[int, Fraction] = {}
        for pr, col in reversed(self.pivots):
            row = self.rows[pr]
            acc = Fraction(self.rhs[pr])
            for j, v in row.items():
                if j == col:
                    continue
                xj = x.get(j)
                if xj is not None and xj != 0:
                    acc -= v * xj
            x[col] = acc / row[col]
        return x


_SNAP_DEN = 1 << 40


def _snap(values) -> list[Fraction]:
    return [Fraction(float(v)).limit_denominator(_SNAP_DEN) for v in values]


def _guided_attempt(std: _Standardized) -> tuple[list[Fraction], Fraction, tuple[str, ...]] | None:
    """Ask HiGHS for primal and dual points, then certify them exactly.

    The floats are snapped to small rationals; acceptance requires exact
    primal feasibility, exact dual feasibility and exact strong duality.
    """
    try:
        import numpy as np
        from scipy import sparse as sp
        from scipy.optimize import linprog
    except Exception:  # pragma: no cover - scipy is a hard dependency
        return None

    m = len(std.rows)
    n = std.n_cols
    if m == 0:
        return None
    data, ri, ci = [], [], []
    for i, row in enumerate(std.rows):
        for j, v in row.items():
            fv = float(v)
            if not math.isfinite(fv):
                return None
            data.append(fv)
            ri.append(i)
            ci.append(j)
    a_eq = sp.coo_matrix((data, (ri, ci)), shape=(m, n)).tocsc()
    b_eq = np.array([float(v) for v in std.b])
    c_min = np.array([-float(v) for v in std.c])
    for method, options in (
        ("highs-ds", {}),
        ("highs-ds", {"presolve": False}),
        ("highs", {}),
    ):
        try:
            res = linprog(
                c_min, A_eq=a_eq, b_eq=b_eq, bounds=(0, None),
                method=method, options=options,
            )
        except Exception:
            return None
        if res.status != 0:
            return None
        z = _primal_candidate(std, res.x)
        if z is None:
            continue
        value = sum((cj * zj for cj, zj in zip(std.c, z) if zj != 0), Fraction(0))
        duals = getattr(getattr(res, "eqlin", None), "marginals", None)
        candidates = []
        if duals is not None:
            snapped = _snap(duals)
            candidates.append([-v for v in snapped])
            candidates.append(snapped)
        for y in candidates:
            if _dual_certifies(std, y, value):
                support = tuple(
                    std.labels[j] for j, v in enumerate(z) if v != 0
                )
                return list(z), value, support
    return None


def _primal_candidate(std, x_float) -> list[Fraction] | None:
    """Exact feasible point from the float solution, or None."""
    # cheap route: snap coordinates and verify
    z = _snap(x_float)
    if all(v >= 0 for v in z):
        for row, b in zip(std.rows, std.b):
            if sum((v * z[j] for j, v in row.items() if z[j]), Fraction(0)) != b:
                break
        else:
            return z
    # robust route: exact basic solution on the float support
    support = sorted(
        (j for j in range(std.n_cols) if x_float[j] > 1e-9),
        key=lambda j: -x_float[j],
    )
    rest = [j for j in range(std.n_cols) if x_float[j] <= 1e-9]
    rows = [dict(r) for r in std.rows]
    rhs = list(std.b)
    pivots = _sparse_eliminate(rows, rhs, support + rest)
    if pivots is None:
        return None
    x_map = _back_substitute(rows, rhs, pivots)
    if any(v < 0 for v in x_map.values()):
        return None
    z = [Fraction(0)] * std.n_cols
    for j, v in x_map.items():
        z[j] = v
    for row, b in zip(std.rows, std.b):
        if sum((v * z[j] for j, v in row.items() if z[j]), Fraction(0)) != b:
            return None
    return z


def _dual_certifies(std, y: list[Fraction], value: Fraction) -> bool:
    """Exact dual feasibility plus strong duality against `value`."""
    if sum((yi * bi for yi, bi in zip(y, std.b) if yi), Fraction(0)) != value:
        return False
    reduced = list(std.c)
    for i, row in enumerate(std.rows):
        yi = y[i]
        if yi == 0:
            continue
        for j, v in row.items():
            reduced[j] -= yi * v
    return all(d <= 0 for d in reduced)


# ---------------------------------------------------------------------------
# public solve


def solve(
    p: LinearProgram,
    *,
    bit_cap: int = DEFAULT_BIT_CAP,
    method: str = "auto",
) -> LpSolution:
    """Exact optimum of the program.

    `method` is "auto" (float-guided certification for large programs,
    tableau simplex otherwise), "exact" (tableau only) or "guided"
    (certification only; falls back to exact if it fails).
    """
    std = _Standardized(p)
    size = max(1, len(std.rows)) * std.n_cols
    try_guided = method == "guided" or (
        method == "auto" and size > GUIDED_THRESHOLD
    )
    if try_guided:
        cert = _guided_attempt(std)
        if cert is not None:
            z, value, basis = cert
            point = std.unmap(z)
            sol = LpSolution(
                status="optimal",
                value=value,
                point=point,
                basis=basis,
                iterations=0,
                method="guided-simplex",
                verified=False,
            )
            return _verify(p, sol)

    tab = _Tableau(std, bit_cap=bit_cap)
    status, z, value = tab.solve()
    if status != "optimal":
        return LpSolution(status=status, iterations=tab.iterations)
    point = std.unmap(z)
    sol = LpSolution(
        status="optimal",
        value=value,
        point=point,
        basis=tab.basis_labels(),
        iterations=tab.iterations,
        method="simplex",
        verified=False,
    )
    return _verify(p, sol)


def _verify(p: LinearProgram, sol: LpSolution) -> LpSolution:
    """Re-check feasibility and objective of an optimal solution exactly."""
    assert sol.point is not None
    if not p.is_feasible_point(sol.point):
        raise AssertionError("solver returned an infeasible point")
    if p.objective(sol.point) != sol.value:
        raise AssertionError("solver value does not match objective at point")
    return LpSolution(
        status=sol.status,
        value=sol.value,
        point=sol.point,
        basis=sol.basis,
        iterations=sol.iterations,
        method=sol.method,
        verified=True,
    )


# ---------------------------------------------------------------------------
# duality support (used by the verification test-suite)


def dual_program(p: LinearProgram) -> LinearProgram:
    """Dual of `max c.x` with free variables, as another max program.

    The dual is `min b.y  s.t.  A^T y = c` with sign constraints per row
    sense; it is returned negated (max -b.y), so the dual optimum equals
    minus the primal optimum.
    """
    m = p.n_rows
    cols: dict[int, list[tuple[int, Fraction]]] = {}
    for i, (coeffs, _sense, _rhs) in enumerate(p.rows):
        for j, v in coeffs:
            cols.setdefault(j, []).append((i, v))
    rows = []
    for j in range(p.n_vars):
        rows.append((cols.get(j, []), "=", p.c[j]))
    for i, (_c, sense, _r) in enumerate(p.rows):
        if sense == "<=":
            rows.append(([(i, Fraction(1))], ">=", Fraction(0)))
        elif sense == ">=":
            rows.append(([(i, Fraction(1))], "<=", Fraction(0)))
    c = [-rhs for _, _, rhs in p.rows]
    return LinearProgram.build(c, rows, name=f"dual({p.name})")


# ---------------------------------------------------------------------------
# sensitivity machinery


def _invert_dense(mat: list[list[Fraction]]) -> list[list[Fraction]] | None:
    """Gauss-Jordan inverse; None if singular."""
    k = len(mat)
    aug = [list(row) + [Fraction(int(i == r)) for i in range(k)]
           for r, row in enumerate(mat)]
    for col in range(k):
        pr = next((r for r in range(col, k) if aug[r][col] != 0), None)
        if pr is None:
            return None
        aug[col], aug[pr] = aug[pr], aug[col]
        pv = aug[col][col]
        if pv != 1:
            inv = 1 / pv
            aug[col] = [v * inv for v in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * pv2 for v, pv2 in zip(aug[r], aug[col])]
    return [row[k:] for row in aug]


def bareiss_determinant(mat: Sequence[Sequence]) -> Fraction:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    k = len(mat)
    if k == 0:
        return Fraction(1)
    m = [[_fr(v) for v in row] for row in mat]
    if any(len(row) != k for row in m):
        raise ShapeMismatch("determinant needs a square matrix")
    sign = 1
    prev = Fraction(1)
    for col in range(k - 1):
        pr = next((r for r in range(col, k) if m[r][col] != 0), None)
        if pr is None:
            return Fraction(0)
        if pr != col:
            m[col], m[pr] = m[pr], m[col]
            sign = -sign
        for r in range(col + 1, k):
            for c in range(col + 1, k):
                m[r][c] = (m[r][c] * m[col][col] - m[r][col] * m[col][c]) / prev
            m[r][col] = Fraction(0)
        prev = m[col][col]
    return sign * m[k - 1][k - 1]


def sensitivity_delta_exact(
    a: Sequence[Sequence],
    size_cap: int,
    budget: int = DEFAULT_SUBMATRIX_BUDGET,
) -> Fraction:
    """Max |entry| over inverses of nonsingular square submatrices.

    Submatrices are arbitrary row/column subsets of dimension up to
    `size_cap`. Raises BudgetExceeded (carrying the partial maximum) once
    `budget` submatrices have been visited.
    """
    if size_cap < 1:
        raise ShapeMismatch("size_cap must be >= 1")
    mat = [[_fr(v) for v in row] for row in a]
    n_rows = len(mat)
    n_cols = len(mat[0]) if n_rows else 0
    best = Fraction(0)
    visited = 0
    for k in range(1, min(size_cap, n_rows, n_cols) + 1):
        for rset in combinations(range(n_rows), k):
            for cset in combinations(range(n_cols), k):
                visited += 1
                if visited > budget:
                    raise BudgetExceeded(best, visited - 1)
                sub = [[mat[r][c] for c in cset] for r in rset]
                inv = _invert_dense(sub)
                if inv is None:
                    continue
                for row in inv:
                    for v in row:
                        av = abs(v)
                        if av > best:
                            best = av
    return best


def sensitivity_delta_hadamard(a: Sequence[Sequence]) -> float:
    """Hadamard-style upper bound (k-1)^((k-1)/2) for integer matrices."""
    n_rows = len(a)
    n_cols = len(a[0]) if n_rows else 0
    for row in a:
        for v in row:
            f = _fr(v)
            if f.denominator != 1:
                raise NonIntegerEntries(f"entry {v} is not an integer")
    k = min(n_rows, n_cols)
    if k <= 1:
        return 1.0
    return float(k - 1) ** ((k - 1) / 2.0)


def hadamard_delta_rational(n_rows: int, n_cols: int) -> Fraction:
    """Exact-rational upper bound on (k-1)^((k-1)/2), rounded outward."""
    k = min(n_rows, n_cols)
    s = k - 1
    if s <= 0:
        return Fraction(1)
    if s % 2 == 0:
        return Fraction(s ** (s // 2))
    power = s**s
    root = math.isqrt(power)
    if root * root < power:
        root += 1
    return Fraction(root)


@dataclass(frozen=True)
class SensitivityReport:
    status_a: str
    status_b: str
    opt_a: Fraction | None
    opt_b: Fraction | None
    diff: Fraction | None
    bound: Fraction | None
    holds: bool | None


def sensitivity_check(
    p: LinearProgram, b_alt: Sequence, delta: Fraction
) -> SensitivityReport:
    """|opt'' - opt'| against n * delta * ||c||_1 * ||b''-b'||_inf, exactly."""
    delta = _fr(delta)
    p_alt = p.with_rhs([_fr(v) for v in b_alt])
    sa = solve(p)
    sb = solve(p_alt)
    if sa.status != "optimal" or sb.status != "optimal":
        return SensitivityReport(sa.status, sb.status, sa.value, sb.value,
                                 None, None, None)
    diff = abs(sb.value - sa.value)
    c_l1 = sum((abs(v) for v in p.c), Fraction(0))
    b_inf = max(
        (abs(nb - ob) for nb, ob in zip(p_alt.rhs(), p.rhs())),
        default=Fraction(0),
    )
    bound = p.n_vars * delta * c_l1 * b_inf
    return SensitivityReport(
        sa.status, sb.status, sa.value, sb.value, diff, bound, diff <= bound
    )


# ---------------------------------------------------------------------------
# interchange helpers


def standard_leq_form(p: LinearProgram):
    """Dense `max c.x : A x <= b` expansion (equalities become row pairs)."""
    n = p.n_vars
    a: list[list[Fraction]] = []
    b: list[Fraction] = []

    def dense(coeffs, flip=False):
        row = [Fraction(0)] * n
        for j, v in coeffs:
            row[j] = -v if flip else v
        return row

    for coeffs, sense, rhs in p.rows:
        if sense == "<=":
            a.append(dense(coeffs))
            b.append(rhs)
        elif sense == ">=":
            a.append(dense(coeffs, flip=True))
            b.append(-rhs)
        else:
            a.append(dense(coeffs))
            b.append(rhs)
            a.append(dense(coeffs, flip=True))
            b.append(-rhs)
    return a, b, list(p.c)


def _fmt_q(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def dump_lp_text(p: LinearProgram) -> str:
    """Text rendering in an LP-interchange style, rationals as p/q."""
    out = [f"\\ {p.name}", "Maximize"]

    def terms(coeffs):
        parts = []
        for j, v in coeffs:
            if v == 0:
                continue
            sign = "-" if v < 0 else "+"
            parts.append(f"{sign} {_fmt_q(abs(v))} x{j}")
        if not parts:
            return "0"
        joined = " ".join(parts)
        return joined[2:] if joined.startswith("+ ") else joined

    out.append(" obj: " + terms(list(enumerate(p.c))))
    out.append("Subject To")
    for i, (coeffs, sense, rhs) in enumerate(p.rows):
        op = {"<=": "<=", ">=": ">=", "=": "="}[sense]
        out.append(f" r{i}: {terms(coeffs)} {op} {_fmt_q(rhs)}")
    out.append("Bounds")
    for j in range(p.n_vars):
        out.append(f" x{j} free")
    out.append("End")
    return "\n".join(out) + "\n"
