"""Game model: question/answer tables, strategies, values, and repetitions.

All probabilities are exact `fractions.Fraction` values; no floating point
enters any game table. Tuples (one component per player) are flattened to
0-based indices by a shared mixed-radix convention: player 1 is the least
significant digit, and when a player's alphabet is itself an n-round
product, round 1 is the least significant digit within that alphabet.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

from .errors import (
    CapExceeded,
    IndexOutOfRange,
    ShapeMismatch,
    SumNotOne,
    UnknownName,
)

DEFAULT_CELL_CAP = 10**7

Rational = Fraction | int


def cell_cap() -> int:
    """Table-cell cap for materialized repetitions (env NSGAME_CELL_CAP)."""
    raw = os.environ.get("NSGAME_CELL_CAP")
    return int(raw) if raw else DEFAULT_CELL_CAP


@dataclass(frozen=True)
class TupleIndexer:
    """Bijection between tuples over mixed radices and flat 0-based indices.

    Little-endian: the first radix is the least significant digit.
    """

    radices: tuple[int, ...]

    def __post_init__(self):
        if any(r < 1 for r in self.radices):
            raise ShapeMismatch(f"radices must be positive, got {self.radices}")

    @property
    def size(self) -> int:
        return math.prod(self.radices)

    def encode(self, t: Sequence[int]) -> int:
        if len(t) != len(self.radices):
            raise ShapeMismatch(
                f"tuple length {len(t)} != arity {len(self.radices)}"
            )
        flat = 0
        weight = 1
        for v, r in zip(t, self.radices):
            if not 0 <= v < r:
                raise IndexOutOfRange(f"component {v} outside range(0, {r})")
            flat += v * weight
            weight *= r
        return flat

    def decode(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.size:
            raise IndexOutOfRange(f"flat index {flat} outside range(0, {self.size})")
        out = []
        for r in self.radices:
            out.append(flat % r)
            flat //= r
        return tuple(out)

    def all_tuples(self) -> Iterable[tuple[int, ...]]:
        """Yield every tuple in flat-index order."""
        for flat in range(self.size):
            yield self.decode(flat)


@dataclass(frozen=True)
class Game:
    """An m-player nonlocal game as explicit exact-rational tables.

    `pi` is indexed by the flat question-tuple index; `predicate` by
    flat_x * (number of answer tuples) + flat_a.
    """

    name: str
    m: int
    question_sizes: tuple[int, ...]
    answer_sizes: tuple[int, ...]
    pi: tuple[Fraction, ...]
    predicate: tuple[bool, ...]

    def __post_init__(self):
        if self.m < 1:
            raise ShapeMismatch("player count must be positive")
        if len(self.question_sizes) != self.m or len(self.answer_sizes) != self.m:
            raise ShapeMismatch(
                f"expected {self.m} question and answer sizes, got "
                f"{len(self.question_sizes)} and {len(self.answer_sizes)}"
            )
        nx = math.prod(self.question_sizes)
        na = math.prod(self.answer_sizes)
        if len(self.pi) != nx:
            raise ShapeMismatch(f"pi table has {len(self.pi)} entries, expected {nx}")
        if len(self.predicate) != nx * na:
            raise ShapeMismatch(
                f"predicate table has {len(self.predicate)} entries, expected {nx * na}"
            )
        if any(p < 0 for p in self.pi):
            raise ShapeMismatch("pi entries must be nonnegative")
        total = sum(self.pi, Fraction(0))
        if total != 1:
            raise SumNotOne(total, context=f"game {self.name!r}")

    @property
    def x_indexer(self) -> TupleIndexer:
        return TupleIndexer(self.question_sizes)

    @property
    def a_indexer(self) -> TupleIndexer:
        return TupleIndexer(self.answer_sizes)

    @property
    def n_questions(self) -> int:
        return math.prod(self.question_sizes)

    @property
    def n_answers(self) -> int:
        return math.prod(self.answer_sizes)

    def pi_of(self, x: Sequence[int]) -> Fraction:
        return self.pi[self.x_indexer.encode(x)]

    def wins(self, x: Sequence[int], a: Sequence[int]) -> bool:
        flat_x = self.x_indexer.encode(x)
        flat_a = self.a_indexer.encode(a)
        return self.predicate[flat_x * self.n_answers + flat_a]

    def wins_flat(self, flat_x: int, flat_a: int) -> bool:
        return self.predicate[flat_x * self.n_answers + flat_a]

    @property
    def shape(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.question_sizes, self.answer_sizes)


@dataclass(frozen=True)
class Strategy:
    """Conditional probability table q(a|x) over flattened tuple indices.

    Rows must be exact distributions for every question tuple, including
    tuples the game never asks.
    """

    game_shape: tuple[tuple[int, ...], tuple[int, ...]]
    q: tuple[Fraction, ...]

    def __post_init__(self):
        qs, asz = self.game_shape
        nx = math.prod(qs)
        na = math.prod(asz)
        if len(self.q) != nx * na:
            raise ShapeMismatch(
                f"strategy table has {len(self.q)} entries, expected {nx * na}"
            )
        for v in self.q:
            if v < 0:
                raise ShapeMismatch("strategy entries must be nonnegative")
        for flat_x in range(nx):
            row = sum(self.q[flat_x * na : (flat_x + 1) * na], Fraction(0))
            if row != 1:
                raise SumNotOne(row, context=f"strategy row x={flat_x}")

    @property
    def n_questions(self) -> int:
        return math.prod(self.game_shape[0])

    @property
    def n_answers(self) -> int:
        return math.prod(self.game_shape[1])

    def prob(self, flat_x: int, flat_a: int) -> Fraction:
        return self.q[flat_x * self.n_answers + flat_a]

    def row(self, flat_x: int) -> tuple[Fraction, ...]:
        na = self.n_answers
        return self.q[flat_x * na : (flat_x + 1) * na]


@dataclass(frozen=True)
class WinRecord:
    """Per-round win indicators of one play plus their exact mean."""

    per_round: tuple[bool, ...]
    fraction: Fraction

    def __post_init__(self):
        n = len(self.per_round)
        if n == 0:
            raise ShapeMismatch("need at least one round")
        expect = Fraction(sum(self.per_round), n)
        if self.fraction != expect:
            raise ShapeMismatch(
                f"fraction {self.fraction} != mean of per_round {expect}"
            )

    @classmethod
    def from_rounds(cls, per_round: Sequence[bool]) -> "WinRecord":
        pr = tuple(bool(w) for w in per_round)
        return cls(pr, Fraction(sum(pr), len(pr)))


@dataclass(frozen=True)
class SupportInfo:
    """Result of the complete-support check; truthy iff support is complete."""

    complete: bool
    pi_min: Fraction

    def __bool__(self) -> bool:
        return self.complete


def make_game(
    m: int,
    question_sizes: Sequence[int],
    answer_sizes: Sequence[int],
    pi_entries,
    winning_tuples,
    name: str = "game",
) -> Game:
    """Build a validated Game.

    `pi_entries` maps question tuples to rational weights (dict or iterable
    of pairs); omitted tuples get probability 0. `winning_tuples` lists the
    winning (question tuple, answer tuple) pairs; everything else loses and
    duplicates are idempotent.
    """
    question_sizes = tuple(int(s) for s in question_sizes)
    answer_sizes = tuple(int(s) for s in answer_sizes)
    if len(question_sizes) != m or len(answer_sizes) != m:
        raise ShapeMismatch(
            f"expected {m} question and answer sizes, got "
            f"{len(question_sizes)} and {len(answer_sizes)}"
        )
    xi = TupleIndexer(question_sizes)
    ai = TupleIndexer(answer_sizes)
    pi = [Fraction(0)] * xi.size
    items = pi_entries.items() if hasattr(pi_entries, "items") else pi_entries
    for x, p in items:
        p = Fraction(p)
        if p < 0:
            raise ShapeMismatch(f"pi({tuple(x)}) = {p} is negative")
        pi[xi.encode(x)] += p
    predicate = bytearray(xi.size * ai.size)
    for x, a in winning_tuples:
        predicate[xi.encode(x) * ai.size + ai.encode(a)] = 1
    return Game(
        name=name,
        m=m,
        question_sizes=question_sizes,
        answer_sizes=answer_sizes,
        pi=tuple(pi),
        predicate=tuple(bool(b) for b in predicate),
    )


def has_complete_support(g: Game) -> SupportInfo:
    """Whether every question tuple has positive probability; reports min pi."""
    pi_min = min(g.pi)
    return SupportInfo(complete=pi_min > 0, pi_min=pi_min)


def question_marginals(g: Game) -> list[tuple[Fraction, ...]]:
    """Per-player marginals of the question distribution."""
    xi = g.x_indexer
    out = []
    for i in range(g.m):
        acc = [Fraction(0)] * g.question_sizes[i]
        for flat, p in enumerate(g.pi):
            acc[xi.decode(flat)[i]] += p
        out.append(tuple(acc))
    return out


def is_free(g: Game) -> bool:
    """True iff the question distribution factors exactly across players."""
    margs = question_marginals(g)
    xi = g.x_indexer
    for flat, p in enumerate(g.pi):
        x = xi.decode(flat)
        prod_p = Fraction(1)
        for i, v in enumerate(x):
            prod_p *= margs[i][v]
        if p != prod_p:
            return False
    return True


def _check_rep_cap(g: Game, n: int) -> None:
    nx = g.n_questions**n
    na = g.n_answers**n
    cells = nx * na + nx
    cap = cell_cap()
    if cells > cap:
        raise CapExceeded(f"repetition needs {cells} cells, cap is {cap}")


def _repeated_tables(g: Game, n: int):
    """pi^n and the per-cell round-win counts of the n-fold repetition."""
    base_nx, base_na = g.n_questions, g.n_answers
    nx, na = base_nx**n, base_na**n
    round_x = TupleIndexer((base_nx,) * n)
    round_a = TupleIndexer((base_na,) * n)

    pi_rep = []
    x_rounds = []
    for flat_x in range(nx):
        rounds = round_x.decode(flat_x)
        x_rounds.append(rounds)
        p = Fraction(1)
        for r in rounds:
            p *= g.pi[r]
        pi_rep.append(p)

    win_counts = [0] * (nx * na)
    for flat_a in range(na):
        a_rounds = round_a.decode(flat_a)
        for flat_x in range(nx):
            cnt = 0
            for xr, ar in zip(x_rounds[flat_x], a_rounds):
                if g.predicate[xr * base_na + ar]:
                    cnt += 1
            win_counts[flat_x * na + flat_a] = cnt
    return tuple(pi_rep), win_counts


def _rep_sizes(g: Game, n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    return (
        tuple(s**n for s in g.question_sizes),
        tuple(s**n for s in g.answer_sizes),
    )


def _round_permutation(base_sizes: tuple[int, ...], n: int) -> list[int]:
    """Map repeated-game flat index (per-player round blocks) to round-major.

    The repeated game's player-i alphabet is the n-fold product of its base
    alphabet (rounds little-endian within the player). `_repeated_tables`
    indexes cells by round-major tuples instead; repetition construction
    permutes through this map.
    """
    m = len(base_sizes)
    base = TupleIndexer(base_sizes)
    rep = TupleIndexer(tuple(s**n for s in base_sizes))
    round_ix = TupleIndexer((base.size,) * n)
    per_player = [TupleIndexer((s,) * n) for s in base_sizes]
    perm = []
    for flat in range(rep.size):
        per_player_vals = rep.decode(flat)
        rounds_per_player = [
            per_player[i].decode(v) for i, v in enumerate(per_player_vals)
        ]
        round_flat = [
            base.encode(tuple(rounds_per_player[i][ell] for i in range(m)))
            for ell in range(n)
        ]
        perm.append(round_ix.encode(round_flat))
    return perm


@lru_cache(maxsize=32)
def threshold_repeat(g: Game, n: int, t: Rational) -> Game:
    """t-out-of-n parallel repetition: win iff at least t rounds win.

    Player count stays m; rounds fold into each player's alphabets.
    """
    if n < 1:
        raise ShapeMismatch("n must be >= 1")
    _check_rep_cap(g, n)
    t = Fraction(t)
    pi_round, win_counts = _repeated_tables(g, n)
    qs, asz = _rep_sizes(g, n)
    x_perm = _round_permutation(g.question_sizes, n)
    a_perm = _round_permutation(g.answer_sizes, n)
    nx, na = math.prod(qs), math.prod(asz)

    pi = tuple(pi_round[x_perm[fx]] for fx in range(nx))
    predicate = []
    for fx in range(nx):
        base = x_perm[fx] * na
        row = win_counts  # round-major cell table
        predicate.extend(row[base + a_perm[fa]] >= t for fa in range(na))

    suffix = f"^{t}/{n}" if t != n else f"^{n}"
    return Game(
        name=f"{g.name}{suffix}",
        m=g.m,
        question_sizes=qs,
        answer_sizes=asz,
        pi=pi,
        predicate=tuple(predicate),
    )


def repeat(g: Game, n: int) -> Game:
    """n-fold parallel repetition: all rounds must be won."""
    return threshold_repeat(g, n, n)


def game_value(g: Game, s: Strategy) -> Fraction:
    """Winning probability sum(pi(x) q(a|x) V(x,a)), exact."""
    if s.game_shape != g.shape:
        raise ShapeMismatch(
            f"strategy shape {s.game_shape} != game shape {g.shape}"
        )
    na = g.n_answers
    total = Fraction(0)
    for flat_x, p in enumerate(g.pi):
        if p == 0:
            continue
        base = flat_x * na
        acc = Fraction(0)
        for flat_a in range(na):
            if g.predicate[base + flat_a]:
                acc += s.q[base + flat_a]
        total += p * acc
    return total


def product_strategy(s: Strategy, n: int) -> Strategy:
    """Play `s` independently in each of n rounds."""
    if n < 1:
        raise ShapeMismatch("n must be >= 1")
    qs, asz = s.game_shape
    nx, na = math.prod(qs), math.prod(asz)
    cells = (nx**n) * (na**n)
    cap = cell_cap()
    if cells > cap:
        raise CapExceeded(f"product strategy needs {cells} cells, cap is {cap}")

    rep_qs = tuple(v**n for v in qs)
    rep_asz = tuple(v**n for v in asz)
    rep_xi = TupleIndexer(rep_qs)
    rep_ai = TupleIndexer(rep_asz)
    per_q = [TupleIndexer((v,) * n) for v in qs]
    per_a = [TupleIndexer((v,) * n) for v in asz]
    base_xi = TupleIndexer(qs)
    base_ai = TupleIndexer(asz)

    x_rounds = []
    for fx in range(rep_xi.size):
        vals = rep_xi.decode(fx)
        rounds = [per_q[i].decode(v) for i, v in enumerate(vals)]
        x_rounds.append(
            [base_xi.encode(tuple(rounds[i][ell] for i in range(len(qs))))
             for ell in range(n)]
        )
    a_rounds = []
    for fa in range(rep_ai.size):
        vals = rep_ai.decode(fa)
        rounds = [per_a[i].decode(v) for i, v in enumerate(vals)]
        a_rounds.append(
            [base_ai.encode(tuple(rounds[i][ell] for i in range(len(asz))))
             for ell in range(n)]
        )

    q = []
    for fx in range(rep_xi.size):
        xr = x_rounds[fx]
        for fa in range(rep_ai.size):
            ar = a_rounds[fa]
            val = Fraction(1)
            for ell in range(n):
                val *= s.q[xr[ell] * na + ar[ell]]
                if val == 0:
                    break
            q.append(val)
    return Strategy(game_shape=(rep_qs, rep_asz), q=tuple(q))


def uniform_strategy(shape: tuple[tuple[int, ...], tuple[int, ...]]) -> Strategy:
    """Uniform answers regardless of the question; always non-signaling."""
    qs, asz = shape
    nx, na = math.prod(qs), math.prod(asz)
    p = Fraction(1, na)
    return Strategy(game_shape=(tuple(qs), tuple(asz)), q=(p,) * (nx * na))


def deterministic_strategy(
    shape: tuple[tuple[int, ...], tuple[int, ...]],
    response_functions: Sequence[Sequence[int]],
) -> Strategy:
    """0/1 strategy from per-player response functions f_i: X_i -> A_i."""
    qs, asz = shape
    m = len(qs)
    if len(response_functions) != m:
        raise ShapeMismatch(f"expected {m} response functions")
    xi = TupleIndexer(tuple(qs))
    ai = TupleIndexer(tuple(asz))
    q = [Fraction(0)] * (xi.size * ai.size)
    for fx in range(xi.size):
        x = xi.decode(fx)
        a = tuple(response_functions[i][x[i]] for i in range(m))
        q[fx * ai.size + ai.encode(a)] = Fraction(1)
    return Strategy(game_shape=(tuple(qs), tuple(asz)), q=tuple(q))


def _chsh() -> Game:
    wins = []
    for x in product(range(2), repeat=2):
        for a in product(range(2), repeat=2):
            if (a[0] ^ a[1]) == (x[0] & x[1]):
                wins.append((x, a))
    pi = {x: Fraction(1, 4) for x in product(range(2), repeat=2)}
    return make_game(2, (2, 2), (2, 2), pi, wins, name="chsh")


def _ghz3() -> Game:
    # Complete-support GHZ variant: uniform over all question triples,
    # win iff the answer parity equals the OR of the questions.
    wins = []
    for x in product(range(2), repeat=3):
        target = 1 if any(x) else 0
        for a in product(range(2), repeat=3):
            if (a[0] ^ a[1] ^ a[2]) == target:
                wins.append((x, a))
    pi = {x: Fraction(1, 8) for x in product(range(2), repeat=3)}
    return make_game(3, (2, 2, 2), (2, 2, 2), pi, wins, name="ghz3")


def _guess_other() -> Game:
    wins = []
    for x in product(range(2), repeat=2):
        wins.append((x, (x[1], x[0])))
    pi = {x: Fraction(1, 4) for x in product(range(2), repeat=2)}
    return make_game(2, (2, 2), (2, 2), pi, wins, name="guess_other")


def _random_free(m: int, sizes, seed: int) -> Game:
    if isinstance(sizes, int):
        q_sizes = (sizes,) * m
        a_sizes = (sizes,) * m
    else:
        q, a = sizes
        q_sizes = (q,) * m if isinstance(q, int) else tuple(q)
        a_sizes = (a,) * m if isinstance(a, int) else tuple(a)
    rnd = random.Random(seed)
    margs = []
    for i in range(m):
        weights = [rnd.randint(1, 9) for _ in range(q_sizes[i])]
        total = sum(weights)
        margs.append([Fraction(w, total) for w in weights])
    pi = {}
    for x in product(*[range(s) for s in q_sizes]):
        p = Fraction(1)
        for i, v in enumerate(x):
            p *= margs[i][v]
        pi[x] = p
    wins = []
    for x in product(*[range(s) for s in q_sizes]):
        for a in product(*[range(s) for s in a_sizes]):
            if rnd.getrandbits(1):
                wins.append((x, a))
    return make_game(
        m, q_sizes, a_sizes, pi, wins, name=f"random_free(m={m},seed={seed})"
    )


BUILTIN_NAMES = ("chsh", "ghz3", "guess_other", "random_free")


def builtin(name: str, **params) -> Game:
    """Built-in game library; random_free takes (m, sizes, seed)."""
    if name == "chsh":
        return _chsh()
    if name == "ghz3":
        return _ghz3()
    if name == "guess_other":
        return _guess_other()
    if name == "random_free":
        try:
            return _random_free(
                int(params["m"]), params["sizes"], int(params["seed"])
            )
        except KeyError as e:
            raise UnknownName(f"random_free requires parameter {e}") from None
    raise UnknownName(f"unknown builtin {name!r}; known: {BUILTIN_NAMES}")
