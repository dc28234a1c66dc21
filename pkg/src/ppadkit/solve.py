"""Exact equilibrium solvers: support enumeration and Lemke-Howson."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator

from .bimatrix import BimatrixGame, MixedProfile, equilibrium_defects
from .errors import BudgetExhausted, InputError, InternalError
from .numerics import ONE, ZERO, lp_feasible


def support_pairs(m: int, n: int) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All (row support, column support) pairs: total size ascending, then lexicographic."""
    for total in range(2, m + n + 1):
        batch = []
        for kx in range(max(1, total - n), min(m, total - 1) + 1):
            ky = total - kx
            for sx in combinations(range(m), kx):
                for sy in combinations(range(n), ky):
                    batch.append((sx, sy))
        batch.sort()
        yield from batch


def _indifferent_mix(payoff_rows, support_rows, mix_support, width):
    """Find a distribution w on ``mix_support`` under which every row in
    ``support_rows`` is a best response among all of ``payoff_rows``.

    payoff_rows[i][j] is the payoff of pure strategy i against pure j.
    """
    cols = list(mix_support)
    k = len(cols)
    proj = [[row[j] for j in cols] for row in payoff_rows]
    eqs = [([ONE] * k, ONE)]
    i0 = support_rows[0]
    base = proj[i0]
    for i in support_rows[1:]:
        eqs.append(([a - b for a, b in zip(proj[i], base)], ZERO))
    ineqs = [([ONE if c == j else ZERO for c in range(k)], ZERO) for j in range(k)]
    chosen = set(support_rows)
    for i in range(len(payoff_rows)):
        if i not in chosen:
            ineqs.append(([b - a for a, b in zip(proj[i], base)], ZERO))
    sol = lp_feasible(eqs, ineqs, k)
    if sol is None:
        return None
    out = [ZERO] * width
    for j, v in zip(cols, sol):
        out[j] = v
    return out


def solve_supports(game: BimatrixGame, sx, sy) -> MixedProfile | None:
    """The support LP for one pair: x on sx makes every column of sy a best
    reply for B, y on sy makes every row of sx a best reply for A."""
    y = _indifferent_mix(game.A, sx, sy, game.n)
    if y is None:
        return None
    x = _indifferent_mix(game.B_columns, sy, sx, game.m)
    if x is None:
        return None
    return MixedProfile(x, y)


def support_enumeration(game: BimatrixGame) -> MixedProfile:
    for sx, sy in support_pairs(game.m, game.n):
        prof = solve_supports(game, sx, sy)
        if prof is not None:
            if not equilibrium_defects(game, prof).is_exact:
                raise InternalError(f"support LP returned a non-equilibrium for {sx}, {sy}")
            return prof
    raise InternalError("exhaustive support search found no equilibrium")


# ---------------------------------------------------------------------------
# Lemke-Howson

@dataclass
class TableauState:
    """One side of the Lemke-Howson pair.

    Column ``c`` carries label ``c + 1``. For the x-side the first m columns
    are the x variables and the last n are slacks; for the y-side the first m
    are slacks and the last n are the y variables. ``slack_cols`` indexes
    the initial basis, used by the lexicographic ratio test.
    """

    basis: list
    tableau: list
    slack_cols: range
    missing_label: int = 0
    step_count: int = 0

    def present_labels(self) -> set:
        """Labels of the nonbasic (zero) variables."""
        basic = set(self.basis)
        return {c + 1 for c in range(len(self.tableau[0]) - 1) if c not in basic}


def _shifted(mat):
    lo = min(min(row) for row in mat)
    shift = ONE + abs(lo)
    return [[e + shift for e in row] for row in mat]


def _initial_states(game: BimatrixGame):
    m, n = game.m, game.n
    A = _shifted(game.A)
    B = _shifted(game.B)
    # x-side: B^T x + s = 1
    xt = []
    for j in range(n):
        row = [B[i][j] for i in range(m)] + [ONE if k == j else ZERO for k in range(n)] + [ONE]
        xt.append(row)
    xs = TableauState(basis=[m + j for j in range(n)], tableau=xt, slack_cols=range(m, m + n))
    # y-side: r + A y = 1
    yt = []
    for i in range(m):
        row = [ONE if k == i else ZERO for k in range(m)] + list(A[i]) + [ONE]
        yt.append(row)
    ys = TableauState(basis=list(range(m)), tableau=yt, slack_cols=range(m))
    return xs, ys


def _lex_row(state: TableauState, col: int) -> int:
    best = None
    best_key = None
    for r, row in enumerate(state.tableau):
        a = row[col]
        if a > 0:
            key = [row[-1] / a] + [row[c] / a for c in state.slack_cols]
            if best_key is None or key < best_key:
                best, best_key = r, key
    if best is None:
        raise InternalError("unbounded column in Lemke-Howson (payoffs not positive?)")
    return best


def _pivot(state: TableauState, r: int, c: int) -> int:
    tab = state.tableau
    prow = tab[r]
    piv = prow[c]
    prow = [e / piv for e in prow]
    tab[r] = prow
    for i, row in enumerate(tab):
        if i != r and row[c]:
            f = row[c]
            tab[i] = [a - f * b for a, b in zip(row, prow)]
    leaving = state.basis[r]
    state.basis[r] = c
    state.step_count += 1
    return leaving


def lemke_howson_path(game: BimatrixGame, initial_label: int) -> Iterator[tuple[TableauState, TableauState]]:
    """Yield the tableau pair after every pivot; the last pair is complementary."""
    m, n = game.m, game.n
    if not (1 <= initial_label <= m + n):
        raise InputError(f"initial_label must be in 1..{m + n}")
    xs, ys = _initial_states(game)
    xs.missing_label = ys.missing_label = initial_label
    entering = initial_label - 1
    side = xs if entering < m else ys
    while True:
        r = _lex_row(side, entering)
        leaving = _pivot(side, r, entering)
        yield xs, ys
        if leaving == initial_label - 1:
            return
        entering = leaving
        side = ys if side is xs else xs


def _profile(xs: TableauState, ys: TableauState, m: int, n: int) -> MixedProfile:
    x = [ZERO] * m
    y = [ZERO] * n
    for r, c in enumerate(xs.basis):
        if c < m:
            x[c] = xs.tableau[r][-1]
    for r, c in enumerate(ys.basis):
        if c >= m:
            y[c - m] = ys.tableau[r][-1]
    sx, sy = sum(x, ZERO), sum(y, ZERO)
    return MixedProfile([v / sx for v in x], [v / sy for v in y])


def lemke_howson(game: BimatrixGame, initial_label: int = 1, max_pivots: int | None = None) -> MixedProfile:
    if max_pivots is not None and max_pivots < 1:
        raise InputError("max_pivots must be positive")
    last = None
    for steps, last in enumerate(lemke_howson_path(game, initial_label), start=1):
        if max_pivots is not None and steps > max_pivots:
            raise BudgetExhausted(f"Lemke-Howson exceeded {max_pivots} pivots")
    prof = _profile(*last, game.m, game.n)
    if not equilibrium_defects(game, prof).is_exact:
        raise InternalError("Lemke-Howson terminated on a non-equilibrium")
    return prof

