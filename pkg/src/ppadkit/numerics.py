"""Exact rational scalars, vectors, matrices and an exact feasibility solver.

Everything in the package is built on :class:`fractions.Fraction`; no floats
enter any computation that produces a verdict.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .errors import InputError, InternalError

Rational = Fraction
RatVector = tuple  # tuple[Fraction, ...]
RatMatrix = tuple  # tuple[tuple[Fraction, ...], ...]

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(value) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"`` string to a Fraction.

    Floats are rejected: they would smuggle rounding into exact code paths.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"boolean is not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational literal: {value!r}") from exc
    raise InputError(f"cannot interpret {value!r} as an exact rational")


def rat_str(q: Fraction) -> str:
    """Serialize as ``"p/q"``, or ``"p"`` when the denominator is 1."""
    q = rat(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def vector(values: Iterable) -> RatVector:
    return tuple(rat(v) for v in values)


def matrix(rows: Iterable[Iterable]) -> RatMatrix:
    out = tuple(vector(r) for r in rows)
    if out:
        width = len(out[0])
        if any(len(r) != width for r in out):
            raise InputError("ragged matrix")
    return out


def shape(mat: RatMatrix) -> tuple[int, int]:
    return (len(mat), len(mat[0]) if mat else 0)


def zeros(m: int, n: int) -> list[list[Fraction]]:
    return [[ZERO] * n for _ in range(m)]


def transpose(mat: Sequence[Sequence[Fraction]]) -> RatMatrix:
    return tuple(zip(*mat)) if mat else ()


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    if len(u) != len(v):
        raise InputError(f"length mismatch {len(u)} vs {len(v)}")
    return sum((a * b for a, b in zip(u, v) if a and b), ZERO)


def mat_vec(mat: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> RatVector:
    return tuple(dot(row, v) for row in mat)


def vec_mat(v: Sequence[Fraction], mat: Sequence[Sequence[Fraction]]) -> RatVector:
    if len(v) != len(mat):
        raise InputError(f"length mismatch {len(v)} vs {len(mat)}")
    n = len(mat[0]) if mat else 0
    out = [ZERO] * n
    for vi, row in zip(v, mat):
        if vi:
            for j, a in enumerate(row):
                if a:
                    out[j] += vi * a
    return tuple(out)


def bilinear(x: Sequence[Fraction], mat: Sequence[Sequence[Fraction]], y: Sequence[Fraction]) -> Fraction:
    return dot(x, mat_vec(mat, y))


def is_probability_vector(v: Sequence[Fraction]) -> bool:
    return len(v) > 0 and all(e >= 0 for e in v) and sum(v, ZERO) == 1


def l1_norm(v: Sequence[Fraction]) -> Fraction:
    return sum((abs(e) for e in v), ZERO)


# ---------------------------------------------------------------------------
# exact phase-I simplex

def _as_constraint(item, num_vars: int, kind: str) -> tuple[list[Fraction], Fraction]:
    try:
        coeffs, const = item
    except (TypeError, ValueError) as exc:
        raise InputError(f"{kind} constraint must be a (coefficients, constant) pair") from exc
    coeffs = [rat(c) for c in coeffs]
    if len(coeffs) != num_vars:
        raise InputError(f"{kind} constraint has {len(coeffs)} coefficients, expected {num_vars}")
    return coeffs, rat(const)


def lp_feasible(equalities, inequalities, num_vars: int) -> RatVector | None:
    """Return an exact point satisfying every constraint, or ``None``.

    ``equalities`` holds pairs ``(a, b)`` meaning ``a.x = b``; ``inequalities``
    holds pairs meaning ``a.x >= b``. Variables are free unless an inequality
    bounds them. Phase-I simplex with Bland's smallest-index rule, so the run
    terminates and is deterministic.
    """
    if not isinstance(num_vars, int) or num_vars < 1:
        raise InputError("num_vars must be a positive integer")
    eqs = [_as_constraint(c, num_vars, "equality") for c in equalities]
    ineqs = [_as_constraint(c, num_vars, "inequality") for c in inequalities]

    # single-variable bounds x_j >= 0 become sign restrictions, not rows
    nonneg = [False] * num_vars
    rows_ineq = []
    for coeffs, const in ineqs:
        support = [j for j, c in enumerate(coeffs) if c]
        if len(support) == 1 and const == 0 and coeffs[support[0]] > 0:
            nonneg[support[0]] = True
        elif not support:
            if const > 0:
                return None
        else:
            rows_ineq.append((coeffs, const))
    rows_eq = []
    for coeffs, const in eqs:
        if not any(coeffs):
            if const != 0:
                return None
            continue
        rows_eq.append((coeffs, const))

    # column layout: one column per nonneg var, two per free var, then slacks
    col_of: list[tuple[int, int]] = []  # (var, sign)
    for j in range(num_vars):
        col_of.append((j, 1))
        if not nonneg[j]:
            col_of.append((j, -1))
    n_struct = len(col_of)
    n_slack = len(rows_ineq)
    n_rows = len(rows_eq) + n_slack
    if n_rows == 0:
        return tuple(ZERO for _ in range(num_vars))
    n_cols = n_struct + n_slack + n_rows  # + artificials

    tab: list[list[Fraction]] = []
    for r, (coeffs, const) in enumerate(rows_eq + rows_ineq):
        row = [ZERO] * (n_cols + 1)
        for c, (j, sign) in enumerate(col_of):
            a = coeffs[j]
            if a:
                row[c] = a if sign > 0 else -a
        if r >= len(rows_eq):
            row[n_struct + (r - len(rows_eq))] = -ONE
        row[-1] = const
        if const < 0:
            row = [-e for e in row]
        row[n_struct + n_slack + r] = ONE
        tab.append(row)
    basis = [n_struct + n_slack + r for r in range(n_rows)]

    # phase-I objective: minimize sum of artificials; reduced costs row
    cost = [ZERO] * (n_cols + 1)
    for row in tab:
        for c in range(n_struct + n_slack):
            if row[c]:
                cost[c] -= row[c]
        cost[-1] -= row[-1]

    n_real = n_struct + n_slack
    while True:
        entering = next((c for c in range(n_cols) if cost[c] < 0), None)
        if entering is None:
            break
        leave = None
        best = None
        for r in range(n_rows):
            a = tab[r][entering]
            if a > 0:
                ratio = tab[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave is None:  # cannot happen: phase-I objective is bounded below
            break
        _pivot(tab, cost, leave, entering)
        basis[leave] = entering

    if cost[-1] != 0:
        return None
    values = [ZERO] * n_real
    for r, b in enumerate(basis):
        if b < n_real:
            values[b] = tab[r][-1]
    x = [ZERO] * num_vars
    for c, (j, sign) in enumerate(col_of):
        if values[c]:
            x[j] += values[c] if sign > 0 else -values[c]
    point = tuple(x)
    if not _satisfies(point, eqs, ineqs):  # exactness guard
        raise InternalError("lp_feasible produced a non-feasible point")
    return point


def _pivot(tab, cost, r, c):
    prow = tab[r]
    inv = ONE / prow[c]
    if inv != 1:
        tab[r] = prow = [e * inv if e else e for e in prow]
    nz = [k for k, e in enumerate(prow) if e]
    for i, row in enumerate(tab):
        if i != r:
            f = row[c]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
    f = cost[c]
    if f:
        for k in nz:
            cost[k] -= f * prow[k]


def _satisfies(point, eqs, ineqs) -> bool:
    for coeffs, const in eqs:
        if dot(coeffs, point) != const:
            return False
    for coeffs, const in ineqs:
        if dot(coeffs, point) < const:
            return False
    return True
