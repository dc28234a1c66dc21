"""Bimatrix games, equilibrium notions and the approximation converters.

A game is a pair of m x n exact payoff matrices ``A`` (row player) and ``B``
(column player). Defects are measured against pure deviations, which is
exact because a linear function over the simplex peaks at a vertex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import InputError, InternalError
from .numerics import (
    ONE,
    ZERO,
    dot,
    is_probability_vector,
    mat_vec,
    matrix,
    rat,
    rat_str,
    vec_mat,
    vector,
)

TAGS = ("raw", "normalized", "positive")

# resolution of the dyadic perturbation grid
PERTURB_BITS = 30


def _entries(mat):
    for row in mat:
        yield from row


@dataclass(frozen=True)
class BimatrixGame:
    A: tuple
    B: tuple
    tag: str = "raw"

    def __post_init__(self):
        A = matrix(self.A)
        B = matrix(self.B)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        if not A or not A[0]:
            raise InputError("a game needs at least one row and one column")
        if len(A) != len(B) or len(A[0]) != len(B[0]):
            raise InputError("A and B must have identical dimensions")
        if self.tag not in TAGS:
            raise InputError(f"unknown normalization tag {self.tag!r}")
        lo = {"raw": None, "normalized": -1, "positive": 0}[self.tag]
        if lo is not None:
            for e in _entries(A + B):
                if e < lo or e > 1:
                    raise InputError(f"entry {e} violates tag {self.tag!r}")

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return len(self.A[0])

    @property
    def B_columns(self) -> tuple:
        return tuple(zip(*self.B))

    def retag(self, tag: str) -> "BimatrixGame":
        return BimatrixGame(self.A, self.B, tag)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "A": [[rat_str(e) for e in row] for row in self.A],
            "B": [[rat_str(e) for e in row] for row in self.B],
            "tag": self.tag,
        }

    @classmethod
    def from_json(cls, data: dict) -> "BimatrixGame":
        try:
            game = cls(data["A"], data["B"], data.get("tag", "raw"))
        except KeyError as exc:
            raise InputError(f"game record lacks field {exc}") from exc
        if "m" in data and (data["m"], data["n"]) != (game.m, game.n):
            raise InputError("declared m, n disagree with the matrices")
        return game


@dataclass(frozen=True)
class MixedProfile:
    x: tuple
    y: tuple

    def __post_init__(self):
        x = vector(self.x)
        y = vector(self.y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if not is_probability_vector(x) or not is_probability_vector(y):
            raise InputError("profile entries must be >= 0 and each vector must sum to 1")

    def to_json(self) -> dict:
        return {"x": [rat_str(e) for e in self.x], "y": [rat_str(e) for e in self.y]}

    @classmethod
    def from_json(cls, data: dict) -> "MixedProfile":
        try:
            return cls(data["x"], data["y"])
        except KeyError as exc:
            raise InputError(f"profile record lacks field {exc}") from exc


def _check_dims(game: BimatrixGame, profile: MixedProfile) -> None:
    if len(profile.x) != game.m or len(profile.y) != game.n:
        raise InputError(
            f"profile is {len(profile.x)}x{len(profile.y)}, game is {game.m}x{game.n}"
        )


@dataclass(frozen=True)
class Defects:
    row_additive: Fraction
    col_additive: Fraction
    row_relative: Fraction
    col_relative: Fraction
    # set when the best deviation payoff is <= 0 and the relative defect is reported as 0
    row_relative_flagged: bool = False
    col_relative_flagged: bool = False

    @property
    def is_exact(self) -> bool:
        return self.row_additive == 0 and self.col_additive == 0

    def is_approximate(self, eps) -> bool:
        eps = rat(eps)
        return self.row_additive <= eps and self.col_additive <= eps

    def to_json(self) -> dict:
        return {
            "row_additive": rat_str(self.row_additive),
            "col_additive": rat_str(self.col_additive),
            "row_relative": rat_str(self.row_relative),
            "col_relative": rat_str(self.col_relative),
            "row_relative_flagged": self.row_relative_flagged,
            "col_relative_flagged": self.col_relative_flagged,
        }


def row_payoffs(game: BimatrixGame, y) -> tuple:
    """a_i . y for every row i."""
    return mat_vec(game.A, y)


def col_payoffs(game: BimatrixGame, x) -> tuple:
    """x . b_j for every column j."""
    return vec_mat(x, game.B)


def _relative(best: Fraction, value: Fraction) -> tuple[Fraction, bool]:
    if best > 0:
        return ONE - value / best, False
    return ZERO, True


def equilibrium_defects(game: BimatrixGame, profile: MixedProfile) -> Defects:
    _check_dims(game, profile)
    ra = row_payoffs(game, profile.y)
    cb = col_payoffs(game, profile.x)
    u_row = dot(profile.x, ra)
    u_col = dot(cb, profile.y)
    best_row = max(ra)
    best_col = max(cb)
    rr, rflag = _relative(best_row, u_row)
    cr, cflag = _relative(best_col, u_col)
    return Defects(best_row - u_row, best_col - u_col, rr, cr, rflag, cflag)


def is_well_supported(game: BimatrixGame, profile: MixedProfile, eps) -> bool:
    """Every strategy played with positive probability is within eps of a best reply."""
    _check_dims(game, profile)
    eps = rat(eps)
    if eps < 0:
        raise InputError("eps must be >= 0")
    ra = row_payoffs(game, profile.y)
    cb = col_payoffs(game, profile.x)
    best_row = max(ra)
    best_col = max(cb)
    if any(p > 0 and best_row > v + eps for p, v in zip(profile.x, ra)):
        return False
    if any(p > 0 and best_col > v + eps for p, v in zip(profile.y, cb)):
        return False
    return True


def _is_positive(game: BimatrixGame) -> bool:
    return all(0 <= e <= 1 for e in _entries(game.A + game.B))


def well_supported_from_approx(game: BimatrixGame, profile: MixedProfile, eps) -> MixedProfile:
    """Turn an (eps^2/8)-approximate equilibrium into an eps-well-supported one.

    Rows beaten by eps/2 against the original column mix are zeroed (and
    symmetrically for columns); the surviving mass is rescaled
    proportionally. Rescaling moves every pure payoff by less than eps/4,
    which keeps all surviving strategies inside the eps band.
    """
    _check_dims(game, profile)
    eps = rat(eps)
    if not (0 <= eps <= 1):
        raise InputError("eps must lie in [0, 1]")
    if not _is_positive(game):
        raise InputError("the conversion needs a positively normalized game")
    d = equilibrium_defects(game, profile)
    if not d.is_approximate(eps * eps / 8):
        raise InputError(
            f"precondition failed: profile is not (eps^2/8)-approximate "
            f"(defects {d.row_additive}, {d.col_additive}, bound {eps * eps / 8})"
        )
    ra = row_payoffs(game, profile.y)
    cb = col_payoffs(game, profile.x)
    half = eps / 2
    best_row = max(ra)
    best_col = max(cb)
    x = [ZERO if best_row >= v + half else p for p, v in zip(profile.x, ra)]
    y = [ZERO if best_col >= v + half else p for p, v in zip(profile.y, cb)]
    sx = sum(x, ZERO)
    sy = sum(y, ZERO)
    if sx == 0 or sy == 0:
        raise InternalError("empty surviving support despite the precondition")
    out = MixedProfile([p / sx for p in x], [p / sy for p in y])
    if not is_well_supported(game, out, eps):
        raise InternalError("converted profile is not eps-well-supported")
    return out


@dataclass(frozen=True)
class Normalization:
    game: BimatrixGame
    scale_A: Fraction
    shift_A: Fraction
    scale_B: Fraction
    shift_B: Fraction

    def invert(self) -> BimatrixGame:
        """Recover the original entries: a = a'/scale + shift."""
        A = [[e / self.scale_A + self.shift_A for e in row] for row in self.game.A]
        B = [[e / self.scale_B + self.shift_B for e in row] for row in self.game.B]
        return BimatrixGame(A, B, "raw")


def _affine(mat):
    vals = list(_entries(mat))
    lo, hi = min(vals), max(vals)
    if lo == hi:  # constant matrix maps to zeros
        return [[ZERO] * len(mat[0]) for _ in mat], ONE, lo
    span = hi - lo
    return [[(e - lo) / span for e in row] for row in mat], ONE / span, lo


def positively_normalize(game: BimatrixGame) -> Normalization:
    """Map each payoff matrix affinely onto [0, 1], a' = (a - min) * scale."""
    A, sa, ha = _affine(game.A)
    B, sb, hb = _affine(game.B)
    return Normalization(BimatrixGame(A, B, "positive"), sa, ha, sb, hb)


def _truncate(v, P: int):
    scale = 2 ** P
    t = [Fraction((e.numerator * scale) // e.denominator, scale) for e in v]
    total = sum(t, ZERO)
    if total == 0:
        need = max(1, min_viable_bits(v))
        raise InputError(f"P={P} truncates the whole vector to 0; use P >= {need}")
    return [e / total for e in t]


def min_viable_bits(v) -> int:
    """Smallest P whose truncation keeps some entry of v positive."""
    top = max(v)
    P = 0
    while (top.numerator * 2 ** P) // top.denominator == 0:
        P += 1
    return P


def truncate_profile(profile: MixedProfile, P: int) -> MixedProfile:
    if not isinstance(P, int) or P < 1:
        raise InputError("P must be a positive integer")
    return MixedProfile(_truncate(profile.x, P), _truncate(profile.y, P))


def _iroot_ceil(value: int, k: int) -> int:
    """Smallest integer r >= 0 with r**k >= value."""
    if value <= 1:
        return value
    lo, hi = 1, 1
    while hi ** k < value:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if mid ** k >= value:
            hi = mid
        else:
            lo = mid + 1
    return lo


def padded_size(n: int, c, c_prime) -> int:
    """ceil(n ** (2c/c')), computed exactly for rational exponents."""
    e = 2 * rat(c) / rat(c_prime)
    return _iroot_ceil(n ** e.numerator, e.denominator)


@dataclass(frozen=True)
class PaddedGame:
    game: BimatrixGame
    shifted: BimatrixGame
    n: int

    def recover(self, profile: MixedProfile) -> MixedProfile:
        """Restrict to the first n coordinates and renormalize."""
        if len(profile.x) != self.game.m or len(profile.y) != self.game.n:
            raise InputError("profile does not match the padded game")
        x = profile.x[: self.n]
        y = profile.y[: self.n]
        sx, sy = sum(x, ZERO), sum(y, ZERO)
        if sx == 0 or sy == 0:
            raise InputError("profile has no mass on the original block")
        return MixedProfile([e / sx for e in x], [e / sy for e in y])

    def recover_description(self) -> dict:
        return {"kind": "restrict-renormalize", "n": self.n, "n_padded": self.game.m}


def pad_game(game: BimatrixGame, c, c_prime) -> PaddedGame:
    """Embed an n x n positive game into a larger block game.

    Approximate equilibria of the larger game at precision 1/n''^c' pull back
    to (1/n^c)-approximate equilibria of the input.
    """
    c, c_prime = rat(c), rat(c_prime)
    if not (0 < c_prime < c):
        raise InputError("need 0 < c' < c")
    if c < 2:
        raise InputError("need c >= 2")
    if game.m != game.n:
        raise InputError("padding is defined for square games")
    if not _is_positive(game):
        raise InputError("padding needs a positively normalized game")
    n = game.n
    col_max = [max(game.A[i][j] for i in range(n)) for j in range(n)]
    row_max = [max(game.B[i]) for i in range(n)]
    A1 = [[game.A[i][j] + (ONE - col_max[j]) for j in range(n)] for i in range(n)]
    B1 = [[game.B[i][j] + (ONE - row_max[i]) for j in range(n)] for i in range(n)]
    shifted = BimatrixGame(A1, B1, "positive")
    N = padded_size(n, c, c_prime)
    A2 = [[ZERO] * N for _ in range(N)]
    B2 = [[ZERO] * N for _ in range(N)]
    for i in range(N):
        for j in range(N):
            if i < n and j < n:
                A2[i][j] = A1[i][j]
                B2[i][j] = B1[i][j]
            elif i < n <= j:
                A2[i][j] = ONE
            elif j < n <= i:
                B2[i][j] = ONE
    return PaddedGame(BimatrixGame(A2, B2, "positive"), shifted, n)


def perturb_uniform(game: BimatrixGame, sigma, seed: int) -> BimatrixGame:
    """Add independent uniform noise from the dyadic grid k/2^30 within [-sigma, sigma].

    The stream is numpy's counter-based Philox generator keyed by ``seed``;
    A is filled row-major first, then B.
    """
    sigma = rat(sigma)
    if sigma < 0:
        raise InputError("sigma must be >= 0")
    if sigma == 0:
        return game
    bound = (sigma.numerator << PERTURB_BITS) // sigma.denominator
    rng = np.random.Generator(np.random.Philox(int(seed) % 2 ** 64))
    m, n = game.m, game.n
    ks = rng.integers(-bound, bound, size=2 * m * n, endpoint=True, dtype=np.int64)
    unit = Fraction(1, 2 ** PERTURB_BITS)
    deltas = [int(k) * unit for k in ks]
    A = [[game.A[i][j] + deltas[i * n + j] for j in range(n)] for i in range(m)]
    B = [[game.B[i][j] + deltas[m * n + i * n + j] for j in range(n)] for i in range(m)]
    return BimatrixGame(A, B, "raw")


Solver = Callable[[BimatrixGame], MixedProfile]


def approx_by_perturbation(game: BimatrixGame, eps, seed: int, solver: Solver) -> MixedProfile:
    """Solve a copy perturbed by at most eps/2 per entry; the exact equilibrium
    of the copy is an eps-approximate equilibrium of the original."""
    eps = rat(eps)
    if eps <= 0:
        raise InputError("eps must be positive")
    perturbed = perturb_uniform(game, eps / 2, seed)
    profile = solver(perturbed)
    if not equilibrium_defects(perturbed, profile).is_exact:
        raise InternalError("solver returned a non-equilibrium of the perturbed game")
    if not equilibrium_defects(game, profile).is_approximate(eps):
        raise InternalError("perturbation bound violated")
    return profile


def load_game(path) -> BimatrixGame:
    with open(path) as fh:
        return BimatrixGame.from_json(json.load(fh))


def load_profile(path) -> MixedProfile:
    with open(path) as fh:
        return MixedProfile.from_json(json.load(fh))
