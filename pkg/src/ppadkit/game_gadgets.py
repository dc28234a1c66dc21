"""Generalized circuit -> bimatrix game via gadget matrices on a matching-pennies prototype.

Indexing inside this module is 0-based: node ``v`` owns rows/columns
``2v`` and ``2v + 1`` (the odd/even pair of the 1-based layout).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .bimatrix import BimatrixGame, MixedProfile, is_well_supported
from .errors import InputError
from .gencircuit import Assignment, Gate, GateType, GeneralizedCircuit, check_solution
from .numerics import ONE, ZERO


@dataclass(frozen=True)
class NodeEmbedding:
    """Identity layout: node id ``v`` has order index ``k = v + 1``."""

    K: int

    @property
    def N(self) -> int:
        return 2 * self.K

    def odd(self, v: int) -> int:
        """0-based position of the 1-based column 2k-1."""
        if not (0 <= v < self.K):
            raise InputError(f"node {v} outside 0..{self.K - 1}")
        return 2 * v

    def even(self, v: int) -> int:
        return self.odd(v) + 1

    def to_json(self) -> dict:
        return {"K": self.K, "layout": "identity"}


def _square(n):
    return [[ZERO] * n for _ in range(n)]


def prototype_game(K: int) -> BimatrixGame:
    if K < 1:
        raise InputError("K must be >= 1")
    M = Fraction(2 * K ** 3)
    N = 2 * K
    A = _square(N)
    for b in range(K):
        for i in (2 * b, 2 * b + 1):
            for j in (2 * b, 2 * b + 1):
                A[i][j] = M
    B = [[-e for e in row] for row in A]
    return BimatrixGame(A, B)


def gadget_matrices(gate: Gate, emb: NodeEmbedding, K: int) -> tuple[list, list]:
    if emb.K != K:
        raise InputError("embedding and K disagree")
    N = 2 * K
    L, R = _square(N), _square(N)
    o, e = emb.odd(gate.v), emb.even(gate.v)
    o1 = emb.odd(gate.v1) if gate.v1 is not None else None
    o2 = emb.odd(gate.v2) if gate.v2 is not None else None
    t = gate.type
    if t in (GateType.ZETA, GateType.LT, GateType.NOT):
        L[o][e] = L[e][o] = ONE
    else:
        L[o][o] = L[e][e] = ONE
    if t is GateType.ADD:
        R[o1][o] = ONE
        R[o2][o] = ONE
        R[o][e] = ONE
    elif t is GateType.ZETA:
        R[o][o] = ONE
        for i in range(N):
            R[i][e] = gate.alpha
    elif t is GateType.XZETA:
        R[o][e] = ONE
        R[o1][o] = gate.alpha
    elif t is GateType.EQ:
        R[o1][o] = ONE
        R[o][e] = ONE
    elif t is GateType.SUB:
        R[o1][o] = ONE
        R[o2][e] = ONE
        R[o][e] = ONE
    elif t is GateType.LT:
        R[o1][o] = ONE
        R[o2][e] = ONE
    elif t in (GateType.OR, GateType.AND):
        R[o1][o] = ONE
        R[o2][o] = ONE
        level = Fraction(1, 2 * K) if t is GateType.OR else Fraction(3, 2 * K)
        for i in range(N):
            R[i][e] = level
    elif t is GateType.NOT:
        R[o1][o] = ONE
        R[o1 + 1][e] = ONE
    return L, R


def check_property_6_1(gate: Gate, L, R, emb: NodeEmbedding) -> bool:
    """Gadget support lies in the gate's own rows (L) and columns (R), entries in [0, 1]."""
    own = {emb.odd(gate.v), emb.even(gate.v)}
    N = emb.N
    for i in range(N):
        for j in range(N):
            if i not in own and L[i][j] != 0:
                return False
            if j not in own and R[i][j] != 0:
                return False
            if not (0 <= L[i][j] <= 1 and 0 <= R[i][j] <= 1):
                return False
    return True


@dataclass(frozen=True)
class GadgetGame:
    game: BimatrixGame
    emb: NodeEmbedding
    eps_game: Fraction
    normalized: bool
    raw: BimatrixGame = field(repr=False, default=None)

    def meta_json(self) -> dict:
        return {
            "K": self.emb.K,
            "layout": "identity",
            "normalized": self.normalized,
            "eps_game": f"{self.eps_game.numerator}/{self.eps_game.denominator}",
        }


def circuit_to_game(circuit: GeneralizedCircuit, normalize: bool = True) -> GadgetGame:
    K = circuit.K
    emb = NodeEmbedding(K)
    proto = prototype_game(K)
    A = [list(r) for r in proto.A]
    B = [list(r) for r in proto.B]
    outputs = set()
    for g in circuit.gates:
        if g.v in outputs:
            raise InputError(f"node {g.v} is the output of two gates")
        outputs.add(g.v)
        L, R = gadget_matrices(g, emb, K)
        lo, hi = emb.odd(g.v), emb.even(g.v)
        # L lives in rows lo..hi, R in columns lo..hi
        for i in (lo, hi):
            rowL = L[i]
            for j, val in enumerate(rowL):
                if val:
                    A[i][j] += val
        for i in range(emb.N):
            for j in (lo, hi):
                if R[i][j]:
                    B[i][j] += R[i][j]
    N = emb.N
    N3 = Fraction(N ** 3)
    for row in A + B:
        for val in row:
            if abs(val) > N3:
                raise AssertionError("entry magnitude exceeds N^3")
    raw = BimatrixGame(A, B)
    eps = Fraction(1, K ** 3)
    if not normalize:
        return GadgetGame(raw, emb, eps, False, raw)
    scale = 2 * N3
    An = [[(a + N3) / scale for a in row] for row in A]
    Bn = [[(b + N3) / scale for b in row] for row in B]
    return GadgetGame(BimatrixGame(An, Bn, "positive"), emb, eps / scale, True, raw)


def in_class_L(game: BimatrixGame, K: int) -> bool:
    proto = prototype_game(K)
    for M, P in ((game.A, proto.A), (game.B, proto.B)):
        for r1, r2 in zip(M, P):
            for a, b in zip(r1, r2):
                if not (0 <= a - b <= 1):
                    return False
    return True


@dataclass(frozen=True)
class Decoded:
    xbar: Assignment
    xbarC: Assignment
    ybar: Assignment
    ybarC: Assignment

    def to_json(self) -> dict:
        return {
            "xbar": self.xbar.to_json()["values"],
            "xbarC": self.xbarC.to_json()["values"],
            "ybar": self.ybar.to_json()["values"],
            "ybarC": self.ybarC.to_json()["values"],
        }


def decode_profile(profile: MixedProfile, emb: NodeEmbedding) -> Decoded:
    if len(profile.x) != emb.N or len(profile.y) != emb.N:
        raise InputError(f"profile length must be {emb.N}")
    x, y = profile.x, profile.y
    xb, xc, yb, yc = {}, {}, {}, {}
    for v in range(emb.K):
        o = 2 * v
        xb[v], xc[v] = x[o], x[o] + x[o + 1]
        yb[v], yc[v] = y[o], y[o] + y[o + 1]
    return Decoded(Assignment(xb), Assignment(xc), Assignment(yb), Assignment(yc))


@dataclass
class ReductionReport:
    ok: bool
    well_supported: bool
    capacity_ok: bool
    capacity_violations: list
    solution_ok: bool
    gate_violations: list
    global_violations: list

    def to_json(self) -> dict:
        return dict(self.__dict__)


def verify_reduction(circuit: GeneralizedCircuit, profile: MixedProfile, well_supported_eps,
                     gadget: GadgetGame | None = None) -> ReductionReport:
    """Well-supportedness, then the capacity band and the decoded circuit check at 1/K^3."""
    if gadget is None:
        gadget = circuit_to_game(circuit, normalize=True)
    K = circuit.K
    ws = is_well_supported(gadget.game, profile, well_supported_eps)
    dec = decode_profile(profile, gadget.emb)
    eps = Fraction(1, K ** 3)
    lo, hi = Fraction(1, K) - eps, Fraction(1, K) + eps
    cap_bad = [v for v in range(K) if not (lo <= dec.xbarC[v] <= hi and lo <= dec.ybarC[v] <= hi)]
    sol = check_solution(circuit, dec.xbar, eps)
    ok = ws and not cap_bad and sol.ok
    return ReductionReport(ok, ws, not cap_bad, cap_bad, sol.ok, sol.gate_violations, sol.global_violations)
