"""Coloring-triple transforms (pad, add dimension, snake fold), back-mapping, and the driver.

Coordinates in the public API are 1-based for the dimension arguments
``t`` (matching the transform definitions) and 0-based for array axes.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .brouwer import (
    RED,
    ColoringTriple,
    boundary_mask,
    Oracle,
    PanchromaticSimplex,
    check_panchromatic,
    forced_color,
    overlay_boundary,
)
from .errors import InputError, InternalError

MIN_SIDE = 7


@dataclass(frozen=True)
class TransformRecord:
    kind: str  # "L1" | "L2" | "L3"
    params: dict
    source_d: int
    source_r: tuple

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params),
                "source_d": self.source_d, "source_r": list(self.source_r)}

    @classmethod
    def from_json(cls, data) -> "TransformRecord":
        try:
            return cls(data["kind"], {k: int(v) for k, v in data["params"].items()},
                       int(data["source_d"]), tuple(int(s) for s in data["source_r"]))
        except KeyError as exc:
            raise InputError(f"transform record lacks field {exc}") from exc


# ---------------------------------------------------------------------------
# L1: pad dimension t to size u

class PadOracle(Oracle):
    def __init__(self, source: ColoringTriple, t: int, u: int):
        self.source, self.t, self.u = source, t, u
        self.d = source.d
        r = list(source.r)
        r[t - 1] = u
        self.r = tuple(r)

    def color(self, p) -> int:
        f = forced_color(p, self.r)
        if f is not None:
            return f
        # copy only points that exist in the source grid
        if p[self.t - 1] <= self.source.r[self.t - 1] - 1:
            return self.source.color(p)
        return RED

    def color_array(self) -> np.ndarray:
        out = np.full(self.r, RED, dtype=np.int16)
        idx = [slice(None)] * self.d
        idx[self.t - 1] = slice(0, self.source.r[self.t - 1])
        out[tuple(idx)] = self.source.color_array()
        return overlay_boundary(out)


def pad_dim(triple: ColoringTriple, t: int, u: int) -> tuple[ColoringTriple, TransformRecord]:
    if not (1 <= t <= triple.d):
        raise InputError(f"t={t} outside 1..{triple.d}")
    if u <= triple.r[t - 1]:
        raise InputError(f"pad needs u > r_t = {triple.r[t - 1]}, got {u}")
    rec = TransformRecord("L1", {"t": t, "u": u}, triple.d, triple.r)
    return ColoringTriple(PadOracle(triple, t, u)), rec


# ---------------------------------------------------------------------------
# L2: add a dimension of size u

class AddDimOracle(Oracle):
    def __init__(self, source: ColoringTriple, u: int):
        self.source, self.u = source, u
        self.d = source.d + 1
        self.r = tuple(source.r) + (u,)

    def color(self, p) -> int:
        f = forced_color(p, self.r)
        if f is not None:
            return f
        if p[-1] == 1:
            return self.source.color(p[:-1])
        return RED

    def color_array(self) -> np.ndarray:
        out = np.full(self.r, RED, dtype=np.int16)
        out[..., 1] = self.source.color_array()
        return overlay_boundary(out)


def add_dim(triple: ColoringTriple, u: int) -> tuple[ColoringTriple, TransformRecord]:
    if u < MIN_SIDE:
        raise InputError(f"add_dim needs u >= {MIN_SIDE}")
    rec = TransformRecord("L2", {"u": u}, triple.d, triple.r)
    return ColoringTriple(AddDimOracle(triple, u)), rec


# ---------------------------------------------------------------------------
# L3: snake embedding of dimension t into (t, d+1)

def in_snake(x: int, h: int, a: int, b: int) -> bool:
    """Membership of the (p_t, p_{d+1}) = (x, h) cell in the snake region W."""
    return snake_index(x, h, a, b) is not None


def snake_index(x: int, h: int, a: int, b: int) -> int | None:
    """The source coordinate psi_t for a W cell, None off the snake."""
    if h == 1:
        return 2 * a * b + x if 2 <= x <= a + 4 else None
    if h == 4 * b + 1:
        return x if 0 <= x <= a + 2 else None
    if not (1 < h < 4 * b + 1):
        return None
    rem = h % 4
    if rem == 3:
        i = (4 * b - 1 - h) // 4
        return (2 * i + 2) * a + 4 - x if 2 <= x <= a + 2 else None
    if rem == 1:
        i = (4 * b - 3 - h) // 4
        return (2 * i + 2) * a + x if 2 <= x <= a + 2 else None
    if rem == 2:
        i = (4 * b - 2 - h) // 4
        return (2 * i + 2) * a + 2 if x == 2 else None
    i = (4 * b - h) // 4
    return (2 * i + 1) * a + 2 if x == a + 2 else None


def snake_off_color(x: int, h: int, a: int, b: int, new_color: int) -> int:
    """Interior color of a cell outside W."""
    if h % 4 == 0 and 1 <= h // 4 <= b and 1 <= x <= a + 1:
        return new_color
    if 0 <= h // 4 <= b - 1 and h % 4 in (1, 2, 3) and x == 1:
        return new_color
    return RED


class SnakeOracle(Oracle):
    def __init__(self, source: ColoringTriple, t: int, a: int, b: int):
        self.source, self.t, self.a, self.b = source, t, a, b
        self.d = source.d + 1
        r = list(source.r)
        r[t - 1] = a + 5
        self.r = tuple(r) + (4 * b + 3,)

    def in_snake(self, p) -> bool:
        return in_snake(p[self.t - 1], p[-1], self.a, self.b)

    def psi(self, p) -> tuple:
        m = snake_index(p[self.t - 1], p[-1], self.a, self.b)
        if m is None:
            raise InputError(f"{tuple(p)} is not in the snake region")
        q = list(p[:-1])
        q[self.t - 1] = m
        return tuple(q)

    def color(self, p) -> int:
        if self.in_snake(p):
            return self.source.color(self.psi(p))
        f = forced_color(p, self.r)
        if f is not None:
            return f
        return snake_off_color(p[self.t - 1], p[-1], self.a, self.b, self.d)

    def tables(self):
        X, H = self.a + 5, 4 * self.b + 3
        W = np.zeros((X, H), dtype=bool)
        M = np.zeros((X, H), dtype=np.int64)
        OFF = np.zeros((X, H), dtype=np.int16)
        for x in range(X):
            for h in range(H):
                m = snake_index(x, h, self.a, self.b)
                if m is not None:
                    W[x, h] = True
                    M[x, h] = m
                OFF[x, h] = snake_off_color(x, h, self.a, self.b, self.d)
        return W, M, OFF

    def color_array(self) -> np.ndarray:
        W, M, OFF = self.tables()
        X, H = W.shape
        ax = self.t - 1
        src = self.source.color_array()
        gathered = np.take(src, M.reshape(-1), axis=ax)
        shape = list(src.shape)
        shape[ax: ax + 1] = [X, H]
        gathered = np.moveaxis(gathered.reshape(shape), ax + 1, -1)
        bshape = [1] * self.d
        bshape[ax], bshape[-1] = X, H
        Wb = W.reshape(bshape)
        out = np.where(Wb, gathered, OFF.reshape(bshape)).astype(np.int16)
        forced = overlay_boundary(out.copy())
        fix = boundary_mask(self.r) & ~np.broadcast_to(Wb, self.r)
        out[fix] = forced[fix]
        return out


def snake_embed(triple: ColoringTriple, t: int, a: int, b: int) -> tuple[ColoringTriple, TransformRecord]:
    if not (1 <= t <= triple.d):
        raise InputError(f"t={t} outside 1..{triple.d}")
    if a < 1 or b < 1:
        raise InputError("snake_embed needs a, b >= 1")
    if triple.r[t - 1] != a * (2 * b + 1) + 5:
        raise InputError(f"r_t = {triple.r[t - 1]} is not a(2b+1)+5 = {a * (2 * b + 1) + 5}")
    rec = TransformRecord("L3", {"t": t, "a": a, "b": b}, triple.d, triple.r)
    return ColoringTriple(SnakeOracle(triple, t, a, b)), rec


# ---------------------------------------------------------------------------
# replay and back-mapping

def apply_record(source: ColoringTriple, rec: TransformRecord) -> ColoringTriple:
    if (source.d, tuple(source.r)) != (rec.source_d, tuple(rec.source_r)):
        raise InputError(f"record expects a source with r={rec.source_r}, got r={source.r}")
    p = rec.params
    if rec.kind == "L1":
        return pad_dim(source, p["t"], p["u"])[0]
    if rec.kind == "L2":
        return add_dim(source, p["u"])[0]
    if rec.kind == "L3":
        return snake_embed(source, p["t"], p["a"], p["b"])[0]
    raise InputError(f"unknown transform kind {rec.kind!r}")


def replay_chain(source: ColoringTriple, chain: Sequence[TransformRecord]) -> list[ColoringTriple]:
    """All triples T^0 .. T^w."""
    out = [source]
    for i, rec in enumerate(chain):
        try:
            out.append(apply_record(out[-1], rec))
        except InputError as exc:
            raise InputError(f"step {i}: {exc}") from exc
    return out


def _as_simplex(triple: ColoringTriple, points) -> PanchromaticSimplex:
    pairs = sorted((triple.color(p), tuple(int(q) for q in p)) for p in points)
    return PanchromaticSimplex(tuple(p for _, p in pairs), tuple(c for c, _ in pairs))


def _corners(points, r) -> list[tuple]:
    """Every cube corner p* with all points inside K_{p*}, lexicographic."""
    d = len(points[0])
    options = []
    for i in range(d):
        lo = min(p[i] for p in points)
        hi = max(p[i] for p in points)
        cands = [lo] if hi > lo else [lo - 1, lo]
        options.append([c for c in cands if 0 <= c <= r[i] - 2])
    corners = [()]
    for opt in options:
        corners = [c + (v,) for c in corners for v in opt]
    return corners


def _snake_target(pstar, p, t, a, b):
    """(x, h) cell whose psi image carries p's color, per the corner's case; None if no case applies."""
    ax = t - 1
    xs, hs = pstar[ax], pstar[-1]
    x, h = p[ax], p[-1]
    if xs == 0:
        return (x, 4 * b + 1) if hs == 4 * b else None
    if xs in (a + 2, a + 3):
        return (x, 1) if hs == 0 else None
    if hs == 4 * b:
        return (x, 4 * b + 1)
    if hs == 0:
        if 2 <= xs <= a + 1:
            return (x, 1)
        if xs == 1:
            return (2, 1)
        return None
    if hs == 4 * b + 1:
        return None
    rem = hs % 4
    if rem in (1, 2):
        return (2, h) if xs == 1 else None
    if not (1 <= xs <= a + 1):
        return None
    row = hs + 1 if rem == 0 else hs  # 4i -> 4i+1, 4i-1 stays
    return (x if x >= 2 else 2, row)


def back_map(rec: TransformRecord, source: ColoringTriple, simplex: PanchromaticSimplex,
             target: ColoringTriple | None = None) -> PanchromaticSimplex:
    if target is None:
        target = apply_record(source, rec)
    pts = [tuple(int(q) for q in p) for p in simplex.points]
    ok, why = check_panchromatic(target, pts)
    if not ok:
        raise InputError(f"input simplex is not panchromatic for the transformed triple: {why}")
    if rec.kind == "L1":
        result = pts
    elif rec.kind == "L2":
        new = target.d
        result = [p[:-1] for p in pts if target.color(p) != new]
    elif rec.kind == "L3":
        result = _back_map_snake(rec, source, target, pts)
    else:
        raise InputError(f"unknown transform kind {rec.kind!r}")
    ok, why = check_panchromatic(source, result)
    if not ok:
        raise InternalError(f"{rec.kind} back-map produced a non-panchromatic set: {why}")
    return _as_simplex(source, result)


def _back_map_snake(rec, source, target, pts):
    t, a, b = rec.params["t"], rec.params["a"], rec.params["b"]
    new = target.d
    keep = [p for p in pts if target.color(p) != new]
    for pstar in _corners(pts, target.r):
        mapped = []
        for p in keep:
            cell = _snake_target(pstar, p, t, a, b)
            if cell is None:
                mapped = None
                break
            m = snake_index(cell[0], cell[1], a, b)
            if m is None:
                mapped = None
                break
            q = list(p[:-1])
            q[t - 1] = m
            q = tuple(q)
            if source.color(q) != target.color(p):
                mapped = None
                break
            mapped.append(q)
        if mapped is not None and check_panchromatic(source, mapped)[0]:
            return mapped
    raise InternalError(f"no back-mapping case applies to {pts}")


def fold_back(triples: Sequence[ColoringTriple], chain: Sequence[TransformRecord],
              simplex: PanchromaticSimplex) -> PanchromaticSimplex:
    """Map a simplex of the last triple to one of the first, right to left."""
    if len(triples) != len(chain) + 1:
        raise InputError("need one more triple than records")
    cur = simplex
    for i in range(len(chain) - 1, -1, -1):
        cur = back_map(chain[i], triples[i], cur, triples[i + 1])
    return cur


# ---------------------------------------------------------------------------
# driver

WELL_BEHAVED = {
    "const3": lambda n: 3,
    "half": lambda n: n // 2,
    "third": lambda n: n // 3,
    "log": lambda n: int(math.log2(n)) if n > 0 else 0,
}


def resolve_f(f) -> Callable[[int], int]:
    if callable(f):
        return f
    if isinstance(f, str):
        if f in WELL_BEHAVED:
            return WELL_BEHAVED[f]
        if f.startswith("const"):
            k = int(f[5:])
            return lambda n: k
    raise InputError(f"unknown well-behaved function {f!r}")


@dataclass
class DriverPlan:
    l: int
    m_prime: int
    m: int
    chain: list = field(default_factory=list)


def driver_params(f, n: int) -> tuple[int, int, int]:
    fn = resolve_f(f)
    l = fn(11 * n)
    if l < 3:
        raise InputError(f"f(11n) = {l} < 3")
    m_prime = -(-n // (l - 2))
    m = -(-11 * n // l)
    return l, m_prime, m


def reduce_2d_to_f(triple2d: ColoringTriple, f, n: int, pad_to_m: bool = True):
    """Fold a 2^n x 2^n coloring into m dimensions of side 2^l; returns (triple, chain).

    With ``pad_to_m=False`` the final dimension-adding steps are skipped.
    """
    if triple2d.d != 2 or tuple(triple2d.r) != (2 ** n, 2 ** n):
        raise InputError(f"source must be 2-dimensional with sides 2^{n}")
    l, mp, m = driver_params(f, n)
    if mp < 6:
        warnings.warn(
            f"m'={mp} < 6: loop-size inequalities are checked at run time rather than assumed",
            stacklevel=2,
        )
    cur = triple2d
    chain: list[TransformRecord] = []

    def step(fn, *args):
        nonlocal cur
        try:
            cur, rec = fn(cur, *args)
        except InputError as exc:
            raise InputError(f"step {len(chain)}: {exc}") from exc
        chain.append(rec)

    def pad_to(c, u):
        have = cur.r[c - 1]
        if u != have:
            step(pad_dim, c, u)

    side = 2 ** l
    q = 2 ** (l - 1) - 1
    b = 2 ** (l - 2) - 1
    for c in (1, 2):
        pad_to(c, 2 ** (mp * (l - 2)))
        for t in range(0, mp - 5):
            big = 2 ** ((mp - t - 1) * (l - 2))
            pad_to(c, (big - 5) * q + 5)
            step(snake_embed, c, big - 5, b)
            pad_to(cur.d, side)
        while cur.r[c - 1] > side:
            k = -(-(cur.r[c - 1] - 5) // q) + 5
            pad_to(c, (k - 5) * q + 5)
            step(snake_embed, c, k - 5, b)
            pad_to(cur.d, side)
        pad_to(c, side)
    if pad_to_m:
        if cur.d > m:
            raise InputError(f"dimension {cur.d} already exceeds m={m}")
        while cur.d < m:
            step(add_dim, side)
    return cur, chain


def chain_to_json(source: ColoringTriple, chain: Sequence[TransformRecord]) -> dict:
    return {"source": source.to_json(), "records": [r.to_json() for r in chain]}


def chain_from_json(data) -> tuple[ColoringTriple, list[TransformRecord]]:
    try:
        return (ColoringTriple.from_json(data["source"]),
                [TransformRecord.from_json(r) for r in data["records"]])
    except KeyError as exc:
        raise InputError(f"chain record lacks field {exc}") from exc


def load_chain(path):
    with open(path) as fh:
        return chain_from_json(json.load(fh))
