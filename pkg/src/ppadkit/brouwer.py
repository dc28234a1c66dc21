"""Hypergrid colorings: Boolean coloring circuits, validity checks and brute-force search.

Colors are ints: ``1..d`` for the ordinary cases and ``RED`` (0) for the
all-minus case. Keeping red at 0 means its code does not move when a
transform adds a dimension.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetExhausted, InputError, InternalError

RED = 0
DEFAULT_BUDGET = 2 ** 24


def color_name(c: int) -> str:
    return "red" if c == RED else str(c)


# ---------------------------------------------------------------------------
# grids

@dataclass(frozen=True)
class Hypergrid:
    d: int
    r: tuple

    def __post_init__(self):
        r = tuple(int(v) for v in self.r)
        object.__setattr__(self, "r", r)
        if self.d < 1 or len(r) != self.d:
            raise InputError("need d >= 1 and len(r) == d")
        if any(v < 2 for v in r):
            raise InputError("every side must be >= 2")

    @property
    def size(self) -> int:
        return int(np.prod(self.r, dtype=object))

    def contains(self, p) -> bool:
        return len(p) == self.d and all(0 <= q < s for q, s in zip(p, self.r))

    def on_boundary(self, p) -> bool:
        return any(q == 0 or q == s - 1 for q, s in zip(p, self.r))


def forced_color(p, r) -> int | None:
    """The boundary rule's color for p, or None for interior points."""
    zeros = [i + 1 for i, q in enumerate(p) if q == 0]
    if zeros:
        return max(zeros)
    if any(q == s - 1 for q, s in zip(p, r)):
        return RED
    return None


def overlay_boundary(arr: np.ndarray) -> np.ndarray:
    """Impose the boundary rule on a dense color array in place."""
    d = arr.ndim
    for t in range(d):
        idx = [slice(None)] * d
        idx[t] = arr.shape[t] - 1
        arr[tuple(idx)] = RED
    # ascending t so the largest zero coordinate wins
    for t in range(d):
        idx = [slice(None)] * d
        idx[t] = 0
        arr[tuple(idx)] = t + 1
    return arr


def check_budget(r: Sequence[int], budget: int | None) -> None:
    budget = DEFAULT_BUDGET if budget is None else budget
    total = 1
    for s in r:
        total *= int(s)
    if total > budget:
        raise BudgetExhausted(f"grid has {total} points, over the budget of {budget}")


# ---------------------------------------------------------------------------
# Boolean circuits

OPS = {"AND": 2, "OR": 2, "NOT": 1, "CONST0": 0, "CONST1": 0}


def default_widths(r: Sequence[int]) -> tuple[int, ...]:
    """ceil(log2(r_i + 1)) bits per coordinate."""
    return tuple(int(s).bit_length() for s in r)


@dataclass(frozen=True)
class BoolCircuit:
    """Signals ``0..num_inputs-1`` are inputs; gate ``g`` drives signal ``num_inputs + g``.

    Coordinate i occupies ``widths[i]`` consecutive input bits, most significant first.
    """

    num_inputs: int
    gates: tuple
    outputs: tuple
    widths: tuple

    def __post_init__(self):
        gates = tuple((g[0], *map(int, g[1:])) for g in self.gates)
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "outputs", tuple(int(o) for o in self.outputs))
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if sum(self.widths) != self.num_inputs:
            raise InputError("widths must sum to num_inputs")
        if len(self.outputs) != 2 * len(self.widths):
            raise InputError("need 2d outputs")
        for g_idx, g in enumerate(gates):
            op, args = g[0], g[1:]
            if op not in OPS or len(args) != OPS[op]:
                raise InputError(f"gate {g_idx}: bad op or arity {g!r}")
            if any(not (0 <= a < self.num_inputs + g_idx) for a in args):
                raise InputError(f"gate {g_idx} references a later signal")
        n_sig = self.num_inputs + len(gates)
        if any(not (0 <= o < n_sig) for o in self.outputs):
            raise InputError("output references an unknown signal")

    @property
    def d(self) -> int:
        return len(self.widths)

    @property
    def size(self) -> int:
        """Gates plus inputs plus outputs."""
        return len(self.gates) + self.num_inputs + len(self.outputs)

    def encode(self, p) -> list[int]:
        bits = []
        for q, w in zip(p, self.widths):
            bits.extend((q >> (w - 1 - j)) & 1 for j in range(w))
        return bits

    def evaluate_bits(self, bits: Sequence[int]) -> tuple[int, ...]:
        sig = list(bits)
        for g in self.gates:
            op = g[0]
            if op == "AND":
                sig.append(sig[g[1]] & sig[g[2]])
            elif op == "OR":
                sig.append(sig[g[1]] | sig[g[2]])
            elif op == "NOT":
                sig.append(1 - sig[g[1]])
            else:
                sig.append(1 if op == "CONST1" else 0)
        return tuple(sig[o] for o in self.outputs)

    def evaluate(self, p) -> tuple[int, ...]:
        return self.evaluate_bits(self.encode(p))

    def evaluate_grid(self, r: Sequence[int]) -> np.ndarray:
        """Output bits at every grid point, shape r + (2d,)."""
        grids = np.indices(tuple(r), dtype=np.int64)
        sig = []
        for i, w in enumerate(self.widths):
            for j in range(w):
                sig.append(((grids[i] >> (w - 1 - j)) & 1).astype(bool))
        shape = tuple(r)
        for g in self.gates:
            op = g[0]
            if op == "AND":
                sig.append(sig[g[1]] & sig[g[2]])
            elif op == "OR":
                sig.append(sig[g[1]] | sig[g[2]])
            elif op == "NOT":
                sig.append(~sig[g[1]])
            else:
                sig.append(np.full(shape, op == "CONST1"))
        return np.stack([sig[o] for o in self.outputs], axis=-1)

    def to_json(self) -> dict:
        return {
            "num_inputs": self.num_inputs,
            "widths": list(self.widths),
            "gates": [{"op": g[0], "args": list(g[1:])} for g in self.gates],
            "outputs": list(self.outputs),
        }

    @classmethod
    def from_json(cls, data) -> "BoolCircuit":
        try:
            gates = tuple((g["op"], *g.get("args", [])) for g in data["gates"])
            return cls(int(data["num_inputs"]), gates, tuple(data["outputs"]), tuple(data["widths"]))
        except KeyError as exc:
            raise InputError(f"boolean circuit lacks field {exc}") from exc


def decode_bits(bits: Sequence[int], d: int) -> int | None:
    """Map 2d output bits to a color, or None when they match no case."""
    plus = [bits[2 * i] for i in range(d)]
    minus = [bits[2 * i + 1] for i in range(d)]
    if sum(plus) == 0 and all(minus):
        return RED
    if sum(plus) == 1 and not any(minus):
        return plus.index(1) + 1
    return None


def color_bits(c: int, d: int) -> tuple[int, ...]:
    out = []
    for i in range(1, d + 1):
        out += [1 if c == i else 0, 1 if c == RED else 0]
    return tuple(out)


def decode_bit_array(bits: np.ndarray, d: int) -> np.ndarray:
    """Vectorized decode; invalid points get -1."""
    plus = bits[..., 0::2]
    minus = bits[..., 1::2]
    n_plus = plus.sum(axis=-1)
    any_minus = minus.any(axis=-1)
    all_minus = minus.all(axis=-1)
    out = np.full(bits.shape[:-1], -1, dtype=np.int16)
    out[(n_plus == 0) & all_minus] = RED
    single = (n_plus == 1) & ~any_minus
    out[single] = (np.argmax(plus, axis=-1) + 1)[single]
    return out


# ---------------------------------------------------------------------------
# oracles and triples

class Oracle:
    """A coloring source. Subclasses supply ``color`` and ``color_array``."""

    d: int
    r: tuple

    def color(self, p) -> int:
        raise NotImplementedError

    def color_array(self) -> np.ndarray:
        """Dense colors over the whole grid; default falls back to pointwise calls."""
        arr = np.empty(self.r, dtype=np.int16)
        for p in itertools.product(*(range(s) for s in self.r)):
            arr[p] = self.color(p)
        return arr


class TableOracle(Oracle):
    def __init__(self, colors: np.ndarray):
        colors = np.asarray(colors, dtype=np.int16)
        self.table = colors
        self.d = colors.ndim
        self.r = tuple(colors.shape)
        if colors.min() < 0 or colors.max() > self.d:
            raise InputError("table colors must lie in 0 (red) .. d")

    def color(self, p) -> int:
        return int(self.table[tuple(p)])

    def color_array(self) -> np.ndarray:
        return self.table.copy()

    def to_json(self) -> dict:
        return {"kind": "table", "colors": self.table.reshape(-1).tolist()}


class CircuitOracle(Oracle):
    def __init__(self, circuit: BoolCircuit, r: Sequence[int]):
        r = tuple(int(s) for s in r)
        if circuit.d != len(r):
            raise InputError("circuit dimension does not match r")
        for s, w in zip(r, circuit.widths):
            if (s - 1) >> w:
                raise InputError(f"{w} bits cannot encode coordinates up to {s - 1}")
        self.circuit = circuit
        self.d = len(r)
        self.r = r

    def color(self, p) -> int:
        c = decode_bits(self.circuit.evaluate(p), self.d)
        if c is None:
            raise InputError(f"invalid circuit: output bits at {tuple(p)} match no case")
        return c

    def color_array(self) -> np.ndarray:
        arr = decode_bit_array(self.circuit.evaluate_grid(self.r), self.d)
        bad = np.argwhere(arr < 0)
        if len(bad):
            raise InputError(f"invalid circuit: output bits at {tuple(int(v) for v in bad[0])} match no case")
        return arr

    def to_json(self) -> dict:
        return {"kind": "circuit", "circuit": self.circuit.to_json()}


@dataclass
class ColoringTriple:
    oracle: Oracle
    d: int = field(init=False)
    r: tuple = field(init=False)
    _cache: np.ndarray | None = field(init=False, default=None, repr=False)

    def __post_init__(self):
        self.d = self.oracle.d
        self.r = tuple(self.oracle.r)

    @property
    def grid(self) -> Hypergrid:
        return Hypergrid(self.d, self.r)

    def color(self, p) -> int:
        if not self.grid.contains(p):
            raise InputError(f"point {tuple(p)} outside the grid {self.r}")
        return self.oracle.color(tuple(int(q) for q in p))

    def color_array(self, budget: int | None = None) -> np.ndarray:
        if self._cache is None:
            check_budget(self.r, budget)
            self._cache = self.oracle.color_array()
        return self._cache

    def to_json(self) -> dict:
        if not hasattr(self.oracle, "to_json"):
            raise InputError("this oracle has no standalone serialization; save its chain instead")
        return {"d": self.d, "r": list(self.r), "oracle": self.oracle.to_json()}

    @classmethod
    def from_json(cls, data) -> "ColoringTriple":
        try:
            d, r, spec = int(data["d"]), tuple(int(s) for s in data["r"]), data["oracle"]
            kind = spec["kind"]
        except KeyError as exc:
            raise InputError(f"triple record lacks field {exc}") from exc
        if len(r) != d:
            raise InputError("len(r) != d")
        if kind == "table":
            flat = np.asarray(spec["colors"], dtype=np.int16)
            if flat.size != int(np.prod(r)):
                raise InputError("table size does not match r")
            return cls(TableOracle(flat.reshape(r)))
        if kind == "circuit":
            return cls(CircuitOracle(BoolCircuit.from_json(spec["circuit"]), r))
        raise InputError(f"unknown oracle kind {kind!r}")


def evaluate_color(triple: ColoringTriple, p) -> int:
    return triple.color(p)


def table_triple(colors) -> ColoringTriple:
    return ColoringTriple(TableOracle(np.asarray(colors)))


# ---------------------------------------------------------------------------
# validation

@dataclass
class BoundaryReport:
    ok: bool
    violations: list = field(default_factory=list)
    continuity_violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [list(map(int, v[0])) + [color_name(v[1]), color_name(v[2])] for v in self.violations],
            "continuity_violations": [[list(map(int, a)), list(map(int, b))] for a, b in self.continuity_violations],
        }


def boundary_mask(r: Sequence[int]) -> np.ndarray:
    idx = np.indices(tuple(r))
    mask = np.zeros(tuple(r), dtype=bool)
    for t, s in enumerate(r):
        mask |= (idx[t] == 0) | (idx[t] == s - 1)
    return mask


def validate_boundary(triple: ColoringTriple, budget: int | None = None, max_report: int = 20) -> BoundaryReport:
    """Exhaustive check of the boundary rule and of boundary continuity."""
    arr = triple.color_array(budget)
    expected = overlay_boundary(arr.copy())
    bmask = boundary_mask(triple.r)
    bad = np.argwhere(bmask & (arr != expected))
    viol = [(tuple(p), int(expected[tuple(p)]), int(arr[tuple(p)])) for p in bad[:max_report]]
    cont = []
    for t in range(triple.d):
        s = triple.r[t]
        if s < 3:
            continue
        lo = [slice(None)] * triple.d
        hi = [slice(None)] * triple.d
        lo[t] = slice(1, s - 1)
        hi[t] = slice(2, s)
        a, b = arr[tuple(lo)], arr[tuple(hi)]
        both = bmask[tuple(lo)] & bmask[tuple(hi)]
        for q in np.argwhere(both & (a != b))[:max_report]:
            p = list(map(int, q))
            p[t] += 1
            p2 = list(p)
            p2[t] += 1
            cont.append((tuple(p), tuple(p2)))
    return BoundaryReport(not viol and not cont, viol, cont)


# ---------------------------------------------------------------------------
# panchromatic simplices

@dataclass(frozen=True)
class PanchromaticSimplex:
    points: tuple
    colors: tuple

    def to_json(self) -> dict:
        return {"points": [list(p) for p in self.points], "colors": [color_name(c) for c in self.colors]}

    @classmethod
    def from_json(cls, data) -> "PanchromaticSimplex":
        try:
            pts = tuple(tuple(int(q) for q in p) for p in data["points"])
            cols = tuple(RED if c in ("red", 0, "0") else int(c) for c in data.get("colors", []))
        except KeyError as exc:
            raise InputError(f"simplex record lacks field {exc}") from exc
        return cls(pts, cols)


def is_accommodated(points, r=None) -> bool:
    if not points:
        return False
    d = len(points[0])
    for i in range(d):
        vals = {p[i] for p in points}
        if max(vals) - min(vals) > 1:
            return False
    if r is not None:
        for p in points:
            if not all(0 <= q < s for q, s in zip(p, r)):
                return False
    return True


def check_panchromatic(triple: ColoringTriple, points) -> tuple[bool, str]:
    """Accommodated, exactly d+1 points, d+1 distinct colors; returns (ok, reason)."""
    pts = [tuple(int(q) for q in p) for p in points]
    if len(set(pts)) != len(pts):
        return False, "duplicate points"
    if len(pts) != triple.d + 1:
        return False, f"expected {triple.d + 1} points, got {len(pts)}"
    if any(len(p) != triple.d for p in pts):
        return False, "point of wrong dimension"
    if not is_accommodated(pts, triple.r):
        return False, "points are not accommodated in one unit cube of the grid"
    cols = {triple.color(p) for p in pts}
    want = {RED, *range(1, triple.d + 1)}
    missing = want - cols
    if missing:
        return False, "missing colors " + ",".join(color_name(c) for c in sorted(missing))
    return True, "ok"


def _panchromatic_cubes(arr: np.ndarray) -> np.ndarray:
    """Boolean array over cube corners: True where the cube shows every color."""
    d = arr.ndim
    full = None
    for c in [RED, *range(1, d + 1)]:
        m = arr == c
        for ax in range(d):
            a = [slice(None)] * d
            b = [slice(None)] * d
            a[ax] = slice(0, -1)
            b[ax] = slice(1, None)
            m = m[tuple(a)] | m[tuple(b)]
        full = m if full is None else (full & m)
    return full


def _cube_vertices(corner):
    return itertools.product(*((q, q + 1) for q in corner))


def find_panchromatic(triple: ColoringTriple, budget: int | None = None) -> PanchromaticSimplex:
    """Lexicographically first panchromatic cube; smallest vertex per color inside it."""
    arr = triple.color_array(budget)
    hits = np.argwhere(_panchromatic_cubes(arr))
    if len(hits) == 0:
        raise InternalError("no panchromatic cube: the coloring is not valid")
    corner = tuple(int(v) for v in hits[0])
    chosen = {}
    for v in _cube_vertices(corner):
        c = int(arr[v])
        chosen.setdefault(c, v)
    order = sorted(chosen)
    simplex = PanchromaticSimplex(tuple(chosen[c] for c in order), tuple(order))
    ok, why = check_panchromatic(triple, simplex.points)
    if not ok:
        raise InternalError(f"brute force produced a bad simplex: {why}")
    return simplex


def enumerate_panchromatic(triple: ColoringTriple, budget: int | None = None) -> list[PanchromaticSimplex]:
    """Every panchromatic simplex, each listed once, in sorted point order."""
    arr = triple.color_array(budget)
    d = triple.d
    seen = set()
    out = []
    for corner in np.argwhere(_panchromatic_cubes(arr)):
        groups: dict[int, list] = {}
        for v in _cube_vertices(tuple(int(q) for q in corner)):
            groups.setdefault(int(arr[v]), []).append(v)
        cols = [RED, *range(1, d + 1)]
        for combo in itertools.product(*(groups[c] for c in cols)):
            key = frozenset(combo)
            if key in seen:
                continue
            seen.add(key)
            pairs = sorted(zip(cols, combo))
            out.append(PanchromaticSimplex(tuple(p for _, p in pairs), tuple(c for c, _ in pairs)))
    return out


# ---------------------------------------------------------------------------
# generation and synthesis

def random_valid_coloring(d: int, r: Sequence[int], seed: int) -> ColoringTriple:
    """Uniform interior colors from numpy's Philox stream, forced boundary."""
    r = tuple(int(s) for s in r)
    if len(r) != d or any(s < 3 for s in r):
        raise InputError("need len(r) == d and every r_i >= 3")
    rng = np.random.Generator(np.random.Philox(int(seed) % 2 ** 64))
    arr = rng.integers(0, d + 1, size=r, dtype=np.int16)
    return ColoringTriple(TableOracle(overlay_boundary(arr)))


class _Builder:
    def __init__(self, num_inputs):
        self.num_inputs = num_inputs
        self.gates: list = []
        self.memo: dict = {}

    def add(self, op, *args):
        if op in ("AND", "OR"):
            args = tuple(sorted(args))
        key = (op, *args)
        if key not in self.memo:
            self.gates.append(key)
            self.memo[key] = self.num_inputs + len(self.gates) - 1
        return self.memo[key]

    def fold(self, op, sigs):
        sigs = list(sigs)
        acc = sigs[0]
        for s in sigs[1:]:
            acc = self.add(op, acc, s)
        return acc


def table_to_circuit(triple: ColoringTriple, widths: Sequence[int] | None = None,
                     budget: int = 2 ** 12) -> BoolCircuit:
    """Sum-of-products synthesis per output bit, minimized with sympy's SOPform.

    Input codes outside the grid are don't-cares. The result is checked
    against the source at every grid point.
    """
    from sympy import And, Not, Or, symbols
    from sympy.logic import SOPform
    from sympy.logic.boolalg import BooleanFalse, BooleanTrue

    r = triple.r
    d = triple.d
    widths = tuple(default_widths(r) if widths is None else widths)
    if len(widths) != d:
        raise InputError("one width per coordinate")
    for s, w in zip(r, widths):
        if (s - 1) >> w:
            raise InputError(f"{w} bits cannot encode coordinates up to {s - 1}")
    n_in = sum(widths)
    if 2 ** n_in > budget:
        raise BudgetExhausted(f"{n_in} input bits exceed the synthesis budget")
    arr = triple.color_array()
    xs = symbols(f"x0:{n_in}")
    bld = _Builder(n_in)
    proto = BoolCircuit(n_in, (), tuple([0] * 2 * d), widths)

    minterms = [[] for _ in range(2 * d)]
    valid = set()
    for p in itertools.product(*(range(s) for s in r)):
        bits = proto.encode(p)
        code = int("".join(map(str, bits)), 2)
        valid.add(code)
        for k, b in enumerate(color_bits(int(arr[p]), d)):
            if b:
                minterms[k].append(bits)
    dontcare = [
        [int(ch) for ch in format(code, f"0{n_in}b")]
        for code in range(2 ** n_in)
        if code not in valid
    ]

    def lower(expr):
        if isinstance(expr, BooleanTrue):
            return bld.add("CONST1")
        if isinstance(expr, BooleanFalse):
            return bld.add("CONST0")
        if expr.is_Symbol:
            return xs.index(expr)
        if isinstance(expr, Not):
            return bld.add("NOT", lower(expr.args[0]))
        if isinstance(expr, And):
            return bld.fold("AND", sorted(lower(a) for a in expr.args))
        if isinstance(expr, Or):
            return bld.fold("OR", sorted(lower(a) for a in expr.args))
        raise InternalError(f"unexpected expression {expr!r}")

    outputs = []
    for k in range(2 * d):
        if not minterms[k]:
            outputs.append(bld.add("CONST0"))
            continue
        expr = SOPform(list(xs), minterms[k], dontcare)
        outputs.append(lower(expr))
    circ = BoolCircuit(n_in, tuple(bld.gates), tuple(outputs), widths)
    got = decode_bit_array(circ.evaluate_grid(r), d)
    if not np.array_equal(got, arr):
        raise InternalError("synthesized circuit disagrees with the source table")
    return circ


def load_triple(path) -> ColoringTriple:
    with open(path) as fh:
        return ColoringTriple.from_json(json.load(fh))
