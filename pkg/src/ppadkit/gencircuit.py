"""Generalized circuits: gates, constraint checking, padding, and a heuristic solver.

Node values live in an :class:`Assignment`; nodes that never appear in it are
0. A circuit may declare far more nodes than it touches, so nothing here
materializes all ``K`` values.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import InputError
from .numerics import ONE, ZERO, rat, rat_str


class GateType(str, Enum):
    ZETA = "G_zeta"
    XZETA = "G_xzeta"
    EQ = "G="
    ADD = "G+"
    SUB = "G-"
    LT = "G<"
    AND = "G_and"
    OR = "G_or"
    NOT = "G_not"


_ALIASES = {
    "Gζ": GateType.ZETA, "G_ζ": GateType.ZETA,
    "G×ζ": GateType.XZETA, "G_×ζ": GateType.XZETA, "G_x_zeta": GateType.XZETA,
    "G_=": GateType.EQ, "G_+": GateType.ADD, "G_-": GateType.SUB, "G−": GateType.SUB,
    "G_<": GateType.LT,
    "G∧": GateType.AND, "G∨": GateType.OR, "G¬": GateType.NOT,
}

UNARY = frozenset({GateType.XZETA, GateType.EQ, GateType.NOT})
BINARY = frozenset({GateType.ADD, GateType.SUB, GateType.LT, GateType.AND, GateType.OR})
LOGIC = frozenset({GateType.AND, GateType.OR, GateType.NOT})


def gate_type(tag) -> GateType:
    if isinstance(tag, GateType):
        return tag
    try:
        return GateType(tag)
    except ValueError:
        pass
    if tag in _ALIASES:
        return _ALIASES[tag]
    raise InputError(f"unknown gate type {tag!r}")


@dataclass(frozen=True)
class Gate:
    type: GateType
    v: int
    v1: int | None = None
    v2: int | None = None
    alpha: Fraction | None = None

    def __post_init__(self):
        t = gate_type(self.type)
        object.__setattr__(self, "type", t)
        if self.alpha is not None:
            object.__setattr__(self, "alpha", rat(self.alpha))
        for name in ("v", "v1", "v2"):
            val = getattr(self, name)
            if val is not None and (not isinstance(val, int) or isinstance(val, bool) or val < 0):
                raise InputError(f"{t.value}: node id {name}={val!r} must be a non-negative int")
        if t is GateType.ZETA:
            if self.v1 is not None or self.v2 is not None:
                raise InputError("G_zeta takes no inputs")
        elif t in UNARY:
            if self.v1 is None or self.v2 is not None:
                raise InputError(f"{t.value} takes exactly one input v1")
        else:
            if self.v1 is None or self.v2 is None:
                raise InputError(f"{t.value} takes two inputs")
            if self.v1 == self.v2:
                raise InputError(f"{t.value} needs v1 != v2")
        if t in (GateType.ZETA, GateType.XZETA):
            if self.alpha is None:
                raise InputError(f"{t.value} needs alpha")
            if t is GateType.XZETA and not (0 <= self.alpha <= 1):
                raise InputError("G_xzeta needs 0 <= alpha <= 1")
        elif self.alpha is not None:
            raise InputError(f"{t.value} takes no alpha")

    @property
    def inputs(self) -> tuple[int, ...]:
        return tuple(u for u in (self.v1, self.v2) if u is not None)

    def to_json(self) -> dict:
        return {
            "type": self.type.value,
            "v1": self.v1,
            "v2": self.v2,
            "v": self.v,
            "alpha": None if self.alpha is None else rat_str(self.alpha),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Gate":
        try:
            alpha = data.get("alpha")
            return cls(data["type"], data["v"], data.get("v1"), data.get("v2"),
                       None if alpha is None else rat(alpha))
        except KeyError as exc:
            raise InputError(f"gate record lacks field {exc}") from exc


@dataclass(frozen=True)
class GeneralizedCircuit:
    K: int
    gates: tuple

    def __post_init__(self):
        if not isinstance(self.K, int) or self.K < 1:
            raise InputError("K must be a positive integer")
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        seen = set()
        cap = Fraction(1, self.K)
        for g in gates:
            if not isinstance(g, Gate):
                raise InputError("gates must be Gate instances")
            for u in (g.v, *g.inputs):
                if u >= self.K:
                    raise InputError(f"node {u} out of range for K={self.K}")
            if g.v in seen:
                raise InputError(f"node {g.v} is the output of two gates")
            seen.add(g.v)
            if g.type is GateType.ZETA and not (0 <= g.alpha <= cap):
                raise InputError(f"G_zeta alpha {g.alpha} outside [0, 1/K]")

    @property
    def producer(self) -> dict:
        return {g.v: g for g in self.gates}

    def nodes(self) -> set:
        out = set()
        for g in self.gates:
            out.add(g.v)
            out.update(g.inputs)
        return out

    def to_json(self) -> dict:
        return {"K": self.K, "gates": [g.to_json() for g in self.gates]}

    @classmethod
    def from_json(cls, data: Mapping) -> "GeneralizedCircuit":
        try:
            return cls(int(data["K"]), tuple(Gate.from_json(g) for g in data["gates"]))
        except KeyError as exc:
            raise InputError(f"circuit record lacks field {exc}") from exc


class Assignment(Mapping):
    """Total map node -> Fraction; absent ids read as 0."""

    def __init__(self, values: Mapping | None = None):
        self._values = {}
        for k, v in (values or {}).items():
            k = int(k)
            if k < 0:
                raise InputError(f"negative node id {k}")
            self._values[k] = rat(v)

    def __getitem__(self, key) -> Fraction:
        return self._values.get(key, ZERO)

    def __iter__(self):
        return iter(self._values)

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        return f"Assignment({self._values!r})"

    def to_json(self) -> dict:
        return {"values": {str(k): rat_str(v) for k, v in sorted(self._values.items())}}

    @classmethod
    def from_json(cls, data: Mapping) -> "Assignment":
        if "values" not in data:
            raise InputError("assignment record lacks 'values'")
        return cls(data["values"])


BOOL_ZERO, BOOL_ONE, INDETERMINATE = "zero", "one", "indeterminate"


def boolean_value(x_v, K: int, eps) -> str:
    x_v, eps = rat(x_v), rat(eps)
    top = Fraction(1, K)
    if top - eps <= x_v <= top + eps:
        return BOOL_ONE
    if 0 <= x_v <= eps:
        return BOOL_ZERO
    return INDETERMINATE


def _near(value, target, eps) -> bool:
    return target - eps <= value <= target + eps


def check_gate(gate: Gate, x: Mapping, eps, K: int) -> bool:
    eps = rat(eps)
    top = Fraction(1, K)
    t = gate.type
    out = x[gate.v]
    a = x[gate.v1] if gate.v1 is not None else None
    b = x[gate.v2] if gate.v2 is not None else None
    if t is GateType.ZETA:
        return _near(out, gate.alpha, eps)
    if t is GateType.XZETA:
        return _near(out, min(gate.alpha * a, top), eps)
    if t is GateType.EQ:
        return _near(out, min(a, top), eps)
    if t is GateType.ADD:
        return _near(out, min(a + b, top), eps)
    if t is GateType.SUB:
        d = a - b
        return min(d, top) - eps <= out <= max(d, ZERO) + eps
    bv = lambda val: boolean_value(val, K, eps)  # noqa: E731
    if t is GateType.LT:
        if a < b - eps:
            return bv(out) == BOOL_ONE
        if a > b + eps:
            return bv(out) == BOOL_ZERO
        return True
    if t is GateType.NOT:
        if bv(a) == BOOL_ONE:
            return bv(out) == BOOL_ZERO
        if bv(a) == BOOL_ZERO:
            return bv(out) == BOOL_ONE
        return True
    ba, bb = bv(a), bv(b)
    if t is GateType.OR:
        if ba == BOOL_ONE or bb == BOOL_ONE:
            return bv(out) == BOOL_ONE
        if ba == BOOL_ZERO and bb == BOOL_ZERO:
            return bv(out) == BOOL_ZERO
        return True
    # AND
    if ba == BOOL_ZERO or bb == BOOL_ZERO:
        return bv(out) == BOOL_ZERO
    if ba == BOOL_ONE and bb == BOOL_ONE:
        return bv(out) == BOOL_ONE
    return True


@dataclass
class SolutionReport:
    ok: bool
    global_violations: list = field(default_factory=list)
    gate_violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "global_violations": self.global_violations,
            "gate_violations": self.gate_violations,
        }


def check_solution(circuit: GeneralizedCircuit, x: Mapping, eps) -> SolutionReport:
    """P[eps] on every node that carries a value, plus every gate constraint."""
    eps = rat(eps)
    hi = Fraction(1, circuit.K) + eps
    glob = sorted(v for v in x if not (0 <= x[v] <= hi))
    bad = [i for i, g in enumerate(circuit.gates) if not check_gate(g, x, eps, circuit.K)]
    return SolutionReport(not glob and not bad, glob, bad)


# ---------------------------------------------------------------------------
# padding

@dataclass(frozen=True)
class PaddedCircuit:
    circuit: GeneralizedCircuit
    original_K: int
    b: int

    def pull_back(self, x_prime: Mapping) -> Assignment:
        """x[v] = K^(b-1) * x'[v]."""
        f = Fraction(self.original_K) ** (self.b - 1)
        return Assignment({v: f * x_prime[v] for v in x_prime if v < self.original_K})

    def push_forward(self, x: Mapping) -> Assignment:
        f = Fraction(self.original_K) ** (1 - self.b)
        return Assignment({v: f * x[v] for v in x})


def pad_circuit(circuit: GeneralizedCircuit, c) -> PaddedCircuit:
    """Grow the node set to K^b, b = ceil((c-1)/2), rescaling G_zeta constants.

    G_xzeta gates keep their alpha: the map is linear in its input, so the
    uniform rescaling x' = K^(1-b) x already commutes with it.
    """
    c = rat(c)
    K = circuit.K
    if K < 2:
        raise InputError("padding needs K >= 2")
    if c <= 1:
        raise InputError("c must exceed 1")
    num = c - 1
    b = max(1, -((-num.numerator) // (2 * num.denominator)))
    if b == 1:
        return PaddedCircuit(circuit, K, 1)
    shrink = Fraction(K) ** (1 - b)
    gates = []
    for g in circuit.gates:
        if g.type is GateType.ZETA:
            g = Gate(g.type, g.v, alpha=g.alpha * shrink)
        gates.append(g)
    return PaddedCircuit(GeneralizedCircuit(K ** b, tuple(gates)), K, b)


# ---------------------------------------------------------------------------
# heuristic iteration solver

DAMPING = Fraction(1, 2)
# rounding grid for feedback values, relative to eps
GRID_BITS = 16


def _feedback_nodes(circuit: GeneralizedCircuit) -> tuple[list[int], list[int]]:
    """Return (feedback nodes, topological order of the other gate outputs).

    Heads of DFS back edges are cut; the remaining graph is acyclic.
    """
    prod = circuit.producer
    succ: dict[int, list[int]] = {}
    for g in circuit.gates:
        for u in g.inputs:
            succ.setdefault(u, []).append(g.v)
    state: dict[int, int] = {}  # 1 on stack, 2 done
    heads = set()
    roots = sorted(circuit.nodes())
    for root in roots:
        if root in state:
            continue
        stack = [(root, iter(succ.get(root, ())))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                continue
            s = state.get(nxt)
            if s == 1:
                heads.add(nxt)
            elif s is None:
                state[nxt] = 1
                stack.append((nxt, iter(succ.get(nxt, ()))))
    # Kahn order over gate outputs, ignoring edges into heads
    indeg = {v: 0 for v in prod if v not in heads}
    for v in indeg:
        for u in prod[v].inputs:
            if u in indeg:
                indeg[v] += 1
    ready = sorted(v for v, d in indeg.items() if d == 0)
    order = []
    while ready:
        v = ready.pop()
        order.append(v)
        for w in succ.get(v, ()):
            if w in indeg:
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
    if len(order) != len(indeg):
        raise AssertionError("cycle survived feedback-node removal")
    return sorted(heads), order


def _clamp(v, top):
    if v < 0:
        return ZERO
    if v > top:
        return top
    return v


def _relax(gate: Gate, x, eps, top):
    """A value inside the gate's feasible band, continuous in the inputs."""
    t = gate.type
    if t is GateType.ZETA:
        return gate.alpha
    a = x.get(gate.v1, ZERO) if gate.v1 is not None else None
    b = x.get(gate.v2, ZERO) if gate.v2 is not None else None
    if t is GateType.XZETA:
        return min(gate.alpha * a, top)
    if t is GateType.EQ:
        return min(a, top)
    if t is GateType.ADD:
        return min(a + b, top)
    if t is GateType.SUB:
        return _clamp(a - b, top)
    if t is GateType.LT:
        # linear inside the dead zone |a - b| <= eps
        if a < b - eps:
            return top
        if a > b + eps:
            return ZERO
        if eps == 0:
            return top / 2
        return top * (b + eps - a) / (2 * eps)
    if t is GateType.NOT:
        return _clamp(top - a, top)
    if t is GateType.AND:
        return _clamp(min(a, b), top)
    return _clamp(max(a, b), top)  # OR


def _snap(v: Fraction, grid: Fraction | None) -> Fraction:
    if grid is None:
        return v
    return Fraction(int(v / grid)) * grid


def iterate_solve(circuit: GeneralizedCircuit, eps, max_iters: int, seed: int,
                  restarts: int = 1) -> Assignment | None:
    """Damped forward iteration; returns only assignments that pass check_solution.

    Feedback nodes (heads of DFS back edges) are the iteration state. Each
    sweep evaluates the acyclic rest in topological order, picking a value
    inside every gate's feasible band, so only the feedback gates can be
    violated. Feedback nodes move by a damped step toward their gate's value;
    the per-node step halves when the residual changes sign and doubles back
    toward 1/2 while it keeps its sign. Restarts draw fresh starting points
    from ``random.Random(seed)``; the first attempt starts at 0.
    """
    eps = rat(eps)
    if max_iters < 1:
        raise InputError("max_iters must be positive")
    top = Fraction(1, circuit.K)
    prod = circuit.producer
    heads, order = _feedback_nodes(circuit)
    grid = None
    if eps > 0:
        p = 0
        while Fraction(1, 2 ** p) > eps:
            p += 1
        grid = Fraction(1, 2 ** (p + GRID_BITS))
    rng = random.Random(seed)
    budget = max_iters
    for attempt in range(max(1, restarts)):
        if budget <= 0:
            break
        x: dict[int, Fraction] = {}
        for h in heads:
            x[h] = ZERO if attempt == 0 else _snap(top * Fraction(rng.randrange(2 ** 20), 2 ** 20), grid)
        lam = {h: DAMPING for h in heads}
        last_sign = {h: 0 for h in heads}
        streak = {h: 0 for h in heads}
        per_attempt = budget // (max(1, restarts) - attempt)
        for _ in range(per_attempt):
            budget -= 1
            for v in order:
                x[v] = _relax(prod[v], x, eps, top)
            targets = {h: _relax(prod[h], x, eps, top) for h in heads}
            if all(check_gate(prod[h], _View(x), eps, circuit.K) for h in heads):
                cand = Assignment(x)
                if check_solution(circuit, cand, eps).ok:
                    return cand
            for h in heads:
                r = targets[h] - x[h]
                s = (r > 0) - (r < 0)
                if s and last_sign[h] and s != last_sign[h]:
                    lam[h] /= 2
                    streak[h] = 0
                elif s and s == last_sign[h]:
                    streak[h] += 1
                    if streak[h] >= 2 and lam[h] < DAMPING:
                        lam[h] *= 2
                        streak[h] = 0
                if s:
                    last_sign[h] = s
                x[h] = _clamp(_snap(x[h] + lam[h] * r, grid), top)
    return None


class _View(Mapping):
    def __init__(self, d):
        self._d = d

    def __getitem__(self, k):
        return self._d.get(k, ZERO)

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)


def load_circuit(path) -> GeneralizedCircuit:
    with open(path) as fh:
        return GeneralizedCircuit.from_json(json.load(fh))


def load_assignment(path) -> Assignment:
    with open(path) as fh:
        return Assignment.from_json(json.load(fh))
