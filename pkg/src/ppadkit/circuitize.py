"""Brouwer instance on B^n = [0:7]^n -> generalized circuit, and the decoder back to a panchromatic simplex.

Node ids are allocated in construction order. The n sampling anchors
v^1_i come first, so they are the only feedback heads of the cycle closed
by the last part of the construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .brouwer import (
    RED,
    BoolCircuit,
    CircuitOracle,
    ColoringTriple,
    color_name,
    is_accommodated,
    validate_boundary,
)
from .errors import InputError
from .gencircuit import Assignment, Gate, GateType, GeneralizedCircuit
from .numerics import ZERO, rat_str

SIDE = 8
BITS = 3
EXHAUSTIVE_LIMIT = 8 ** 6
WELL_POSITIONED = 80  # threshold is WELL_POSITIONED / K^2 in grid units


@dataclass(frozen=True)
class BrouwerInstance:
    n: int
    C: BoolCircuit

    def __post_init__(self):
        if self.n < 1:
            raise InputError("n must be >= 1")
        if self.C.widths != (BITS,) * self.n:
            raise InputError(f"circuit must read {BITS} bits per coordinate for n={self.n}")
        if SIDE ** self.n <= EXHAUSTIVE_LIMIT:
            rep = validate_boundary(self.triple)
            if not rep.ok:
                raise InputError(f"circuit is not a valid Brouwer mapping: {rep.to_json()}")

    @property
    def triple(self) -> ColoringTriple:
        return ColoringTriple(CircuitOracle(self.C, (SIDE,) * self.n))

    def color(self, q) -> int:
        return self.triple.color(q)

    def to_json(self) -> dict:
        return {"n": self.n, "circuit": self.C.to_json()}

    @classmethod
    def from_json(cls, data) -> "BrouwerInstance":
        try:
            return cls(int(data["n"]), BoolCircuit.from_json(data["circuit"]))
        except KeyError as exc:
            raise InputError(f"instance record lacks field {exc}") from exc


def boundary_conditions(instance: BrouwerInstance) -> list[tuple]:
    """Points of B^n breaking the sampling-argument boundary conditions; empty when valid."""
    import itertools

    n = instance.n
    bad = []
    arr = instance.triple.color_array()
    for q in itertools.product(range(SIDE), repeat=n):
        c = int(arr[q])
        for k in range(n):
            if q[k] == 0:
                if c == RED:
                    bad.append((q, "B.1"))
                for l in range(n):
                    if l != k and q[l] > 0 and c == l + 1:
                        bad.append((q, "B.2"))
            if q[k] == SIDE - 1:
                if c == k + 1:
                    bad.append((q, "B.3"))
                if c not in (RED, k + 1) and q[c - 1] != 0:
                    bad.append((q, "B.4"))
    return bad


@dataclass(frozen=True)
class ReductionParams:
    m: int
    K: int
    eps: Fraction
    relaxed: bool

    def to_json(self) -> dict:
        return {"m": self.m, "K": self.K, "eps": rat_str(self.eps), "relaxed": self.relaxed}


def minimal_m(size: int) -> int:
    """Smallest m with 2^m >= size."""
    return max(0, int(size) - 1).bit_length()


def choose_params(instance: BrouwerInstance | int, override_m: int | None = None,
                  n: int | None = None) -> ReductionParams:
    """``instance`` may be a BrouwerInstance or a bare |C| (then pass ``n``)."""
    if isinstance(instance, BrouwerInstance):
        size, n = instance.C.size, instance.n
    else:
        size = int(instance)
        if n is None:
            raise InputError("n is required with a bare circuit size")
    m_min = minimal_m(size)
    if override_m is None:
        if size <= n:
            raise InputError(f"|C| = {size} must exceed n = {n}")
        m = m_min
        relaxed = False
    else:
        if override_m < 1:
            raise InputError("m must be >= 1")
        m = override_m
        # any departure from the minimal m leaves the sound regime
        relaxed = override_m != m_min or size <= n
    K = 2 ** (6 * m)
    return ReductionParams(m, K, Fraction(1, K ** 3), relaxed)


def color_vectors(n: int, K: int) -> dict[int, tuple]:
    """z^i = e_i / K^2 for colors 1..n; red gets -(1,..,1) / K^2."""
    unit = Fraction(1, K * K)
    out = {RED: tuple([-unit] * n)}
    for i in range(1, n + 1):
        out[i] = tuple(unit if j == i - 1 else ZERO for j in range(n))
    return out


# ---------------------------------------------------------------------------
# construction

class CircuitBuilder:
    def __init__(self, K: int):
        self.K = K
        self.next_id = 0
        self.gates: list[Gate] = []
        self.origin: list[str] = []
        self.used: set[int] = set()
        self.part = ""

    def fresh(self, count: int = 1) -> list[int]:
        if self.next_id + count > self.K:
            raise InputError(f"construction needs more than K={self.K} nodes; use a larger m")
        ids = list(range(self.next_id, self.next_id + count))
        self.next_id += count
        return ids

    def insert(self, gate: Gate) -> int:
        if gate.v in self.used:
            raise InputError(f"node {gate.v} already has a gate")
        if gate.v >= self.next_id:
            raise InputError(f"node {gate.v} was never allocated")
        self.used.add(gate.v)
        self.gates.append(gate)
        self.origin.append(self.part)
        return gate.v

    def gate(self, kind: GateType, v1=None, v2=None, alpha=None) -> int:
        (v,) = self.fresh()
        return self.insert(Gate(kind, v, v1, v2, alpha))


def extract_bits(builder: CircuitBuilder, v: int, out: list[int]) -> list[int]:
    """Three bit nodes for a = 8K x[v], most significant first. Returns helper ids."""
    if len(out) != BITS:
        raise InputError("extract_bits needs three output nodes")
    K = builder.K
    chain = builder.fresh(4)
    helpers = list(chain)
    builder.insert(Gate(GateType.EQ, chain[0], v))
    for j in range(1, BITS + 1):
        vj1, vj2 = builder.fresh(2)
        helpers += [vj1, vj2]
        builder.insert(Gate(GateType.ZETA, vj1, alpha=Fraction(1, 2 ** j * K)))
        builder.insert(Gate(GateType.LT, out[j - 1], vj1, chain[j - 1]))
        builder.insert(Gate(GateType.XZETA, vj2, out[j - 1], alpha=Fraction(1, 2 ** j)))
        builder.insert(Gate(GateType.SUB, chain[j], chain[j - 1], vj2))
    return helpers


def coloring_simulation(builder: CircuitBuilder, C: BoolCircuit, coords: list[int],
                        outputs: list[int]) -> dict:
    """Simulate C on pi(p) with p_i = 8K x[coords[i]]; ``outputs`` = [v_1^+, v_1^-, v_2^+, ...]."""
    n = len(coords)
    if len(outputs) != 2 * n or C.d != n:
        raise InputError("output count must be 2n")
    K = builder.K
    bit_nodes = []
    for v in coords:
        bits = builder.fresh(BITS)
        extract_bits(builder, v, bits)
        bit_nodes += bits
    signal = dict(enumerate(bit_nodes))
    targets = {}
    for pos, sig in enumerate(C.outputs):
        targets.setdefault(sig, []).append(pos)
    for g_idx, (op, *args) in enumerate(C.gates):
        s = C.num_inputs + g_idx
        claim = targets.get(s)
        # the first output slot adopts the gate node directly
        v = outputs[claim[0]] if claim else builder.fresh()[0]
        if op == "CONST0":
            builder.insert(Gate(GateType.ZETA, v, alpha=ZERO))
        elif op == "CONST1":
            builder.insert(Gate(GateType.ZETA, v, alpha=Fraction(1, K)))
        elif op == "NOT":
            builder.insert(Gate(GateType.NOT, v, signal[args[0]]))
        elif op in ("AND", "OR"):
            kind = GateType.AND if op == "AND" else GateType.OR
            builder.insert(Gate(kind, v, signal[args[0]], signal[args[1]]))
        else:
            raise InputError(f"unknown boolean op {op!r}")
        signal[s] = v
    for sig, slots in targets.items():
        start = 1 if sig >= C.num_inputs else 0
        for pos in slots[start:]:
            builder.insert(Gate(GateType.EQ, outputs[pos], signal[sig]))
    return {"bits": bit_nodes}


@dataclass
class ReductionLayout:
    n: int
    params: ReductionParams
    instance: BrouwerInstance
    v: list            # v[k][i], k = 0..n^3-1
    v_plus_k: list
    v_minus_k: list
    v_plus: list
    v_minus: list
    v_prime: list
    v_dprime: list
    bits: list         # bits[k] = 3n ids
    constants: list    # shared offset node per k >= 1 (None for k = 0)
    origin: list = field(default_factory=list)
    node_count: int = 0

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "params": self.params.to_json(),
            "instance": self.instance.to_json(),
            "v": self.v, "v_plus_k": self.v_plus_k, "v_minus_k": self.v_minus_k,
            "v_plus": self.v_plus, "v_minus": self.v_minus,
            "v_prime": self.v_prime, "v_dprime": self.v_dprime,
            "bits": self.bits, "constants": self.constants,
            "origin": self.origin, "node_count": self.node_count,
        }

    @classmethod
    def from_json(cls, data) -> "ReductionLayout":
        try:
            p = data["params"]
            params = ReductionParams(int(p["m"]), int(p["K"]), Fraction(p["eps"]), bool(p["relaxed"]))
            return cls(int(data["n"]), params, BrouwerInstance.from_json(data["instance"]),
                       data["v"], data["v_plus_k"], data["v_minus_k"], data["v_plus"], data["v_minus"],
                       data["v_prime"], data["v_dprime"], data["bits"], data["constants"],
                       data.get("origin", []), int(data.get("node_count", 0)))
        except KeyError as exc:
            raise InputError(f"layout record lacks field {exc}") from exc

    def all_ids(self) -> list[int]:
        ids = [i for row in self.v for i in row]
        for group in (self.v_plus_k, self.v_minus_k):
            ids += [i for row in group for i in row]
        ids += self.v_plus + self.v_minus + self.v_prime + self.v_dprime
        ids += [i for row in self.bits for i in row]
        ids += [c for c in self.constants if c is not None]
        return ids


def build_circuit(instance: BrouwerInstance, params: ReductionParams) -> tuple[GeneralizedCircuit, ReductionLayout]:
    n, K = instance.n, params.K
    if params.K != 2 ** (6 * params.m) or params.eps != Fraction(1, K ** 3):
        raise InputError("params are not consistent: need K = 2^(6m), eps = 1/K^3")
    h = n ** 3
    if Fraction(h - 1, 8 * K * K) > Fraction(1, K):
        raise InputError("sampling offsets exceed 1/K; use a larger m")
    b = CircuitBuilder(K)
    anchors = b.fresh(n)

    b.part = "part1"
    v = [anchors]
    constants = [None]
    for k in range(1, h):
        c = b.gate(GateType.ZETA, alpha=Fraction(k, 8 * K * K))
        constants.append(c)
        v.append([b.gate(GateType.ADD, anchors[i], c) for i in range(n)])

    b.part = "part2"
    vpk, vmk, bits = [], [], []
    for k in range(h):
        outs = b.fresh(2 * n)
        info = coloring_simulation(b, instance.C, v[k], outs)
        vpk.append(outs[0::2])
        vmk.append(outs[1::2])
        bits.append(info["bits"])

    b.part = "part3"
    inv = Fraction(1, K)
    v_plus, v_minus = [], []
    for group, dest in ((vpk, v_plus), (vmk, v_minus)):
        for i in range(n):
            acc = None
            for k in range(h):
                term = b.gate(GateType.XZETA, group[k][i], alpha=inv)
                acc = term if acc is None else b.gate(GateType.ADD, acc, term)
            dest.append(acc)

    b.part = "part4"
    vp, vpp = [], []
    for i in range(n):
        vp.append(b.gate(GateType.ADD, anchors[i], v_plus[i]))
        vpp.append(b.gate(GateType.SUB, vp[-1], v_minus[i]))
        b.insert(Gate(GateType.EQ, anchors[i], vpp[-1]))

    circuit = GeneralizedCircuit(K, tuple(b.gates))
    layout = ReductionLayout(n, params, instance, v, vpk, vmk, v_plus, v_minus, vp, vpp, bits,
                             constants, list(b.origin), b.next_id)
    ids = layout.all_ids()
    if len(ids) != len(set(ids)):
        raise AssertionError("layout ids collide")
    return circuit, layout


# ---------------------------------------------------------------------------
# decoding

def pi(a: Fraction) -> int:
    """max{i in [0:7] : i < a}, with 0 for a <= 0."""
    if a <= 0:
        return 0
    return min(SIDE - 1, math.ceil(a) - 1)


def well_positioned(a: Fraction, K: int) -> bool:
    thr = Fraction(WELL_POSITIONED, K * K)
    return all(abs(a - t) > thr for t in range(SIDE))


@dataclass
class DecodedSolution:
    S: list
    I_G: list
    I_B: list
    Q: list
    colors: dict

    def to_json(self) -> dict:
        return {
            "S": [[rat_str(c) for c in p] for p in self.S],
            "I_G": self.I_G,
            "I_B": self.I_B,
            "Q": [list(q) for q in self.Q],
            "colors": {",".join(map(str, q)): color_name(c) for q, c in self.colors.items()},
        }


def decode_solution(layout: ReductionLayout, x) -> DecodedSolution:
    K = layout.params.K
    S = [[8 * K * Fraction(x[v]) for v in row] for row in layout.v]
    good, bad = [], []
    for k, p in enumerate(S):
        (good if all(well_positioned(a, K) for a in p) else bad).append(k)
    Q = sorted({tuple(pi(a) for a in S[k]) for k in good})
    colors = {q: layout.instance.color(q) for q in Q}
    return DecodedSolution(S, good, bad, Q, colors)


@dataclass
class PanchromaticVerdict:
    ok: bool
    reason: str
    missing: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "reason": self.reason, "missing": [color_name(c) for c in self.missing]}

    def __bool__(self):
        return self.ok


def verify_panchromatic(instance: BrouwerInstance, Q) -> PanchromaticVerdict:
    pts = [tuple(int(c) for c in q) for q in Q]
    n = instance.n
    if not pts:
        return PanchromaticVerdict(False, "Q is empty", [RED, *range(1, n + 1)])
    if len(pts) > n + 1:
        return PanchromaticVerdict(False, f"|Q| = {len(pts)} exceeds n+1 = {n + 1}")
    if not is_accommodated(pts, (SIDE,) * n):
        return PanchromaticVerdict(False, "Q is not accommodated")
    seen = {instance.color(q) for q in pts}
    missing = sorted({RED, *range(1, n + 1)} - seen)
    if missing:
        return PanchromaticVerdict(False, "missing colors " + ",".join(color_name(c) for c in missing), missing)
    return PanchromaticVerdict(True, "ok")


def residual(layout: ReductionLayout, decoded: DecodedSolution) -> tuple:
    """Sum of z^{color} over the well-positioned samples."""
    n, K = layout.n, layout.params.K
    z = color_vectors(n, K)
    total = [ZERO] * n
    for k in decoded.I_G:
        q = tuple(pi(a) for a in decoded.S[k])
        for i, val in enumerate(z[layout.instance.color(q)]):
            total[i] += val
    return tuple(total)


def load_instance(path) -> BrouwerInstance:
    with open(path) as fh:
        return BrouwerInstance.from_json(json.load(fh))


def load_layout(path) -> ReductionLayout:
    with open(path) as fh:
        return ReductionLayout.from_json(json.load(fh))
