"""Command-line entry point. One action per subcommand; artifacts travel as JSON files."""

from __future__ import annotations

import argparse
import json
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

from . import bimatrix, brouwer, circuitize, embed, game_gadgets, gencircuit, solve
from .errors import BudgetExhausted, InputError, VerificationError

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


def _read(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _emit(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _frac(text) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"not a rational: {text!r}") from exc


def _ints(text) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise InputError(f"expected comma-separated integers, got {text!r}") from exc


def _need_seed(args):
    if args.seed is None:
        raise InputError("this command draws random numbers; pass --seed")
    return args.seed


def _solver(method, label=1, max_pivots=None):
    if method == "support":
        return solve.support_enumeration
    if method == "lh":
        return lambda g: solve.lemke_howson(g, label, max_pivots)
    raise InputError(f"unknown method {method!r}")


class Tracer:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.stages = []

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        entry = {"stage": name, "ok": False}
        self.stages.append(entry)
        try:
            yield entry
            entry["ok"] = True
        finally:
            if self.enabled:
                entry["seconds"] = round(time.perf_counter() - t0, 4)


# ---------------------------------------------------------------------------
# commands

def cmd_gen_brouwer(args):
    seed = _need_seed(args)
    r = _ints(args.r)
    triple = brouwer.random_valid_coloring(args.d, r, seed)
    if args.instance:
        if r != (circuitize.SIDE,) * args.d:
            raise InputError("--instance needs r = 8,...,8")
        circ = brouwer.table_to_circuit(triple, widths=(circuitize.BITS,) * args.d)
        _emit(circuitize.BrouwerInstance(args.d, circ).to_json(), args.out)
    elif args.circuit:
        circ = brouwer.table_to_circuit(triple)
        _emit(brouwer.ColoringTriple(brouwer.CircuitOracle(circ, r)).to_json(), args.out)
    else:
        _emit(triple.to_json(), args.out)
    return EXIT_OK


def _load_any_triple(path):
    data = _read(path)
    if "oracle" in data:
        return brouwer.ColoringTriple.from_json(data)
    if "circuit" in data and "n" in data:
        return circuitize.BrouwerInstance.from_json(data).triple
    raise InputError(f"{path} is neither a triple nor an instance")


def cmd_validate(args):
    triple = _load_any_triple(args.triple)
    rep = brouwer.validate_boundary(triple, args.budget)
    _emit(rep.to_json())
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_find_fixed_point(args):
    triple = _load_any_triple(args.triple)
    _emit(brouwer.find_panchromatic(triple, args.budget).to_json(), args.out)
    return EXIT_OK


def cmd_embed(args):
    triple = _load_any_triple(args.triple)
    out, chain = embed.reduce_2d_to_f(triple, args.f, args.n)
    record = {"chain": embed.chain_to_json(triple, chain), "target": {"d": out.d, "r": list(out.r)}}
    if args.table:
        record["triple"] = {"d": out.d, "r": list(out.r),
                            "oracle": {"kind": "table",
                                       "colors": out.color_array(args.budget).reshape(-1).tolist()}}
    _emit(record, args.out)
    return EXIT_OK


def cmd_backmap(args):
    data = _read(args.chain)
    source, chain = embed.chain_from_json(data.get("chain", data))
    triples = embed.replay_chain(source, chain)
    simplex = brouwer.PanchromaticSimplex.from_json(_read(args.simplex))
    _emit(embed.fold_back(triples, chain, simplex).to_json(), args.out)
    return EXIT_OK


def cmd_circuitize(args):
    inst = circuitize.BrouwerInstance.from_json(_read(args.instance))
    params = circuitize.choose_params(inst, args.m)
    if params.relaxed and not args.relaxed:
        raise InputError(f"m={args.m} is not the minimal m for |C|={inst.C.size}; pass --relaxed to accept")
    circ, layout = circuitize.build_circuit(inst, params)
    _emit(circ.to_json(), args.out)
    _emit(layout.to_json(), args.layout)
    return EXIT_OK


def cmd_gadgetize(args):
    circ = gencircuit.load_circuit(args.circuit)
    gg = game_gadgets.circuit_to_game(circ, normalize=args.normalize)
    _emit(gg.game.to_json(), args.out)
    if args.meta:
        _emit(gg.meta_json(), args.meta)
    return EXIT_OK


def cmd_solve(args):
    game = bimatrix.load_game(args.game)
    prof = _solver(args.method, args.label, args.max_pivots)(game)
    _emit(prof.to_json(), args.out)
    return EXIT_OK


def cmd_decode(args):
    meta = _read(args.game_meta)
    try:
        emb = game_gadgets.NodeEmbedding(int(meta["K"]))
    except KeyError as exc:
        raise InputError(f"game meta lacks field {exc}") from exc
    dec = game_gadgets.decode_profile(bimatrix.load_profile(args.profile), emb)
    _emit(dec.xbar.to_json(), args.out)
    return EXIT_OK


def cmd_decode_fixedpoint(args):
    layout = circuitize.load_layout(args.layout)
    x = gencircuit.load_assignment(args.assignment)
    dec = circuitize.decode_solution(layout, x)
    verdict = circuitize.verify_panchromatic(layout.instance, dec.Q)
    _emit({"decoded": dec.to_json(), "verdict": verdict.to_json()}, args.out)
    return EXIT_OK if verdict.ok else EXIT_VERIFY


def cmd_verify(args):
    kind = args.kind
    if kind == "game":
        game = bimatrix.load_game(args.a)
        prof = bimatrix.load_profile(args.b)
        d = bimatrix.equilibrium_defects(game, prof)
        report = {"defects": d.to_json()}
        if args.eps is None:
            ok = d.is_exact
        elif args.well_supported:
            ok = bimatrix.is_well_supported(game, prof, _frac(args.eps))
        else:
            ok = d.is_approximate(_frac(args.eps))
        report["ok"] = ok
    elif kind == "circuit":
        circ = gencircuit.load_circuit(args.a)
        x = gencircuit.load_assignment(args.b)
        eps = _frac(args.eps) if args.eps is not None else Fraction(1, circ.K ** 3)
        rep = gencircuit.check_solution(circ, x, eps)
        report, ok = rep.to_json(), rep.ok
    elif kind == "simplex":
        triple = _load_any_triple(args.a)
        simplex = brouwer.PanchromaticSimplex.from_json(_read(args.b))
        ok, why = brouwer.check_panchromatic(triple, simplex.points)
        report = {"ok": ok, "reason": why}
    else:
        raise InputError(f"unknown verify kind {kind!r}")
    _emit(report)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_perturb(args):
    seed = _need_seed(args)
    game = bimatrix.load_game(args.game)
    if args.approx is not None:
        prof = bimatrix.approx_by_perturbation(game, _frac(args.approx), seed, _solver(args.method))
        _emit(prof.to_json(), args.out)
    else:
        if args.sigma is None:
            raise InputError("pass --sigma or --approx")
        _emit(bimatrix.perturb_uniform(game, _frac(args.sigma), seed).to_json(), args.out)
    return EXIT_OK


def cmd_pad_game(args):
    game = bimatrix.load_game(args.game)
    padded = bimatrix.pad_game(game, _frac(args.c), _frac(args.c_prime))
    if args.recover:
        _emit(padded.recover(bimatrix.load_profile(args.recover)).to_json(), args.out)
    else:
        _emit(padded.game.to_json(), args.out)
    if args.meta:
        _emit(padded.recover_description(), args.meta)
    return EXIT_OK


def cmd_pad_circuit(args):
    circ = gencircuit.load_circuit(args.circuit)
    padded = gencircuit.pad_circuit(circ, _frac(args.c))
    if args.pull_back:
        _emit(padded.pull_back(gencircuit.load_assignment(args.pull_back)).to_json(), args.out)
    else:
        _emit(padded.circuit.to_json(), args.out)
    return EXIT_OK


def _roundtrip_circuit(args, data, tr: Tracer, report):
    with tr.stage("load") as st:
        circ = gencircuit.GeneralizedCircuit.from_json(data)
        st["K"] = circ.K
    with tr.stage("gadgetize") as st:
        gg = game_gadgets.circuit_to_game(circ, normalize=True)
        st["size"] = gg.game.m
    with tr.stage("solve") as st:
        prof = _solver(args.method, args.label, args.max_pivots)(gg.game)
    with tr.stage("decode") as st:
        dec = game_gadgets.decode_profile(prof, gg.emb)
    with tr.stage("check_solution") as st:
        rep = gencircuit.check_solution(circ, dec.xbar, Fraction(1, circ.K ** 3))
        st["verdict"] = rep.ok
    report["ok"] = rep.ok
    return EXIT_OK if rep.ok else EXIT_VERIFY


def _roundtrip_instance(args, data, tr: Tracer, report):
    with tr.stage("load") as st:
        inst = circuitize.BrouwerInstance.from_json(data)
        st["n"], st["size"] = inst.n, inst.C.size
    with tr.stage("circuitize") as st:
        params = circuitize.choose_params(inst, args.m)
        circ, layout = circuitize.build_circuit(inst, params)
        st.update(params.to_json())
        st["nodes"] = layout.node_count
    with tr.stage("solve") as st:
        if args.solver == "gadget":
            gg = game_gadgets.circuit_to_game(circ, normalize=True)
            prof = _solver(args.method, args.label, args.max_pivots)(gg.game)
            x = game_gadgets.decode_profile(prof, gg.emb).xbar
        else:
            seed = _need_seed(args)
            x = gencircuit.iterate_solve(circ, params.eps, args.max_iters, seed, args.restarts)
            if x is None:
                raise BudgetExhausted(f"iterate_solve found no solution in {args.max_iters} sweeps")
        sol = gencircuit.check_solution(circ, x, params.eps)
        st["verdict"] = sol.ok
        if not sol.ok:
            raise VerificationError("solver output fails check_solution")
    with tr.stage("decode") as st:
        dec = circuitize.decode_solution(layout, x)
        st.update({"I_G": len(dec.I_G), "I_B": len(dec.I_B), "Q": [list(q) for q in dec.Q]})
    with tr.stage("verify_panchromatic") as st:
        verdict = circuitize.verify_panchromatic(inst, dec.Q)
        st.update(verdict.to_json())
    report["ok"] = verdict.ok
    return EXIT_OK if verdict.ok else EXIT_VERIFY


def cmd_roundtrip(args):
    data = _read(args.input)
    tr = Tracer(args.trace)
    report = {"input": args.input, "stages": tr.stages, "ok": False}
    try:
        if "gates" in data:
            code = _roundtrip_circuit(args, data, tr, report)
        else:
            code = _roundtrip_instance(args, data, tr, report)
    except Exception as exc:
        failed = next((s["stage"] for s in reversed(tr.stages) if not s["ok"]), "setup")
        report["failed_stage"] = failed
        report["error"] = str(exc)
        _emit(report, args.out)
        raise
    _emit(report, args.out)
    return code


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppadkit", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("gen-brouwer", cmd_gen_brouwer, "random valid coloring triple")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--r", required=True, help="comma-separated side lengths")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--circuit", action="store_true", help="synthesize a Boolean circuit oracle")
    sp.add_argument("--instance", action="store_true", help="emit a Brouwer instance (r = 8,...,8)")
    sp.add_argument("--out")

    sp = add("validate", cmd_validate, "check the boundary rule exhaustively")
    sp.add_argument("triple")
    sp.add_argument("--budget", type=int)

    sp = add("find-fixed-point", cmd_find_fixed_point, "brute-force a panchromatic simplex")
    sp.add_argument("triple")
    sp.add_argument("--budget", type=int)
    sp.add_argument("--out")

    sp = add("embed", cmd_embed, "fold a 2^n x 2^n coloring into m dimensions")
    sp.add_argument("triple")
    sp.add_argument("--f", default="const3")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--table", action="store_true", help="also emit the target as a dense table")
    sp.add_argument("--budget", type=int)
    sp.add_argument("--out")

    sp = add("backmap", cmd_backmap, "map a target simplex back through a chain")
    sp.add_argument("chain")
    sp.add_argument("simplex")
    sp.add_argument("--out")

    sp = add("circuitize", cmd_circuitize, "Brouwer instance -> generalized circuit + layout")
    sp.add_argument("instance")
    sp.add_argument("--m", type=int)
    sp.add_argument("--relaxed", action="store_true")
    sp.add_argument("--out")
    sp.add_argument("--layout", default="layout.json")

    sp = add("gadgetize", cmd_gadgetize, "generalized circuit -> bimatrix game")
    sp.add_argument("circuit")
    sp.add_argument("--normalize", action="store_true")
    sp.add_argument("--meta")
    sp.add_argument("--out")

    sp = add("solve", cmd_solve, "exact equilibrium")
    sp.add_argument("game")
    sp.add_argument("--method", choices=("lh", "support"), default="lh")
    sp.add_argument("--label", type=int, default=1)
    sp.add_argument("--max-pivots", type=int)
    sp.add_argument("--out")

    sp = add("decode", cmd_decode, "gadget-game profile -> circuit assignment")
    sp.add_argument("profile")
    sp.add_argument("--game-meta", required=True)
    sp.add_argument("--out")

    sp = add("decode-fixedpoint", cmd_decode_fixedpoint, "circuit assignment -> panchromatic simplex")
    sp.add_argument("layout")
    sp.add_argument("assignment")
    sp.add_argument("--out")

    sp = add("verify", cmd_verify, "check a game profile, circuit assignment or simplex")
    sp.add_argument("kind", choices=("game", "circuit", "simplex"))
    sp.add_argument("a", help="game, circuit or triple file")
    sp.add_argument("b", help="profile, assignment or simplex file")
    sp.add_argument("--eps")
    sp.add_argument("--well-supported", action="store_true")

    sp = add("perturb", cmd_perturb, "uniform perturbation, or the perturb-and-solve approximation")
    sp.add_argument("game")
    sp.add_argument("--sigma")
    sp.add_argument("--approx", help="eps: emit an eps-approximate profile of the input")
    sp.add_argument("--method", choices=("lh", "support"), default="lh")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out")

    sp = add("pad-game", cmd_pad_game, "embed a game in a larger block game")
    sp.add_argument("game")
    sp.add_argument("--c", default="2")
    sp.add_argument("--c-prime", default="1")
    sp.add_argument("--recover", help="profile of the padded game to map back")
    sp.add_argument("--meta")
    sp.add_argument("--out")

    sp = add("pad-circuit", cmd_pad_circuit, "enlarge a circuit's K")
    sp.add_argument("circuit")
    sp.add_argument("--c", default="3")
    sp.add_argument("--pull-back", help="assignment of the padded circuit to map back")
    sp.add_argument("--out")

    sp = add("roundtrip", cmd_roundtrip, "instance -> circuit -> solve -> decode -> verify")
    sp.add_argument("input", help="Brouwer instance, or a generalized circuit for the gadget path")
    sp.add_argument("--m", type=int)
    sp.add_argument("--solver", choices=("iterate", "gadget"), default="iterate")
    sp.add_argument("--method", choices=("lh", "support"), default="support")
    sp.add_argument("--label", type=int, default=1)
    sp.add_argument("--max-pivots", type=int)
    sp.add_argument("--max-iters", type=int, default=20000)
    sp.add_argument("--restarts", type=int, default=2)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trace", action="store_true")
    sp.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExhausted as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
