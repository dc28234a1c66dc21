import json

import pytest

from conftest import MATCHING_PENNIES, gate_circuits
from ppadkit.cli import EXIT_BUDGET, EXIT_INPUT, EXIT_OK, EXIT_VERIFY, main


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read(path):
    return json.loads(open(path).read())


@pytest.fixture
def tri2(tmp_path):
    out = tmp_path / "triple.json"
    assert main(["gen-brouwer", "--d", "2", "--r", "8,8", "--seed", "3", "--out", str(out)]) == EXIT_OK
    return str(out)


def test_missing_seed_is_input_error(tmp_path, capsys):
    assert main(["gen-brouwer", "--d", "2", "--r", "8,8"]) == EXIT_INPUT
    assert "--seed" in capsys.readouterr().err


def test_unreadable_and_malformed_inputs(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", str(bad)]) == EXIT_INPUT
    assert main(["validate", write(tmp_path / "x.json", {"d": 2})]) == EXIT_INPUT
    assert main(["gen-brouwer", "--d", "2", "--r", "8,x", "--seed", "1"]) == EXIT_INPUT


def test_validate_find_verify(tri2, tmp_path, capsys):
    assert main(["validate", tri2]) == EXIT_OK
    assert read_stdout(capsys)["ok"] is True
    simplex = tmp_path / "simplex.json"
    assert main(["find-fixed-point", tri2, "--out", str(simplex)]) == EXIT_OK
    assert main(["verify", "simplex", tri2, str(simplex)]) == EXIT_OK
    s = read(simplex)
    s["points"] = s["points"][:2]
    s["colors"] = s["colors"][:2]
    assert main(["verify", "simplex", tri2, write(tmp_path / "s2.json", s)]) == EXIT_VERIFY


def read_stdout(capsys):
    return json.loads(capsys.readouterr().out)


def test_validate_budget(tri2):
    assert main(["validate", tri2, "--budget", "5"]) == EXIT_BUDGET


def test_validate_flags_fault(tri2, tmp_path):
    t = read(tri2)
    t["oracle"]["colors"][3] = 0
    assert main(["validate", write(tmp_path / "bad.json", t)]) == EXIT_VERIFY


def test_circuit_oracle_triple(tmp_path):
    out = tmp_path / "c.json"
    assert main(["gen-brouwer", "--d", "1", "--r", "8", "--seed", "0", "--circuit", "--out", str(out)]) == EXIT_OK
    assert read(out)["oracle"]["kind"] == "circuit"
    assert main(["validate", str(out)]) == EXIT_OK


def test_embed_backmap(tmp_path):
    src = tmp_path / "src.json"
    main(["gen-brouwer", "--d", "2", "--r", "4,4", "--seed", "2", "--out", str(src)])
    emb = tmp_path / "emb.json"
    with pytest.warns(UserWarning):
        assert main(["embed", str(src), "--f", "const3", "--n", "2", "--table", "--out", str(emb)]) == EXIT_OK
    rec = read(emb)
    assert rec["target"] == {"d": 8, "r": [8] * 8}
    target = write(tmp_path / "target.json", rec["triple"])
    simplex = tmp_path / "s.json"
    assert main(["find-fixed-point", target, "--out", str(simplex)]) == EXIT_OK
    back = tmp_path / "back.json"
    assert main(["backmap", str(emb), str(simplex), "--out", str(back)]) == EXIT_OK
    assert main(["verify", "simplex", str(src), str(back)]) == EXIT_OK


def test_circuitize_and_decode(tmp_path):
    inst = tmp_path / "inst.json"
    assert main(["gen-brouwer", "--d", "1", "--r", "8", "--seed", "0", "--instance", "--out", str(inst)]) == EXIT_OK
    circ, lay = tmp_path / "circ.json", tmp_path / "lay.json"
    args = ["circuitize", str(inst), "--m", "2", "--out", str(circ), "--layout", str(lay)]
    assert main(args) == EXIT_INPUT
    assert main(args + ["--relaxed"]) == EXIT_OK
    assert read(lay)["params"]["relaxed"] is True
    assignment = write(tmp_path / "x.json", {"values": {}})
    assert main(["decode-fixedpoint", str(lay), assignment]) == EXIT_VERIFY


def test_gadget_pipeline(tmp_path, capsys):
    circ = write(tmp_path / "circ.json", gate_circuits()["G="].to_json())
    game, meta = tmp_path / "game.json", tmp_path / "meta.json"
    assert main(["gadgetize", circ, "--normalize", "--meta", str(meta), "--out", str(game)]) == EXIT_OK
    assert read(meta)["K"] == 3
    prof = tmp_path / "prof.json"
    assert main(["solve", str(game), "--method", "support", "--out", str(prof)]) == EXIT_OK
    assert main(["verify", "game", str(game), str(prof)]) == EXIT_OK
    x = tmp_path / "x.json"
    assert main(["decode", str(prof), "--game-meta", str(meta), "--out", str(x)]) == EXIT_OK
    capsys.readouterr()
    assert main(["verify", "circuit", circ, str(x)]) == EXIT_OK
    assert read_stdout(capsys)["ok"] is True


def test_verify_game_tolerances(tmp_path):
    game = write(tmp_path / "g.json", MATCHING_PENNIES.to_json())
    pure = write(tmp_path / "p.json", {"x": ["1", "0"], "y": ["1", "0"]})
    assert main(["verify", "game", game, pure]) == EXIT_VERIFY
    assert main(["verify", "game", game, pure, "--eps", "2"]) == EXIT_OK
    assert main(["verify", "game", game, pure, "--eps", "1", "--well-supported"]) == EXIT_VERIFY
    half = write(tmp_path / "h.json", {"x": ["1/2", "1/2"], "y": ["1/2", "1/2"]})
    assert main(["verify", "game", game, half]) == EXIT_OK
    assert main(["verify", "game", game, half, "--eps", "0.5x"]) == EXIT_INPUT


def test_perturb(tmp_path):
    from conftest import random_game
    game = write(tmp_path / "g.json", random_game(1, 3, 3).to_json())
    assert main(["perturb", game, "--sigma", "1/4"]) == EXIT_INPUT
    out = tmp_path / "pg.json"
    assert main(["perturb", game, "--sigma", "1/4", "--seed", "5", "--out", str(out)]) == EXIT_OK
    again = tmp_path / "pg2.json"
    main(["perturb", game, "--sigma", "1/4", "--seed", "5", "--out", str(again)])
    assert read(out) == read(again)
    approx = tmp_path / "ap.json"
    assert main(["perturb", game, "--approx", "1/8", "--seed", "5", "--out", str(approx)]) == EXIT_OK
    assert main(["verify", "game", game, str(approx), "--eps", "1/8"]) == EXIT_OK
    assert main(["perturb", game, "--seed", "5"]) == EXIT_INPUT


def test_pad_game_recover(tmp_path):
    from conftest import random_game
    src = random_game(2, 2, 2)
    game = write(tmp_path / "g.json", src.to_json())
    padded = tmp_path / "pad.json"
    assert main(["pad-game", game, "--out", str(padded)]) == EXIT_OK
    prof = tmp_path / "prof.json"
    assert main(["solve", str(padded), "--method", "lh", "--out", str(prof)]) == EXIT_OK
    back = tmp_path / "back.json"
    assert main(["pad-game", game, "--recover", str(prof), "--out", str(back)]) == EXIT_OK
    assert main(["verify", "game", game, str(back), "--eps", "1/4"]) == EXIT_OK


def test_pad_circuit_pull_back(tmp_path):
    circ = write(tmp_path / "c.json", gate_circuits()["G+"].to_json())
    padded = tmp_path / "p.json"
    assert main(["pad-circuit", circ, "--c", "5", "--out", str(padded)]) == EXIT_OK
    assert read(padded)["K"] == 9
    x = write(tmp_path / "x.json", {"values": {"0": "1/18", "1": "1/27", "2": "5/54"}})
    assert main(["verify", "circuit", str(padded), x]) == EXIT_OK
    back = tmp_path / "b.json"
    assert main(["pad-circuit", circ, "--c", "5", "--pull-back", x, "--out", str(back)]) == EXIT_OK
    assert read(back)["values"]["2"] == "5/18"
    assert main(["verify", "circuit", circ, str(back)]) == EXIT_OK


def test_roundtrip_gadget_path(tmp_path):
    circ = write(tmp_path / "c.json", gate_circuits()["G_zeta"].to_json())
    rep = tmp_path / "rep.json"
    assert main(["roundtrip", circ, "--trace", "--out", str(rep)]) == EXIT_OK
    report = read(rep)
    assert report["ok"] is True
    assert [s["stage"] for s in report["stages"]] == ["load", "gadgetize", "solve", "decode", "check_solution"]
    assert all("seconds" in s for s in report["stages"])


def test_roundtrip_instance_needs_seed(tmp_path):
    inst = tmp_path / "inst.json"
    main(["gen-brouwer", "--d", "1", "--r", "8", "--seed", "0", "--instance", "--out", str(inst)])
    rep = tmp_path / "rep.json"
    assert main(["roundtrip", str(inst), "--m", "2", "--out", str(rep)]) == EXIT_INPUT
    assert read(rep)["failed_stage"] == "solve"


def test_roundtrip_invalid_instance(tmp_path):
    inst = tmp_path / "inst.json"
    main(["gen-brouwer", "--d", "1", "--r", "8", "--seed", "0", "--instance", "--out", str(inst)])
    data = read(inst)
    # flip the output wires so the boundary rule breaks
    outs = data["circuit"]["outputs"]
    data["circuit"]["outputs"] = outs[::-1]
    rep = tmp_path / "rep.json"
    assert main(["roundtrip", write(tmp_path / "bad.json", data), "--seed", "1", "--out", str(rep)]) == EXIT_INPUT
    assert read(rep)["failed_stage"] == "load"


def test_roundtrip_instance_budget(tmp_path):
    inst = tmp_path / "inst.json"
    main(["gen-brouwer", "--d", "2", "--r", "8,8", "--seed", "0", "--instance", "--out", str(inst)])
    rep = tmp_path / "rep.json"
    code = main(["roundtrip", str(inst), "--m", "2", "--seed", "1", "--max-iters", "1",
                 "--restarts", "1", "--out", str(rep)])
    assert code == EXIT_BUDGET
    assert read(rep)["failed_stage"] == "solve"
