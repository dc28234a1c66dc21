import itertools
import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppadkit.brouwer import (
    RED,
    check_panchromatic,
    enumerate_panchromatic,
    find_panchromatic,
    forced_color,
    random_valid_coloring,
    validate_boundary,
)
from ppadkit.embed import (
    TransformRecord,
    add_dim,
    apply_record,
    back_map,
    chain_from_json,
    chain_to_json,
    driver_params,
    fold_back,
    in_snake,
    pad_dim,
    reduce_2d_to_f,
    replay_chain,
    snake_embed,
    snake_index,
)
from ppadkit.errors import InputError


def _pointwise_agrees(tr):
    arr = tr.color_array()
    for p in itertools.product(*(range(s) for s in tr.r)):
        assert arr[p] == tr.oracle.color(p), p


def _exhaustive(src, tr, rec):
    sims = enumerate_panchromatic(tr)
    assert sims
    for s in sims:
        out = back_map(rec, src, s, tr)
        assert check_panchromatic(src, out.points)[0]
    return len(sims)


def test_pad_examples():
    src = random_valid_coloring(2, (8, 8), 0)
    tr, rec = pad_dim(src, 1, 12)
    assert tr.r == (12, 8)
    assert tr.color((9, 3)) == RED
    assert tr.color((3, 3)) == src.color((3, 3))
    assert tr.color((0, 5)) == 1
    assert rec.to_json() == {"kind": "L1", "params": {"t": 1, "u": 12},
                             "source_d": 2, "source_r": [8, 8]}


def test_pad_copies_up_to_last_source_row():
    src = random_valid_coloring(2, (8, 8), 3)
    tr, _ = pad_dim(src, 1, 12)
    # source row 7 is boundary in the source but interior after padding
    assert tr.color((7, 3)) == src.color((7, 3))
    assert tr.color((8, 3)) == RED


def test_add_dim_examples():
    src = random_valid_coloring(2, (8, 8), 0)
    tr, _ = add_dim(src, 7)
    assert tr.r == (8, 8, 7)
    assert tr.color((3, 4, 1)) == src.color((3, 4))
    assert tr.color((3, 4, 0)) == 3
    assert tr.color((3, 4, 2)) == RED


def test_snake_sizes_and_psi():
    src = random_valid_coloring(2, (14, 8), 0)
    tr, _ = snake_embed(src, 1, 3, 1)
    assert tr.r == (8, 8, 7)
    assert snake_index(2, 5, 3, 1) == 2
    assert snake_index(3, 1, 3, 1) == 9
    assert not in_snake(1, 3, 3, 1)


@pytest.mark.parametrize("a,b", [(1, 1), (3, 1), (2, 2), (4, 3)])
def test_psi_surjective(a, b):
    hit = set()
    for x in range(a + 5):
        for h in range(4 * b + 3):
            m = snake_index(x, h, a, b)
            if m is not None:
                hit.add(m)
    assert hit == set(range(a * (2 * b + 1) + 5))


@pytest.mark.parametrize("a,b", [(1, 1), (3, 1), (2, 2)])
def test_psi_preserves_boundary_index(a, b):
    src = random_valid_coloring(2, (a * (2 * b + 1) + 5, 7), 1)
    tr, _ = snake_embed(src, 1, a, b)
    for p in itertools.product(*(range(s) for s in tr.r)):
        if in_snake(p[0], p[2], a, b) and forced_color(p, tr.r) is not None:
            q = (snake_index(p[0], p[2], a, b), p[1])
            assert tr.color(p) == src.color(q)


def test_color_array_matches_pointwise():
    src = random_valid_coloring(2, (7, 7), 2)
    for tr, _ in (pad_dim(src, 2, 10), add_dim(src, 7)):
        _pointwise_agrees(tr)
        assert validate_boundary(tr).ok
    s3 = random_valid_coloring(2, (7, 2 * 5 + 5), 2)
    tr, _ = snake_embed(s3, 2, 2, 2)
    _pointwise_agrees(tr)
    assert validate_boundary(tr).ok


def test_back_map_exhaustive_small():
    src = random_valid_coloring(2, (7, 7), 4)
    assert _exhaustive(src, *pad_dim(src, 1, 12)) > 0
    assert _exhaustive(src, *add_dim(src, 7)) > 0
    s3 = random_valid_coloring(2, (14, 7), 4)
    assert _exhaustive(s3, *snake_embed(s3, 1, 3, 1)) > 0


def test_back_map_snake_in_three_dims():
    src = random_valid_coloring(3, (7, 2 * 7 + 5, 7), 0)
    assert _exhaustive(src, *snake_embed(src, 2, 2, 3)) > 0


def test_l1_back_map_is_identity():
    src = random_valid_coloring(2, (8, 8), 6)
    tr, rec = pad_dim(src, 1, 12)
    s = find_panchromatic(tr)
    assert set(back_map(rec, src, s).points) == set(s.points)


def test_l2_back_map_drops_new_color():
    src = random_valid_coloring(2, (8, 8), 6)
    tr, rec = add_dim(src, 7)
    s = find_panchromatic(tr)
    out = back_map(rec, src, s)
    assert len(out.points) == 3
    kept = [p for p in s.points if tr.color(p) != 3]
    assert all(p[-1] == 1 for p in kept)


def test_back_map_rejects_bad_input():
    src = random_valid_coloring(2, (8, 8), 6)
    tr, rec = pad_dim(src, 1, 12)
    s = find_panchromatic(tr)
    bad = type(s)(s.points[:2], s.colors[:2])
    with pytest.raises(InputError, match="not panchromatic"):
        back_map(rec, src, bad, tr)


def test_preconditions():
    src = random_valid_coloring(2, (8, 8), 0)
    with pytest.raises(InputError, match="u > r_t"):
        pad_dim(src, 1, 8)
    with pytest.raises(InputError):
        pad_dim(src, 3, 12)
    with pytest.raises(InputError):
        add_dim(src, 6)
    with pytest.raises(InputError, match="a\\(2b\\+1\\)\\+5"):
        snake_embed(src, 1, 3, 1)
    with pytest.raises(InputError):
        snake_embed(random_valid_coloring(2, (14, 8), 0), 1, 0, 3)


def test_record_source_mismatch():
    src = random_valid_coloring(2, (8, 8), 0)
    _, rec = pad_dim(src, 1, 12)
    with pytest.raises(InputError, match="expects a source"):
        apply_record(random_valid_coloring(2, (8, 9), 0), rec)
    with pytest.raises(InputError, match="step 0"):
        replay_chain(random_valid_coloring(2, (8, 9), 0), [rec])


def test_driver_params():
    assert driver_params("const3", 2) == (3, 2, 8)
    assert driver_params("const4", 4) == (4, 2, 11)
    with pytest.raises(InputError, match="< 3"):
        driver_params("const2", 2)
    with pytest.raises(InputError):
        driver_params("nonsense", 2)


def test_driver_rejects_wrong_source():
    with pytest.raises(InputError, match="2\\^2"):
        reduce_2d_to_f(random_valid_coloring(2, (8, 8), 0), "const3", 2)


def test_driver_step_error_index(monkeypatch):
    import ppadkit.embed as embed

    def refuse(triple, u):
        raise InputError("refused")

    monkeypatch.setattr(embed, "add_dim", refuse)
    src = random_valid_coloring(2, (4, 4), 0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, chain = reduce_2d_to_f(src, "const3", 2, pad_to_m=False)
        with pytest.raises(InputError, match=f"step {len(chain)}: refused"):
            reduce_2d_to_f(src, "const3", 2)


def test_driver_round_trip_n2():
    src = random_valid_coloring(2, (4, 4), 1)
    with pytest.warns(UserWarning, match="m'"):
        out, chain = reduce_2d_to_f(src, "const3", 2)
    assert out.d == 8 and set(out.r) == {8}
    assert len(chain) <= 4 * out.d
    tris = replay_chain(src, chain)
    assert np.array_equal(tris[-1].color_array(), out.color_array())
    back = fold_back(tris, chain, find_panchromatic(out))
    assert check_panchromatic(src, back.points)[0]


def test_driver_prefix_n4():
    src = random_valid_coloring(2, (16, 16), 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out, chain = reduce_2d_to_f(src, "const3", 4, pad_to_m=False)
    assert set(out.r) == {8}
    assert [r.kind for r in chain].count("L3") >= 2
    tris = replay_chain(src, chain)
    back = fold_back(tris, chain, find_panchromatic(out))
    assert check_panchromatic(src, back.points)[0]


def test_chain_json_round_trip():
    src = random_valid_coloring(2, (4, 4), 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, chain = reduce_2d_to_f(src, "const3", 2)
    data = json.loads(json.dumps(chain_to_json(src, chain)))
    src2, chain2 = chain_from_json(data)
    assert chain2 == chain
    assert np.array_equal(src2.color_array(), src.color_array())
    with pytest.raises(InputError):
        chain_from_json({"records": []})
    with pytest.raises(InputError):
        TransformRecord.from_json({"kind": "L1"})


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 2), st.integers(8, 11))
def test_pad_back_map_property(seed, t, u):
    src = random_valid_coloring(2, (7, 7), seed)
    tr, rec = pad_dim(src, t, u)
    assert validate_boundary(tr).ok
    out = back_map(rec, src, find_panchromatic(tr), tr)
    assert check_panchromatic(src, out.points)[0]


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 2), st.integers(1, 2))
def test_snake_back_map_property(seed, a, b):
    src = random_valid_coloring(2, (a * (2 * b + 1) + 5, 7), seed)
    tr, rec = snake_embed(src, 1, a, b)
    assert validate_boundary(tr).ok
    out = back_map(rec, src, find_panchromatic(tr), tr)
    assert check_panchromatic(src, out.points)[0]
