from fractions import Fraction as F

import pytest
from conftest import MATCHING_PENNIES, random_game
from hypothesis import given, settings
from hypothesis import strategies as st

from ppadkit.bimatrix import (
    BimatrixGame,
    MixedProfile,
    approx_by_perturbation,
    equilibrium_defects,
    is_well_supported,
    pad_game,
    padded_size,
    perturb_uniform,
    positively_normalize,
    truncate_profile,
    well_supported_from_approx,
)
from ppadkit.errors import InputError
from ppadkit.solve import lemke_howson, support_enumeration

HALF = MixedProfile([F(1, 2)] * 2, [F(1, 2)] * 2)
CORNER = BimatrixGame([[1, 0], [0, 0]], [[1, 0], [0, 0]], "positive")


def test_matching_pennies_defects_zero():
    d = equilibrium_defects(MATCHING_PENNIES, HALF)
    assert (d.row_additive, d.col_additive) == (0, 0)
    assert d.is_exact


def test_zero_game_defects_zero():
    g = BimatrixGame([[0, 0], [0, 0]], [[0, 0], [0, 0]])
    d = equilibrium_defects(g, MixedProfile([1, 0], [F(1, 3), F(2, 3)]))
    assert d.is_exact and d.row_relative == 0 and d.row_relative_flagged


def test_bad_pure_equilibrium():
    d = equilibrium_defects(CORNER, MixedProfile([0, 1], [0, 1]))
    assert (d.row_additive, d.col_additive) == (0, 0)


def test_dimension_mismatch():
    with pytest.raises(InputError):
        equilibrium_defects(CORNER, MixedProfile([1, 0, 0], [1, 0]))


def test_tag_checked_on_construction():
    with pytest.raises(InputError):
        BimatrixGame([[2]], [[0]], "positive")
    with pytest.raises(InputError):
        BimatrixGame([[1, 2]], [[0]])


def test_profile_must_be_distribution():
    with pytest.raises(InputError):
        MixedProfile([F(1, 2), F(1, 3)], [1])


def test_well_supported_examples():
    assert not is_well_supported(CORNER, MixedProfile([F(1, 2), F(1, 2)], [1, 0]), F(1, 2))
    assert is_well_supported(CORNER, MixedProfile([1, 0], [1, 0]), 0)
    assert is_well_supported(MATCHING_PENNIES, HALF, 0)


def test_ws_from_approx_identity_on_exact():
    assert well_supported_from_approx(CORNER, MixedProfile([1, 0], [1, 0]), F(1, 2)) == MixedProfile([1, 0], [1, 0])


def test_ws_from_approx_zeroes_dominated_row():
    g = BimatrixGame([[1, 1], [0, 0]], [[1, 1], [0, 0]], "positive")
    delta = F(1, 64)
    out = well_supported_from_approx(g, MixedProfile([1 - delta, delta], [F(1, 2)] * 2), F(1, 2))
    assert out == MixedProfile([1, 0], [F(1, 2), F(1, 2)])


def test_ws_from_approx_precondition():
    with pytest.raises(InputError):
        well_supported_from_approx(CORNER, MixedProfile([0, 1], [1, 0]), F(1, 2))
    with pytest.raises(InputError):
        well_supported_from_approx(MATCHING_PENNIES, HALF, F(1, 2))


def test_positively_normalize():
    g = BimatrixGame([[-16, 0], [16, 0]], [[3, 3], [3, 3]])
    norm = positively_normalize(g)
    assert {e for row in norm.game.A for e in row} == {0, F(1, 2), 1}
    assert all(e == 0 for row in norm.game.B for e in row)
    assert norm.game.tag == "positive"
    assert norm.invert().A == g.A


def test_positively_normalize_fixed_point():
    g = BimatrixGame([[0, 1]], [[1, 0]], "positive")
    norm = positively_normalize(g)
    assert norm.game.A == g.A and norm.scale_A == 1


def test_truncate_examples():
    p = truncate_profile(MixedProfile([F(1, 3), F(2, 3)], [F(1, 2), F(1, 2)]), 2)
    assert p.x == (F(1, 3), F(2, 3))
    assert p.y == (F(1, 2), F(1, 2))


def test_truncate_reports_viable_bits():
    with pytest.raises(InputError, match="P >= 4"):
        truncate_profile(MixedProfile([F(1, 10)] * 10, [1]), 3)


def test_padded_size_and_blocks():
    assert padded_size(2, 2, 1) == 16
    padded = pad_game(CORNER, 2, 1)
    G = padded.game
    assert G.m == 16
    assert G.A[0][5] == 1 and G.B[5][0] == 1 and G.A[5][5] == 0


def test_pad_game_rejects_bad_constants():
    with pytest.raises(InputError):
        pad_game(CORNER, 1, F(1, 2))
    with pytest.raises(InputError):
        pad_game(CORNER, 2, 3)
    with pytest.raises(InputError):
        pad_game(MATCHING_PENNIES, 2, 1)


def test_recover_plain_renormalization():
    padded = pad_game(CORNER, 2, 1)
    x = [F(1, 4), F(1, 4), F(1, 2)] + [F(0)] * 13
    y = [F(1, 3), F(2, 3)] + [F(0)] * 14
    out = padded.recover(MixedProfile(x, y))
    assert out.x == (F(1, 2), F(1, 2)) and out.y == (F(1, 3), F(2, 3))


def test_perturb_zero_sigma_and_determinism():
    g = random_game(1, 3, 3)
    assert perturb_uniform(g, 0, 9) == g
    assert perturb_uniform(g, F(1, 4), 9) == perturb_uniform(g, F(1, 4), 9)
    assert perturb_uniform(g, F(1, 4), 9) != perturb_uniform(g, F(1, 4), 10)


def test_perturb_range_on_zero_game():
    g = BimatrixGame([[0] * 4] * 4, [[0] * 4] * 4)
    p = perturb_uniform(g, F(1, 4), 3)
    assert all(abs(e) <= F(1, 4) for row in p.A + p.B for e in row)


def test_perturb_frozen_value():
    # first two draws of the Philox stream keyed by seed 7
    p = perturb_uniform(BimatrixGame([[0]], [[0]]), 1, 7)
    assert p.A[0][0] == F(-79300305, 536870912)
    assert p.B[0][0] == F(-801501895, 1073741824)


def test_approx_by_perturbation_matching_pennies():
    norm = positively_normalize(MATCHING_PENNIES).game
    prof = approx_by_perturbation(norm, F(1, 8), 5, support_enumeration)
    assert equilibrium_defects(norm, prof).is_approximate(F(1, 8))
    assert prof == approx_by_perturbation(norm, F(1, 8), 5, support_enumeration)


def test_approx_by_perturbation_huge_eps():
    g = random_game(3, 2, 3)
    prof = approx_by_perturbation(g, 2, 1, lemke_howson)
    assert equilibrium_defects(g, prof).is_approximate(2)


def test_json_round_trip():
    g = random_game(4, 2, 3)
    assert BimatrixGame.from_json(g.to_json()) == g
    assert g.to_json()["A"][0][0].count("/") <= 1


games = st.builds(lambda s, m, n: random_game(s, m, n), st.integers(0, 10 ** 6), st.integers(1, 3), st.integers(1, 3))


def _points(k):
    return st.lists(st.integers(0, 5), min_size=k, max_size=k).filter(any).map(lambda v: [F(a, sum(v)) for a in v])


@st.composite
def game_and_profile(draw):
    g = draw(games)
    return g, MixedProfile(draw(_points(g.m)), draw(_points(g.n)))


@settings(max_examples=80, deadline=None)
@given(game_and_profile(), st.fractions(0, 1, max_denominator=8))
def test_well_supported_implies_approximate(gp, eps):
    g, p = gp
    if is_well_supported(g, p, eps):
        assert equilibrium_defects(g, p).is_approximate(eps)


@settings(max_examples=80, deadline=None)
@given(game_and_profile(), st.fractions(0, 1, max_denominator=8))
def test_relative_implies_additive_on_positive_games(gp, eps):
    g, p = gp
    d = equilibrium_defects(g, p)
    if d.row_relative <= eps and d.col_relative <= eps:
        assert d.is_approximate(eps)


@settings(max_examples=40, deadline=None)
@given(games, st.fractions(1, 5, max_denominator=4), st.fractions(-3, 3, max_denominator=4),
       st.fractions(1, 5, max_denominator=4), st.fractions(-3, 3, max_denominator=4))
def test_equilibria_invariant_under_affine_maps(g, c1, d1, c2, d2):
    prof = support_enumeration(g)
    h = BimatrixGame([[c1 * a + d1 for a in r] for r in g.A], [[c2 * b + d2 for b in r] for r in g.B])
    assert equilibrium_defects(h, prof).is_exact


@settings(max_examples=40, deadline=None)
@given(game_and_profile(), st.fractions(1, 6, max_denominator=5))
def test_defects_scale_linearly(gp, c):
    g, p = gp
    h = BimatrixGame([[c * a for a in r] for r in g.A], [[c * b for b in r] for r in g.B])
    d, e = equilibrium_defects(g, p), equilibrium_defects(h, p)
    assert e.row_additive == c * d.row_additive and e.col_additive == c * d.col_additive


@settings(max_examples=40, deadline=None)
@given(games, st.sampled_from([F(1, 2), F(1, 4)]), st.integers(1, 6))
def test_ws_conversion_property(g, eps, jitter):
    prof = support_enumeration(g)
    out = well_supported_from_approx(g, prof, eps)
    assert is_well_supported(g, out, eps)
