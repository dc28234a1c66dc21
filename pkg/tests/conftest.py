from fractions import Fraction

import numpy as np
import pytest

from ppadkit.bimatrix import BimatrixGame


def random_game(seed, m, n, tag="positive", den=16):
    """Entries k/den in [0, 1] (or integers in [-den, den] for raw games)."""
    rng = np.random.Generator(np.random.Philox(seed))
    if tag == "positive":
        draw = lambda: [[Fraction(int(k), den) for k in row] for row in rng.integers(0, den, (m, n), endpoint=True)]
    else:
        draw = lambda: [[Fraction(int(k)) for k in row] for row in rng.integers(-den, den, (m, n), endpoint=True)]
    return BimatrixGame(draw(), draw(), tag)


@pytest.fixture
def make_game():
    return random_game


MATCHING_PENNIES = BimatrixGame([[1, -1], [-1, 1]], [[-1, 1], [1, -1]])


def gate_circuits():
    """One K=3 circuit per gate type; the gate under test is the last one."""
    from ppadkit.gencircuit import Gate, GeneralizedCircuit

    Z = lambda v, a: Gate("G_zeta", v, alpha=Fraction(a))
    third, sixth, ninth = Fraction(1, 3), Fraction(1, 6), Fraction(1, 9)
    table = {
        "G_zeta": [Z(0, sixth)],
        "G_xzeta": [Z(0, third), Gate("G_xzeta", 1, 0, alpha=Fraction(1, 2))],
        "G=": [Z(0, sixth), Gate("G=", 1, 0)],
        "G+": [Z(0, sixth), Z(1, ninth), Gate("G+", 2, 0, 1)],
        "G-": [Z(0, third), Z(1, ninth), Gate("G-", 2, 0, 1)],
        "G<": [Z(0, 0), Z(1, third), Gate("G<", 2, 0, 1)],
        "G_or": [Z(0, third), Z(1, 0), Gate("G_or", 2, 0, 1)],
        "G_and": [Z(0, third), Z(1, third), Gate("G_and", 2, 0, 1)],
        "G_not": [Z(0, third), Gate("G_not", 1, 0)],
    }
    return {name: GeneralizedCircuit(3, tuple(gs)) for name, gs in table.items()}
