import random
from fractions import Fraction
from typing import Sequence

from models.differential_polynomial import DiffPoly, VarKey


def random_diff_poly(generators: Sequence[VarKey], rng: random.Random, terms: int = 3,
                     max_order: int = 2, max_degree: int = 2, coeff_range: int = 5) -> DiffPoly:
    """
    Random differential polynomial in the given generators.

    Args:
        generators: Base generators to draw variables from
        rng: Seeded random source
        terms: Number of monomials drawn (duplicates merge)
        max_order: Highest derivative order
        max_degree: Highest total degree of a monomial
        coeff_range: Numerators and denominators are drawn from 1..coeff_range

    Returns:
        A DiffPoly, possibly with a constant term
    """
    poly = DiffPoly.zero()
    for _ in range(terms):
        coeff = Fraction(rng.randint(-coeff_range, coeff_range), rng.randint(1, coeff_range))
        if not coeff:
            continue
        monomial = DiffPoly.constant(coeff)
        for _ in range(rng.randint(0, max_degree)):
            key = rng.choice(list(generators)).derive(rng.randint(0, max_order))
            monomial = monomial * DiffPoly.variable(key)
        poly = poly + monomial
    return poly
