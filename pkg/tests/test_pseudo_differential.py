"""
Tests for matrix pseudodifferential operators
"""
import random
from fractions import Fraction

import pytest

from models.differential_polynomial import DiffPoly, generator
from models.pseudo_differential import (
    PsiDO,
    TruncationPolicy,
    adjoint,
    compose,
    frac_power,
    inverse,
    mat_from_rows,
    mat_identity,
    mat_is_zero,
    nth_root,
    power,
    residue_pairing,
)
from utils.exceptions import MismatchedOperandsError, NonMonicOperatorError, TruncationError
from utils.random_poly import random_diff_poly

u = DiffPoly.gen(-1)
v = DiffPoly.gen(-2)


def d(k: int = 1) -> DiffPoly:
    return u.derivative(k)


def kdv_operator() -> PsiDO:
    return PsiDO.scalar({2: 1, 0: u})


def boussinesq_operator() -> PsiDO:
    """d^3 + a d + b with a, b independent generators"""
    return PsiDO.scalar({3: 1, 1: v, 0: u})


def random_differential(rng: random.Random, order: int) -> PsiDO:
    gens = [generator(-1), generator(-2)]
    return PsiDO.scalar({e: random_diff_poly(gens, rng, terms=2, max_order=1) for e in range(order + 1)})


class TestCompose:
    """Symbol-rule composition"""

    def test_d_after_multiplication(self):
        """d o u = u d + u'"""
        result = compose(PsiDO.d(), PsiDO.multiplication(u))
        assert result == PsiDO.scalar({1: u, 0: d()})

    def test_miura_factor_product(self):
        """(d + b)(d + a) = d^2 + (a + b) d + a' + b a"""
        a, b = DiffPoly.gen(1, family="v"), DiffPoly.gen(2, family="v")
        result = compose(PsiDO.scalar({1: 1, 0: b}), PsiDO.scalar({1: 1, 0: a}))
        assert result == PsiDO.scalar({2: 1, 1: a + b, 0: a.derivative() + b * a})

    def test_identity_is_neutral(self):
        """A o 1 = A"""
        L = kdv_operator()
        assert compose(L, PsiDO.identity()) == L

    def test_orders_add(self):
        """order(A o B) = order(A) + order(B)"""
        assert compose(kdv_operator(), boussinesq_operator()).order == 5

    def test_associativity_on_random_operators(self):
        """(A o B) o C = A o (B o C)"""
        rng = random.Random(1729)
        for _ in range(3):
            A, B, C = (random_differential(rng, 2) for _ in range(3))
            assert compose(compose(A, B), C) == compose(A, compose(B, C))

    def test_infinite_series_needs_policy(self):
        """d^-1 o u has no finite expansion"""
        with pytest.raises(TruncationError):
            compose(PsiDO.d(-1), PsiDO.multiplication(u))

    def test_policy_sets_floor(self):
        """With a policy the result is known down to its floor"""
        result = compose(PsiDO.d(-1), PsiDO.multiplication(u), TruncationPolicy(-4))
        assert result.floor == -4
        assert result.scalar_coefficient(-1) == u
        assert result.scalar_coefficient(-2) == -d()
        assert result.scalar_coefficient(-3) == d(2)

    def test_mismatched_sizes(self):
        """Operators of different matrix sizes do not combine"""
        with pytest.raises(MismatchedOperandsError):
            PsiDO.identity(1) + PsiDO.identity(2)


class TestAdjoint:
    """Formal adjoint"""

    def test_adjoint_of_d(self):
        """d* = -d"""
        assert adjoint(PsiDO.d()) == -PsiDO.d()

    def test_adjoint_of_u_d(self):
        """(u d)* = -u d - u'"""
        assert adjoint(PsiDO.scalar({1: u})) == PsiDO.scalar({1: -u, 0: -d()})

    def test_kdv_operator_is_self_adjoint(self):
        """(d^2 + u)* = d^2 + u"""
        assert adjoint(kdv_operator()) == kdv_operator()

    def test_anti_homomorphism(self):
        """(A o B)* = B* o A*"""
        rng = random.Random(7)
        for _ in range(3):
            A, B = random_differential(rng, 2), random_differential(rng, 1)
            assert adjoint(compose(A, B)) == compose(adjoint(B), adjoint(A))

    def test_involution(self):
        """A** = A"""
        A = boussinesq_operator()
        assert adjoint(adjoint(A)) == A


class TestResidueAndSplit:
    """Residues and +/- projections"""

    def test_residue_of_differential_operator(self):
        """res(d^2 + u) = 0"""
        assert mat_is_zero(kdv_operator().residue())

    def test_residue_below_floor_raises(self):
        """A tail truncated above d^-1 has no residue"""
        with pytest.raises(TruncationError):
            PsiDO.scalar({1: 1}, floor=0).residue()

    def test_kdv_root_residue(self):
        """res L^{1/2} = u/2"""
        R = nth_root(kdv_operator(), 2, TruncationPolicy(-3))
        assert R.trace_residue() == u / 2

    def test_boussinesq_root_residue(self):
        """res L^{1/3} = a/3 for L = d^3 + a d + b"""
        R = nth_root(boussinesq_operator(), 3, TruncationPolicy(-3))
        assert R.trace_residue() == v / 3

    def test_split_reconstructs(self):
        """A_+ + A_- = A"""
        R = nth_root(kdv_operator(), 2, TruncationPolicy(-4))
        plus, minus = R.split_plus_minus()
        assert (plus + minus).agrees_with(R)
        assert minus.lowest_exponent < 0
        assert plus.is_differential()

    def test_differential_operator_has_no_minus_part(self):
        """(d^2 + u)_- = 0"""
        assert kdv_operator().minus().is_zero()

    def test_kdv_three_halves_plus_part(self):
        """(L^{3/2})_+ = d^3 + (3/2) u d + (3/4) u'"""
        fractional = frac_power(kdv_operator(), 3, 2, TruncationPolicy(-4))
        expected = PsiDO.scalar({3: 1, 1: u * Fraction(3, 2), 0: d() * Fraction(3, 4)})
        assert fractional.plus() == expected

    def test_boussinesq_two_thirds_plus_part(self):
        """(L^{2/3})_+ = d^2 + (2/3) a"""
        fractional = frac_power(boussinesq_operator(), 2, 3, TruncationPolicy(-4))
        assert fractional.plus() == PsiDO.scalar({2: 1, 0: v * Fraction(2, 3)})

    def test_kp_square_plus_part(self):
        """(L^2)_+ = d^2 + 2 u_0 for L = d + u_0 d^-1 + ..."""
        u0, u1, u2 = DiffPoly.gen(0), DiffPoly.gen(1), DiffPoly.gen(2)
        L = PsiDO.scalar({1: 1, -1: u0, -2: u1, -3: u2}, floor=-3)
        fractional = frac_power(L, 2, 1, TruncationPolicy(-3))
        assert fractional.plus() == PsiDO.scalar({2: 1, 0: u0.scale(2)})

    def test_matrix_kdv_trace_residue(self):
        """tr res L^{1/2} = tr U / 2 for L = d^2 + U"""
        U = mat_from_rows([[DiffPoly.gen(-1, a, b) for b in (1, 2)] for a in (1, 2)])
        L = PsiDO(2, {2: mat_identity(2), 0: U})
        R = nth_root(L, 2, TruncationPolicy(-3))
        assert R.trace_residue() == (DiffPoly.gen(-1, 1, 1) + DiffPoly.gen(-1, 2, 2)) / 2


class TestRoots:
    """N-th roots, inverses and fractional powers"""

    def test_kdv_root_series(self):
        """L^{1/2} = d + u/2 d^-1 - u'/4 d^-2 + (u'' - u^2)/8 d^-3 - (u''' - 6uu')/16 d^-4"""
        R = nth_root(kdv_operator(), 2, TruncationPolicy(-4))
        assert R.scalar_coefficient(1) == 1
        assert R.scalar_coefficient(0).is_zero()
        assert R.scalar_coefficient(-1) == u / 2
        assert R.scalar_coefficient(-2) == -d() / 4
        assert R.scalar_coefficient(-3) == (d(2) - u * u) / 8
        assert R.scalar_coefficient(-4) == -(d(3) - u * d() * 6) / 16

    def test_boussinesq_root_series(self):
        """L^{1/3} = d + a/3 d^-1 - (a' - b)/3 d^-2 + (2a'' - 3b' - a^2)/9 d^-3"""
        R = nth_root(boussinesq_operator(), 3, TruncationPolicy(-3))
        a, b = v, u
        assert R.scalar_coefficient(-1) == a / 3
        assert R.scalar_coefficient(-2) == -(a.derivative() - b) / 3
        assert R.scalar_coefficient(-3) == (a.derivative(2).scale(2) - b.derivative().scale(3) - a * a) / 9

    def test_root_of_pure_power(self):
        """(d^N)^{1/N} = d"""
        R = nth_root(PsiDO.d(3), 3, TruncationPolicy(-5))
        assert R.coeffs == {1: mat_identity(1)}

    def test_root_defining_identity(self):
        """R^N = L down to the floor"""
        policy = TruncationPolicy(-4)
        R = nth_root(boussinesq_operator(), 3, policy)
        cube = compose(compose(R, R, policy), R, policy)
        assert cube.agrees_with(boussinesq_operator())

    def test_cube_of_root_down_to_floor(self):
        """R^3 = d^3 + a d + b with every negative coefficient known and zero"""
        policy = TruncationPolicy(-4)
        cube = power(nth_root(boussinesq_operator(), 3, policy), 3, policy)
        assert cube.floor == -4
        assert cube.agrees_with(boussinesq_operator())

    def test_fourth_root(self):
        """Order-four operators have a fourth root as well"""
        L = PsiDO.scalar({4: 1, 2: v, 0: u})
        policy = TruncationPolicy(-3)
        R = nth_root(L, 4, policy)
        assert R.scalar_coefficient(-1) == v / 4
        assert power(R, 4, policy).agrees_with(L)

    def test_matrix_cube_root(self):
        """(d^3 + U)^{1/3} cubed gives back d^3 + U for 2 x 2 U"""
        U = mat_from_rows([[DiffPoly.gen(-1, a, b) for b in (1, 2)] for a in (1, 2)])
        L = PsiDO(2, {3: mat_identity(2), 0: U})
        policy = TruncationPolicy(-2)
        assert power(nth_root(L, 3, policy), 3, policy).agrees_with(L)

    def test_power_keeps_policy_floor(self):
        """Partial products are kept deep enough for the requested floor"""
        A = PsiDO.scalar({1: 1, -1: u})
        assert power(A, 3, TruncationPolicy(-2)).floor == -2
        assert frac_power(kdv_operator(), 3, 2, TruncationPolicy(-4)).floor == -4

    def test_root_requires_monic(self):
        """2 d^2 has no monic square root"""
        with pytest.raises(NonMonicOperatorError):
            nth_root(PsiDO.scalar({2: 2}), 2, TruncationPolicy(-3))

    def test_root_is_stable_under_deeper_floor(self):
        """Lowering the floor by the margin does not change known coefficients"""
        policy = TruncationPolicy(-4)
        shallow = nth_root(kdv_operator(), 2, policy)
        deep = nth_root(kdv_operator(), 2, policy.deeper())
        assert deep.floor < shallow.floor
        assert shallow.agrees_with(deep)

    def test_inverse_of_d(self):
        """d^-1 is the inverse of d"""
        result = inverse(PsiDO.d(), TruncationPolicy(-5))
        assert result.coeffs == {-1: mat_identity(1)}

    def test_inverse_defining_identity(self):
        """L o L^-1 = 1 down to the floor"""
        policy = TruncationPolicy(-6)
        L = kdv_operator()
        assert compose(L, inverse(L, policy), policy).agrees_with(PsiDO.identity())

    def test_inverse_geometric_series(self):
        """(1 + u d^-1)^-1 = 1 - u d^-1 + u^2 d^-2 + ..."""
        A = PsiDO.scalar({0: 1, -1: u})
        result = inverse(A, TruncationPolicy(-2))
        assert result.scalar_coefficient(0) == 1
        assert result.scalar_coefficient(-1) == -u
        # u d^-1 o u d^-1 = u^2 d^-2 - u u' d^-3 + ...
        assert result.scalar_coefficient(-2) == u * u

    def test_frac_power_n_over_n(self):
        """L^{N/N} = L down to the floor"""
        L = boussinesq_operator()
        assert frac_power(L, 3, 3, TruncationPolicy(-4)).agrees_with(L)


class TestResiduePairing:
    """res A(z) B*(-z + lambda) = res A(z + lambda + d) B(z)"""

    def test_pairing_sides_agree(self):
        """Both contractions give the same polynomial in lambda"""
        A = PsiDO.scalar({-1: u, -2: v, 1: DiffPoly.one()})
        B = PsiDO.scalar({2: 1, 0: u, -1: v})
        left, right = residue_pairing(A, B)
        assert left == right

    def test_pairing_needs_exact_operators(self):
        """Truncated series are rejected"""
        A = PsiDO.scalar({-1: u}, floor=-3)
        with pytest.raises(TruncationError):
            residue_pairing(A, PsiDO.identity())
