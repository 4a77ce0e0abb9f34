"""
Tests for conserved densities, flows and the Lenard-Magri recursion
"""
from fractions import Fraction

import pytest

import calculators.hierarchy_calculator as hierarchy_module
from calculators.adler_structures import AdlerContext
from calculators.hierarchy_calculator import (
    FlowDerivation,
    HierarchyCalculator,
    b_star_annihilation,
    bracket_flow,
    density,
    expected_independence_image,
    independence_image,
    involution_check,
    lax_flow,
    lenard_residual,
    verify_reduced_pde,
)
from models.differential_polynomial import DiffPoly, generator, is_total_derivative
from models.hierarchy import FlowEquation, HierarchySpec
from models.pseudo_differential import TruncationPolicy, mat_is_zero
from models.structure import INFINITE
from services.structure_factory import StructureFactory
from utils.exceptions import TruncationError, TruncationInstabilityError, UnsupportedOperationError

U = generator(-1)
V = generator(-2)
u = DiffPoly.variable(U)
v = DiffPoly.variable(V)


@pytest.fixture
def kdv():
    return StructureFactory.create_hierarchy_spec("kdv", k_max=3)


@pytest.fixture
def boussinesq():
    return StructureFactory.create_hierarchy_spec("boussinesq", k_max=2)


class TestDensities:
    """h_k = (N/k) tr res L^{k/N}"""

    def test_kdv_first_density(self, kdv):
        """h_1 = u"""
        assert density(kdv, 1) == u

    def test_kdv_even_density_vanishes(self, kdv):
        """res L = 0 for a differential operator"""
        assert density(kdv, 2).is_zero()

    def test_kdv_third_density(self, kdv):
        """h_3 = u^2/4 up to a total derivative"""
        assert is_total_derivative(density(kdv, 3) - u * u / 4)

    def test_kp_second_density(self):
        """h_2 = u_1 + u_0'/2 on KP"""
        spec = StructureFactory.create_hierarchy_spec("kp", k_max=2)
        u0, u1 = DiffPoly.gen(0), DiffPoly.gen(1)
        assert density(spec, 1) == u0
        assert density(spec, 2) == u1 + u0.derivative() / 2

    def test_density_index_must_be_positive(self, kdv):
        """h_0 is not defined"""
        with pytest.raises(ValueError):
            density(kdv, 0)

    @pytest.mark.parametrize("k", [1, 2])
    def test_independence_image(self, kdv, k):
        """delta h_k / delta u_-2 restricted to u_-2 is binom(k/2 - 1, k) u_-2^k"""
        assert independence_image(kdv, k) == expected_independence_image(kdv, k)

    def test_expected_independence_image_value(self, kdv):
        """binom(-1/2, 1) = -1/2"""
        assert expected_independence_image(kdv, 1) == v * Fraction(-1, 2)


class TestFlows:
    """Lax flows and the bracket routes"""

    def test_kdv_translation(self, kdv):
        """t_1 is d/dx"""
        assert lax_flow(kdv, 1)[U] == u.derivative()

    def test_kdv_equation(self, kdv):
        """u_t = u'''/4 + (3/2) u u'"""
        flow = lax_flow(kdv, 3)
        assert flow[U] == u.derivative(3) / 4 + u * u.derivative() * Fraction(3, 2)
        assert flow.respects_constraint()

    def test_boussinesq_flows(self, boussinesq):
        """u_t = -u'' + 2v', v_t = v'' - (2/3) u''' - (2/3) u u'"""
        a, b = DiffPoly.gen(-2), DiffPoly.gen(-1)
        flow = lax_flow(boussinesq, 2)
        assert flow[V] == -a.derivative(2) + b.derivative().scale(2)
        assert flow[U] == b.derivative(2) - a.derivative(3) * Fraction(2, 3) - a * a.derivative() * Fraction(2, 3)
        assert flow.respects_constraint()

    @pytest.mark.parametrize("choice", ["H", "HD"])
    def test_routes_agree_on_kdv(self, kdv, choice):
        """The Lax flow equals {int h_k, u} on both second-structure routes"""
        for k in (1, 3):
            assert lax_flow(kdv, k).differences(bracket_flow(kdv, choice, k)) == {}

    def test_routes_agree_on_boussinesq(self, boussinesq):
        """Lax and H^D routes give the same t_2 flow"""
        assert lax_flow(boussinesq, 2).differences(bracket_flow(boussinesq, "HD", 2)) == {}

    def test_matrix_hd_route_unsupported(self):
        """The matrix H^D table is nonlocal"""
        spec = StructureFactory.create_hierarchy_spec("matrix-kdv", k_max=2)
        with pytest.raises(UnsupportedOperationError):
            bracket_flow(spec, "HD", 1)

    def test_lenard_recursion(self, kdv):
        """{int h_1, u}_H = {int h_3, u}_K"""
        assert lenard_residual(kdv, 1) == {}

    def test_involution(self, kdv):
        """h_1 and h_3 Poisson-commute under both structures"""
        results = involution_check(kdv, 1, 3)
        assert set(results) == {"HD", "K"}
        assert all(value.is_zero() for value in results.values())

    @pytest.mark.parametrize("name,k", [("kdv", 1), ("kdv", 3), ("boussinesq", 2)])
    def test_b_star_annihilates_gradients(self, name, k):
        """B* delta h_k / delta u = 0"""
        spec = StructureFactory.create_hierarchy_spec(name, k_max=k)
        assert mat_is_zero(b_star_annihilation(spec, k))


class TestFlowDerivation:
    """Evolutionary derivations built from flows"""

    def test_derivatives_commute_with_flow(self):
        """d/dt u'' = (u_t)''"""
        derivation = FlowDerivation(FlowEquation(1, {U: u * u}))
        assert derivation(u.derivative(2)) == (u * u).derivative(2)

    def test_missing_generator(self):
        """A generator without a flow cannot be differentiated"""
        derivation = FlowDerivation(FlowEquation(1, {U: u}))
        with pytest.raises(UnsupportedOperationError):
            derivation(v)

    def test_constraints_supply_missing_flows(self):
        """An eliminated generator takes its flow from the constraints"""
        derivation = FlowDerivation(FlowEquation(1, {U: u}), {V: DiffPoly.zero()})
        assert derivation(u * v) == u * v


class TestTruncationStability:
    """Flows are recomputed at a deeper floor"""

    def test_default_floor_is_stable(self):
        """t_4 of KP passes the re-check and matches the H route"""
        spec = StructureFactory.create_hierarchy_spec("kp", k_max=4)
        equation = lax_flow(spec, 4)
        assert equation.differences(bracket_flow(spec, "H", 4)) == {}

    def test_tight_floor_rejected(self):
        """An explicit floor too shallow for t_4 is an error, not a truncated flow"""
        spec = HierarchySpec(AdlerContext(1, 1, INFINITE), reduced=True, k_max=4,
                             policy=TruncationPolicy(-4))
        with pytest.raises(TruncationError):
            lax_flow(spec, 4)

    def test_moving_flow_raises(self, kdv, monkeypatch):
        """A flow that changes at the deeper floor is reported as unstable"""
        original = hierarchy_module._lax_flow_at
        floors = []

        def drifting(spec, k, generators, policy):
            floors.append(policy.floor)
            equation = original(spec, k, generators, policy)
            if policy.floor < floors[0]:
                equation.rhs[U] = equation.rhs[U] + u
            return equation

        monkeypatch.setattr(hierarchy_module, "_lax_flow_at", drifting)
        with pytest.raises(TruncationInstabilityError):
            lax_flow(kdv, 3)
        assert lax_flow(kdv, 3, check_stability=False)[U] == u.derivative(3) / 4 + u * u.derivative() * Fraction(3, 2)


class TestReducedEquations:
    """Named PDEs recovered from two flows"""

    @pytest.mark.parametrize("name", ["kp", "boussinesq"])
    def test_scalar_equations(self, name):
        """Every residual vanishes"""
        residuals = verify_reduced_pde(name)
        assert residuals
        assert all(value.is_zero() for value in residuals.values())

    @pytest.mark.slow
    def test_matrix_kp(self):
        """The matrix KP system holds entry by entry"""
        residuals = verify_reduced_pde("matrix_kp")
        assert len(residuals) == 8
        assert all(value.is_zero() for value in residuals.values())

    def test_unknown_equation(self):
        """Only the listed equations are known"""
        with pytest.raises(ValueError):
            verify_reduced_pde("sine-gordon")


class TestHierarchyCalculator:
    """Full hierarchy sweeps"""

    def test_kdv_sweep(self, kdv):
        """Routes agree and Lenard-Magri holds up to k = 3"""
        result = HierarchyCalculator().calculate(kdv)
        assert result.all_passed, result.issues
        assert sorted(result.densities) == [1, 2, 3]
        assert result.stats["lenard_checked"] == 1
        df = result.to_dataframe()
        assert list(df["k"]) == [1, 2, 3]

    def test_w1_rejected(self):
        """W_1 has no generators"""
        spec = HierarchySpec(AdlerContext(1), reduced=True, k_max=2)
        with pytest.raises(UnsupportedOperationError):
            HierarchyCalculator().calculate(spec)

    def test_k_max_validated(self):
        """k_max must be positive"""
        with pytest.raises(ValueError):
            HierarchySpec(AdlerContext(2), reduced=True, k_max=0)


class TestHierarchySweeps:
    """Densities, routes, recursion and involution across the standard hierarchies"""

    def test_kp_third_density(self):
        """h_3 = u_2 + u_0^2 up to a total derivative, and h_4 is nonzero"""
        spec = StructureFactory.create_hierarchy_spec("kp", k_max=4)
        u0, u2 = DiffPoly.gen(0), DiffPoly.gen(2)
        assert is_total_derivative(density(spec, 3) - u2 - u0 * u0)
        assert not density(spec, 4).is_zero()

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_kp_routes_agree(self, k):
        """Lax and H routes give the same low KP flows"""
        spec = StructureFactory.create_hierarchy_spec("kp", k_max=3)
        assert lax_flow(spec, k).differences(bracket_flow(spec, "H", k)) == {}

    @pytest.mark.parametrize("choice", ["H", "HD"])
    @pytest.mark.parametrize("k", [1, 2])
    def test_w3_routes_agree(self, choice, k):
        """The Lax flow on W_3 equals both bracket routes"""
        spec = StructureFactory.create_hierarchy_spec("w3", k_max=2)
        assert lax_flow(spec, k).differences(bracket_flow(spec, choice, k)) == {}

    @pytest.mark.parametrize("name,k_max,k", [
        ("w2", 5, 1), ("w2", 5, 2), ("w2", 5, 3),
        ("v2", 5, 1), ("v2", 5, 2), ("v2", 5, 3),
        ("kp", 4, 1), ("kp", 4, 2), ("kp", 4, 3),
        ("w3", 4, 1),
        pytest.param("w3", 5, 2, marks=pytest.mark.slow),
        pytest.param("w3", 6, 3, marks=pytest.mark.slow),
    ])
    def test_lenard_recursion(self, name, k_max, k):
        """{int h_k, u}_H = {int h_{k+N}, u}_K"""
        spec = StructureFactory.create_hierarchy_spec(name, k_max=k_max)
        assert lenard_residual(spec, k) == {}

    @pytest.mark.parametrize("k1,k2", [(1, 2), (1, 3), (1, 5), (2, 4), (3, 4), (3, 5), (4, 5)])
    def test_kdv_involution(self, k1, k2):
        """Densities up to h_5 Poisson-commute under H^D and K"""
        spec = StructureFactory.create_hierarchy_spec("kdv", k_max=5)
        results = involution_check(spec, k1, k2)
        assert all(value.is_zero() for value in results.values())
