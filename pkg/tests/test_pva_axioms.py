"""
Tests for the Master Formula, flows and the axiom sweeps
"""
import random
from fractions import Fraction

import pytest

from calculators.axiom_verifier import (
    AxiomVerifier,
    compat_residual,
    jacobi_residual,
    pencil,
    residual_by_parameter,
    skew_residual,
)
from calculators.master_formula import (
    flow,
    flow_by_operator,
    flow_routes_agree,
    functional_bracket,
    leibniz_residual,
    master_bracket,
)
from models.differential_polynomial import DiffPoly, generator
from models.lambda_value import LambdaValue
from models.miura_map import virasoro_magri_structure
from models.structure import LocalFunctional
from services.structure_factory import StructureFactory
from utils.exceptions import IndexRangeError, UnsupportedOperationError
from utils.random_poly import random_diff_poly

U = generator(-1)
V = generator(-2)
u = DiffPoly.variable(U)


def d(k: int = 1) -> DiffPoly:
    return u.derivative(k)


@pytest.fixture
def virasoro():
    return virasoro_magri_structure(1)


@pytest.fixture
def w3():
    return StructureFactory.resolve("w3").select("H")


class TestMasterFormula:
    """Extension of the generator table to differential polynomials"""

    def test_generators_reproduce_table(self, virasoro):
        """{u lambda u} through the formula is the table entry"""
        assert master_bracket(virasoro, u, u) == virasoro.bracket(U, U)

    def test_right_leibniz(self, virasoro):
        """{u lambda u^2} = 2u {u lambda u}"""
        expected = LambdaValue({0: u * d() * 2, 1: u * u * 4, 3: u.scale(2)})
        assert master_bracket(virasoro, u, u * u) == expected

    def test_left_argument_shifts_lambda(self, virasoro):
        """{u^2 lambda u} = {u_{lambda+d} u}_-> 2u"""
        expected = LambdaValue({
            0: u * d() * 6 + d(3).scale(2),
            1: u * u * 4 + d(2).scale(6),
            2: d().scale(6),
            3: u.scale(2),
        })
        assert master_bracket(virasoro, u * u, u) == expected

    def test_sesquilinearity(self, virasoro):
        """{u' lambda u} = -lambda {u lambda u}"""
        expected = LambdaValue({p + 1: -c for p, c in virasoro.bracket(U, U).local.items()})
        assert master_bracket(virasoro, d(), u) == expected

    def test_leibniz_on_random_polynomials(self, w3):
        """{f lambda gh} = {f lambda g} h + {f lambda h} g"""
        rng = random.Random(11)
        for _ in range(3):
            f, g, h = (random_diff_poly([U, V], rng, terms=2, max_order=1) for _ in range(3))
            assert leibniz_residual(w3, f, g, h).is_zero()

    def test_skew_symmetry_on_composites(self, virasoro):
        """{f lambda g} = -{g_{-lambda-d} f} for f = u^2, g = u'"""
        f, g = u * u, d()
        total = master_bracket(virasoro, f, g) + master_bracket(virasoro, g, f).skew_adjoint()
        assert total.is_zero()

    def test_constants_bracket_to_zero(self, virasoro):
        """{1 lambda u} = 0"""
        assert master_bracket(virasoro, DiffPoly.one(), u).is_zero()

    def test_foreign_generator_rejected(self):
        """u_-2 does not live on W_2"""
        H = StructureFactory.resolve("w2").select("H")
        with pytest.raises(IndexRangeError):
            master_bracket(H, DiffPoly.variable(V), u)

    def test_nonlocal_structure_brackets_linear_elements(self):
        """Linear combinations are fine on a nonlocal table, products are not"""
        H = StructureFactory.resolve("w-mat(2,2)").select("H")
        x = DiffPoly.gen(-1, 1, 2)
        assert master_bracket(H, x, x) == H.bracket(generator(-1, 1, 2), generator(-1, 1, 2))
        with pytest.raises(UnsupportedOperationError):
            master_bracket(H, x * x, x)


class TestFunctionals:
    """Brackets of local functionals and Hamiltonian flows"""

    def test_functional_bracket_is_skew(self, virasoro):
        """{F, G} + {G, F} = 0 in V / dV"""
        F, G = LocalFunctional(u * u), LocalFunctional(d() * d())
        total = functional_bracket(virasoro, F, G) + functional_bracket(virasoro, G, F)
        assert total.is_zero()

    def test_momentum_commutes_with_itself(self, virasoro):
        """{int u, int u^2} = int 2uu' = 0"""
        assert functional_bracket(virasoro, LocalFunctional(u), LocalFunctional(u * u)).is_zero()

    def test_functional_bracket_needs_local_structure(self):
        """Nonlocal tables give no functional bracket"""
        H = StructureFactory.resolve("w-mat(2,2)").select("H")
        x = LocalFunctional(DiffPoly.gen(-1, 1, 1))
        with pytest.raises(UnsupportedOperationError):
            functional_bracket(H, x, x)

    def test_translation_flow(self):
        """int u generates d/dx on W_2"""
        H = StructureFactory.resolve("w2").select("H")
        assert flow(H, u, U) == d()

    def test_kdv_flow(self):
        """int u^2/4 gives u_t = u'''/4 + (3/2) u u'"""
        H = StructureFactory.resolve("w2").select("H")
        expected = d(3) / 4 + u * d() * Fraction(3, 2)
        assert flow(H, u * u / 4, U) == expected

    def test_flow_routes_agree(self, w3):
        """The Master Formula and the Hamiltonian operator give the same flow"""
        h = DiffPoly.variable(V) * u + d(1) * d(1)
        assert flow_routes_agree(w3, h, w3.generators()) == []
        assert flow(w3, h, V) == flow_by_operator(w3, h, V)

    def test_flow_on_nonlocal_structure(self):
        """Flows need a local structure"""
        H = StructureFactory.resolve("w-mat(2,2)").select("H")
        with pytest.raises(UnsupportedOperationError):
            flow(H, DiffPoly.gen(-1, 1, 1), generator(-1, 1, 1))


class TestResiduals:
    """Skew-symmetry, Jacobi and compatibility residuals"""

    def test_w3_is_skew_symmetric(self, w3):
        """Every generator pair has zero skew residual"""
        for x in w3.generators():
            for y in w3.generators():
                assert skew_residual(w3, x, y).is_zero()

    def test_virasoro_jacobi(self, virasoro):
        """The Virasoro-Magri bracket satisfies Jacobi"""
        assert jacobi_residual(virasoro, U, U, U).is_zero()

    def test_broken_demo_jacobi_residual(self):
        """[x,y]=z, [y,z]=x, [z,x]=z leaves x as the Jacobi residual"""
        bundle = StructureFactory.resolve("broken-demo")
        S = bundle.select("H")
        x, y, z = bundle.key(-3), bundle.key(-2), bundle.key(-1)
        residual = jacobi_residual(S, x, y, z)
        assert residual.coefficient(0, 0) == DiffPoly.variable(x)
        assert len(residual.terms) == 1

    def test_residual_split_by_parameter(self):
        """On (1 + c) times the broken table the residual is (1 + c)^2 x"""
        bundle = StructureFactory.resolve("broken-demo")
        S = bundle.select("H")
        x, y, z = bundle.key(-3), bundle.key(-2), bundle.key(-1)
        parts = residual_by_parameter(compat_residual(S, S, (x, y, z)))
        X = DiffPoly.variable(x)
        assert sorted(parts) == [0, 1, 2]
        assert parts[0].coefficient(0, 0) == X
        assert parts[1].coefficient(0, 0) == X.scale(2)
        assert parts[2].coefficient(0, 0) == X

    def test_agd_pair_is_compatible(self):
        """Jacobi holds for H + cK on V_2 identically in c"""
        bundle = StructureFactory.resolve("v2")
        H, K = bundle.select("H"), bundle.select("K")
        for triple in [(V, V, U), (U, U, U), (U, V, U)]:
            assert compat_residual(H, K, triple).is_zero()

    def test_pencil_of_local_structures_is_local(self):
        """The pencil keeps locality and the aliases of the first structure"""
        bundle = StructureFactory.resolve("w2")
        P = pencil(bundle.select("H"), bundle.select("K"))
        assert P.local
        assert P.aliases.get(U) == "u"


class TestAxiomVerifier:
    """Sweeps over generator tuples"""

    def test_w2_passes(self):
        """Skew and Jacobi on W_2 with one generator"""
        H = StructureFactory.resolve("w2").select("H")
        result = AxiomVerifier(checks=("skew", "jacobi"), jobs=1).calculate(H)
        assert result.all_passed
        assert result.stats["skew"] == {"evaluated": 1, "failed": 0}
        assert result.stats["jacobi"] == {"evaluated": 1, "failed": 0}

    def test_compat_on_w2(self):
        """H^D and K are compatible on W_2"""
        bundle = StructureFactory.resolve("w2")
        verifier = AxiomVerifier(checks=("compat",), partner=bundle.select("K"), jobs=1)
        assert verifier.calculate(bundle.select("H")).all_passed

    def test_broken_demo_fails_jacobi_only(self):
        """The demo table is skew-symmetric but not Lie"""
        S = StructureFactory.resolve("broken-demo").select("H")
        result = AxiomVerifier(checks=("skew", "jacobi"), jobs=1).calculate(S)
        assert result.stats["skew"]["failed"] == 0
        assert result.stats["jacobi"]["failed"] > 0
        assert result.failures()
        assert any("jacobi" in issue for issue in result.issues)

    def test_dataframe_lists_records(self):
        """One row per evaluated tuple"""
        S = StructureFactory.resolve("broken-demo").select("H")
        result = AxiomVerifier(checks=("skew",), jobs=1).calculate(S)
        df = result.to_dataframe()
        assert len(df) == 6
        assert set(df["check"]) == {"skew"}
        assert df["passed"].all()

    def test_sampling(self, w3):
        """Only the requested number of tuples is evaluated"""
        result = AxiomVerifier(checks=("jacobi",), sample=5, seed=3, jobs=1).calculate(w3)
        assert result.stats["jacobi"]["evaluated"] == 5

    def test_jacobi_on_nonlocal_structure_rejected(self):
        """Only skew-symmetry is checked on nonlocal tables"""
        H = StructureFactory.resolve("w-mat(2,2)").select("H")
        with pytest.raises(UnsupportedOperationError):
            AxiomVerifier(checks=("jacobi",), jobs=1).calculate(H)

    def test_infinite_algebra_needs_max_index(self):
        """Sweeps over V_1^inf need a cut-off"""
        H = StructureFactory.resolve("v-inf(1)").select("H")
        with pytest.raises(UnsupportedOperationError):
            AxiomVerifier(checks=("skew",), jobs=1).calculate(H)
        result = AxiomVerifier(checks=("skew",), max_index=1, jobs=1).calculate(H)
        assert result.stats["generators"] == 3
        assert result.all_passed

    def test_unknown_check(self):
        """Unknown identities are rejected up front"""
        with pytest.raises(ValueError):
            AxiomVerifier(checks=("associativity",))

    def test_compat_needs_partner(self, w3):
        """compat without a partner is a validation issue"""
        assert AxiomVerifier(checks=("compat",)).validate(w3)


class TestStandardSweeps:
    """Every standard structure passes the exhaustive sweeps"""

    @pytest.mark.parametrize("name", [
        "gfz(3)", "virasoro", "v1", "v2", "w2", "w3", "v-mat(1,2)",
        pytest.param("v3", marks=pytest.mark.slow),
        pytest.param("v-mat(2,2)", marks=pytest.mark.slow),
    ])
    def test_skew_and_jacobi(self, name):
        """Skew-symmetry and Jacobi hold on every generator tuple"""
        H = StructureFactory.resolve(name).select("H")
        result = AxiomVerifier(checks=("skew", "jacobi"), jobs=1).calculate(H)
        assert result.all_passed, result.issues
        assert result.stats["jacobi"]["evaluated"] > 0

    @pytest.mark.parametrize("name", [
        "v1", "v2", "w2", "w3", "v-mat(1,2)",
        pytest.param("v3", marks=pytest.mark.slow),
        pytest.param("v-mat(2,2)", marks=pytest.mark.slow),
    ])
    def test_compatibility(self, name):
        """The second structure is compatible with K"""
        bundle = StructureFactory.resolve(name)
        verifier = AxiomVerifier(checks=("compat",), partner=bundle.select("K"), jobs=1)
        result = verifier.calculate(bundle.select("H"))
        assert result.all_passed, result.issues
