"""
Tests for structure name resolution
"""
from fractions import Fraction

import pytest

from models.differential_polynomial import DiffPoly, generator
from models.lambda_value import LambdaValue
from services.structure_factory import StructureFactory
from utils.exceptions import IndexRangeError, StructureNameError, UnsupportedOperationError


class TestNames:
    """Patterns and aliases"""

    @pytest.mark.parametrize("alias,canonical", [
        ("kdv", "w2"),
        ("Boussinesq", "w3"),
        ("kp", "w-inf(1)"),
        ("matrix-kdv", "w-mat(2,2)"),
        (" v-mat( 1, 2 ) ", "v-mat(1,2)"),
    ])
    def test_canonical_names(self, alias, canonical):
        """Aliases, case and whitespace are normalized"""
        assert StructureFactory.canonical_name(alias) == canonical

    def test_scalar_agd(self):
        """v2 has u_-2 and u_-1, w2 keeps only u_-1"""
        v2 = StructureFactory.resolve("v2")
        w2 = StructureFactory.resolve("w2")
        assert v2.is_agd and not v2.reduced
        assert w2.reduced
        assert v2.select("H").generators() == [generator(-2), generator(-1)]
        assert w2.select("H").generators() == [generator(-1)]

    def test_w3_aliases(self):
        """W_3 generators are called u and v"""
        bundle = StructureFactory.resolve("w3")
        assert bundle.aliases == {generator(-2): "u", generator(-1): "v"}

    def test_matrix_universe(self):
        """V_{1,2} has the four entries of U_-1"""
        bundle = StructureFactory.resolve("v-mat(1,2)")
        keys = bundle.select("H").generators()
        assert len(keys) == 4
        assert {(k.row, k.col) for k in keys} == {(1, 1), (1, 2), (2, 1), (2, 2)}

    def test_w1_rejected(self):
        """W_1 is the zero algebra"""
        with pytest.raises(UnsupportedOperationError):
            StructureFactory.resolve("w1")

    def test_unknown_name(self):
        """Unknown names suggest close matches"""
        with pytest.raises(StructureNameError) as excinfo:
            StructureFactory.resolve("w-mtx(2,2)")
        assert "Unknown structure" in str(excinfo.value)

    def test_zero_order_rejected(self):
        """v0 is not a structure"""
        with pytest.raises(StructureNameError):
            StructureFactory.resolve("v0")

    def test_known_names_include_aliases(self):
        """The listing shows patterns and aliases"""
        names = StructureFactory.known_names()
        assert "broken-demo" in names
        assert "kdv" in names


class TestNonAgdStructures:
    """GFZ, Virasoro-Magri and the broken demo"""

    def test_gfz(self):
        """gfz(3) has three free fields"""
        bundle = StructureFactory.resolve("gfz(3)")
        assert not bundle.is_agd
        assert len(bundle.select("H").generators()) == 3

    def test_virasoro_charge(self):
        """virasoro(1/2) puts 1/2 on lambda^3"""
        S = StructureFactory.resolve("virasoro(1/2)").select("H")
        value = S.bracket(generator(-1), generator(-1))
        assert value.coefficient(3) == DiffPoly.constant(Fraction(1, 2))

    def test_virasoro_default(self):
        """Without a charge the settings default is used"""
        S = StructureFactory.resolve("virasoro").select("H")
        assert S.bracket(generator(-1), generator(-1)).coefficient(3) == DiffPoly.one()

    def test_broken_demo_table(self):
        """[x, y] = z and the reversed entry is -z"""
        bundle = StructureFactory.resolve("broken-demo")
        S = bundle.select("H")
        x, y, z = bundle.key(-3), bundle.key(-2), bundle.key(-1)
        assert S.bracket(x, y) == LambdaValue.monomial(DiffPoly.variable(z))
        assert S.bracket(y, x) == LambdaValue.monomial(-DiffPoly.variable(z))

    def test_single_structure_only(self):
        """Non-AGD algebras carry only H"""
        with pytest.raises(UnsupportedOperationError):
            StructureFactory.resolve("gfz(2)").select("K")


class TestSelection:
    """Choosing a structure from a bundle"""

    def test_unknown_choice(self):
        """Only H, K, HD and pencil"""
        with pytest.raises(ValueError):
            StructureFactory.resolve("v2").select("Q")

    def test_hd_needs_reduced_algebra(self):
        """H^D is defined on W algebras"""
        with pytest.raises(UnsupportedOperationError):
            StructureFactory.resolve("v2").select("HD")

    def test_selection_is_cached(self):
        """The same object comes back"""
        bundle = StructureFactory.resolve("w2")
        assert bundle.select("K") is bundle.select("K")

    def test_key_outside_universe(self):
        """u_-2 is not a W_2 generator"""
        with pytest.raises(IndexRangeError):
            StructureFactory.resolve("w2").key(-2)

    def test_hierarchy_needs_agd(self):
        """Hierarchies are built on AGD algebras only"""
        with pytest.raises(UnsupportedOperationError):
            StructureFactory.create_hierarchy_spec("gfz(2)")

    def test_hierarchy_default_kmax(self):
        """k_max falls back to the settings default"""
        spec = StructureFactory.create_hierarchy_spec("kdv")
        assert spec.k_max >= 1
        assert spec.name == "w2"
