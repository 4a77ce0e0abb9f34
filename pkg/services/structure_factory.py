"""
Resolution of structure names used on the command line.
"""
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from calculators.adler_structures import AdlerContext, agd_pencil, build_H, build_K, dirac_reduce
from config.settings import settings
from models.differential_polynomial import DiffPoly, VarKey, generator
from models.hierarchy import HierarchySpec
from models.lambda_value import LambdaValue
from models.miura_map import gfz_structure, virasoro_magri_structure
from models.pseudo_differential import TruncationPolicy
from models.structure import FINITE, INFINITE, PVAStructure, TableRule, Universe
from utils.combinatorics import parse_rational
from utils.exceptions import UnsupportedOperationError, handle_unknown_structure

logger = logging.getLogger(__name__)

ALIASES = {
    "kdv": "w2",
    "boussinesq": "w3",
    "kp": "w-inf(1)",
    "matrix-kdv": "w-mat(2,2)",
    "matrix-kp": "w-mat-inf(1,2)",
}

KNOWN_NAMES = [
    "v1", "v2", "v3", "vN", "vN-inf", "v-inf(N)", "wN", "w-inf(N)",
    "v-mat(N,m)", "w-mat(N,m)", "v-mat-inf(N,m)", "w-mat-inf(N,m)",
    "gfz(N)", "virasoro", "virasoro(c)", "broken-demo",
] + sorted(ALIASES)

SELECTIONS = ("H", "K", "HD", "pencil")


def _generator_aliases(N: int, m: int, reduced: bool) -> Dict[VarKey, str]:
    """Plain names for the scalar W-algebras: u for W_2, u and v for W_3"""
    if m != 1 or not reduced:
        return {}
    if N == 2:
        return {generator(-1): "u"}
    if N == 3:
        return {generator(-2): "u", generator(-1): "v"}
    return {}


@dataclass
class StructureBundle:
    """A named algebra with its available structures"""
    name: str
    universe: Universe
    ctx: Optional[AdlerContext] = None
    reduced: bool = False
    primary: Optional[PVAStructure] = None
    aliases: Dict[VarKey, str] = field(default_factory=dict)
    cross_check: bool = False
    _cache: Dict[str, PVAStructure] = field(default_factory=dict, repr=False)

    @property
    def is_agd(self) -> bool:
        return self.ctx is not None

    def select(self, choice: str = "H") -> PVAStructure:
        """
        Structure by role: H (the Dirac-reduced table on W algebras), K, HD or the pencil H - cK.

        Raises:
            UnsupportedOperationError: If the algebra has no such structure
        """
        if choice not in SELECTIONS:
            raise ValueError(f"Unknown structure choice: {choice}. Choose from {', '.join(SELECTIONS)}")
        if choice in self._cache:
            return self._cache[choice]
        structure = self._build(choice)
        structure.aliases.update(self.aliases)
        self._cache[choice] = structure
        return structure

    def _build(self, choice: str) -> PVAStructure:
        if not self.is_agd:
            if choice != "H" or self.primary is None:
                raise UnsupportedOperationError("select", f"{self.name} carries a single structure")
            return self.primary
        ctx = self.ctx
        if choice == "K":
            return build_K(ctx, reduced=self.reduced, cross_check=self.cross_check)
        if choice == "pencil":
            return agd_pencil(ctx, reduced=self.reduced)
        if choice == "HD" and not self.reduced:
            raise UnsupportedOperationError("select", f"{self.name} is not a reduced algebra; use a w name")
        if self.reduced:
            return dirac_reduce(ctx, build_H(ctx))
        return build_H(ctx, cross_check=self.cross_check)

    def key(self, index: int, row: int = 1, col: int = 1) -> VarKey:
        """Generator with the given index and matrix position"""
        if self.universe.keys:
            for key in self.universe.keys:
                if (key.index, key.row, key.col) == (index, row, col):
                    return key
            key = VarKey(self.universe.keys[0].family, index, row, col, 0)
        else:
            key = generator(index, row, col, self.universe.family)
        self.universe.require(key)
        return key


def _broken_demo() -> PVAStructure:
    """Skew-symmetric constant table on x, y, z whose Jacobi identity fails"""
    x, y, z = generator(-3), generator(-2), generator(-1)
    X, Z = DiffPoly.variable(x), DiffPoly.variable(z)
    entries = {}
    for (a, b), value in {(x, y): Z, (y, z): X, (z, x): Z}.items():
        entries[(a, b)] = LambdaValue.monomial(value)
        entries[(b, a)] = LambdaValue.monomial(-value)
    universe = Universe.explicit([x, y, z], description="broken-demo")
    return PVAStructure("broken-demo", universe, TableRule(entries, local=True), kind="demo",
                        aliases={x: "x", y: "y", z: "z"})


_PATTERNS: List[Tuple[str, Callable[..., Tuple[int, int, str, bool]]]] = [
    (r"v(\d+)", lambda n: (int(n), 1, FINITE, False)),
    (r"v(\d+)-inf", lambda n: (int(n), 1, INFINITE, False)),
    (r"w(\d+)", lambda n: (int(n), 1, FINITE, True)),
    (r"v-inf\((\d+)\)", lambda n: (int(n), 1, INFINITE, False)),
    (r"w-inf\((\d+)\)", lambda n: (int(n), 1, INFINITE, True)),
    (r"v-mat\((\d+),(\d+)\)", lambda n, m: (int(n), int(m), FINITE, False)),
    (r"w-mat\((\d+),(\d+)\)", lambda n, m: (int(n), int(m), FINITE, True)),
    (r"v-mat-inf\((\d+),(\d+)\)", lambda n, m: (int(n), int(m), INFINITE, False)),
    (r"w-mat-inf\((\d+),(\d+)\)", lambda n, m: (int(n), int(m), INFINITE, True)),
]


class StructureFactory:
    """Factory for named structures"""

    @staticmethod
    def canonical_name(name: str) -> str:
        cleaned = re.sub(r"\s+", "", name.strip().lower())
        return ALIASES.get(cleaned, cleaned)

    @staticmethod
    def resolve(name: str) -> StructureBundle:
        """
        Resolve a structure name.

        Args:
            name: e.g. w2, v-mat(2,2), gfz(3), virasoro(1/2), kp

        Returns:
            StructureBundle

        Raises:
            StructureNameError: If the name is not recognized
        """
        canonical = StructureFactory.canonical_name(name)

        for pattern, decode in _PATTERNS:
            match = re.fullmatch(pattern, canonical)
            if match:
                N, m, flavor, reduced = decode(*match.groups())
                if N < 1 or m < 1:
                    break
                if reduced and N == 1 and flavor == FINITE:
                    raise UnsupportedOperationError("resolve", "W_1 has no generators")
                ctx = AdlerContext(N, m, flavor)
                logger.debug(f"Resolved {name} to {ctx.describe(reduced)}")
                return StructureBundle(canonical, ctx.universe(reduced), ctx, reduced,
                                       aliases=_generator_aliases(N, m, reduced))

        match = re.fullmatch(r"gfz\((\d+)\)", canonical)
        if match and int(match.group(1)) >= 1:
            structure = gfz_structure(int(match.group(1)))
            return StructureBundle(canonical, structure.universe, primary=structure)

        match = re.fullmatch(r"virasoro(?:\(([-+0-9/]+)\))?", canonical)
        if match:
            c = parse_rational(match.group(1)) if match.group(1) else Fraction(settings.VIRASORO_CENTRAL_CHARGE)
            structure = virasoro_magri_structure(c)
            return StructureBundle(canonical, structure.universe, primary=structure,
                                   aliases=dict(structure.aliases))

        if canonical == "broken-demo":
            structure = _broken_demo()
            return StructureBundle(canonical, structure.universe, primary=structure,
                                   aliases=dict(structure.aliases))

        raise handle_unknown_structure(name, KNOWN_NAMES)

    @staticmethod
    def create_hierarchy_spec(name: str, k_max: Optional[int] = None,
                              floor: Optional[int] = None) -> HierarchySpec:
        """
        HierarchySpec for a named AGD algebra.

        Args:
            name: Structure name (kdv, w3, kp, v-mat(2,2), ...)
            k_max: Highest flow index (default per family from settings)
            floor: Explicit truncation floor
        """
        bundle = StructureFactory.resolve(name)
        if not bundle.is_agd:
            raise UnsupportedOperationError("hierarchy", f"{name} is not an AGD algebra")
        ctx = bundle.ctx
        if k_max is None:
            k_max = settings.default_kmax(ctx.N, ctx.m, not ctx.is_finite)
        policy = TruncationPolicy(floor) if floor is not None else None
        return HierarchySpec(ctx, bundle.reduced, k_max, policy, name=bundle.name)

    @staticmethod
    def known_names() -> List[str]:
        return list(KNOWN_NAMES)
