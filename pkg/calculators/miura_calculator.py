"""
Miura maps: factorizations of the AGD operator and their homomorphism checks.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from calculators.adler_structures import AGDRule, AdlerContext, build_H, dirac_reduce
from calculators.calculator_interface import CalculatorInterface
from calculators.dirac_reduction import generic_dirac
from calculators.master_formula import master_bracket
from config.settings import settings
from models.differential_polynomial import DiffPoly, VarKey, describe_key, generator
from models.lambda_value import LambdaValue
from models.miura_map import MiuraMap, gfz_generator, gfz_structure, negative_identity
from models.pseudo_differential import PsiDO, TruncationPolicy, compose
from models.structure import FINITE, PVAStructure, ProductRule, Universe
from utils.exceptions import UnsupportedOperationError
from utils.parallel import run_tasks

logger = logging.getLogger(__name__)

FACTOR_FAMILIES = ("a", "b", "d", "e", "f", "g")


def _images_from(product: PsiDO, source: AdlerContext, indices: Sequence[int]) -> Dict[VarKey, DiffPoly]:
    images = {}
    for i in indices:
        for a in range(1, source.m + 1):
            for b in range(1, source.m + 1):
                images[generator(i, a, b, source.family)] = product.entry(-i - 1, a, b)
    return images


# ============================================================================
# Free-field Miura maps
# ============================================================================

def miura_operator(N: int, v: Optional[Sequence[DiffPoly]] = None) -> PsiDO:
    """(d + v_N)(d + v_{N-1}) ... (d + v_1)"""
    if v is None:
        v = [DiffPoly.variable(gfz_generator(i)) for i in range(1, N + 1)]
    result = PsiDO.identity()
    for value in reversed(list(v)):
        result = compose(result, PsiDO.scalar({1: 1, 0: value}))
    return result


def miura_image(N: int, S: Optional[Sequence[Sequence[Fraction]]] = None) -> MiuraMap:
    """
    The Miura map V_N -> R_N, u_i = coefficient of d^{-i-1} in the factored operator.

    Args:
        N: Order of L
        S: GFZ matrix of the target (default: minus the identity)
    """
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    ctx = AdlerContext(N)
    target = gfz_structure(N, S if S is not None else negative_identity(N))
    images = _images_from(miura_operator(N), ctx, range(-N, 0))
    leading = [((DiffPoly.variable(gfz_generator(i)),),) for i in range(1, N + 1)]
    logger.debug(f"Miura map of V_{N}: {len(images)} images")
    return MiuraMap(f"miura({N})", build_H(ctx), target, images, leading, top_index=-N)


def dirac_miura(N: int) -> MiuraMap:
    """
    The Miura map W_N -> R_N / (v_1 + ... + v_N).

    v_N is eliminated as -(v_1 + ... + v_{N-1}); the target bracket is the Dirac
    reduction of the GFZ algebra by the sum of the fields.
    """
    if N < 2:
        raise ValueError(f"The reduced Miura map needs N >= 2, got {N}")
    ctx = AdlerContext(N)
    gfz = gfz_structure(N, negative_identity(N))
    kept = [gfz_generator(i) for i in range(1, N)]
    eliminated = gfz_generator(N)
    elimination = {eliminated: -sum((DiffPoly.variable(k) for k in kept), DiffPoly.zero())}
    constraint = sum((DiffPoly.variable(gfz_generator(i)) for i in range(1, N + 1)), DiffPoly.zero())
    target = generic_dirac(
        gfz, [constraint],
        target=Universe.explicit(kept, description=f"R_{N}/(v_1+...+v_{N})"),
        elimination=elimination,
        name=f"gfz({N})^D",
    )

    v = [DiffPoly.variable(k) for k in kept] + [elimination[eliminated]]
    images = _images_from(miura_operator(N, v), ctx, range(-N + 1, 0))
    source = dirac_reduce(ctx, build_H(ctx))
    aliases = {kept[0]: "v"} if N == 2 else {}
    target.aliases.update(aliases)
    source.aliases.update({generator(-1): "u"} if N == 2 else {})
    return MiuraMap(f"miura({N})^D", source, target, images)


# ============================================================================
# Generalized Miura maps
# ============================================================================

def product_miura(orders: Sequence[int], m: int = 1, flavor: str = FINITE,
                  families: Optional[Sequence[str]] = None,
                  max_index: Optional[int] = None) -> MiuraMap:
    """
    mu(L) = A_1 o A_2 o ... for Adler operators A_k of the given orders.

    The target is the tensor product of the H structures of the factors, so
    brackets between different factors vanish. Infinite flavors compute images
    of generators up to `max_index` and of everything their source brackets need.

    Args:
        orders: Orders of the factors, left to right
        m: Matrix size of every factor
        flavor: finite or infinite
        families: Variable family of each factor
        max_index: Highest source index checked (infinite flavor)
    """
    if not orders or any(n < 1 for n in orders):
        raise ValueError(f"Factor orders must be positive, got {list(orders)}")
    families = list(families or FACTOR_FAMILIES[:len(orders)])
    if len(families) != len(orders) or len(set(families)) != len(families):
        raise ValueError("Each factor needs its own variable family")
    total = sum(orders)
    contexts = [AdlerContext(n, m, flavor, fam) for n, fam in zip(orders, families)]
    source_ctx = AdlerContext(total, m, flavor)

    if source_ctx.is_finite:
        indices = list(range(-total, 0))
        checked = indices
        product = PsiDO.identity(m)
        for ctx in contexts:
            product = compose(product, ctx.operator())
    else:
        top = settings.INFINITE_INDEX_LIMIT if max_index is None else max_index
        checked = list(range(-total, top + 1))
        # generous reach for the source brackets of u_i, u_j
        highest = 2 * top + 2 * total + 2
        indices = list(range(-total, highest + 1))
        policy = TruncationPolicy(-highest - 1 - total)
        product = PsiDO.identity(m)
        for ctx in contexts:
            product = compose(product, ctx.operator(policy), policy)

    images = _images_from(product, source_ctx, indices)
    rules = {ctx.family: AGDRule(ctx, "H") for ctx in contexts}
    keys = set()
    for ctx in contexts:
        if ctx.is_finite:
            keys.update(ctx.universe().generators())
    for value in images.values():
        keys.update(k.base() for k in value.variables() if not k.is_parameter)
    label = ",".join(str(n) for n in orders)
    target = PVAStructure(
        f"H_({label})" + ("" if m == 1 else f"_m={m}"),
        Universe.explicit(keys, description=" x ".join(ctx.describe() for ctx in contexts)),
        ProductRule(rules),
        kind="product",
    )
    leading = [ctx.matrix_coefficient(-ctx.N) for ctx in contexts]
    source = build_H(source_ctx)
    logger.info(f"Miura map of type ({label}) into {target.universe.description}")
    return MiuraMap(f"miura({label})", source, target, images, leading, top_index=-total,
                    source_generators=[k for k in sorted(images) if k.index in checked])


def general_miura(M: int, N: int, m: int = 1, flavor: str = FINITE,
                  max_index: Optional[int] = None,
                  families: Sequence[str] = ("a", "b")) -> MiuraMap:
    """Generalized Miura map of type (M, N): u_i = coefficient of d^{-i-1} in A o B"""
    return product_miura([M, N], m, flavor, families, max_index)


def matrix_miura(N: int, m: int) -> MiuraMap:
    """(d + V_N) ... (d + V_1) with affine gl_m factors"""
    return product_miura([1] * N, m, families=FACTOR_FAMILIES[:N])


def composition_coherence() -> Dict[VarKey, DiffPoly]:
    """
    Type (1,1) followed by a third factor against the direct type (1,1,1) map.

    Returns:
        Generator -> difference of the two images, nonzero entries only
    """
    outer = general_miura(2, 1, families=("p", "d"))
    inner = general_miura(1, 1, families=("a", "b"))
    rename = {generator(k.index, k.row, k.col, "p"): value for k, value in inner.images.items()}
    direct = product_miura([1, 1, 1], families=("a", "b", "d"))
    result = {}
    for key, value in outer.images.items():
        difference = value.substitute(rename) - direct.images[key]
        if difference:
            result[key] = difference
    return result


# ============================================================================
# Homomorphism checks
# ============================================================================

def pair_residual(miura: MiuraMap, x: VarKey, y: VarKey) -> LambdaValue:
    """{mu(x) lambda mu(y)} in the target minus mu({x lambda y}) from the source"""
    lhs = master_bracket(miura.target, miura.images[x], miura.images[y])
    return lhs - miura.image_value(miura.source.bracket(x, y))


def miura_hom_residual(N: int, i: int, j: int,
                       S: Optional[Sequence[Sequence[Fraction]]] = None) -> LambdaValue:
    """Homomorphism residual of miura_image(N) on the pair (u_i, u_j)"""
    miura = miura_image(N, S)
    return pair_residual(miura, generator(i), generator(j))


@dataclass
class MiuraRecord:
    """Residual of one generator pair"""
    indices: Tuple[VarKey, VarKey]
    residual: LambdaValue
    labels: Tuple[str, str] = ("", "")

    @property
    def passed(self) -> bool:
        return self.residual.is_zero()


@dataclass
class MiuraResult:
    """Homomorphism and top-coefficient checks of one Miura map"""
    map_name: str
    images: Dict[str, DiffPoly] = field(default_factory=dict)
    records: List[MiuraRecord] = field(default_factory=list)
    top_residual: Dict[VarKey, DiffPoly] = field(default_factory=dict)
    stats: Dict[str, Any] = field(default_factory=dict)
    issues: List[str] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return not self.issues

    def failures(self) -> List[MiuraRecord]:
        return [record for record in self.records if not record.passed]

    def to_dataframe(self) -> pd.DataFrame:
        if not self.records:
            return pd.DataFrame()
        return pd.DataFrame([
            {
                'map': self.map_name,
                'pair': ', '.join(record.labels),
                'passed': record.passed,
                'residual_terms': len(record.residual.local) + len(record.residual.nonlocal_terms),
            }
            for record in self.records
        ])


def _evaluate(task: Tuple[MiuraMap, VarKey, VarKey]) -> MiuraRecord:
    miura, x, y = task
    m = miura.m
    labels = tuple(miura.source.aliases.get(k, describe_key(k, m)) for k in (x, y))
    return MiuraRecord((x, y), pair_residual(miura, x, y), labels)


class MiuraCalculator(CalculatorInterface[MiuraMap, MiuraResult]):
    """Checks that a Miura map is a PVA homomorphism on every generator pair"""

    def __init__(self, jobs: Optional[int] = None):
        self.jobs = jobs if jobs is not None else settings.DEFAULT_JOBS

    def validate(self, miura: MiuraMap) -> List[str]:
        issues = []
        if not miura.target.local:
            issues.append(f"target {miura.target.name} is nonlocal")
        missing = [describe_key(k) for k in miura.source_generators if k not in miura.images]
        if missing:
            issues.append(f"no image for {', '.join(missing)}")
        return issues

    def calculate(self, miura: MiuraMap) -> MiuraResult:
        """
        Evaluate the homomorphism residual on all ordered generator pairs.

        Args:
            miura: Map to check

        Returns:
            MiuraResult; nonzero residuals are listed as issues
        """
        issues = self.validate(miura)
        if issues:
            raise UnsupportedOperationError("miura", "; ".join(issues))

        result = MiuraResult(miura.name, images=miura.labelled())
        generators = miura.source_generators
        tasks = [(miura, x, y) for x in generators for y in generators]
        logger.info(f"Checking {miura.name} on {len(tasks)} pairs")
        result.records = run_tasks(_evaluate, tasks, self.jobs)

        failed = result.failures()
        if failed:
            result.issues.append(f"homomorphism: {len(failed)} of {len(tasks)} residuals are nonzero")
        result.top_residual = miura.top_residual()
        if result.top_residual:
            result.issues.append("the top image is not the sum of the factor subleading coefficients")
        result.stats = {'pairs': len(tasks), 'failed': len(failed), 'generators': len(generators)}
        return result
