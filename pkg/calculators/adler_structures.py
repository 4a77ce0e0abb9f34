"""
AGD bi-Poisson structures built from a generic monic operator L.

L = d^N + U_{-N} d^{N-1} + U_{-N+1} d^{N-2} + ... with U_i the m x m matrix of
generators u_{i,ab}, and the convention u_{-N-1} = identity, u_k = 0 for
k < -N-1 (and for k >= 0 in the finite flavor). Bracket tables are produced
by closed forms; the Adler map residues are kept as an independent route.
"""
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from calculators.axiom_verifier import PENCIL_PARAMETER, pencil
from calculators.master_formula import master_bracket
from config.settings import settings
from models.differential_polynomial import DEFAULT_FAMILY, DiffPoly, VarKey, describe_key, generator
from models.lambda_value import LambdaValue
from models.pseudo_differential import Matrix, PsiDO, TruncationPolicy, compose, mat_zero
from models.structure import FINITE, INFINITE, BracketRule, PVAStructure, Universe
from utils.combinatorics import binomial, kronecker
from utils.exceptions import DegenerateConstraintError, OracleMismatchError, VirasoroShapeError
from utils.random_poly import random_diff_poly

logger = logging.getLogger(__name__)

KINDS = ("H", "K", "HD")


def epsilon(i: int, j: int) -> int:
    """+1 when both indices are non-negative, -1 when both are negative, 0 otherwise"""
    if i >= 0 and j >= 0:
        return 1
    if i < 0 and j < 0:
        return -1
    return 0


@dataclass(frozen=True)
class AdlerContext:
    """Generic monic operator of order N with m x m coefficients"""
    N: int
    m: int = 1
    flavor: str = FINITE
    family: str = DEFAULT_FAMILY

    def __post_init__(self):
        if self.N < 1 or self.m < 1:
            raise ValueError(f"N and m must be positive, got N={self.N}, m={self.m}")
        if self.flavor not in (FINITE, INFINITE):
            raise ValueError(f"Unknown flavor: {self.flavor}")

    @property
    def is_finite(self) -> bool:
        return self.flavor == FINITE

    def universe(self, reduced: bool = False) -> Universe:
        return Universe.agd(self.N, self.m, self.flavor, reduced, self.family)

    def coefficient(self, index: int, row: int = 1, col: int = 1, reduced: bool = False) -> DiffPoly:
        """u_{index,row col} with the boundary conventions applied"""
        if index < -self.N - 1:
            return DiffPoly.zero()
        if index == -self.N - 1:
            return DiffPoly.constant(kronecker(row, col))
        if reduced and index == -self.N:
            return DiffPoly.zero()
        if self.is_finite and index >= 0:
            return DiffPoly.zero()
        return DiffPoly.gen(index, row, col, self.family)

    def matrix_coefficient(self, index: int, reduced: bool = False) -> Matrix:
        return tuple(
            tuple(self.coefficient(index, a, b, reduced) for b in range(1, self.m + 1))
            for a in range(1, self.m + 1)
        )

    def operator(self, policy: Optional[TruncationPolicy] = None, reduced: bool = False) -> PsiDO:
        """
        The operator L; infinite flavors are cut at the policy floor.

        Args:
            policy: Required for the infinite flavor
            reduced: Set u_{-N} = 0

        Returns:
            L as a PsiDO
        """
        if self.is_finite:
            top = -1
            floor = None
        else:
            if policy is None:
                raise ValueError("The infinite flavor needs a truncation policy")
            floor = policy.floor
            top = -floor - 1
        coeffs = {self.N: self.matrix_coefficient(-self.N - 1)}
        for index in range(-self.N, top + 1):
            coeffs[-index - 1] = self.matrix_coefficient(index, reduced)
        return PsiDO(self.m, coeffs, floor)

    def describe(self, reduced: bool = False) -> str:
        return self.universe(reduced).description


# ============================================================================
# Adler maps
# ============================================================================

def adler_apply(L: PsiDO, F: PsiDO, policy: Optional[TruncationPolicy] = None) -> PsiDO:
    """(LF)_+ L - L (FL)_+"""
    LF = compose(L, F, policy)
    FL = compose(F, L, policy)
    return compose(LF.plus(), L, policy) - compose(L, FL.plus(), policy)


def adler_apply_dual(L: PsiDO, F: PsiDO, policy: TruncationPolicy) -> PsiDO:
    """L (FL)_- - (LF)_- L, equal to adler_apply down to the common floor"""
    LF = compose(L, F, policy)
    FL = compose(F, L, policy)
    return compose(L, FL.minus(), policy) - compose(LF.minus(), L, policy)


def first_adler_apply(L: PsiDO, F: PsiDO, policy: Optional[TruncationPolicy] = None) -> PsiDO:
    """(LF)_+ - (FL)_+ + F_+ L - L F_+, the part of the Adler map of L - c linear in c"""
    LF = compose(L, F, policy)
    FL = compose(F, L, policy)
    F_plus = F.plus()
    return LF.plus() - FL.plus() + compose(F_plus, L, policy) - compose(L, F_plus, policy)


def _elementary(m: int, row: int, col: int, value: DiffPoly) -> Matrix:
    rows = [list(r) for r in mat_zero(m)]
    rows[row - 1][col - 1] = value
    return tuple(tuple(r) for r in rows)


def oracle_entry(ctx: AdlerContext, i: int, j: int, ab: Tuple[int, int], cd: Tuple[int, int],
                 f: DiffPoly, kind: str = "H", reduced: bool = False) -> DiffPoly:
    """
    The operator {u_{j,cd} lambda u_{i,ab}}(d) applied to f, through the Adler map.

    Reads entry (a, b) of the coefficient of d^{-i-1} in A(d^j o f E_dc), where A is
    the Adler map of L for kind H and its c-linear part for kind K.
    """
    N, m = ctx.N, ctx.m
    if i < -N or j < -N:
        return DiffPoly.zero()
    margin = settings.CONVERGENCE_MARGIN
    floor = min(-N - 1, -i - 1 - N - abs(j)) - 2 - margin
    policy = TruncationPolicy(floor, margin)
    L = ctx.operator(policy, reduced)
    a, b = ab
    c, d = cd
    F = compose(PsiDO.d(j, m), PsiDO(m, {0: _elementary(m, d, c, f)}), policy)
    image = adler_apply(L, F, policy) if kind == "H" else first_adler_apply(L, F, policy)
    return image.entry(-i - 1, a, b)


def apply_entry(value: LambdaValue, f: DiffPoly) -> DiffPoly:
    """sum_p h_p f^{(p)} for a local value sum_p h_p lambda^p"""
    total = DiffPoly.zero()
    for p, h in value.local.items():
        total = total + h * f.derivative(p)
    return total


# ============================================================================
# Closed forms
# ============================================================================

def h_entry(ctx: AdlerContext, x: VarKey, y: VarKey, reduced: bool = False) -> LambdaValue:
    """{u_{i,ab} lambda u_{j,cd}}_H for x = u_{i,ab}, y = u_{j,cd}"""
    N = ctx.N
    i, a, b = x.index, x.row, x.col
    j, c, d = y.index, y.row, y.col

    def u(index, row, col):
        return ctx.coefficient(index, row, col, reduced)

    total = LambdaValue.zero()
    for k in range(0, i + N + 1):
        left = u(i - k - 1, c, b)
        if not left:
            continue
        for alpha in range(k + 1):
            right = u(j + k - alpha, a, d)
            if right:
                total = total + LambdaValue.term(left, alpha, right).scale(binomial(k, alpha))

    for k in range(0, i + N + 1):
        for beta in range(0, i + N - k + 1):
            right = u(i - beta - k - 1, a, d)
            c_beta = binomial(i - k - 1, beta)
            if not right or not c_beta:
                continue
            for alpha in range(0, j + k + N + 2):
                c_alpha = (-1) ** alpha * binomial(j, alpha)
                left = u(j + k - alpha, c, b)
                if not c_alpha or not left:
                    continue
                term = LambdaValue.term(left, alpha + beta, right)
                total = total - term.scale(c_alpha * c_beta)
    return total


def k_entry(ctx: AdlerContext, x: VarKey, y: VarKey, reduced: bool = False) -> LambdaValue:
    """{u_{i,ab} lambda u_{j,cd}}_K for x = u_{i,ab}, y = u_{j,cd}"""
    i, a, b = x.index, x.row, x.col
    j, c, d = y.index, y.row, y.col
    sign = epsilon(i, j)
    if not sign:
        return LambdaValue.zero()
    total = LambdaValue.zero()
    for k in range(0, i + j + ctx.N + 2):
        if kronecker(c, b):
            value = ctx.coefficient(i + j - k, a, d, reduced)
            coeff = binomial(i, k)
            if value and coeff:
                total = total + LambdaValue.term(DiffPoly.one(), k, value).scale(coeff)
        if kronecker(a, d):
            value = ctx.coefficient(i + j - k, c, b, reduced)
            coeff = binomial(j, k) * (-1) ** k
            if value and coeff:
                total = total - LambdaValue.monomial(value.scale(coeff), k)
    return total.scale(sign)


def dirac_correction(ctx: AdlerContext, x: VarKey, y: VarKey) -> LambdaValue:
    """
    -(1/N) sum_{alpha, beta >= 1} (-1)^alpha C(j, alpha) C(i, beta) u_{j-alpha} (lambda+d)^{alpha+beta-1} u_{i-beta}

    Scalar case; the result is local.
    """
    N = ctx.N
    i, j = x.index, y.index
    total = LambdaValue.zero()
    for alpha in range(1, j + N + 2):
        c_alpha = (-1) ** alpha * binomial(j, alpha)
        left = ctx.coefficient(j - alpha, reduced=True)
        if not c_alpha or not left:
            continue
        for beta in range(1, i + N + 2):
            c_beta = binomial(i, beta)
            right = ctx.coefficient(i - beta, reduced=True)
            if not c_beta or not right:
                continue
            total = total + LambdaValue.term(left, alpha + beta - 1, right).scale(c_alpha * c_beta)
    return total.scale(Fraction(-1, N))


def dirac_correction_matrix(ctx: AdlerContext, x: VarKey, y: VarKey) -> LambdaValue:
    """
    Dirac correction of the matrix H table, possibly nonlocal.

    Coefficient extraction from
      - (1/N) L_cb(w+lambda+d) (lambda+d)^{-1} L*_ad(-z+lambda)
      - (1/N) L_ad(w) (lambda+d)^{-1} L_cb(z)
      + (1/N) sum_k delta_ad L_ck(w+lambda+d) (lambda+d)^{-1} L_kb(z)
      + (1/N) sum_k delta_cb L_kd(w) (lambda+d)^{-1} L*_ak(-z+lambda)
    at z^{-i-1} w^{-j-1}.
    """
    N, m = ctx.N, ctx.m
    i, a, b = x.index, x.row, x.col
    j, c, d = y.index, y.row, y.col

    def u(index, row, col):
        return ctx.coefficient(index, row, col, reduced=True)

    def w_shift(s):
        return (-1) ** s * binomial(j, s)

    def z_dual(t):
        return binomial(i, t)

    total = LambdaValue.zero()
    for s in range(0, j + N + 2):
        left = u(j - s, c, b)
        if not left or not w_shift(s):
            continue
        for t in range(0, i + N + 2):
            right = u(i - t, a, d)
            if not right or not z_dual(t):
                continue
            total = total - LambdaValue.term(left, s + t - 1, right).scale(w_shift(s) * z_dual(t))

    total = total - LambdaValue.term(u(j, a, d), -1, u(i, c, b))

    if a == d:
        for k in range(1, m + 1):
            for s in range(0, j + N + 2):
                left = u(j - s, c, k)
                right = u(i, k, b)
                if left and right and w_shift(s):
                    total = total + LambdaValue.term(left, s - 1, right).scale(w_shift(s))
    if c == b:
        for k in range(1, m + 1):
            for t in range(0, i + N + 2):
                left = u(j, k, d)
                right = u(i - t, a, k)
                if left and right and z_dual(t):
                    total = total + LambdaValue.term(left, t - 1, right).scale(z_dual(t))
    return total.scale(Fraction(1, N))


def hd_entry(ctx: AdlerContext, x: VarKey, y: VarKey) -> LambdaValue:
    """Dirac-reduced H entry on W"""
    correction = dirac_correction(ctx, x, y) if ctx.m == 1 else dirac_correction_matrix(ctx, x, y)
    return h_entry(ctx, x, y, reduced=True) + correction


# ============================================================================
# Rules and structures
# ============================================================================

class AGDRule(BracketRule):
    """Closed-form AGD table of kind H, K or HD, optionally cross-checked against the Adler map"""

    def __init__(self, ctx: AdlerContext, kind: str, reduced: bool = False,
                 cross_check: bool = False, samples: int = 2, seed: Optional[int] = None):
        if kind not in KINDS:
            raise ValueError(f"Unknown AGD table kind: {kind}")
        self.ctx = ctx
        self.kind = kind
        self.reduced = reduced or kind == "HD"
        self.cross_check = cross_check and kind != "HD"
        self.samples = samples
        self.seed = settings.RANDOM_SEED if seed is None else seed
        self.local = kind != "HD" or ctx.m == 1

    def entry(self, x: VarKey, y: VarKey) -> LambdaValue:
        if self.kind == "H":
            value = h_entry(self.ctx, x, y, self.reduced)
        elif self.kind == "K":
            value = k_entry(self.ctx, x, y, self.reduced)
        else:
            value = hd_entry(self.ctx, x, y)
        if self.cross_check:
            self._check(x, y, value)
        return value

    def _check(self, x: VarKey, y: VarKey, value: LambdaValue) -> None:
        rng = random.Random(f"{self.seed}:{x}:{y}")
        pool = [x, y, generator(-self.ctx.N, 1, 1, self.ctx.family)]
        if self.reduced:
            pool = [key for key in pool if key.index != -self.ctx.N]
        for _ in range(self.samples):
            f = random_diff_poly(pool, rng)
            expected = apply_entry(value, f)
            actual = oracle_entry(self.ctx, y.index, x.index, (y.row, y.col), (x.row, x.col),
                                  f, self.kind, self.reduced)
            if expected != actual:
                label = f"{{{describe_key(x, self.ctx.m)} lambda {describe_key(y, self.ctx.m)}}}_{self.kind}"
                raise OracleMismatchError(label, repr(expected - actual))
        logger.debug(f"Oracle agrees on {x}, {y} ({self.kind})")


def oracle_mismatches(ctx: AdlerContext, kind: str = "H", samples: Optional[int] = None,
                      max_index: Optional[int] = None, seed: Optional[int] = None) -> List[str]:
    """
    Compare every closed-form entry with the Adler map on random test polynomials.

    Args:
        ctx: Operator context
        kind: H or K
        samples: Test polynomials per entry (default from settings)
        max_index: Highest generator index for infinite flavors
        seed: Seed for the test polynomials

    Returns:
        Labels of the disagreeing entries
    """
    samples = settings.ORACLE_SAMPLES if samples is None else samples
    rng = random.Random(settings.RANDOM_SEED if seed is None else seed)
    generators = ctx.universe().generators(
        max_index if max_index is not None or ctx.is_finite else settings.INFINITE_INDEX_LIMIT
    )
    rule = AGDRule(ctx, kind)
    mismatches = []
    for x in generators:
        for y in generators:
            value = rule.entry(x, y)
            for _ in range(samples):
                f = random_diff_poly(generators, rng)
                actual = oracle_entry(ctx, y.index, x.index, (y.row, y.col), (x.row, x.col), f, kind)
                if apply_entry(value, f) != actual:
                    mismatches.append(f"{describe_key(x, ctx.m)}, {describe_key(y, ctx.m)}")
                    break
    logger.info(f"Oracle sweep on {ctx.describe()} ({kind}): {len(mismatches)} mismatches")
    return mismatches


def build_H(ctx: AdlerContext, cross_check: bool = False) -> PVAStructure:
    """Second AGD structure on V"""
    universe = ctx.universe()
    return PVAStructure(f"{universe.description} H", universe, AGDRule(ctx, "H", cross_check=cross_check),
                        kind="H")


def build_K(ctx: AdlerContext, reduced: bool = False, cross_check: bool = False) -> PVAStructure:
    """First AGD structure on V, or its restriction to W"""
    universe = ctx.universe(reduced)
    rule = AGDRule(ctx, "K", reduced=reduced, cross_check=cross_check)
    return PVAStructure(f"{universe.description} K", universe, rule, kind="K")


def dirac_reduce(ctx: AdlerContext, structure: PVAStructure) -> PVAStructure:
    """
    Dirac reduction of the H table by the constraints u_{-N,ab}.

    K is untouched by the reduction (the constraints are central for it) and has a
    degenerate constraint matrix, so reducing it is an error.
    """
    if structure.kind == "K":
        raise DegenerateConstraintError(
            "{u_-N lambda u_-N}_K = 0; the constraints are central for K, restrict it with build_K(reduced=True)"
        )
    if structure.kind != "H":
        raise DegenerateConstraintError(f"{structure.name} is not an AGD H table")
    universe = ctx.universe(reduced=True)
    logger.info(f"Dirac reduction of {structure.name} to {universe.description}")
    return PVAStructure(f"{universe.description} H", universe, AGDRule(ctx, "HD"), kind="HD")


def agd_pencil(ctx: AdlerContext, reduced: bool = False) -> PVAStructure:
    """H - cK on V, or H^D - cK on W"""
    H = dirac_reduce(ctx, build_H(ctx)) if reduced else build_H(ctx)
    K = build_K(ctx, reduced)
    coefficient = -DiffPoly.variable(PENCIL_PARAMETER)
    return pencil(H, K, coefficient, name=f"{H.universe.description} H-cK")


# ============================================================================
# Virasoro diagnostics
# ============================================================================

@dataclass
class VirasoroReport:
    """Central charge of T and conformal weights of the generators"""
    structure_name: str
    central_charge: Fraction
    weights: Dict[str, Fraction] = field(default_factory=dict)
    expected_weights: Dict[str, Fraction] = field(default_factory=dict)
    issues: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.issues


def virasoro_element(ctx: AdlerContext) -> DiffPoly:
    """T = tr U_{-N+1}"""
    total = DiffPoly.zero()
    for a in range(1, ctx.m + 1):
        total = total + ctx.coefficient(-ctx.N + 1, a, a, reduced=True)
    return total


def virasoro_report(ctx: AdlerContext, structure: PVAStructure,
                    max_index: Optional[int] = None) -> VirasoroReport:
    """
    Check that T is a Virasoro element of the reduced structure and read off weights.

    Raises:
        VirasoroShapeError: If {T lambda T} is not (2 lambda + d) T + c lambda^3
    """
    if ctx.N < 2:
        raise VirasoroShapeError("W_1 has no generators")
    T = virasoro_element(ctx)
    tt = master_bracket(structure, T, T)
    if not tt.is_local():
        raise VirasoroShapeError("{T lambda T} has a nonlocal part")
    if tt.coefficient(0) != T.derivative():
        raise VirasoroShapeError(f"lambda^0 coefficient is {tt.coefficient(0)!r}, expected T'")
    if tt.coefficient(1) != T.scale(2):
        raise VirasoroShapeError(f"lambda^1 coefficient is {tt.coefficient(1)!r}, expected 2T")
    if tt.coefficient(2) or tt.degree() > 3 or not tt.coefficient(3).is_constant():
        raise VirasoroShapeError(f"higher lambda terms are not a constant lambda^3: {tt!r}")
    charge = tt.coefficient(3).rational_value() or Fraction(0)

    report = VirasoroReport(structure.name, charge)
    if max_index is None and not ctx.is_finite:
        max_index = settings.INFINITE_INDEX_LIMIT
    for x in structure.generators(max_index):
        label = structure.aliases.get(x, describe_key(x, ctx.m))
        value = master_bracket(structure, T, x)
        gen = DiffPoly.variable(x)
        expected = Fraction(ctx.N + x.index + 1)
        report.expected_weights[label] = expected
        if not value.is_local():
            report.issues.append(f"{{T lambda {label}}} has a nonlocal part")
        if value.coefficient(0) != gen.derivative():
            report.issues.append(f"{{T lambda {label}}} at lambda^0 is not {label}'")
        first = value.coefficient(1)
        weight = first.coefficient(((x, 1),))
        report.weights[label] = weight
        if first != gen.scale(weight):
            report.issues.append(f"{{T lambda {label}}} at lambda^1 is not a multiple of {label}")
        elif weight != expected:
            report.issues.append(f"{label} has weight {weight}, expected {expected}")
    logger.info(f"{structure.name}: central charge {charge}, {len(report.issues)} issues")
    return report
