"""
Conserved densities, flows and Lenard-Magri checks of AGD hierarchies.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Tuple

import pandas as pd

from calculators.adler_structures import AdlerContext, build_H, build_K, dirac_reduce
from calculators.calculator_interface import CalculatorInterface
from calculators.constraint_operators import constraint_ops
from calculators.master_formula import flow, functional_bracket
from config.settings import settings
from models.differential_polynomial import DiffPoly, VarKey, describe_key, generator
from models.hierarchy import FlowEquation, HierarchySpec
from models.pseudo_differential import Matrix, PsiDO, TruncationPolicy, compose, frac_power, mat_from_rows
from models.structure import INFINITE, LocalFunctional, PVAStructure
from utils.combinatorics import binomial
from utils.exceptions import TruncationInstabilityError, UnsupportedOperationError

logger = logging.getLogger(__name__)

STRUCTURE_CHOICES = ("H", "K", "HD")


# ============================================================================
# Densities
# ============================================================================

@lru_cache(maxsize=None)
def _density_at(ctx: AdlerContext, reduced: bool, k: int, policy: TruncationPolicy) -> DiffPoly:
    L = ctx.operator(policy, reduced)
    power = frac_power(L, k, ctx.N, policy)
    return power.trace_residue().scale(Fraction(ctx.N, k))


def density(spec: HierarchySpec, k: int, check_stability: bool = True) -> DiffPoly:
    """
    h_k = (N/k) tr res L^{k/N}.

    Raises:
        TruncationInstabilityError: If the value moves when the floor is lowered by the margin
    """
    if k < 1:
        raise ValueError(f"Density index must be positive, got {k}")
    policy = spec.policy_for(k)
    value = _density_at(spec.ctx, spec.reduced, k, policy)
    if check_stability:
        deeper = _density_at(spec.ctx, spec.reduced, k, policy.deeper())
        if deeper != value:
            raise TruncationInstabilityError(f"h_{k}", policy.floor, policy.convergence_margin)
    logger.debug(f"h_{k} on {spec.label()}: {len(value)} terms")
    return value


def density_varder(spec: HierarchySpec, k: int, i: int, ab: Tuple[int, int] = (1, 1)) -> DiffPoly:
    """delta h_k / delta u_{i,ab} = res_z (z + d)^{-i-1} (L^{k/N - 1})_{ba}(z)"""
    a, b = ab
    policy = spec.policy_for(k)
    policy = policy.at(min(policy.floor, i - 2))
    L = spec.ctx.operator(policy, spec.reduced)
    M = frac_power(L, k - spec.N, spec.N, policy)
    n = -i - 1
    total = DiffPoly.zero()
    for e, coefficient in M.coeffs.items():
        s = n + e + 1
        if s < 0:
            continue
        c = binomial(n, s)
        if c:
            total = total + coefficient[b - 1][a - 1].derivative(s).scale(c)
    return total


def independence_image(spec: HierarchySpec, k: int) -> DiffPoly:
    """delta h_k / delta u_{-N} with every variable except u_{-N} itself set to zero"""
    base = spec.unreduced()
    keep = [generator(-spec.N, a, b, spec.ctx.family) for a in range(1, spec.m + 1) for b in range(1, spec.m + 1)]
    total = DiffPoly.zero()
    for a in range(1, spec.m + 1):
        total = total + density_varder(base, k, -spec.N, (a, a))
    return total.restrict_to(keep)


def expected_independence_image(spec: HierarchySpec, k: int) -> DiffPoly:
    """binom(k/N - 1, k) u_{-N}^k for the scalar case"""
    return DiffPoly.gen(-spec.N, family=spec.ctx.family) ** k * binomial(Fraction(k, spec.N) - 1, k)


# ============================================================================
# Flows
# ============================================================================

def _flow_policy(spec: HierarchySpec, k: int, max_index: int) -> TruncationPolicy:
    """An explicit policy is used as given; the default reaches below the lowest flow entry"""
    if spec.policy is not None:
        return spec.policy
    policy = spec.policy_for(k)
    return policy.at(min(policy.floor, -(max_index + 1) - k - settings.FLOOR_PADDING))


def lax_flow(spec: HierarchySpec, k: int, max_index: Optional[int] = None,
             check_stability: bool = True) -> FlowEquation:
    """
    dL/dt_k = [(L^{k/N})_+, L], read off coefficient-wise.

    Raises:
        TruncationError: If an entry lies below the floor of the commutator
        TruncationInstabilityError: If the flow moves when the floor is lowered by the margin
    """
    generators = spec.generators(max_index)
    top = max(key.index for key in generators) if generators else -1
    policy = _flow_policy(spec, k, top)
    equation = _lax_flow_at(spec, k, generators, policy)
    if check_stability:
        deeper = _lax_flow_at(spec, k, generators, policy.deeper())
        if deeper.rhs != equation.rhs or deeper.constraint_flow != equation.constraint_flow:
            raise TruncationInstabilityError(f"t_{k} flow", policy.floor, policy.convergence_margin)
    return equation


def _lax_flow_at(spec: HierarchySpec, k: int, generators: List[VarKey],
                 policy: TruncationPolicy) -> FlowEquation:
    ctx = spec.ctx
    L = ctx.operator(policy, spec.reduced)
    P = frac_power(L, k, ctx.N, policy).plus()
    commutator = compose(P, L, policy) - compose(L, P, policy)

    equation = FlowEquation(k, route="lax")
    for key in generators:
        equation.rhs[key] = commutator.entry(-key.index - 1, key.row, key.col)
    if spec.reduced:
        for a in range(1, ctx.m + 1):
            for b in range(1, ctx.m + 1):
                key = generator(-ctx.N, a, b, ctx.family)
                equation.constraint_flow[key] = commutator.entry(ctx.N - 1, a, b)
    return equation


def structure_for(spec: HierarchySpec, choice: str) -> PVAStructure:
    """The local structure used by the bracket route"""
    ctx = spec.ctx
    if choice == "K":
        return build_K(ctx, reduced=spec.reduced)
    if choice == "HD":
        if not spec.reduced:
            raise UnsupportedOperationError("bracket_flow", "H^D lives on the reduced algebra")
        if ctx.m > 1:
            raise UnsupportedOperationError(
                "bracket_flow", "the matrix H^D table is nonlocal; use the H route"
            )
        return dirac_reduce(ctx, build_H(ctx))
    if choice == "H":
        return build_H(ctx)
    raise ValueError(f"Unknown structure choice: {choice}")


def bracket_flow(spec: HierarchySpec, choice: str, k: int, max_index: Optional[int] = None) -> FlowEquation:
    """
    du/dt_k = {h_k lambda u}|_{lambda=0} through the Master Formula.

    On a reduced spec the H route is evaluated on the full algebra and then
    restricted by u_{-N} = 0. The tables are exact, so the only truncated input
    is h_k, which `density` re-checks at the deeper floor.
    """
    structure = structure_for(spec, choice)
    equation = FlowEquation(k, route=choice)
    if choice == "H" and spec.reduced:
        h = density(spec.unreduced(), k)
        elimination = {
            generator(-spec.N, a, b, spec.ctx.family): DiffPoly.zero()
            for a in range(1, spec.m + 1) for b in range(1, spec.m + 1)
        }
        for key in spec.generators(max_index):
            equation.rhs[key] = flow(structure, h, key).substitute(elimination)
        return equation
    h = density(spec, k)
    for key in spec.generators(max_index):
        equation.rhs[key] = flow(structure, h, key)
    return equation


def lenard_residual(spec: HierarchySpec, k: int, max_index: Optional[int] = None) -> Dict[VarKey, DiffPoly]:
    """
    {int h_k, u}_H - {int h_{k+N}, u}_K, nonzero generators only.

    Finite scalar W-algebras use the local H^D table; otherwise H is evaluated
    on the full algebra and restricted.
    """
    choice = "HD" if spec.reduced and spec.m == 1 and spec.ctx.is_finite else "H"
    first = bracket_flow(spec, choice, k, max_index)
    second = bracket_flow(spec, "K", k + spec.N, max_index)
    return first.differences(second)


def involution_check(spec: HierarchySpec, k1: int, k2: int) -> Dict[str, LocalFunctional]:
    """{int h_k1, int h_k2} under each local structure of the hierarchy"""
    h1 = LocalFunctional(density(spec, k1))
    h2 = LocalFunctional(density(spec, k2))
    choices = ["K"]
    if not spec.reduced:
        choices.insert(0, "H")
    elif spec.m == 1:
        choices.insert(0, "HD")
    return {choice: functional_bracket(structure_for(spec, choice), h1, h2) for choice in choices}


def b_star_annihilation(spec: HierarchySpec, k: int) -> Matrix:
    """B*(d) delta h_k / delta u on V_{N,m}; the zero matrix is expected"""
    base = spec.unreduced()
    ops = constraint_ops(base.ctx)
    vector = {}
    for i in range(-spec.N, 0):
        for a in range(1, spec.m + 1):
            for b in range(1, spec.m + 1):
                vector[(i, a, b)] = density_varder(base, k, i, (a, b))
    return ops.apply_B_star(vector)


# ============================================================================
# Derivations and reduced equations
# ============================================================================

class FlowDerivation:
    """The evolutionary derivation d/dt_k determined by a FlowEquation"""

    def __init__(self, equation: FlowEquation, constraints: Optional[Mapping[VarKey, DiffPoly]] = None):
        self.equation = equation
        self.constraints = dict(constraints or {})
        self._images: Dict[VarKey, DiffPoly] = {}

    def image(self, key: VarKey) -> DiffPoly:
        """d/dt_k of the variable u^{(n)}, which is d^n of the flow of u"""
        cached = self._images.get(key)
        if cached is None:
            base = key.base()
            if key.is_parameter:
                cached = DiffPoly.zero()
            elif key.order:
                cached = self.image(key._replace(order=key.order - 1)).derivative()
            elif base in self.equation.rhs:
                cached = self.equation.rhs[base]
            elif base in self.constraints:
                cached = self.constraints[base]
            else:
                raise UnsupportedOperationError(
                    "flow derivation", f"no flow of {describe_key(base)} in t_{self.equation.k}"
                )
            self._images[key] = cached
        return cached

    def __call__(self, f: DiffPoly) -> DiffPoly:
        total = DiffPoly.zero()
        for key in sorted(f.variables()):
            if key.is_parameter:
                continue
            partial = f.partial(key)
            if partial:
                total = total + partial * self.image(key)
        return total


REDUCED_EQUATIONS = ("kp", "boussinesq", "matrix_kp")


def _u(index: int, row: int = 1, col: int = 1) -> DiffPoly:
    return DiffPoly.gen(index, row, col)


def _kp_residual() -> Dict[str, DiffPoly]:
    """3 u_yy - (4 u_t - u''' - 6 u u')' with y = t_2, t = t_3, u = 2 u_0"""
    spec = HierarchySpec(AdlerContext(1, 1, INFINITE), reduced=True, k_max=3)
    d_y = FlowDerivation(lax_flow(spec, 2))
    d_t = FlowDerivation(lax_flow(spec, 3))
    u = _u(0).scale(2)
    lhs = d_y(d_y(u)).scale(3)
    rhs = (d_t(u).scale(4) - u.derivative(3) - (u * u.derivative()).scale(6)).derivative()
    return {"kp": lhs - rhs}


def _boussinesq_residual() -> Dict[str, DiffPoly]:
    """u_tt + (1/3)(u'''' + 4 (u u')') with t = t_2 on W_3, u = u_{-2}"""
    spec = HierarchySpec(AdlerContext(3), reduced=True, k_max=2)
    d_t = FlowDerivation(lax_flow(spec, 2))
    u = _u(-2)
    lhs = d_t(d_t(u))
    rhs = (u.derivative(4) + (u * u.derivative()).derivative().scale(4)).scale(Fraction(-1, 3))
    return {"boussinesq": lhs - rhs}


def _matrix_kp_residual(m: int = 2) -> Dict[str, DiffPoly]:
    """W' = U_y and 3 W_y = 4 U_t - U''' - 6 (U^2)' + 6 [U, W] with U = U_0, W = 2 U_1 + U_0'"""
    spec = HierarchySpec(AdlerContext(1, m, INFINITE), reduced=True, k_max=3)
    d_y = FlowDerivation(lax_flow(spec, 2))
    d_t = FlowDerivation(lax_flow(spec, 3))

    def mat(index):
        return mat_from_rows([[_u(index, a, b) for b in range(1, m + 1)] for a in range(1, m + 1)])

    U = PsiDO(m, {0: mat(0)})
    U1 = PsiDO(m, {0: mat(1)})
    W_op = U1.scale(2) + PsiDO(m, {0: tuple(tuple(x.derivative() for x in row) for row in mat(0))})
    U_m = U.coefficient(0)
    W = W_op.coefficient(0)
    squares = compose(U, U).coefficient(0)
    UW = compose(U, W_op).coefficient(0)
    WU = compose(W_op, U).coefficient(0)

    residuals = {}
    for a in range(m):
        for b in range(m):
            label = f"{a + 1}{b + 1}"
            u_ab, w_ab = U_m[a][b], W[a][b]
            residuals[f"W'=U_y[{label}]"] = w_ab.derivative() - d_y(u_ab)
            rhs = (d_t(u_ab).scale(4) - u_ab.derivative(3) - squares[a][b].derivative().scale(6)
                   + (UW[a][b] - WU[a][b]).scale(6))
            residuals[f"3W_y[{label}]"] = d_y(w_ab).scale(3) - rhs
    return residuals


def verify_reduced_pde(name: str) -> Dict[str, DiffPoly]:
    """
    Residuals of a named equation derived from the hierarchy flows.

    Args:
        name: One of kp, boussinesq, matrix_kp

    Returns:
        Label -> residual; every residual vanishes when the flows are right
    """
    if name == "kp":
        return _kp_residual()
    if name == "boussinesq":
        return _boussinesq_residual()
    if name == "matrix_kp":
        return _matrix_kp_residual()
    raise ValueError(f"Unknown equation: {name}. Choose from {', '.join(REDUCED_EQUATIONS)}")


# ============================================================================
# Calculator
# ============================================================================

@dataclass
class HierarchyResult:
    """Densities, flows and route comparisons of one hierarchy"""
    spec_name: str
    densities: Dict[int, DiffPoly] = field(default_factory=dict)
    flows: Dict[int, FlowEquation] = field(default_factory=dict)
    lenard: Dict[int, Dict[VarKey, DiffPoly]] = field(default_factory=dict)
    stats: Dict[str, Any] = field(default_factory=dict)
    issues: List[str] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return not self.issues

    def to_dataframe(self) -> pd.DataFrame:
        """One row per flow index"""
        if not self.densities:
            return pd.DataFrame()
        data = []
        for k, h in sorted(self.densities.items()):
            equation = self.flows.get(k)
            data.append({
                'hierarchy': self.spec_name,
                'k': k,
                'density_terms': len(h),
                'flow_terms': sum(len(v) for v in equation.rhs.values()) if equation else 0,
                'lenard_ok': not self.lenard.get(k) if k in self.lenard else None,
            })
        return pd.DataFrame(data)


class HierarchyCalculator(CalculatorInterface[HierarchySpec, HierarchyResult]):
    """Generates h_1..h_kmax and the Lax flows, comparing them with the bracket routes"""

    def __init__(self, compare_routes: bool = True, check_lenard: bool = True,
                 max_index: Optional[int] = None):
        self.compare_routes = compare_routes
        self.check_lenard = check_lenard
        self.max_index = max_index

    def validate(self, spec: HierarchySpec) -> List[str]:
        issues = []
        if spec.k_max < 1:
            issues.append("k_max must be at least 1")
        if spec.reduced and spec.N == 1 and spec.ctx.flavor != INFINITE:
            issues.append("W_1 has no generators")
        return issues

    def calculate(self, spec: HierarchySpec) -> HierarchyResult:
        """
        Compute densities and flows up to spec.k_max.

        Args:
            spec: Hierarchy to generate

        Returns:
            HierarchyResult; disagreements between routes are reported as issues
        """
        issues = self.validate(spec)
        if issues:
            raise UnsupportedOperationError("hierarchy", "; ".join(issues))

        result = HierarchyResult(spec.label())
        logger.info(f"Generating hierarchy {spec.label()} up to k={spec.k_max}")
        for k in range(1, spec.k_max + 1):
            result.densities[k] = density(spec, k)
            equation = lax_flow(spec, k, self.max_index)
            result.flows[k] = equation
            if not equation.respects_constraint():
                result.issues.append(f"t_{k}: the Lax flow does not preserve u_-N = 0")
            if self.compare_routes:
                self._compare(spec, k, equation, result)
            if self.check_lenard and k + spec.N <= spec.k_max:
                residual = lenard_residual(spec, k, self.max_index)
                result.lenard[k] = residual
                if residual:
                    result.issues.append(f"Lenard-Magri recursion fails at k={k} on {len(residual)} generators")

        result.stats = {
            'k_max': spec.k_max,
            'flows': len(result.flows),
            'lenard_checked': len(result.lenard),
        }
        return result

    def _compare(self, spec: HierarchySpec, k: int, equation: FlowEquation, result: HierarchyResult) -> None:
        routes = ["H"]
        if spec.reduced and spec.m == 1:
            routes.append("HD")
        for choice in routes:
            other = bracket_flow(spec, choice, k, self.max_index)
            differences = equation.differences(other)
            if differences:
                result.issues.append(f"t_{k}: Lax and {choice} flows differ on {len(differences)} generators")
                logger.warning(f"Route mismatch at k={k} ({choice}) for {spec.label()}")
