"""
Dirac modification of a local lambda-bracket by a list of constraints.

{a_lambda b}^D = {a_lambda b} - sum {theta_b_{lambda+d} b}_-> (C^{-1})_{ba}(lambda+d) {a_lambda theta_a}
with C_{ab}(lambda) = {theta_b_lambda theta_a}. The inverse of C(d) is expanded
by truncation, so only constraint matrices whose inverse has at most a first
order tail are supported.
"""
import logging
from typing import Dict, List, Mapping, Optional, Sequence

from calculators.master_formula import master_bracket
from config.settings import settings
from models.differential_polynomial import DiffPoly, VarKey
from models.lambda_value import LambdaValue, apply_symbol, inverse_shift_apply
from models.pseudo_differential import PsiDO, TruncationPolicy, inverse, mat_zero
from models.structure import BracketRule, PVAStructure, Universe
from utils.exceptions import DegenerateConstraintError, NonInvertibleOperatorError, UnsupportedOperationError

logger = logging.getLogger(__name__)


def constraint_matrix(structure: PVAStructure, constraints: Sequence[DiffPoly]) -> PsiDO:
    """C(d) with symbol C_{ab}(lambda) = {theta_b lambda theta_a}"""
    r = len(constraints)
    coeffs: Dict[int, List[List[DiffPoly]]] = {}
    for alpha, theta_a in enumerate(constraints):
        for beta, theta_b in enumerate(constraints):
            value = master_bracket(structure, theta_b, theta_a)
            for p, coefficient in value.local.items():
                rows = coeffs.setdefault(p, [list(row) for row in mat_zero(r)])
                rows[alpha][beta] = coefficient
    return PsiDO(r, {p: tuple(tuple(row) for row in rows) for p, rows in coeffs.items()})


def _symbol(operator: PsiDO, row: int, col: int) -> Dict[int, DiffPoly]:
    return {e: A[row][col] for e, A in operator.coeffs.items() if A[row][col]}


class DiracRule(BracketRule):
    """Dirac-modified entries of a local structure, pushed through an elimination map"""

    def __init__(self, structure: PVAStructure, constraints: Sequence[DiffPoly], inverse_c: PsiDO,
                 elimination: Optional[Mapping[VarKey, DiffPoly]] = None):
        self.structure = structure
        self.constraints = list(constraints)
        self.inverse_c = inverse_c
        self.elimination = dict(elimination or {})
        self.local = False

    def entry(self, x: VarKey, y: VarKey) -> LambdaValue:
        S = self.structure
        correction = LambdaValue.zero()
        for alpha, theta_a in enumerate(self.constraints):
            right = master_bracket(S, x, theta_a).local
            if not right:
                continue
            for beta, theta_b in enumerate(self.constraints):
                symbol = _symbol(self.inverse_c, beta, alpha)
                if not symbol:
                    continue
                middle = LambdaValue(apply_symbol({e: q for e, q in symbol.items() if e >= 0}, right))
                if -1 in symbol:
                    middle = middle + inverse_shift_apply(right).left_multiply(symbol[-1])
                if middle.is_zero():
                    continue
                # {theta_b_{lambda+d} y}_-> acting on everything to its right
                for k, p in master_bracket(S, theta_b, y).local.items():
                    correction = correction + middle.shift(k).left_multiply(p)
        value = S.bracket(x, y) - correction
        return value.substitute(self.elimination)


def generic_dirac(structure: PVAStructure, constraints: Sequence[DiffPoly],
                  target: Optional[Universe] = None,
                  elimination: Optional[Mapping[VarKey, DiffPoly]] = None,
                  policy: Optional[TruncationPolicy] = None,
                  name: Optional[str] = None) -> PVAStructure:
    """
    Dirac reduction of a local structure by `constraints`.

    Args:
        structure: Local structure to modify
        constraints: Elements theta_1..theta_r
        target: Universe of the quotient (default: the source universe)
        elimination: Substitution identifying the quotient with `target`
        policy: Truncation used to expand C^{-1}
        name: Name of the reduced structure

    Returns:
        The Dirac-reduced structure; with no constraints, the input itself

    Raises:
        DegenerateConstraintError: If C(d) is not invertible
    """
    if not constraints:
        return structure
    if not structure.local:
        raise UnsupportedOperationError("generic_dirac", f"{structure.name} is nonlocal")

    C = constraint_matrix(structure, constraints)
    if C.is_zero():
        raise DegenerateConstraintError("the constraints are central, C = 0")
    order = C.order
    if policy is None:
        policy = TruncationPolicy(-order - 2 - settings.CONVERGENCE_MARGIN)
    try:
        inverse_c = inverse(C, policy)
    except NonInvertibleOperatorError as e:
        raise DegenerateConstraintError(e.details or e.message) from e

    deep = [e for e, A in inverse_c.coeffs.items() if e < -1]
    if deep:
        raise UnsupportedOperationError(
            "generic_dirac", f"C^-1 has terms down to d^{min(deep)}; only first-order tails are modelled"
        )
    logger.info(f"Dirac reduction of {structure.name} by {len(constraints)} constraints (C of order {order})")
    rule = DiracRule(structure, constraints, inverse_c, elimination)
    reduced = PVAStructure(name or f"{structure.name}^D", target or structure.universe, rule,
                           kind="dirac", aliases=dict(structure.aliases))
    if reduced.universe.is_finite:
        # the (lambda + d)^{-1} tails usually cancel; check the whole table once
        rule.local = all(value.is_local() for value in reduced.table().values())
    return reduced
