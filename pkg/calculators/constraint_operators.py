"""
Constraint operators of the matrix Dirac reduction by U_{-N}.

B has entries B_{i,ab;cd}(d) = {u_{-N,cd} d u_{i,ab}}_H and C the entries
C_{ab;cd}(d) = {u_{-N,cd} d u_{-N,ab}}_H. On matrices F they act as
B(lambda; d) F = [F^t, L](lambda) and C(d) F = [F^t, U_{-N}] - N F^t'.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Mapping, Tuple

from calculators.adler_structures import AdlerContext, h_entry
from models.differential_polynomial import DiffPoly, generator
from models.lambda_value import neg_shift_apply
from models.pseudo_differential import (
    Matrix,
    PsiDO,
    compose,
    mat_derivative,
    mat_mul,
    mat_scale,
    mat_sub,
    mat_transpose,
    mat_zero,
)
from utils.exceptions import UnsupportedOperationError

logger = logging.getLogger(__name__)

Symbol = Dict[int, DiffPoly]


def _add_symbol(target: Symbol, power: int, value: DiffPoly) -> None:
    total = target[power] + value if power in target else value
    if total:
        target[power] = total
    else:
        target.pop(power, None)


@dataclass
class DifferentialMatrix:
    """Rectangular matrix of differential operators, entries stored as symbols"""
    rows: List[Hashable]
    cols: List[Hashable]
    entries: Dict[Tuple[Hashable, Hashable], Symbol] = field(default_factory=dict)

    def entry(self, row: Hashable, col: Hashable) -> Symbol:
        return self.entries.get((row, col), {})

    def apply(self, vector: Mapping[Hashable, DiffPoly]) -> Dict[Hashable, DiffPoly]:
        """(M F)_r = sum_c sum_p M_{rc,p} F_c^{(p)}"""
        result = {row: DiffPoly.zero() for row in self.rows}
        for (row, col), symbol in self.entries.items():
            value = vector.get(col)
            if not value:
                continue
            for p, coefficient in symbol.items():
                result[row] = result[row] + coefficient * value.derivative(p)
        return result

    def adjoint(self) -> "DifferentialMatrix":
        """Formal adjoint: (M*)_{cr} = sum_p (-d)^p o M_{rc,p}"""
        entries: Dict[Tuple[Hashable, Hashable], Symbol] = {}
        for (row, col), symbol in self.entries.items():
            target: Symbol = {}
            for p, coefficient in symbol.items():
                for q, value in neg_shift_apply(p, {0: coefficient}).items():
                    _add_symbol(target, q, value)
            if target:
                entries[(col, row)] = target
        return DifferentialMatrix(list(self.cols), list(self.rows), entries)

    def is_zero(self) -> bool:
        return not any(self.entries.values())


def matrix_to_vector(F: Matrix) -> Dict[Tuple[int, int], DiffPoly]:
    return {(c + 1, d + 1): F[c][d] for c in range(len(F)) for d in range(len(F))}


def vector_to_matrix(vector: Mapping[Tuple[int, int], DiffPoly], m: int) -> Matrix:
    return tuple(
        tuple(vector.get((a, b), DiffPoly.zero()) for b in range(1, m + 1))
        for a in range(1, m + 1)
    )


@dataclass
class ConstraintOps:
    """B(lambda; d), C(d) and their adjoints for one matrix operator context"""
    ctx: AdlerContext
    B: DifferentialMatrix
    C: DifferentialMatrix

    def apply_B(self, F: Matrix) -> Dict[int, Matrix]:
        """B F split by the index i, i.e. the coefficient of lambda^{-i-1}"""
        image = self.B.apply(matrix_to_vector(F))
        m = self.ctx.m
        return {
            i: vector_to_matrix({(a, b): v for (j, a, b), v in image.items() if j == i}, m)
            for i in range(-self.ctx.N, 0)
        }

    def apply_C(self, F: Matrix) -> Matrix:
        return vector_to_matrix(self.C.apply(matrix_to_vector(F)), self.ctx.m)

    def apply_B_star(self, G: Mapping[Tuple[int, int, int], DiffPoly]) -> Matrix:
        """B* applied to a vector indexed by (i, a, b)"""
        return vector_to_matrix(self.B.adjoint().apply(G), self.ctx.m)

    def apply_C_star(self, F: Matrix) -> Matrix:
        return vector_to_matrix(self.C.adjoint().apply(matrix_to_vector(F)), self.ctx.m)


def constraint_ops(ctx: AdlerContext) -> ConstraintOps:
    """Build B and C from the H table of V_{N,m}"""
    if not ctx.is_finite:
        raise UnsupportedOperationError("constraint_ops", "only the finite flavor is supported")
    N, m = ctx.N, ctx.m
    pairs = [(c, d) for c in range(1, m + 1) for d in range(1, m + 1)]
    rows = [(i, a, b) for i in range(-N, 0) for a, b in pairs]
    b_entries: Dict[Tuple[Hashable, Hashable], Symbol] = {}
    c_entries: Dict[Tuple[Hashable, Hashable], Symbol] = {}
    for c, d in pairs:
        constraint = generator(-N, c, d, ctx.family)
        for i, a, b in rows:
            symbol = dict(h_entry(ctx, constraint, generator(i, a, b, ctx.family)).local)
            if not symbol:
                continue
            b_entries[((i, a, b), (c, d))] = symbol
            if i == -N:
                c_entries[((a, b), (c, d))] = symbol
    logger.debug(f"Constraint operators for {ctx.describe()}: {len(b_entries)} nonzero entries of B")
    return ConstraintOps(
        ctx,
        DifferentialMatrix(rows, pairs, b_entries),
        DifferentialMatrix(list(pairs), pairs, c_entries),
    )


def commutator_symbol(ctx: AdlerContext, F: Matrix) -> Dict[int, Matrix]:
    """[F^t, L] read off as i -> coefficient of d^{-i-1}"""
    L = ctx.operator()
    Ft = PsiDO(ctx.m, {0: mat_transpose(F)})
    commutator = compose(Ft, L) - compose(L, Ft)
    return {i: commutator.coefficient(-i - 1) for i in range(-ctx.N, 0)}


def c_closed_form(ctx: AdlerContext, F: Matrix) -> Matrix:
    """[F^t, U_{-N}] - N F^t'"""
    Ft = mat_transpose(F)
    U = ctx.matrix_coefficient(-ctx.N)
    commutator = mat_sub(mat_mul(Ft, U), mat_mul(U, Ft))
    return mat_sub(commutator, mat_scale(mat_derivative(Ft), ctx.N))


def b_commutator_mismatches(ops: ConstraintOps, F: Matrix) -> List[int]:
    """Indices i where B F disagrees with the commutator route"""
    direct = ops.apply_B(F)
    expected = commutator_symbol(ops.ctx, F)
    return [i for i in direct if direct[i] != expected.get(i, mat_zero(ops.ctx.m))]
