"""
Matrix pseudodifferential operators with explicit truncation floors.

A PsiDO stores a map exponent -> m x m matrix of DiffPoly. The `floor` is the
lowest exponent known exactly; None means the operator is an exact finite
Laurent sum. Every operation tracks which exponents of its result are fully
determined and never reports coefficients below that bound.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from config.settings import settings
from models.differential_polynomial import DiffPoly, VarKey
from utils.combinatorics import binomial
from utils.exceptions import (
    MismatchedOperandsError,
    NonInvertibleOperatorError,
    NonMonicOperatorError,
    TruncationError,
)

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[DiffPoly, ...], ...]


# ============================================================================
# Matrix helpers
# ============================================================================

def mat_zero(m: int) -> Matrix:
    return tuple(tuple(DiffPoly.zero() for _ in range(m)) for _ in range(m))


def mat_identity(m: int) -> Matrix:
    return tuple(
        tuple(DiffPoly.one() if a == b else DiffPoly.zero() for b in range(m))
        for a in range(m)
    )


def mat_scalar(value: Union[DiffPoly, int, Fraction], m: int) -> Matrix:
    value = DiffPoly.coerce(value)
    return tuple(
        tuple(value if a == b else DiffPoly.zero() for b in range(m))
        for a in range(m)
    )


def mat_from_rows(rows: Sequence[Sequence[Union[DiffPoly, int, Fraction]]]) -> Matrix:
    return tuple(tuple(DiffPoly.coerce(x) for x in row) for row in rows)


def mat_is_zero(A: Matrix) -> bool:
    return all(not x for row in A for x in row)


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_neg(A: Matrix) -> Matrix:
    return tuple(tuple(-x for x in row) for row in A)


def mat_scale(A: Matrix, factor: Union[DiffPoly, int, Fraction]) -> Matrix:
    if isinstance(factor, DiffPoly):
        return tuple(tuple(factor * x for x in row) for row in A)
    return tuple(tuple(x.scale(factor) for x in row) for row in A)


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    m = len(A)
    if m == 1:
        return ((A[0][0] * B[0][0],),)
    result = []
    for a in range(m):
        row = []
        for b in range(m):
            total = DiffPoly.zero()
            for k in range(m):
                if A[a][k] and B[k][b]:
                    total = total + A[a][k] * B[k][b]
            row.append(total)
        result.append(tuple(row))
    return tuple(result)


def mat_transpose(A: Matrix) -> Matrix:
    return tuple(zip(*A))


def mat_derivative(A: Matrix, times: int = 1) -> Matrix:
    return tuple(tuple(x.derivative(times) for x in row) for row in A)


def mat_trace(A: Matrix) -> DiffPoly:
    total = DiffPoly.zero()
    for a in range(len(A)):
        total = total + A[a][a]
    return total


def mat_substitute(A: Matrix, mapping: Mapping[VarKey, DiffPoly]) -> Matrix:
    return tuple(tuple(x.substitute(mapping) for x in row) for row in A)


def mat_rational_inverse(A: Matrix) -> Matrix:
    """Gauss-Jordan inverse of a matrix whose entries are rational constants"""
    m = len(A)
    values: List[List[Fraction]] = []
    for row in A:
        converted = []
        for x in row:
            value = x.rational_value()
            if value is None:
                raise NonInvertibleOperatorError(
                    "leading coefficient is not a constant matrix"
                )
            converted.append(value)
        values.append(converted)
    augmented = [values[a] + [Fraction(int(a == b)) for b in range(m)] for a in range(m)]
    for col in range(m):
        pivot = next((r for r in range(col, m) if augmented[r][col] != 0), None)
        if pivot is None:
            raise NonInvertibleOperatorError("leading coefficient matrix is singular")
        augmented[col], augmented[pivot] = augmented[pivot], augmented[col]
        lead = augmented[col][col]
        augmented[col] = [x / lead for x in augmented[col]]
        for r in range(m):
            if r != col and augmented[r][col] != 0:
                factor = augmented[r][col]
                augmented[r] = [x - factor * y for x, y in zip(augmented[r], augmented[col])]
    return tuple(tuple(DiffPoly.constant(x) for x in row[m:]) for row in augmented)


# ============================================================================
# Truncation policy
# ============================================================================

@dataclass(frozen=True)
class TruncationPolicy:
    """Lowest exponent of d to retain, plus the margin used by stability re-checks"""
    floor: int
    convergence_margin: int = field(default_factory=lambda: settings.CONVERGENCE_MARGIN)

    def deeper(self) -> TruncationPolicy:
        return TruncationPolicy(self.floor - self.convergence_margin, self.convergence_margin)

    def at(self, floor: int) -> TruncationPolicy:
        return TruncationPolicy(floor, self.convergence_margin)

    @classmethod
    def for_density(cls, k: int, N: int) -> TruncationPolicy:
        """Default policy for a request needing h_k of an order-N operator"""
        return cls(settings.density_floor(k, N), settings.CONVERGENCE_MARGIN)


# ============================================================================
# Operators
# ============================================================================

class PsiDO:
    """m x m matrix pseudodifferential operator sum_e A_e d^e, e >= floor"""

    __slots__ = ("m", "_coeffs", "floor")

    def __init__(self, m: int, coeffs: Optional[Mapping[int, Matrix]] = None,
                 floor: Optional[int] = None):
        self.m = m
        self.floor = floor
        clean: Dict[int, Matrix] = {}
        for e, A in (coeffs or {}).items():
            if floor is not None and e < floor:
                continue
            if len(A) != m or any(len(row) != m for row in A):
                raise MismatchedOperandsError("PsiDO", f"coefficient at d^{e} is not {m}x{m}")
            if not mat_is_zero(A):
                clean[e] = A
        self._coeffs = clean

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def identity(cls, m: int = 1) -> PsiDO:
        return cls(m, {0: mat_identity(m)})

    @classmethod
    def d(cls, power: int = 1, m: int = 1) -> PsiDO:
        """The operator d^power (identity matrix coefficient)"""
        return cls(m, {power: mat_identity(m)})

    @classmethod
    def multiplication(cls, A: Union[Matrix, DiffPoly]) -> PsiDO:
        if isinstance(A, DiffPoly):
            return cls(1, {0: ((A,),)})
        return cls(len(A), {0: A})

    @classmethod
    def scalar(cls, coeffs: Mapping[int, Union[DiffPoly, int, Fraction]],
               floor: Optional[int] = None) -> PsiDO:
        """Scalar operator from exponent -> coefficient"""
        return cls(1, {e: ((DiffPoly.coerce(c),),) for e, c in coeffs.items()}, floor)

    # ------------------------------------------------------------------
    # Inspection
    # ------------------------------------------------------------------

    @property
    def coeffs(self) -> Dict[int, Matrix]:
        return self._coeffs

    @property
    def order(self) -> Optional[int]:
        """Highest exponent; a truncated zero has order = floor, an exact zero None"""
        if self._coeffs:
            return max(self._coeffs)
        return self.floor

    @property
    def lowest_exponent(self) -> Optional[int]:
        return min(self._coeffs) if self._coeffs else None

    def is_exact(self) -> bool:
        return self.floor is None

    def is_zero(self) -> bool:
        return not self._coeffs

    def is_differential(self) -> bool:
        return all(e >= 0 for e in self._coeffs)

    def is_monic(self) -> bool:
        return bool(self._coeffs) and self._coeffs[self.order] == mat_identity(self.m)

    def coefficient(self, exponent: int) -> Matrix:
        if self.floor is not None and exponent < self.floor:
            raise TruncationError(exponent, self.floor)
        return self._coeffs.get(exponent, mat_zero(self.m))

    def entry(self, exponent: int, row: int = 1, col: int = 1) -> DiffPoly:
        """Entry (row, col), 1-based, of the coefficient of d^exponent"""
        return self.coefficient(exponent)[row - 1][col - 1]

    def scalar_coefficient(self, exponent: int) -> DiffPoly:
        return self.entry(exponent, 1, 1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PsiDO):
            return NotImplemented
        return self.m == other.m and self.floor == other.floor and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash((self.m, self.floor, frozenset(self._coeffs.items())))

    def __repr__(self) -> str:
        return f"PsiDO(m={self.m}, order={self.order}, floor={self.floor}, terms={sorted(self._coeffs)})"

    def agrees_with(self, other: PsiDO) -> bool:
        """Equality on the exponents both operators determine"""
        if self.m != other.m:
            return False
        bounds = [f for f in (self.floor, other.floor) if f is not None]
        common = max(bounds) if bounds else None
        exponents = set(self._coeffs) | set(other._coeffs)
        for e in exponents:
            if common is not None and e < common:
                continue
            if self._coeffs.get(e, mat_zero(self.m)) != other._coeffs.get(e, mat_zero(self.m)):
                return False
        return True

    # ------------------------------------------------------------------
    # Linear structure
    # ------------------------------------------------------------------

    def _check_size(self, other: PsiDO, operation: str) -> None:
        if self.m != other.m:
            raise MismatchedOperandsError(operation, f"matrix sizes {self.m} and {other.m}")

    def __add__(self, other: PsiDO) -> PsiDO:
        self._check_size(other, "addition")
        floor = _max_floor(self.floor, other.floor)
        coeffs = dict(self._coeffs)
        for e, B in other._coeffs.items():
            coeffs[e] = mat_add(coeffs[e], B) if e in coeffs else B
        return PsiDO(self.m, coeffs, floor)

    def __neg__(self) -> PsiDO:
        return PsiDO(self.m, {e: mat_neg(A) for e, A in self._coeffs.items()}, self.floor)

    def __sub__(self, other: PsiDO) -> PsiDO:
        return self + (-other)

    def scale(self, factor: Union[DiffPoly, int, Fraction]) -> PsiDO:
        """Left multiplication by a scalar function"""
        return PsiDO(self.m, {e: mat_scale(A, factor) for e, A in self._coeffs.items()}, self.floor)

    def truncate(self, floor: int) -> PsiDO:
        return PsiDO(self.m, self._coeffs, _max_floor(self.floor, floor))

    def transpose(self) -> PsiDO:
        """Entrywise transpose of coefficients (not the adjoint)"""
        return PsiDO(self.m, {e: mat_transpose(A) for e, A in self._coeffs.items()}, self.floor)

    def substitute(self, mapping: Mapping[VarKey, DiffPoly]) -> PsiDO:
        return PsiDO(self.m, {e: mat_substitute(A, mapping) for e, A in self._coeffs.items()}, self.floor)

    def entry_operator(self, row: int, col: int) -> PsiDO:
        """Scalar operator formed by one matrix entry (1-based)"""
        return PsiDO.scalar({e: A[row - 1][col - 1] for e, A in self._coeffs.items()}, self.floor)

    # ------------------------------------------------------------------
    # Algebra
    # ------------------------------------------------------------------

    def compose(self, other: PsiDO, policy: Optional[TruncationPolicy] = None) -> PsiDO:
        return compose(self, other, policy)

    def split_plus_minus(self) -> Tuple[PsiDO, PsiDO]:
        """Differential part (exponents >= 0) and integral part (exponents < 0)"""
        plus = {e: A for e, A in self._coeffs.items() if e >= 0}
        minus = {e: A for e, A in self._coeffs.items() if e < 0}
        plus_floor = None if self.floor is None or self.floor <= 0 else self.floor
        return PsiDO(self.m, plus, plus_floor), PsiDO(self.m, minus, self.floor)

    def plus(self) -> PsiDO:
        return self.split_plus_minus()[0]

    def minus(self) -> PsiDO:
        return self.split_plus_minus()[1]

    def residue(self) -> Matrix:
        """Coefficient of d^{-1}"""
        if self.floor is not None and self.floor > -1:
            raise TruncationError(-1, self.floor, "The residue was truncated away; lower the floor.")
        return self._coeffs.get(-1, mat_zero(self.m))

    def trace_residue(self) -> DiffPoly:
        return mat_trace(self.residue())


def _max_floor(*floors: Optional[int]) -> Optional[int]:
    present = [f for f in floors if f is not None]
    return max(present) if present else None


def _derivative_cache(B: PsiDO):
    cache: Dict[Tuple[int, int], Matrix] = {}

    def derived(q: int, k: int) -> Matrix:
        key = (q, k)
        if key not in cache:
            cache[key] = B.coeffs[q] if k == 0 else mat_derivative(derived(q, k - 1))
        return cache[key]

    return derived


def compose(A: PsiDO, B: PsiDO, policy: Optional[TruncationPolicy] = None) -> PsiDO:
    """
    A o B by the symbol rule (A o B)(z) = A(z + d) B(z).

    The result floor is the larger of the attainable floor and the policy floor.
    Exact operands give an exact result when A has no negative exponents.
    """
    A._check_size(B, "composition")
    m = A.m
    if (A.is_zero() and A.is_exact()) or (B.is_zero() and B.is_exact()):
        return PsiDO(m)

    bounds = []
    if A.floor is not None:
        bounds.append(A.floor + B.order)
    if B.floor is not None:
        bounds.append(A.order + B.floor)
    exact = A.is_exact() and B.is_exact() and A.is_differential()
    if exact:
        floor = None
    else:
        if policy is not None:
            bounds.append(policy.floor)
        if not bounds:
            raise TruncationError(
                A.order + (B.lowest_exponent or 0), None,
                "Composing with negative powers of d produces an infinite series; pass a truncation policy."
            )
        floor = max(bounds)

    derived = _derivative_cache(B)
    coeffs: Dict[int, Matrix] = {}
    for p, Ap in A.coeffs.items():
        for q in B.coeffs:
            k = 0
            while True:
                e = p + q - k
                if floor is not None and e < floor:
                    break
                if p >= 0 and k > p:
                    break
                c = binomial(p, k)
                Bk = derived(q, k)
                if not mat_is_zero(Bk):
                    term = mat_scale(mat_mul(Ap, Bk), c)
                    coeffs[e] = mat_add(coeffs[e], term) if e in coeffs else term
                elif k > 0:
                    # derivatives of a zero matrix stay zero
                    break
                k += 1
    return PsiDO(m, coeffs, floor)


def power(A: PsiDO, k: int, policy: Optional[TruncationPolicy] = None) -> PsiDO:
    """
    A^k for k >= 0 by repeated composition.

    With a policy the result is exact down to policy.floor: each partial
    product is kept deeper by the order of the factors still to come.
    """
    if k < 0:
        raise ValueError("Use inverse for negative powers")
    result = PsiDO.identity(A.m)
    lift = max(A.order, 0) if not A.is_zero() else 0
    for i in range(k):
        step = policy.at(policy.floor - (k - 1 - i) * lift) if policy is not None else None
        result = compose(result, A, step)
    return result


def adjoint(A: PsiDO, policy: Optional[TruncationPolicy] = None) -> PsiDO:
    """Formal adjoint sum_n (-d)^n o A_n^t"""
    exact = A.is_exact() and A.is_differential()
    if exact:
        floor = None
    else:
        bounds = [f for f in (A.floor, policy.floor if policy else None) if f is not None]
        if not bounds:
            raise TruncationError(
                A.lowest_exponent or -1, None,
                "The adjoint of an infinite series needs a truncation policy."
            )
        floor = max(bounds)
    coeffs: Dict[int, Matrix] = {}
    for n, An in A.coeffs.items():
        T = mat_transpose(An)
        k = 0
        derived = T
        while True:
            e = n - k
            if floor is not None and e < floor:
                break
            if n >= 0 and k > n:
                break
            c = binomial(n, k) * (-1) ** (n % 2)
            # (-d)^n o T = (-1)^n sum_k C(n,k) T^{(k)} d^{n-k}
            if k:
                derived = mat_derivative(derived)
            if mat_is_zero(derived):
                break
            term = mat_scale(derived, c)
            coeffs[e] = mat_add(coeffs[e], term) if e in coeffs else term
            k += 1
    return PsiDO(A.m, coeffs, floor)


def residue(A: PsiDO) -> Matrix:
    return A.residue()


def trace_residue(A: PsiDO) -> DiffPoly:
    return A.trace_residue()


def split_plus_minus(A: PsiDO) -> Tuple[PsiDO, PsiDO]:
    return A.split_plus_minus()


def nth_root(A: PsiDO, N: int, policy: TruncationPolicy) -> PsiDO:
    """
    The unique monic order-one R with R^N = A, matched exponent by exponent.

    The coefficient of d^{N-1-k} in R^N is N r_{-k} plus terms in earlier
    coefficients, so each step solves a linear equation.
    """
    if N < 1:
        raise ValueError(f"Root degree must be positive, got {N}")
    if not A.is_monic() or A.order != N:
        raise NonMonicOperatorError(f"nth_root(N={N})", A.order)
    if N == 1:
        return A if A.floor is None else A.truncate(max(A.floor, policy.floor))

    target = policy.floor
    if A.floor is not None:
        target = max(target, A.floor - N + 1)
    m = A.m
    root: Dict[int, Matrix] = {1: mat_identity(m)}
    inv_n = Fraction(1, N)
    for e in range(0, target - 1, -1):
        t = N - 1 + e
        partial_root = PsiDO(m, root)
        partial_power = power(partial_root, N, policy.at(t))
        gap = mat_sub(A.coefficient(t), partial_power.coefficient(t))
        root[e] = mat_scale(gap, inv_n)
    logger.debug(f"nth_root: N={N}, m={m}, floor={target}")
    return PsiDO(m, root, target)


def inverse(A: PsiDO, policy: TruncationPolicy) -> PsiDO:
    """
    Two-sided inverse; the leading coefficient must be an invertible constant matrix.

    b_t = A_n^{-1} (delta_{t0} - [A o (b_0 + ... + b_{t-1})]_{-t}).
    """
    if A.is_zero():
        raise NonInvertibleOperatorError("zero operator")
    n = A.order
    lead_inverse = mat_rational_inverse(A.coeffs[n])
    target = policy.floor
    if A.floor is not None:
        target = max(target, A.floor - 2 * n)
    m = A.m
    result: Dict[int, Matrix] = {-n: lead_inverse}
    t = 1
    while -n - t >= target:
        partial_inverse = PsiDO(m, result)
        product = compose(A, partial_inverse, policy.at(-t))
        result[-n - t] = mat_mul(lead_inverse, mat_neg(product.coefficient(-t)))
        t += 1
    return PsiDO(m, result, target)


def frac_power(A: PsiDO, k: int, N: int, policy: TruncationPolicy) -> PsiDO:
    """
    A^{k/N}: the k-th power of the N-th root, inverted first when k < 0.

    The root is taken k - 1 exponents deeper so the power is exact down to
    policy.floor.
    """
    if k == 0:
        return PsiDO.identity(A.m)
    if k > 0:
        R = nth_root(A, N, policy.at(policy.floor - (k - 1)))
        return power(R, k, policy)
    R = inverse(nth_root(A, N, policy), policy)
    return power(R, -k, policy)


def residue_pairing(A: PsiDO, B: PsiDO) -> Tuple[Dict[int, DiffPoly], Dict[int, DiffPoly]]:
    """
    Both sides of res_z A(z) B*(-z + lambda) = res_z A(z + lambda + d) B(z)
    for exact scalar operators, as polynomials in lambda.
    """
    if A.m != 1 or B.m != 1:
        raise MismatchedOperandsError("residue_pairing", "only scalar operators are paired")
    if not (A.is_exact() and B.is_exact()):
        raise TruncationError(-1, A.floor if A.floor is not None else B.floor,
                              "The residue pairing is evaluated on finite Laurent operators.")
    from models.lambda_value import neg_shift_apply, shift_apply

    left: Dict[int, DiffPoly] = {}
    right: Dict[int, DiffPoly] = {}

    def add(target: Dict[int, DiffPoly], values: Mapping[int, DiffPoly], factor: DiffPoly, c: Fraction):
        for p, x in values.items():
            value = (factor * x).scale(c)
            total = target[p] + value if p in target else value
            if total:
                target[p] = total
            else:
                target.pop(p, None)

    for p, Ap in A.coeffs.items():
        a = Ap[0][0]
        for q, Bq in B.coeffs.items():
            b = Bq[0][0]
            # z^{p+q-s} contributes to the residue when p + q - s = -1
            s = p + q + 1
            if s < 0:
                continue
            c_left = binomial(q, s)
            if c_left:
                add(left, neg_shift_apply(s, {0: b}), a, c_left)
            c_right = binomial(p, s)
            if c_right:
                add(right, shift_apply(s, {0: b}), a, c_right)
    return left, right
