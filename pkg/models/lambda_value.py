"""
Values of lambda-brackets.

A LambdaValue is a polynomial in lambda with DiffPoly coefficients plus a
finite nonlocal part sum c * P (lambda + d)^{-1} Q. The nonlocal part is kept
as a tensor over monomial pairs, which is a canonical form: two sums of
P (lambda + d)^{-1} Q terms are equal exactly when their tensors agree.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from models.differential_polynomial import DiffPoly, Monomial, VarKey, mono_mul
from utils.combinatorics import binomial
from utils.exceptions import UnsupportedOperationError

LambdaPoly = Dict[int, DiffPoly]
TensorKey = Tuple[Monomial, Monomial]


def _accumulate(target: Dict, key, value: DiffPoly) -> None:
    if not value:
        return
    total = target[key] + value if key in target else value
    if total:
        target[key] = total
    else:
        target.pop(key, None)


def shift_apply(n: int, value: Mapping[int, DiffPoly]) -> LambdaPoly:
    """(lambda + d)^n applied to sum_p lambda^p X_p, for n >= 0"""
    result: LambdaPoly = {}
    for p, x in value.items():
        derived = x
        for s in range(n + 1):
            if s:
                derived = derived.derivative()
            if not derived:
                break
            _accumulate(result, p + n - s, derived.scale(binomial(n, s)))
    return result


def neg_shift_apply(n: int, value: Mapping[int, DiffPoly]) -> LambdaPoly:
    """(-lambda - d)^n applied to sum_p lambda^p X_p"""
    shifted = shift_apply(n, value)
    if n % 2 == 0:
        return shifted
    return {p: -x for p, x in shifted.items()}


def apply_symbol(symbol: Mapping[int, DiffPoly], value: Mapping[int, DiffPoly]) -> LambdaPoly:
    """sum_p h_p (lambda + d)^p X, the coefficient h_p standing to the left"""
    result: LambdaPoly = {}
    for p, h in symbol.items():
        for q, x in shift_apply(p, value).items():
            _accumulate(result, q, h * x)
    return result


def lambda_term(left: DiffPoly, power: int, right: DiffPoly) -> LambdaPoly:
    """left * (lambda + d)^power * right for power >= 0"""
    result: LambdaPoly = {}
    for p, x in shift_apply(power, {0: right}).items():
        _accumulate(result, p, left * x)
    return result


def _canonical_key(left: Monomial, right: Monomial) -> TensorKey:
    """Formal parameters are scalars: keep them in the left factor"""
    params = tuple((k, e) for k, e in right if k.is_parameter)
    if not params:
        return (left, right)
    rest = tuple((k, e) for k, e in right if not k.is_parameter)
    return (mono_mul(left, params), rest)


def _tensor(left: DiffPoly, right: DiffPoly, coeff: Fraction = Fraction(1)) -> Dict[TensorKey, Fraction]:
    result: Dict[TensorKey, Fraction] = {}
    for ml, cl in left.terms.items():
        for mr, cr in right.terms.items():
            key = _canonical_key(ml, mr)
            total = result.get(key, 0) + coeff * cl * cr
            if total:
                result[key] = total
            else:
                result.pop(key, None)
    return result


class LambdaValue:
    """Local polynomial in lambda plus sum c * P (lambda + d)^{-1} Q"""

    __slots__ = ("_local", "_nonlocal")

    def __init__(self, local: Optional[Mapping[int, DiffPoly]] = None,
                 nonlocal_terms: Optional[Mapping[TensorKey, Fraction]] = None):
        self._local: LambdaPoly = {p: c for p, c in (local or {}).items() if c}
        tensor: Dict[TensorKey, Fraction] = {}
        for (ml, mr), c in (nonlocal_terms or {}).items():
            key = _canonical_key(ml, mr)
            total = tensor.get(key, 0) + Fraction(c)
            if total:
                tensor[key] = total
            else:
                tensor.pop(key, None)
        self._nonlocal = tensor

    @classmethod
    def zero(cls) -> LambdaValue:
        return cls()

    @classmethod
    def from_local(cls, local: Mapping[int, DiffPoly]) -> LambdaValue:
        return cls(local)

    @classmethod
    def monomial(cls, coefficient: Union[DiffPoly, int, Fraction], power: int = 0) -> LambdaValue:
        return cls({power: DiffPoly.coerce(coefficient)})

    @classmethod
    def term(cls, left: DiffPoly, power: int, right: DiffPoly) -> LambdaValue:
        """left (lambda + d)^power right; power -1 gives a nonlocal pair"""
        if power >= 0:
            return cls(lambda_term(left, power, right))
        if power == -1:
            return cls(None, _tensor(left, right))
        raise UnsupportedOperationError(
            "lambda_term", f"only first-order nonlocal tails are modelled, got power {power}"
        )

    # ------------------------------------------------------------------

    @property
    def local(self) -> LambdaPoly:
        return self._local

    @property
    def nonlocal_terms(self) -> Dict[TensorKey, Fraction]:
        return self._nonlocal

    def is_local(self) -> bool:
        return not self._nonlocal

    def is_zero(self) -> bool:
        return not self._local and not self._nonlocal

    def __bool__(self) -> bool:
        return not self.is_zero()

    def coefficient(self, power: int) -> DiffPoly:
        return self._local.get(power, DiffPoly.zero())

    def degree(self) -> int:
        return max(self._local) if self._local else -1

    def at_zero(self) -> DiffPoly:
        """The value at lambda = 0"""
        if self._nonlocal:
            raise UnsupportedOperationError(
                "evaluation at lambda=0", "the value has a nonlocal (lambda + d)^-1 part"
            )
        return self.coefficient(0)

    def nonlocal_pairs(self) -> List[Tuple[DiffPoly, DiffPoly]]:
        """Nonlocal part grouped as (P, Q) pairs, one per left monomial"""
        grouped: Dict[Monomial, Dict[Monomial, Fraction]] = {}
        for (ml, mr), c in self._nonlocal.items():
            grouped.setdefault(ml, {})[mr] = c
        return [
            (DiffPoly({ml: 1}), DiffPoly(right))
            for ml, right in sorted(grouped.items())
        ]

    # ------------------------------------------------------------------

    def __add__(self, other: LambdaValue) -> LambdaValue:
        local = dict(self._local)
        for p, c in other._local.items():
            _accumulate(local, p, c)
        tensor = dict(self._nonlocal)
        for k, c in other._nonlocal.items():
            total = tensor.get(k, 0) + c
            if total:
                tensor[k] = total
            else:
                tensor.pop(k, None)
        return LambdaValue(local, tensor)

    def __neg__(self) -> LambdaValue:
        return LambdaValue(
            {p: -c for p, c in self._local.items()},
            {k: -c for k, c in self._nonlocal.items()},
        )

    def __sub__(self, other: LambdaValue) -> LambdaValue:
        return self + (-other)

    def scale(self, factor: Union[int, Fraction]) -> LambdaValue:
        factor = Fraction(factor)
        return LambdaValue(
            {p: c.scale(factor) for p, c in self._local.items()},
            {k: c * factor for k, c in self._nonlocal.items()},
        )

    def left_multiply(self, g: DiffPoly) -> LambdaValue:
        """g * value; for the nonlocal part g joins the left factor"""
        if not g:
            return LambdaValue.zero()
        tensor: Dict[TensorKey, Fraction] = {}
        for (ml, mr), c in self._nonlocal.items():
            for mg, cg in g.terms.items():
                key = (mono_mul(mg, ml), mr)
                total = tensor.get(key, 0) + c * cg
                if total:
                    tensor[key] = total
                else:
                    tensor.pop(key, None)
        return LambdaValue({p: g * c for p, c in self._local.items()}, tensor)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LambdaValue):
            return NotImplemented
        return self._local == other._local and self._nonlocal == other._nonlocal

    def __hash__(self) -> int:
        return hash((frozenset(self._local.items()), frozenset(self._nonlocal.items())))

    def __repr__(self) -> str:
        return f"LambdaValue(local={self._local!r}, nonlocal={len(self._nonlocal)} terms)"

    # ------------------------------------------------------------------

    def shift(self, n: int) -> LambdaValue:
        """(lambda + d)^n applied to the whole value, n >= 0"""
        result = LambdaValue(shift_apply(n, self._local))
        for (ml, mr), c in self._nonlocal.items():
            left = DiffPoly({ml: c})
            right = DiffPoly({mr: 1})
            # (lambda + d)^n (A Y) = sum_s C(n,s) A^{(s)} (lambda + d)^{n-s} Y
            for s in range(n + 1):
                factor = left.derivative(s).scale(binomial(n, s))
                result = result + LambdaValue.term(factor, n - s - 1, right)
        return result

    def skew_adjoint(self) -> LambdaValue:
        """
        The value with lambda replaced by -lambda-d acting on coefficients.

        A nonlocal term P (lambda + d)^{-1} Q becomes -Q (lambda + d)^{-1} P.
        """
        local: LambdaPoly = {}
        for p, c in self._local.items():
            for q, x in neg_shift_apply(p, {0: c}).items():
                _accumulate(local, q, x)
        tensor = {(mr, ml): -c for (ml, mr), c in self._nonlocal.items()}
        return LambdaValue(local, tensor)

    def substitute(self, mapping: Mapping[VarKey, DiffPoly]) -> LambdaValue:
        """Apply a differential substitution to every coefficient"""
        if not mapping:
            return self
        local = {p: c.substitute(mapping) for p, c in self._local.items()}
        result = LambdaValue(local)
        for (ml, mr), c in self._nonlocal.items():
            left = DiffPoly({ml: c}).substitute(mapping)
            right = DiffPoly({mr: 1}).substitute(mapping)
            result = result + LambdaValue(None, _tensor(left, right))
        return result

    def variables(self) -> set:
        found = set()
        for c in self._local.values():
            found |= c.variables()
        for (ml, mr) in self._nonlocal:
            found |= {k for k, _ in ml} | {k for k, _ in mr}
        return found


def inverse_shift_apply(value: Mapping[int, DiffPoly]) -> LambdaValue:
    """(lambda + d)^{-1} applied to sum_l lambda^l X_l, rewriting lambda^l = ((lambda + d) - d)^l"""
    result = LambdaValue.zero()
    for l, x in value.items():
        for s in range(l + 1):
            part = x.derivative(l - s).scale(binomial(l, s) * (-1) ** (l - s))
            result = result + LambdaValue.term(DiffPoly.one(), s - 1, part)
    return result


def sum_values(values: Iterable[LambdaValue]) -> LambdaValue:
    total = LambdaValue.zero()
    for value in values:
        total = total + value
    return total


class LambdaMuValue:
    """Polynomial in lambda and mu with DiffPoly coefficients"""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[Tuple[int, int], DiffPoly]] = None):
        self._terms: Dict[Tuple[int, int], DiffPoly] = {k: c for k, c in (terms or {}).items() if c}

    @property
    def terms(self) -> Dict[Tuple[int, int], DiffPoly]:
        return self._terms

    def add_term(self, lam: int, mu: int, value: DiffPoly) -> None:
        """In-place accumulation used while a residual is being built"""
        _accumulate(self._terms, (lam, mu), value)

    def coefficient(self, lam: int, mu: int) -> DiffPoly:
        return self._terms.get((lam, mu), DiffPoly.zero())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def items(self) -> List[Tuple[Tuple[int, int], DiffPoly]]:
        return sorted(self._terms.items(), key=lambda kv: kv[0])

    def __add__(self, other: LambdaMuValue) -> LambdaMuValue:
        result = LambdaMuValue(dict(self._terms))
        for k, c in other._terms.items():
            result.add_term(k[0], k[1], c)
        return result

    def __neg__(self) -> LambdaMuValue:
        return LambdaMuValue({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: LambdaMuValue) -> LambdaMuValue:
        return self + (-other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LambdaMuValue):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __repr__(self) -> str:
        return f"LambdaMuValue({self._terms!r})"

    def split_by_parameter(self, key: VarKey) -> Dict[int, LambdaMuValue]:
        """Coefficients of the powers of a formal parameter"""
        result: Dict[int, LambdaMuValue] = {}
        for (lam, mu), c in self._terms.items():
            for power, part in c.collect(key).items():
                result.setdefault(power, LambdaMuValue()).add_term(lam, mu, part)
        return {p: v for p, v in result.items() if v}
