"""
Differential polynomial algebra over the rationals.

Elements are sparse maps from monomials to nonzero Fractions. A monomial is a
sorted tuple of (VarKey, exponent) pairs, so equality of two polynomials is
equality of their term dictionaries.
"""
from __future__ import annotations

import logging
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Set, Tuple, Union

logger = logging.getLogger(__name__)

# Families whose variables are formal constants: the pencil parameter c and
# the entries s_ij of a symbolic GFZ matrix. The derivation kills them.
PARAMETER_FAMILIES = frozenset({"c", "s"})

DEFAULT_FAMILY = "u"


class VarKey(NamedTuple):
    """A variable u_{i,ab}^{(n)} of some family; ordering is tuple order."""
    family: str
    index: int
    row: int = 1
    col: int = 1
    order: int = 0

    @property
    def is_parameter(self) -> bool:
        return self.family in PARAMETER_FAMILIES

    def base(self) -> VarKey:
        """The underlying generator (derivative order zero)"""
        return self._replace(order=0) if self.order else self

    def derive(self, times: int = 1) -> VarKey:
        return self._replace(order=self.order + times)


Monomial = Tuple[Tuple[VarKey, int], ...]
Scalar = Union[int, Fraction]

ONE_MONOMIAL: Monomial = ()


def describe_key(key: VarKey, m: int = 1) -> str:
    """Plain label such as u_{-1}, u_{-1,12} or v_{2}"""
    label = f"{key.family}_{{{key.index}"
    if m > 1 or key.row != 1 or key.col != 1:
        label += f",{key.row}{key.col}"
    label += "}"
    return label + "'" * key.order


def generator(index: int, row: int = 1, col: int = 1, family: str = DEFAULT_FAMILY) -> VarKey:
    """Key of the generator u_{index,row col} (order zero)"""
    return VarKey(family, index, row, col, 0)


def parameter(name: str = "c", index: int = 0, row: int = 1, col: int = 1) -> VarKey:
    """Key of a formal parameter; name must be a parameter family"""
    if name not in PARAMETER_FAMILIES:
        raise ValueError(f"Unknown parameter family: {name}")
    return VarKey(name, index, row, col, 0)


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    out: List[Tuple[VarKey, int]] = []
    i = j = 0
    while i < len(a) and j < len(b):
        ka, ea = a[i]
        kb, eb = b[j]
        if ka == kb:
            out.append((ka, ea + eb))
            i += 1
            j += 1
        elif ka < kb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


def _mono_drop_one(mono: Monomial, position: int) -> Monomial:
    """Lower the exponent of the factor at `position` by one"""
    key, exp = mono[position]
    if exp == 1:
        return mono[:position] + mono[position + 1:]
    return mono[:position] + ((key, exp - 1),) + mono[position + 1:]


class DiffPoly:
    """
    Element of F[u_{i,ab}^{(n)}] with exact rational coefficients.

    Values are treated as immutable; every operation returns a new instance.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Optional[Mapping[Monomial, Scalar]] = None):
        clean: Dict[Monomial, Fraction] = {}
        if terms:
            for mono, coeff in terms.items():
                if coeff:
                    clean[mono] = Fraction(coeff)
        self._terms = clean
        self._hash: Optional[int] = None

    @classmethod
    def _wrap(cls, terms: Dict[Monomial, Fraction]) -> DiffPoly:
        """Adopt an already clean dictionary without copying"""
        poly = cls.__new__(cls)
        poly._terms = terms
        poly._hash = None
        return poly

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------

    @classmethod
    def zero(cls) -> DiffPoly:
        return cls._wrap({})

    @classmethod
    def one(cls) -> DiffPoly:
        return cls._wrap({ONE_MONOMIAL: Fraction(1)})

    @classmethod
    def constant(cls, value: Scalar) -> DiffPoly:
        if not value:
            return cls.zero()
        return cls._wrap({ONE_MONOMIAL: Fraction(value)})

    @classmethod
    def variable(cls, key: VarKey) -> DiffPoly:
        return cls._wrap({((key, 1),): Fraction(1)})

    @classmethod
    def gen(cls, index: int, row: int = 1, col: int = 1, family: str = DEFAULT_FAMILY,
            order: int = 0) -> DiffPoly:
        """Shorthand for the variable u_{index,row col}^{(order)}"""
        return cls.variable(VarKey(family, index, row, col, order))

    @classmethod
    def coerce(cls, value: Union[DiffPoly, VarKey, Scalar]) -> DiffPoly:
        if isinstance(value, DiffPoly):
            return value
        if isinstance(value, VarKey):
            return cls.variable(value)
        return cls.constant(value)

    # ------------------------------------------------------------------
    # Inspection
    # ------------------------------------------------------------------

    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        """Term dictionary (do not mutate)"""
        return self._terms

    def items(self) -> List[Tuple[Monomial, Fraction]]:
        """Terms in canonical monomial order"""
        return sorted(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def is_constant(self) -> bool:
        """True if no monomial contains a non-parameter variable"""
        return all(all(k.is_parameter for k, _ in mono) for mono in self._terms)

    def constant_part(self) -> DiffPoly:
        """Monomials free of generators (parameters count as constants)"""
        return DiffPoly._wrap({
            mono: c for mono, c in self._terms.items()
            if all(k.is_parameter for k, _ in mono)
        })

    def rational_value(self) -> Optional[Fraction]:
        """The value if this is a plain rational constant, otherwise None"""
        if not self._terms:
            return Fraction(0)
        if len(self._terms) == 1 and ONE_MONOMIAL in self._terms:
            return self._terms[ONE_MONOMIAL]
        return None

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(mono, Fraction(0))

    def variables(self) -> Set[VarKey]:
        return {k for mono in self._terms for k, _ in mono}

    def generators(self) -> Set[VarKey]:
        """Base generators (order zero, non-parameter) that occur"""
        return {k.base() for k in self.variables() if not k.is_parameter}

    def max_order(self, base: VarKey) -> int:
        """Highest derivative order of `base` present, -1 if absent"""
        orders = [k.order for k in self.variables() if k.base() == base]
        return max(orders) if orders else -1

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e for k, e in mono if not k.is_parameter) for mono in self._terms)

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------

    def __add__(self, other: Union[DiffPoly, Scalar]) -> DiffPoly:
        other = DiffPoly.coerce(other)
        if not other._terms:
            return self
        if not self._terms:
            return other
        result = dict(self._terms)
        for mono, c in other._terms.items():
            total = result.get(mono, 0) + c
            if total:
                result[mono] = total
            else:
                result.pop(mono, None)
        return DiffPoly._wrap(result)

    __radd__ = __add__

    def __neg__(self) -> DiffPoly:
        return DiffPoly._wrap({mono: -c for mono, c in self._terms.items()})

    def __sub__(self, other: Union[DiffPoly, Scalar]) -> DiffPoly:
        return self + (-DiffPoly.coerce(other))

    def __rsub__(self, other: Union[DiffPoly, Scalar]) -> DiffPoly:
        return DiffPoly.coerce(other) + (-self)

    def scale(self, factor: Scalar) -> DiffPoly:
        if not factor:
            return DiffPoly.zero()
        factor = Fraction(factor)
        if factor == 1:
            return self
        return DiffPoly._wrap({mono: c * factor for mono, c in self._terms.items()})

    def __mul__(self, other: Union[DiffPoly, Scalar]) -> DiffPoly:
        if not isinstance(other, DiffPoly):
            return self.scale(other)
        if not self._terms or not other._terms:
            return DiffPoly.zero()
        result: Dict[Monomial, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                mono = mono_mul(ma, mb)
                total = result.get(mono, 0) + ca * cb
                if total:
                    result[mono] = total
                else:
                    result.pop(mono, None)
        return DiffPoly._wrap(result)

    def __rmul__(self, other: Scalar) -> DiffPoly:
        return self.scale(other)

    def __truediv__(self, other: Scalar) -> DiffPoly:
        return self.scale(Fraction(1) / Fraction(other))

    def __pow__(self, exponent: int) -> DiffPoly:
        if exponent < 0:
            raise ValueError("Negative powers are not polynomial")
        result = DiffPoly.one()
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, DiffPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == DiffPoly.constant(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self) -> str:
        if not self._terms:
            return "DiffPoly(0)"
        parts = []
        for mono, c in self.items():
            factors = "*".join(
                f"{k.family}[{k.index},{k.row}{k.col}]" + ("'" * k.order) + (f"^{e}" if e > 1 else "")
                for k, e in mono
            )
            parts.append(f"{c}" + (f"*{factors}" if factors else ""))
        return f"DiffPoly({' + '.join(parts)})"

    # ------------------------------------------------------------------
    # Differential structure
    # ------------------------------------------------------------------

    def derivative(self, times: int = 1) -> DiffPoly:
        """Total derivative applied `times` times"""
        poly = self
        for _ in range(times):
            poly = poly._derive_once()
        return poly

    def _derive_once(self) -> DiffPoly:
        result: Dict[Monomial, Fraction] = {}
        for mono, c in self._terms.items():
            for position, (key, exp) in enumerate(mono):
                if key.is_parameter:
                    continue
                new_mono = mono_mul(_mono_drop_one(mono, position), ((key.derive(), 1),))
                total = result.get(new_mono, 0) + c * exp
                if total:
                    result[new_mono] = total
                else:
                    result.pop(new_mono, None)
        return DiffPoly._wrap(result)

    def partial(self, key: VarKey) -> DiffPoly:
        """Formal partial derivative with respect to the variable `key`"""
        result: Dict[Monomial, Fraction] = {}
        for mono, c in self._terms.items():
            for position, (k, exp) in enumerate(mono):
                if k == key:
                    new_mono = _mono_drop_one(mono, position)
                    result[new_mono] = result.get(new_mono, 0) + c * exp
                    break
        return DiffPoly({m: c for m, c in result.items() if c})

    def varder(self, base: VarKey) -> DiffPoly:
        """Variational derivative sum_n (-d)^n df/du^{(n)}"""
        base = base.base()
        result = DiffPoly.zero()
        for n in range(self.max_order(base) + 1):
            part = self.partial(base.derive(n))
            if not part:
                continue
            term = part.derivative(n)
            result = result + (term if n % 2 == 0 else -term)
        return result

    def substitute(self, mapping: Mapping[VarKey, DiffPoly]) -> DiffPoly:
        """
        Differential substitution: every generator x in `mapping` is replaced by
        its image and x^{(n)} by the n-th derivative of the image.
        """
        if not mapping or not self._terms:
            return self
        images: Dict[VarKey, DiffPoly] = {}

        def image_of(key: VarKey) -> DiffPoly:
            cached = images.get(key)
            if cached is None:
                base = key.base()
                if base in mapping:
                    if key.order:
                        cached = image_of(key._replace(order=key.order - 1)).derivative()
                    else:
                        cached = DiffPoly.coerce(mapping[base])
                else:
                    cached = DiffPoly.variable(key)
                images[key] = cached
            return cached

        result = DiffPoly.zero()
        for mono, c in self._terms.items():
            if not any(k.base() in mapping for k, _ in mono):
                result = result + DiffPoly._wrap({mono: c})
                continue
            term = DiffPoly.constant(c)
            for key, exp in mono:
                term = term * (image_of(key) ** exp)
            result = result + term
        return result

    def restrict_to(self, keep: Iterable[VarKey]) -> DiffPoly:
        """Evaluate every non-parameter variable outside `keep` at zero"""
        keep_set = set(keep)
        return DiffPoly._wrap({
            mono: c for mono, c in self._terms.items()
            if all(k.is_parameter or k in keep_set for k, _ in mono)
        })

    def collect(self, key: VarKey) -> Dict[int, DiffPoly]:
        """Coefficients of the powers of one variable"""
        buckets: Dict[int, Dict[Monomial, Fraction]] = {}
        for mono, c in self._terms.items():
            power = 0
            rest = mono
            for position, (k, exp) in enumerate(mono):
                if k == key:
                    power = exp
                    rest = mono[:position] + mono[position + 1:]
                    break
            buckets.setdefault(power, {})[rest] = c
        return {p: DiffPoly._wrap(t) for p, t in buckets.items()}


def total_derivative(f: DiffPoly) -> DiffPoly:
    return f.derivative()


def partial(f: DiffPoly, v: VarKey) -> DiffPoly:
    return f.partial(v)


def varder(f: DiffPoly, i: int, ab: Tuple[int, int] = (1, 1), family: str = DEFAULT_FAMILY) -> DiffPoly:
    """delta f / delta u_{i,ab}"""
    return f.varder(VarKey(family, i, ab[0], ab[1], 0))


def total_derivative_diagnostic(f: DiffPoly) -> Tuple[bool, str]:
    """
    Decide membership in dV and explain a negative answer.

    Constants are not total derivatives and are reported separately.
    """
    constant = f.constant_part()
    if constant:
        return False, f"nonzero constant term {constant!r}"
    for base in sorted(f.generators()):
        if f.varder(base):
            return False, f"nonzero variational derivative in {base.family}_{base.index},{base.row}{base.col}"
    return True, ""


def is_total_derivative(f: DiffPoly) -> bool:
    return total_derivative_diagnostic(f)[0]


def iter_generators(polys: Iterable[DiffPoly]) -> Iterator[VarKey]:
    """Sorted union of base generators occurring in several polynomials"""
    seen: Set[VarKey] = set()
    for poly in polys:
        seen |= poly.generators()
    return iter(sorted(seen))
