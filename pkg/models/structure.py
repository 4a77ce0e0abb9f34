"""
Lambda-bracket structures on algebras of differential polynomials.

A PVAStructure pairs a Universe (which generators exist) with a BracketRule
(how {x_lambda y} is computed for two generators). Rule outputs are cached per
structure with populate-once semantics.
"""
from __future__ import annotations

import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from models.differential_polynomial import (
    DEFAULT_FAMILY,
    DiffPoly,
    VarKey,
    is_total_derivative,
    total_derivative_diagnostic,
)
from models.lambda_value import LambdaValue
from utils.exceptions import IndexRangeError

logger = logging.getLogger(__name__)

FINITE = "finite"
INFINITE = "infinite"


@dataclass(frozen=True)
class Universe:
    """
    Generator set of an algebra of differential polynomials.

    Either an explicit finite tuple of keys, or an AGD index range
    (indices from `lowest` upward, unbounded in the infinite flavor).
    """
    keys: Tuple[VarKey, ...] = ()
    family: str = DEFAULT_FAMILY
    m: int = 1
    lowest: Optional[int] = None
    highest: Optional[int] = None
    excluded: Tuple[int, ...] = ()
    description: str = ""

    @classmethod
    def explicit(cls, keys: Iterable[VarKey], description: str = "") -> Universe:
        keys = tuple(sorted(k.base() for k in keys))
        return cls(keys=keys, description=description or f"{len(keys)} generators")

    @classmethod
    def agd(cls, N: int, m: int = 1, flavor: str = FINITE, reduced: bool = False,
            family: str = DEFAULT_FAMILY) -> Universe:
        """Generators u_{i,ab} of V_N (i = -N..-1), V_N^inf (i >= -N), or their quotients by u_{-N}"""
        highest = -1 if flavor == FINITE else None
        excluded = (-N,) if reduced else ()
        name = ("W" if reduced else "V") + f"_{N}" + (f",{m}" if m > 1 else "") + ("^inf" if flavor == INFINITE else "")
        return cls(family=family, m=m, lowest=-N, highest=highest, excluded=excluded, description=name)

    @property
    def is_finite(self) -> bool:
        return bool(self.keys) or self.highest is not None

    def contains(self, key: VarKey) -> bool:
        key = key.base()
        if self.keys:
            return key in self.keys
        if key.family != self.family or self.lowest is None:
            return False
        if key.index < self.lowest or key.index in self.excluded:
            return False
        if self.highest is not None and key.index > self.highest:
            return False
        return 1 <= key.row <= self.m and 1 <= key.col <= self.m

    def generators(self, max_index: Optional[int] = None) -> List[VarKey]:
        """Generators in canonical order; infinite ranges stop at max_index"""
        if self.keys:
            return list(self.keys)
        top = self.highest
        if top is None:
            if max_index is None:
                raise IndexRangeError("all generators", f"{self.description} (infinite; pass max_index)")
            top = max_index
        elif max_index is not None:
            top = min(top, max_index)
        return [
            VarKey(self.family, i, a, b, 0)
            for i in range(self.lowest, top + 1) if i not in self.excluded
            for a in range(1, self.m + 1)
            for b in range(1, self.m + 1)
        ]

    def require(self, key: VarKey) -> None:
        if not self.contains(key):
            raise IndexRangeError(f"{key.family}_{key.index},{key.row}{key.col}", self.description)


# ============================================================================
# Bracket rules
# ============================================================================

class BracketRule(ABC):
    """Computes {x_lambda y} for two generators"""

    local: bool = True

    @abstractmethod
    def entry(self, x: VarKey, y: VarKey) -> LambdaValue:
        pass


class TableRule(BracketRule):
    """Explicit finite table; missing pairs bracket to zero"""

    def __init__(self, entries: Mapping[Tuple[VarKey, VarKey], LambdaValue], local: Optional[bool] = None):
        self.entries = dict(entries)
        self.local = all(v.is_local() for v in self.entries.values()) if local is None else local

    def entry(self, x: VarKey, y: VarKey) -> LambdaValue:
        return self.entries.get((x, y), LambdaValue.zero())


class LinearCombinationRule(BracketRule):
    """sum_k coefficient_k * rule_k with DiffPoly (usually parameter) coefficients"""

    def __init__(self, parts: Sequence[Tuple[DiffPoly, BracketRule]]):
        self.parts = list(parts)
        self.local = all(rule.local for _, rule in self.parts)

    def entry(self, x: VarKey, y: VarKey) -> LambdaValue:
        total = LambdaValue.zero()
        for coefficient, rule in self.parts:
            total = total + rule.entry(x, y).left_multiply(coefficient)
        return total


class ProductRule(BracketRule):
    """Tensor product: each family brackets by its own rule, cross brackets vanish"""

    def __init__(self, rules: Mapping[str, BracketRule]):
        self.rules = dict(rules)
        self.local = all(rule.local for rule in self.rules.values())

    def entry(self, x: VarKey, y: VarKey) -> LambdaValue:
        if x.family != y.family or x.family not in self.rules:
            return LambdaValue.zero()
        return self.rules[x.family].entry(x, y)


class SubstitutedRule(BracketRule):
    """Entries of another rule pushed through a differential substitution"""

    def __init__(self, rule: BracketRule, mapping: Mapping[VarKey, DiffPoly]):
        self.rule = rule
        self.mapping = dict(mapping)
        self.local = rule.local

    def entry(self, x: VarKey, y: VarKey) -> LambdaValue:
        return self.rule.entry(x, y).substitute(self.mapping)


# ============================================================================
# Structures
# ============================================================================

@dataclass(eq=False)
class PVAStructure:
    """A lambda-bracket on the generators of `universe`, extended by the Master Formula"""
    name: str
    universe: Universe
    rule: BracketRule
    kind: str = ""
    aliases: Dict[VarKey, str] = field(default_factory=dict)
    _cache: Dict[Tuple[VarKey, VarKey], LambdaValue] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def local(self) -> bool:
        return self.rule.local

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_lock"] = None
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def contains(self, key: VarKey) -> bool:
        return self.universe.contains(key)

    def generators(self, max_index: Optional[int] = None) -> List[VarKey]:
        return self.universe.generators(max_index)

    def bracket(self, x: VarKey, y: VarKey) -> LambdaValue:
        """{x_lambda y} for generators x, y"""
        x, y = x.base(), y.base()
        key = (x, y)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        self.universe.require(x)
        self.universe.require(y)
        value = self.rule.entry(x, y)
        with self._lock:
            # first writer wins
            return self._cache.setdefault(key, value)

    def table(self, max_index: Optional[int] = None) -> Dict[Tuple[VarKey, VarKey], LambdaValue]:
        gens = self.generators(max_index)
        return {(x, y): self.bracket(x, y) for x in gens for y in gens}


def linear_structure(name: str, universe: Universe,
                     parts: Sequence[Tuple[Union[DiffPoly, int, Fraction], PVAStructure]],
                     kind: str = "", aliases: Optional[Dict[VarKey, str]] = None) -> PVAStructure:
    """sum_k coefficient_k * S_k as a new structure on a common universe"""
    rule = LinearCombinationRule([(DiffPoly.coerce(c), s.rule) for c, s in parts])
    return PVAStructure(name, universe, rule, kind=kind, aliases=dict(aliases or {}))


@dataclass(frozen=True)
class LocalFunctional:
    """The class of `density` in V / dV"""
    density: DiffPoly

    def __sub__(self, other: LocalFunctional) -> LocalFunctional:
        return LocalFunctional(self.density - other.density)

    def __add__(self, other: LocalFunctional) -> LocalFunctional:
        return LocalFunctional(self.density + other.density)

    def is_zero(self) -> bool:
        return not self.density or is_total_derivative(self.density)

    def diagnostic(self) -> str:
        if not self.density:
            return ""
        return total_derivative_diagnostic(self.density)[1]

    def equals(self, other: LocalFunctional) -> bool:
        return (self - other).is_zero()

    def scale(self, factor: Union[int, Fraction]) -> LocalFunctional:
        return LocalFunctional(self.density.scale(factor))
