from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional

from config.settings import settings
from models.differential_polynomial import DiffPoly, VarKey, describe_key
from models.pseudo_differential import TruncationPolicy

if TYPE_CHECKING:
    from calculators.adler_structures import AdlerContext


@dataclass(frozen=True)
class HierarchySpec:
    """An integrable hierarchy attached to an Adler operator context"""
    ctx: "AdlerContext"
    reduced: bool = False
    k_max: int = 3
    policy: Optional[TruncationPolicy] = None
    name: str = ""

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError(f"k_max must be at least 1, got {self.k_max}")

    @property
    def N(self) -> int:
        return self.ctx.N

    @property
    def m(self) -> int:
        return self.ctx.m

    def policy_for(self, k: int) -> TruncationPolicy:
        """Explicit policy, or the default floor for h_k"""
        return self.policy if self.policy is not None else TruncationPolicy.for_density(k, self.ctx.N)

    def unreduced(self) -> HierarchySpec:
        return HierarchySpec(self.ctx, False, self.k_max, self.policy, self.name)

    def generators(self, max_index: Optional[int] = None) -> List[VarKey]:
        """Generators whose flows are computed (infinite flavors stop at the index limit)"""
        universe = self.ctx.universe(self.reduced)
        if not universe.is_finite and max_index is None:
            max_index = settings.INFINITE_INDEX_LIMIT
        return universe.generators(max_index)

    def label(self) -> str:
        return self.name or self.ctx.describe(self.reduced)


@dataclass
class FlowEquation:
    """du/dt_k = rhs[u] for each generator u"""
    k: int
    rhs: Dict[VarKey, DiffPoly] = field(default_factory=dict)
    route: str = "lax"
    constraint_flow: Dict[VarKey, DiffPoly] = field(default_factory=dict)

    def __getitem__(self, key: VarKey) -> DiffPoly:
        return self.rhs.get(key, DiffPoly.zero())

    def respects_constraint(self) -> bool:
        """True when the flows of the eliminated generators u_{-N} vanish"""
        return all(not value for value in self.constraint_flow.values())

    def differences(self, other: FlowEquation) -> Dict[VarKey, DiffPoly]:
        """Generator-wise self - other, nonzero entries only"""
        keys = set(self.rhs) | set(other.rhs)
        result = {}
        for key in sorted(keys):
            difference = self[key] - other[key]
            if difference:
                result[key] = difference
        return result

    def labelled(self, m: int = 1, aliases: Optional[Dict[VarKey, str]] = None) -> Dict[str, DiffPoly]:
        aliases = aliases or {}
        return {aliases.get(key, describe_key(key, m)): value for key, value in sorted(self.rhs.items())}
