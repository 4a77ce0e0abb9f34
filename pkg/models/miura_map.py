"""
Free-field targets of Miura maps and the maps themselves.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

from models.differential_polynomial import DiffPoly, VarKey, describe_key, generator, parameter
from models.lambda_value import LambdaValue
from models.structure import PVAStructure, TableRule, Universe

logger = logging.getLogger(__name__)

GFZ_FAMILY = "v"

Scalar = Union[int, Fraction]


def gfz_generator(i: int) -> VarKey:
    """v_i, numbered from 1"""
    return generator(i, family=GFZ_FAMILY)


def gfz_parameter(i: int, j: int) -> VarKey:
    """The symbolic entry s_ij = s_ji"""
    low, high = sorted((i, j))
    return parameter("s", 0, low, high)


def gfz_structure(N: int, S: Optional[Sequence[Sequence[Scalar]]] = None,
                  name: Optional[str] = None) -> PVAStructure:
    """
    GFZ algebra on v_1..v_N with {v_i lambda v_j} = s_ij lambda.

    Args:
        N: Number of free fields
        S: Symmetric rational matrix; None uses the symbolic entries s_ij

    Raises:
        ValueError: If S is not a symmetric N x N matrix
    """
    if N < 1:
        raise ValueError(f"GFZ algebra needs at least one generator, got N={N}")
    if S is not None:
        if len(S) != N or any(len(row) != N for row in S):
            raise ValueError(f"S must be {N} x {N}")
        if any(Fraction(S[i][j]) != Fraction(S[j][i]) for i in range(N) for j in range(N)):
            raise ValueError("S must be symmetric")

    entries = {}
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            if S is None:
                coefficient = DiffPoly.variable(gfz_parameter(i, j))
            else:
                coefficient = DiffPoly.constant(Fraction(S[i - 1][j - 1]))
            if coefficient:
                entries[(gfz_generator(i), gfz_generator(j))] = LambdaValue.monomial(coefficient, 1)

    keys = [gfz_generator(i) for i in range(1, N + 1)]
    universe = Universe.explicit(keys, description=f"R_{N}")
    return PVAStructure(name or f"gfz({N})", universe, TableRule(entries, local=True), kind="gfz")


def negative_identity(N: int) -> List[List[int]]:
    return [[-1 if i == j else 0 for j in range(N)] for i in range(N)]


def virasoro_magri_structure(c: Union[Scalar, DiffPoly] = 1, key: Optional[VarKey] = None) -> PVAStructure:
    """{u lambda u} = (2 lambda + d) u + c lambda^3 on a single generator"""
    u_key = key or generator(-1)
    u = DiffPoly.variable(u_key)
    value = LambdaValue({0: u.derivative(), 1: u.scale(2), 3: DiffPoly.coerce(c)})
    universe = Universe.explicit([u_key], description="Vir")
    return PVAStructure("virasoro", universe, TableRule({(u_key, u_key): value}, local=True),
                        kind="virasoro", aliases={u_key: "u"})


@dataclass
class MiuraMap:
    """
    A differential algebra map from the source algebra into the target.

    `images` sends source generators to target polynomials; `leading` holds the
    d^{n-1} coefficient matrix of each factor, whose sum is the image of the
    top generator.
    """
    name: str
    source: PVAStructure
    target: PVAStructure
    images: Dict[VarKey, DiffPoly] = field(default_factory=dict)
    leading: List[tuple] = field(default_factory=list)
    top_index: Optional[int] = None
    source_generators: List[VarKey] = field(default_factory=list)

    def __post_init__(self):
        if not self.source_generators:
            self.source_generators = sorted(self.images)

    @property
    def m(self) -> int:
        return self.source.universe.m

    def image(self, f: DiffPoly) -> DiffPoly:
        return f.substitute(self.images)

    def image_value(self, value: LambdaValue) -> LambdaValue:
        return value.substitute(self.images)

    def top_residual(self) -> Dict[VarKey, DiffPoly]:
        """Image of the top generator minus the sum of the factor subleading coefficients"""
        if self.top_index is None or not self.leading:
            return {}
        result = {}
        m = len(self.leading[0])
        family = self.source.universe.family
        for a in range(1, m + 1):
            for b in range(1, m + 1):
                key = generator(self.top_index, a, b, family)
                expected = DiffPoly.zero()
                for matrix in self.leading:
                    expected = expected + matrix[a - 1][b - 1]
                difference = self.images.get(key, DiffPoly.zero()) - expected
                if difference:
                    result[key] = difference
        return result

    def labelled(self) -> Dict[str, DiffPoly]:
        labels = self.source.aliases
        return {
            labels.get(key, describe_key(key, self.m)): self.images[key]
            for key in self.source_generators
        }
