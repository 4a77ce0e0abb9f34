"""
Text and LaTeX rendering of differential polynomials, lambda-brackets and flows.
"""
import logging
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Tuple

from models.differential_polynomial import DiffPoly, Monomial, VarKey, describe_key
from models.hierarchy import FlowEquation
from models.lambda_value import LambdaMuValue, LambdaValue
from models.pseudo_differential import PsiDO
from utils.combinatorics import format_rational

logger = logging.getLogger(__name__)

FORMATS = ("text", "latex", "json")


class ExpressionRenderer:
    """Renders algebra values in a plain text or LaTeX notation"""

    def __init__(self, fmt: str = "text", aliases: Optional[Mapping[VarKey, str]] = None, m: int = 1):
        if fmt not in ("text", "latex"):
            raise ValueError(f"Unsupported render format: {fmt}")
        self.fmt = fmt
        self.aliases = dict(aliases or {})
        self.m = m
        self.latex = fmt == "latex"
        self.lam = r"\lambda" if self.latex else "λ"
        self.mu = r"\mu" if self.latex else "μ"
        self.d = r"\partial" if self.latex else "∂"

    # ------------------------------------------------------------------
    # Atoms
    # ------------------------------------------------------------------

    def key(self, key: VarKey) -> str:
        """Variable name with primes for its derivative order"""
        base = key.base()
        if base.family == "c":
            name = "c"
        elif base.family == "s":
            name = f"s_{{{base.row}{base.col}}}" if self.latex else f"s_{base.row}{base.col}"
        elif base in self.aliases:
            name = self.aliases[base]
        else:
            name = describe_key(base, self.m)
        if key.order == 0:
            return name
        if key.order <= 3:
            return name + "'" * key.order
        return f"{name}^{{({key.order})}}" if self.latex else f"{name}^({key.order})"

    def _power(self, base: str, exponent: int) -> str:
        if exponent == 1:
            return base
        return f"{base}^{{{exponent}}}" if self.latex else f"{base}^{exponent}"

    def _number(self, value: Fraction) -> str:
        value = Fraction(value)
        if self.latex and value.denominator != 1:
            return rf"\frac{{{value.numerator}}}{{{value.denominator}}}"
        return format_rational(value)

    def _monomial(self, mono: Monomial) -> str:
        separator = "" if self.latex else " "
        return separator.join(self._power(self.key(k), e) for k, e in mono)

    def _terms(self, pieces: List[Tuple[Fraction, str]]) -> str:
        """Join (coefficient, factor text) pairs into a signed sum"""
        if not pieces:
            return "0"
        out: List[str] = []
        for position, (c, body) in enumerate(pieces):
            negative = c < 0
            magnitude = -c if negative else c
            if body:
                number = "" if magnitude == 1 else self._number(magnitude)
                text = f"{number} {body}".strip() if not self.latex else f"{number}{body}"
            else:
                text = self._number(magnitude)
            if position == 0:
                out.append(f"-{text}" if negative else text)
            else:
                out.append(f" - {text}" if negative else f" + {text}")
        return "".join(out)

    # ------------------------------------------------------------------
    # Values
    # ------------------------------------------------------------------

    def poly(self, p: DiffPoly) -> str:
        return self._terms([(c, self._monomial(mono)) for mono, c in p.items()])

    def _factor(self, p: DiffPoly) -> Tuple[Fraction, str]:
        """A coefficient multiplying a lambda power: a bare term or a parenthesized sum"""
        items = p.items()
        if len(items) == 1:
            mono, c = items[0]
            return c, self._monomial(mono)
        return Fraction(1), f"({self.poly(p)})"

    def _with_variable(self, body: str, variable: str) -> str:
        if not body:
            return variable
        if not variable:
            return body
        return f"{body}{variable}" if self.latex else f"{body} {variable}"

    def value(self, v: LambdaValue) -> str:
        """Local part by descending powers of lambda, then the nonlocal tail"""
        pieces: List[Tuple[Fraction, str]] = []
        for power in sorted(v.local, reverse=True):
            c, body = self._factor(v.local[power])
            variable = self._power(self.lam, power) if power else ""
            pieces.append((c, self._with_variable(body, variable)))
        inverse = f"({self.lam}+{self.d})^{{-1}}" if self.latex else f"({self.lam}+{self.d})^-1"
        for left, right in v.nonlocal_pairs():
            c, body = self._factor(left)
            pieces.append((c, f"{body} {inverse} ({self.poly(right)})".strip()))
        return self._terms(pieces)

    def lambda_mu(self, v: LambdaMuValue) -> str:
        pieces: List[Tuple[Fraction, str]] = []
        for (lam, mu), coefficient in sorted(v.items(), reverse=True):
            c, body = self._factor(coefficient)
            variable = " ".join(
                part for part in (self._power(self.lam, lam) if lam else "", self._power(self.mu, mu) if mu else "")
                if part
            )
            pieces.append((c, self._with_variable(body, variable)))
        return self._terms(pieces)

    def operator(self, op: PsiDO) -> str:
        """Scalar operators as sum a_e d^e; matrix operators entry by entry"""
        if op.m != 1:
            rows = []
            for a in range(1, op.m + 1):
                for b in range(1, op.m + 1):
                    rows.append(f"[{a}{b}] {self.operator(op.entry_operator(a, b))}")
            return "\n".join(rows)
        pieces: List[Tuple[Fraction, str]] = []
        for e in sorted(op.coeffs, reverse=True):
            c, body = self._factor(op.scalar_coefficient(e))
            variable = self._power(self.d, e) if e else ""
            if e < 0 and not self.latex:
                variable = f"{self.d}^({e})"
            pieces.append((c, self._with_variable(body, variable)))
        text = self._terms(pieces)
        if op.floor is not None:
            text += f" + O({self._power(self.d, op.floor - 1)})"
        return text

    def flow(self, equation: FlowEquation, key: VarKey) -> str:
        name = self.key(key)
        rhs = self.poly(equation[key])
        if self.latex:
            return rf"\frac{{d{name}}}{{dt_{{{equation.k}}}}} = {rhs}"
        return f"d{name}/dt_{equation.k} = {rhs}"

    def flows(self, equation: FlowEquation) -> List[str]:
        return [self.flow(equation, key) for key in sorted(equation.rhs)]

    def labelled(self, values: Mapping[VarKey, DiffPoly]) -> Dict[str, str]:
        return {self.key(key): self.poly(value) for key, value in sorted(values.items())}
