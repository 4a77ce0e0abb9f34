"""
Master Formula evaluation of lambda-brackets, functional brackets and flows.

{f_lambda g} = sum  dg/dy^{(n)} (lambda + d)^n {x_{lambda+d} y}_-> (-lambda - d)^m df/dx^{(m)}
over generators x, y and derivative orders m, n.
"""
import logging
from typing import Dict, List, Tuple, Union

from models.differential_polynomial import DiffPoly, VarKey
from models.lambda_value import (
    LambdaPoly,
    LambdaValue,
    apply_symbol,
    neg_shift_apply,
    shift_apply,
)
from models.structure import LocalFunctional, PVAStructure
from utils.exceptions import IndexRangeError, UnsupportedOperationError

logger = logging.getLogger(__name__)

Element = Union[DiffPoly, VarKey]


def _partials(structure: PVAStructure, f: DiffPoly) -> List[Tuple[VarKey, int, DiffPoly]]:
    """(generator, derivative order, partial derivative) for every variable of f"""
    parts = []
    for key in sorted(f.variables()):
        if key.is_parameter:
            continue
        if not structure.contains(key):
            raise IndexRangeError(
                f"{key.family}_{key.index},{key.row}{key.col}", structure.universe.description
            )
        part = f.partial(key)
        if part:
            parts.append((key.base(), key.order, part))
    return parts


def _linear_parts(f: DiffPoly, operation: str) -> List[Tuple[VarKey, DiffPoly]]:
    """Split f = sum a_x x into generator / scalar-coefficient pairs"""
    parts: Dict[VarKey, DiffPoly] = {}
    for mono, c in f.terms.items():
        generators = [(k, e) for k, e in mono if not k.is_parameter]
        scalars = tuple((k, e) for k, e in mono if k.is_parameter)
        if not generators:
            continue
        if len(generators) != 1 or generators[0][1] != 1 or generators[0][0].order != 0:
            raise UnsupportedOperationError(
                operation,
                "nonlocal structures only bracket linear combinations of generators"
            )
        key = generators[0][0]
        parts[key] = parts.get(key, DiffPoly.zero()) + DiffPoly({scalars: c})
    return sorted(parts.items())


def master_bracket(structure: PVAStructure, f: Element, g: Element) -> LambdaValue:
    """{f_lambda g} for differential polynomials f, g"""
    f = DiffPoly.coerce(f)
    g = DiffPoly.coerce(g)
    if not structure.local:
        return _linear_bracket(structure, f, g)

    f_parts = _partials(structure, f)
    if not f_parts:
        return LambdaValue.zero()
    g_parts = _partials(structure, g)
    if not g_parts:
        return LambdaValue.zero()

    result: LambdaPoly = {}
    for x, m, df in f_parts:
        # (-lambda - d)^m df/dx^{(m)}
        right = neg_shift_apply(m, {0: df})
        for y, n, dg in g_parts:
            entry = structure.bracket(x, y)
            if entry.is_zero():
                continue
            middle = apply_symbol(entry.local, right)
            if not middle:
                continue
            for p, value in shift_apply(n, middle).items():
                term = dg * value
                if not term:
                    continue
                total = result[p] + term if p in result else term
                if total:
                    result[p] = total
                else:
                    result.pop(p, None)
    return LambdaValue(result)


def _linear_bracket(structure: PVAStructure, f: DiffPoly, g: DiffPoly) -> LambdaValue:
    total = LambdaValue.zero()
    for x, a in _linear_parts(f, "master_bracket"):
        for y, b in _linear_parts(g, "master_bracket"):
            total = total + structure.bracket(x, y).left_multiply(a * b)
    return total


def functional_bracket(structure: PVAStructure, F: LocalFunctional, G: LocalFunctional) -> LocalFunctional:
    """{int f, int g} = int {f_lambda g}|_{lambda=0}"""
    if not structure.local:
        raise UnsupportedOperationError("functional_bracket", "the structure is nonlocal")
    value = master_bracket(structure, F.density, G.density)
    return LocalFunctional(value.at_zero())


def flow(structure: PVAStructure, h: DiffPoly, target: Element) -> DiffPoly:
    """The Hamiltonian vector field of int h applied to `target`: {h_lambda target}|_{lambda=0}"""
    if not structure.local:
        raise UnsupportedOperationError("flow", "Hamiltonian flows are evaluated on local structures")
    return master_bracket(structure, h, target).at_zero()


def flow_by_operator(structure: PVAStructure, h: DiffPoly, target: VarKey) -> DiffPoly:
    """du_i/dt = sum_j H_ij(d) delta h / delta u_j, where H_ij(lambda) = {u_j lambda u_i}"""
    if not structure.local:
        raise UnsupportedOperationError("flow_by_operator", "the structure is nonlocal")
    total = DiffPoly.zero()
    for base in sorted(h.generators()):
        variational = h.varder(base)
        if not variational:
            continue
        entry = structure.bracket(base, target)
        for p, coefficient in entry.local.items():
            total = total + coefficient * variational.derivative(p)
    return total


def flows(structure: PVAStructure, h: DiffPoly, targets: List[VarKey]) -> Dict[VarKey, DiffPoly]:
    return {target: flow(structure, h, target) for target in targets}


def flow_routes_agree(structure: PVAStructure, h: DiffPoly, targets: List[VarKey]) -> List[VarKey]:
    """Generators on which the two flow routes disagree (empty when consistent)"""
    mismatches = []
    for target in targets:
        if flow(structure, h, target) != flow_by_operator(structure, h, target):
            logger.warning(f"Flow routes disagree on {target} in {structure.name}")
            mismatches.append(target)
    return mismatches


def leibniz_residual(structure: PVAStructure, f: DiffPoly, g: DiffPoly, h: DiffPoly) -> LambdaValue:
    """{f_lambda gh} - {f_lambda g} h - {f_lambda h} g"""
    whole = master_bracket(structure, f, g * h)
    first = master_bracket(structure, f, g).left_multiply(h)
    second = master_bracket(structure, f, h).left_multiply(g)
    return whole - first - second
