"""
JSON layouts of algebra values and results.

A variable is [index, row, col, order] with a fifth element naming the family
when it is not u; inside a monomial the exponent follows the order:
[index, row, col, order, exp] or [index, row, col, order, exp, family].
A DiffPoly is a list of [coefficient, [variables...]] with coefficients as
"p/q" strings. Every layout is read back by parsers.json_parser.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping

from exporters.exporter_interface import ExporterInterface
from models.differential_polynomial import DEFAULT_FAMILY, DiffPoly, Monomial, VarKey, describe_key
from models.hierarchy import FlowEquation
from models.lambda_value import LambdaMuValue, LambdaValue
from models.miura_map import MiuraMap
from models.pseudo_differential import PsiDO
from utils.combinatorics import format_rational
from utils.exceptions import FileWriteError

logger = logging.getLogger(__name__)


def encode_key(key: VarKey) -> List[Any]:
    entry: List[Any] = [key.index, key.row, key.col, key.order]
    if key.family != DEFAULT_FAMILY:
        entry.append(key.family)
    return entry


def encode_monomial(mono: Monomial) -> List[List[Any]]:
    result = []
    for key, exp in mono:
        entry: List[Any] = [key.index, key.row, key.col, key.order, exp]
        if key.family != DEFAULT_FAMILY:
            entry.append(key.family)
        result.append(entry)
    return result


def encode_poly(p: DiffPoly) -> List[List[Any]]:
    return [[format_rational(c), encode_monomial(mono)] for mono, c in p.items()]


def encode_value(v: LambdaValue) -> Dict[str, Any]:
    return {
        "local": {str(p): encode_poly(c) for p, c in sorted(v.local.items())},
        "nonlocal": [
            [format_rational(c), encode_monomial(left), encode_monomial(right)]
            for (left, right), c in sorted(v.nonlocal_terms.items())
        ],
    }


def encode_lambda_mu(v: LambdaMuValue) -> Dict[str, Any]:
    return {"lambda_mu": [[lam, mu, encode_poly(c)] for (lam, mu), c in v.items()]}


def encode_operator(op: PsiDO) -> Dict[str, Any]:
    return {
        "m": op.m,
        "floor": op.floor,
        "coefficients": {
            str(e): [[encode_poly(x) for x in row] for row in A]
            for e, A in sorted(op.coeffs.items(), reverse=True)
        },
    }


def encode_flow(equation: FlowEquation, m: int = 1) -> Dict[str, Any]:
    return {
        "k": equation.k,
        "route": equation.route,
        "flows": {describe_key(key, m): encode_poly(value) for key, value in sorted(equation.rhs.items())},
    }


def encode_images(values: Mapping[VarKey, DiffPoly], m: int = 1) -> Dict[str, Any]:
    return {describe_key(key, m): encode_poly(value) for key, value in sorted(values.items())}


def encode_miura(miura: MiuraMap) -> Dict[str, Any]:
    return {
        "map": miura.name,
        "source": miura.source.name,
        "target": miura.target.name,
        "images": {
            describe_key(key, miura.m): encode_poly(miura.images[key]) for key in miura.source_generators
        },
    }


def encode_residual(residual: Any) -> Dict[str, Any]:
    if isinstance(residual, LambdaMuValue):
        return encode_lambda_mu(residual)
    if isinstance(residual, LambdaValue):
        return encode_value(residual)
    if isinstance(residual, DiffPoly):
        return {"terms": encode_poly(residual)}
    raise TypeError(f"Cannot encode residual of type {type(residual).__name__}")


def encode_records(name: str, records: List[Any], issues: List[str]) -> Dict[str, Any]:
    """Verification-style report: one entry per evaluated tuple"""
    return {
        "structure": name,
        "passed": all(record.passed for record in records) and not issues,
        "issues": list(issues),
        "records": [
            {
                "check": getattr(record, "check", "homomorphism"),
                "indices": list(record.labels),
                "keys": [encode_key(k) for k in record.indices],
                "passed": record.passed,
                "residual": encode_residual(record.residual),
            }
            for record in records
        ],
    }


def encode(data: Any, m: int = 1) -> Any:
    """Encode any supported value by type"""
    if isinstance(data, DiffPoly):
        return {"terms": encode_poly(data)}
    if isinstance(data, (LambdaValue, LambdaMuValue)):
        return encode_residual(data)
    if isinstance(data, PsiDO):
        return encode_operator(data)
    if isinstance(data, FlowEquation):
        return encode_flow(data, m)
    if isinstance(data, MiuraMap):
        return encode_miura(data)
    if isinstance(data, dict):
        return data
    raise TypeError(f"Cannot encode value of type {type(data).__name__}")


def dumps(document: Any) -> str:
    """Canonical text of a JSON document"""
    return json.dumps(document, indent=2, ensure_ascii=False)


class JsonExporter(ExporterInterface[Any]):
    """Writes encoded values as JSON documents"""

    def __init__(self, m: int = 1):
        self.m = m

    def export(self, data: Any, output_path: str) -> bool:
        """
        Export a value or a prepared document to a JSON file.

        Args:
            data: DiffPoly, LambdaValue, PsiDO, FlowEquation, MiuraMap or a document dict
            output_path: Path to the output file

        Returns:
            True if export was successful

        Raises:
            FileWriteError: If the file cannot be written
        """
        try:
            document = encode(data, self.m)
            Path(output_path).parent.mkdir(parents=True, exist_ok=True)
            Path(output_path).write_text(dumps(document) + "\n", encoding="utf-8")
            logger.info(f"Wrote {output_path}")
            return True
        except OSError as e:
            raise FileWriteError(output_path, str(e)) from e
