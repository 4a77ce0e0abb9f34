import glob
import json
import logging
import os
import re
from fractions import Fraction
from typing import Any, Dict, List, Tuple, Union

from models.differential_polynomial import DEFAULT_FAMILY, DiffPoly, Monomial, VarKey
from models.hierarchy import FlowEquation
from models.lambda_value import LambdaMuValue, LambdaValue
from models.pseudo_differential import PsiDO
from parsers.parser_interface import ParserInterface
from utils.combinatorics import parse_rational
from utils.exceptions import ExpressionParsingError, FileReadError, handle_parsing_error

logger = logging.getLogger(__name__)

_LABEL = re.compile(r"([A-Za-z]+)_\{(-?\d+)(?:,(\d)(\d))?\}('*)")


def parse_label(label: str) -> VarKey:
    """Inverse of describe_key: u_{-1}, u_{-1,12}, v_{2}'"""
    match = _LABEL.fullmatch(label.strip())
    if not match:
        raise ExpressionParsingError(label, "Expected a generator label such as u_{-1} or u_{-1,12}")
    family, index, row, col, primes = match.groups()
    return VarKey(family, int(index), int(row or 1), int(col or 1), len(primes))


def decode_key(entry: List[Any]) -> VarKey:
    if len(entry) not in (4, 5):
        raise ExpressionParsingError(json.dumps(entry), "A variable is [index, row, col, order(, family)]")
    family = entry[4] if len(entry) == 5 else DEFAULT_FAMILY
    return VarKey(family, int(entry[0]), int(entry[1]), int(entry[2]), int(entry[3]))


def decode_monomial(entries: List[List[Any]]) -> Monomial:
    factors: Dict[VarKey, int] = {}
    for entry in entries:
        if len(entry) not in (5, 6):
            raise ExpressionParsingError(
                json.dumps(entry), "A monomial factor is [index, row, col, order, exp(, family)]"
            )
        family = entry[5] if len(entry) == 6 else DEFAULT_FAMILY
        key = VarKey(family, int(entry[0]), int(entry[1]), int(entry[2]), int(entry[3]))
        factors[key] = factors.get(key, 0) + int(entry[4])
    return tuple(sorted(factors.items()))


def decode_poly(terms: List[List[Any]]) -> DiffPoly:
    result: Dict[Monomial, Fraction] = {}
    for coefficient, mono in terms:
        key = decode_monomial(mono)
        result[key] = result.get(key, Fraction(0)) + parse_rational(str(coefficient))
    return DiffPoly(result)


def decode_value(document: Dict[str, Any]) -> LambdaValue:
    local = {int(p): decode_poly(terms) for p, terms in document.get("local", {}).items()}
    tensor: Dict[Tuple[Monomial, Monomial], Fraction] = {}
    for coefficient, left, right in document.get("nonlocal", []):
        tensor[(decode_monomial(left), decode_monomial(right))] = parse_rational(str(coefficient))
    return LambdaValue(local, tensor)


def decode_lambda_mu(document: Dict[str, Any]) -> LambdaMuValue:
    return LambdaMuValue({(int(lam), int(mu)): decode_poly(terms) for lam, mu, terms in document["lambda_mu"]})


def decode_operator(document: Dict[str, Any]) -> PsiDO:
    m = int(document["m"])
    coeffs = {
        int(e): tuple(tuple(decode_poly(x) for x in row) for row in rows)
        for e, rows in document["coefficients"].items()
    }
    return PsiDO(m, coeffs, document.get("floor"))


def decode_flow(document: Dict[str, Any]) -> FlowEquation:
    rhs = {parse_label(label): decode_poly(terms) for label, terms in document["flows"].items()}
    return FlowEquation(int(document["k"]), rhs, route=document.get("route", "lax"))


def decode_residual(document: Dict[str, Any]) -> Union[DiffPoly, LambdaValue, LambdaMuValue]:
    if "lambda_mu" in document:
        return decode_lambda_mu(document)
    if "terms" in document:
        return decode_poly(document["terms"])
    return decode_value(document)


class JsonExpressionParser(ParserInterface):
    """Reads every JSON layout the json exporter writes"""

    def parse_file(self, file_path: str) -> Any:
        """
        Parse one JSON document.

        Args:
            file_path: Path to the JSON file

        Returns:
            The decoded value

        Raises:
            FileReadError: If the file is missing or unreadable
            ExpressionParsingError: If the document layout is not recognized
        """
        if not os.path.exists(file_path):
            raise FileReadError(file_path, "File not found")
        try:
            with open(file_path, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as e:
            raise FileReadError(file_path, str(e)) from e
        logger.debug(f"Parsing {file_path}")
        return self.parse_data(text)

    def parse_files(self, file_paths: List[str]) -> List[Any]:
        """Parse files in order; glob patterns are expanded"""
        results = []
        for pattern in file_paths:
            matches = sorted(glob.glob(pattern)) or [pattern]
            for path in matches:
                results.append(self.parse_file(path))
        return results

    def parse_data(self, data: Any) -> Any:
        """
        Decode a document given as text or as a loaded JSON object.

        Flow documents give a FlowEquation, Miura documents a dict of images,
        verification reports a dict with decoded residuals.
        """
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as e:
                raise handle_parsing_error(data[:80], e) from e
        if not isinstance(data, dict):
            raise ExpressionParsingError(str(data)[:80], "Expected a JSON object")
        try:
            return self._decode(data)
        except ExpressionParsingError:
            raise
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
            raise handle_parsing_error(json.dumps(data)[:80], e) from e

    def _decode(self, data: Dict[str, Any]) -> Any:
        if "flows" in data and "k" in data:
            return decode_flow(data)
        if "images" in data:
            return {
                "map": data.get("map", ""),
                "images": {parse_label(label): decode_poly(terms) for label, terms in data["images"].items()},
            }
        if "records" in data:
            records = []
            for record in data["records"]:
                decoded = dict(record)
                decoded["keys"] = [decode_key(k) for k in record.get("keys", [])]
                decoded["residual"] = decode_residual(record["residual"])
                records.append(decoded)
            return {**data, "records": records}
        if "densities" in data:
            return {
                **data,
                "densities": {int(k): decode_poly(terms) for k, terms in data["densities"].items()},
                "flows": [decode_flow(flow) for flow in data.get("flows", [])],
            }
        if "coefficients" in data and "m" in data:
            return decode_operator(data)
        if "lambda_mu" in data:
            return decode_lambda_mu(data)
        if "local" in data or "nonlocal" in data:
            return decode_value(data)
        if "terms" in data:
            return decode_poly(data["terms"])
        raise ExpressionParsingError(json.dumps(data)[:80], "Unrecognized document layout")
