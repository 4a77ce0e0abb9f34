"""
Axiom verifiers for lambda-bracket structures: skew-symmetry, Jacobi identity
and compatibility of pencils, evaluated on generators.
"""
import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from calculators.calculator_interface import CalculatorInterface
from calculators.master_formula import master_bracket
from config.settings import settings
from models.differential_polynomial import DiffPoly, VarKey, describe_key, parameter
from models.lambda_value import LambdaMuValue, LambdaValue
from models.structure import PVAStructure, linear_structure
from utils.combinatorics import binomial
from utils.exceptions import UnsupportedOperationError
from utils.parallel import run_tasks

logger = logging.getLogger(__name__)

CHECKS = ("skew", "jacobi", "compat")

PENCIL_PARAMETER = parameter("c")

Residual = Union[LambdaValue, LambdaMuValue]


def skew_residual(structure: PVAStructure, x: VarKey, y: VarKey) -> LambdaValue:
    """{x_lambda y} + {y_{-lambda-d} x}"""
    return structure.bracket(x, y) + structure.bracket(y, x).skew_adjoint()


def jacobi_residual(structure: PVAStructure, x: VarKey, y: VarKey, z: VarKey) -> LambdaMuValue:
    """{x_lambda {y_mu z}} - {y_mu {x_lambda z}} - {{x_lambda y}_{lambda+mu} z}"""
    if not structure.local:
        raise UnsupportedOperationError(
            "jacobi", f"{structure.name} is nonlocal; only skew-symmetry is checked on nonlocal tables"
        )
    residual = LambdaMuValue()

    # {x_lambda {y_mu z}}: mu-coefficients of the inner bracket, lambda from the outer one
    for mu_power, inner in structure.bracket(y, z).local.items():
        for lam_power, value in master_bracket(structure, x, inner).local.items():
            residual.add_term(lam_power, mu_power, value)

    # - {y_mu {x_lambda z}}
    for lam_power, inner in structure.bracket(x, z).local.items():
        for mu_power, value in master_bracket(structure, y, inner).local.items():
            residual.add_term(lam_power, mu_power, -value)

    # - {{x_lambda y}_{lambda+mu} z}: lambda^p is a scalar for the outer bracket
    for lam_power, inner in structure.bracket(x, y).local.items():
        for nu_power, value in master_bracket(structure, inner, z).local.items():
            for s in range(nu_power + 1):
                residual.add_term(lam_power + s, nu_power - s, -value.scale(binomial(nu_power, s)))

    return residual


def pencil(first: PVAStructure, second: PVAStructure, coefficient: Union[DiffPoly, int] = None,
           name: Optional[str] = None) -> PVAStructure:
    """first + coefficient * second, the coefficient defaulting to the formal parameter c"""
    if coefficient is None:
        coefficient = DiffPoly.variable(PENCIL_PARAMETER)
    return linear_structure(
        name or f"{first.name}+c*{second.name}",
        first.universe,
        [(1, first), (coefficient, second)],
        kind="pencil",
        aliases=first.aliases,
    )


def compat_residual(first: PVAStructure, second: PVAStructure,
                    triple: Tuple[VarKey, VarKey, VarKey]) -> LambdaMuValue:
    """Jacobi residual of first + c*second, a polynomial in c"""
    if not (first.local and second.local):
        raise UnsupportedOperationError("compat", "both structures must be local")
    return jacobi_residual(pencil(first, second), *triple)


def residual_by_parameter(residual: LambdaMuValue) -> Dict[int, LambdaMuValue]:
    """Split a pencil residual into its coefficients of c^k"""
    return residual.split_by_parameter(PENCIL_PARAMETER)


# ============================================================================
# Sweeps
# ============================================================================

@dataclass
class VerificationRecord:
    """One evaluated identity"""
    check: str
    indices: Tuple[VarKey, ...]
    residual: Residual
    labels: Tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.residual.is_zero()


@dataclass
class VerificationResult:
    """Result of a verification sweep"""
    structure_name: str
    records: List[VerificationRecord] = field(default_factory=list)
    stats: Dict[str, Any] = field(default_factory=dict)
    issues: List[str] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(record.passed for record in self.records)

    def failures(self) -> List[VerificationRecord]:
        return [record for record in self.records if not record.passed]

    def to_dataframe(self) -> pd.DataFrame:
        """Convert verification records to a pandas DataFrame"""
        if not self.records:
            return pd.DataFrame()

        data = []
        for record in self.records:
            terms = (
                len(record.residual.terms) if isinstance(record.residual, LambdaMuValue)
                else len(record.residual.local) + len(record.residual.nonlocal_terms)
            )
            data.append({
                'structure': self.structure_name,
                'check': record.check,
                'indices': ', '.join(record.labels),
                'passed': record.passed,
                'residual_terms': terms,
            })
        return pd.DataFrame(data)


def _evaluate(task: Tuple[str, PVAStructure, Optional[PVAStructure], Tuple[VarKey, ...]]) -> VerificationRecord:
    check, structure, partner, keys = task
    m = structure.universe.m
    labels = tuple(structure.aliases.get(k, describe_key(k, m)) for k in keys)
    if check == "skew":
        residual: Residual = skew_residual(structure, *keys)
    elif check == "jacobi":
        residual = jacobi_residual(structure, *keys)
    else:
        residual = compat_residual(structure, partner, keys)
    if not residual.is_zero():
        logger.debug(f"{check} residual nonzero on {labels} for {structure.name}")
    return VerificationRecord(check, keys, residual, labels)


class AxiomVerifier(CalculatorInterface[PVAStructure, VerificationResult]):
    """Runs skew / Jacobi / compatibility sweeps over generator pairs and triples"""

    def __init__(self, checks: Sequence[str] = ("skew", "jacobi"), partner: Optional[PVAStructure] = None,
                 max_index: Optional[int] = None, jobs: Optional[int] = None,
                 sample: Optional[int] = None, seed: Optional[int] = None):
        """
        Initialize AxiomVerifier.

        Args:
            checks: Identities to verify, any of skew, jacobi, compat
            partner: Second structure of the pencil for the compat check
            max_index: Highest generator index for infinite algebras
            jobs: Worker processes (default from settings)
            sample: Evaluate only this many randomly chosen tuples per check
            seed: Seed for the sampling
        """
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise ValueError(f"Unknown checks: {', '.join(unknown)}")
        self.checks = list(checks)
        self.partner = partner
        self.max_index = max_index
        self.jobs = jobs if jobs is not None else settings.DEFAULT_JOBS
        self.sample = sample
        self.seed = settings.RANDOM_SEED if seed is None else seed

    def validate(self, structure: PVAStructure) -> List[str]:
        issues = []
        if not structure.universe.is_finite and self.max_index is None:
            issues.append(f"{structure.name} has infinitely many generators; max_index is required")
        if not structure.local:
            for check in ("jacobi", "compat"):
                if check in self.checks:
                    issues.append(f"{check} is not evaluated on the nonlocal structure {structure.name}")
        if "compat" in self.checks:
            if self.partner is None:
                issues.append("compat requires a partner structure")
            elif not self.partner.local:
                issues.append(f"compat partner {self.partner.name} is nonlocal")
        return issues

    def _tuples(self, check: str, generators: List[VarKey]) -> List[Tuple[VarKey, ...]]:
        if check == "skew":
            tuples = list(itertools.combinations_with_replacement(generators, 2))
        else:
            tuples = list(itertools.product(generators, repeat=3))
        if self.sample is not None and self.sample < len(tuples):
            rng = random.Random(self.seed)
            tuples = sorted(rng.sample(tuples, self.sample))
        return tuples

    def calculate(self, structure: PVAStructure) -> VerificationResult:
        """
        Verify the requested identities on all generator tuples.

        Args:
            structure: Structure to verify

        Returns:
            VerificationResult with one record per evaluated tuple
        """
        issues = self.validate(structure)
        if issues:
            raise UnsupportedOperationError("verify", "; ".join(issues))

        result = VerificationResult(structure.name)
        generators = structure.generators(self.max_index)
        logger.info(f"Verifying {', '.join(self.checks)} on {structure.name} ({len(generators)} generators)")

        for check in self.checks:
            tasks = [(check, structure, self.partner, keys) for keys in self._tuples(check, generators)]
            records = run_tasks(_evaluate, tasks, self.jobs)
            result.records.extend(records)
            failed = sum(1 for r in records if not r.passed)
            result.stats[check] = {'evaluated': len(records), 'failed': failed}
            if failed:
                result.issues.append(f"{check}: {failed} of {len(records)} residuals are nonzero")
            logger.info(f"{check}: {len(records)} evaluated, {failed} failed")

        result.stats['generators'] = len(generators)
        return result
