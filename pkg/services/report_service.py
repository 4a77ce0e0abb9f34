"""
The standard verification battery behind the report command.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd

from calculators.adler_structures import VirasoroReport, oracle_mismatches, virasoro_report
from calculators.axiom_verifier import AxiomVerifier, VerificationResult
from calculators.hierarchy_calculator import HierarchyCalculator, HierarchyResult, verify_reduced_pde
from calculators.miura_calculator import MiuraCalculator, MiuraResult, dirac_miura, miura_image
from config.settings import settings
from services.structure_factory import StructureFactory

logger = logging.getLogger(__name__)

QUICK_AXIOMS = ["gfz(2)", "virasoro", "v1", "v2", "w2", "w3"]
FULL_AXIOMS = QUICK_AXIOMS + ["gfz(3)", "v3", "v-mat(1,2)", "v-mat(2,2)"]
QUICK_COMPAT = ["v1", "v2", "w2"]
FULL_COMPAT = QUICK_COMPAT + ["v3", "w3", "v-mat(1,2)", "v-mat(2,2)"]
QUICK_HIERARCHIES = {"kdv": 3}
FULL_HIERARCHIES = {"kdv": 5, "boussinesq": 4, "kp": 3, "v2": 3, "matrix-kdv": 3}
QUICK_VIRASORO = ["w2", "w3"]
FULL_VIRASORO = QUICK_VIRASORO + ["w4", "w-mat(2,2)"]


@dataclass
class ReportData:
    """Everything a verification report shows"""
    verification: List[VerificationResult] = field(default_factory=list)
    hierarchies: List[HierarchyResult] = field(default_factory=list)
    miura: List[MiuraResult] = field(default_factory=list)
    virasoro: List[VirasoroReport] = field(default_factory=list)
    oracle: Dict[str, List[str]] = field(default_factory=dict)
    equations: Dict[str, bool] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return (
            all(r.all_passed for r in self.verification)
            and all(r.all_passed for r in self.hierarchies)
            and all(r.all_passed for r in self.miura)
            and all(r.passed for r in self.virasoro)
            and not any(self.oracle.values())
            and all(self.equations.values())
        )

    def summary_dataframe(self) -> pd.DataFrame:
        """One row per item of the battery"""
        rows: List[Dict[str, Any]] = []
        for result in self.verification:
            rows.append({'section': 'axioms', 'item': result.structure_name,
                         'passed': result.all_passed, 'detail': '; '.join(result.issues)})
        for name, mismatches in self.oracle.items():
            rows.append({'section': 'oracle', 'item': name, 'passed': not mismatches,
                         'detail': '; '.join(mismatches[:3])})
        for result in self.hierarchies:
            rows.append({'section': 'hierarchy', 'item': result.spec_name,
                         'passed': result.all_passed, 'detail': '; '.join(result.issues)})
        for name, passed in self.equations.items():
            rows.append({'section': 'equation', 'item': name, 'passed': passed, 'detail': ''})
        for result in self.miura:
            rows.append({'section': 'miura', 'item': result.map_name,
                         'passed': result.all_passed, 'detail': '; '.join(result.issues)})
        for report in self.virasoro:
            rows.append({'section': 'virasoro', 'item': report.structure_name, 'passed': report.passed,
                         'detail': f"c = {report.central_charge}"})
        return pd.DataFrame(rows)


def run_battery(full: bool = False, jobs: Optional[int] = None) -> ReportData:
    """
    Run the verification battery.

    Args:
        full: Include the slower matrix and higher-order items
        jobs: Worker processes for the sweeps

    Returns:
        ReportData with one entry per item
    """
    jobs = jobs if jobs is not None else settings.DEFAULT_JOBS
    data = ReportData()
    factory = StructureFactory()

    for name in (FULL_AXIOMS if full else QUICK_AXIOMS):
        structure = factory.resolve(name).select("H")
        logger.info(f"Battery: axioms of {name}")
        data.verification.append(AxiomVerifier(("skew", "jacobi"), jobs=jobs).calculate(structure))

    for name in (FULL_COMPAT if full else QUICK_COMPAT):
        bundle = factory.resolve(name)
        logger.info(f"Battery: compatibility on {name}")
        verifier = AxiomVerifier(("compat",), partner=bundle.select("K"), jobs=jobs)
        data.verification.append(verifier.calculate(bundle.select("H")))

    for name in ("v1", "v2", "v-mat(1,2)") + (("v3", "v-mat(2,2)") if full else ()):
        ctx = factory.resolve(name).ctx
        for kind in ("H", "K"):
            data.oracle[f"{name} {kind}"] = oracle_mismatches(ctx, kind)

    for name, k_max in (FULL_HIERARCHIES if full else QUICK_HIERARCHIES).items():
        spec = factory.create_hierarchy_spec(name, k_max)
        logger.info(f"Battery: hierarchy {name} up to k={k_max}")
        data.hierarchies.append(HierarchyCalculator().calculate(spec))

    for equation in (("kp", "boussinesq", "matrix_kp") if full else ("boussinesq",)):
        residuals = verify_reduced_pde(equation)
        data.equations[equation] = not any(residuals.values())

    calculator = MiuraCalculator(jobs=jobs)
    maps = [miura_image(2), dirac_miura(2)] + ([miura_image(3), dirac_miura(3)] if full else [])
    for miura in maps:
        data.miura.append(calculator.calculate(miura))

    for name in (FULL_VIRASORO if full else QUICK_VIRASORO):
        bundle = factory.resolve(name)
        data.virasoro.append(virasoro_report(bundle.ctx, bundle.select("H")))

    logger.info(f"Battery finished: {'all passed' if data.all_passed else 'failures present'}")
    return data
