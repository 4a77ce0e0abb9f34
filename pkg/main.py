#!/usr/bin/env python3
"""
W-Algebra Toolkit - Main Module

Lambda-brackets of the AGD bi-Poisson structures, their Dirac reductions,
integrable hierarchies and Miura maps, in exact arithmetic.
"""
import argparse
import logging
import sys
from typing import Dict, List, Optional, Tuple

from calculators.adler_structures import oracle_mismatches, virasoro_report
from calculators.axiom_verifier import AxiomVerifier
from calculators.hierarchy_calculator import (
    REDUCED_EQUATIONS,
    HierarchyCalculator,
    bracket_flow,
    density,
    lax_flow,
    verify_reduced_pde,
)
from calculators.miura_calculator import MiuraCalculator, dirac_miura, general_miura, miura_image
from config.settings import settings
from exporters.expression_renderer import FORMATS, ExpressionRenderer
from exporters.json_exporter import (
    JsonExporter,
    dumps,
    encode_flow,
    encode_key,
    encode_miura,
    encode_poly,
    encode_records,
    encode_value,
)
from exporters.reportlab_exporter import ReportLabExporter
from exporters.verification_report_exporter import VerificationReportExporter
from models.differential_polynomial import VarKey
from services.report_service import run_battery
from services.structure_factory import StructureFactory
from utils.env_config import load_runtime_overrides
from utils.exceptions import UnsupportedOperationError, WAlgebraError
from utils.logging_config import configure_logging

EXIT_OK = 0
EXIT_RESIDUAL = 1
EXIT_ERROR = 2
EXIT_INTERRUPTED = 130

VERIFY_CHECKS = ("skew", "jacobi", "compat", "oracle", "virasoro")


def _entry(text: str) -> Tuple[int, int]:
    """Matrix position written as two digits, e.g. 12"""
    if len(text) != 2 or not text.isdigit():
        raise argparse.ArgumentTypeError(f"Matrix entries are two digits such as 11 or 12, got '{text}'")
    return int(text[0]), int(text[1])


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--format', choices=FORMATS, default=None,
                        help=f'Output format (default: {settings.DEFAULT_FORMAT})')
    common.add_argument('--floor', type=int, default=None,
                        help='Truncation floor for pseudodifferential series')
    common.add_argument('--jobs', type=int, default=None,
                        help=f'Worker processes for sweeps (default: {settings.DEFAULT_JOBS})')
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help='Log progress (-v INFO, -vv DEBUG) to stderr')
    common.add_argument('--log-file', type=str, default=None, help='Write a DEBUG log to this file')
    common.add_argument('--env-file', type=str, default='.env',
                        help='Path to .env file with runtime overrides (default: .env)')

    parser = argparse.ArgumentParser(description=f'{settings.APP_NAME} {settings.APP_VERSION}')
    sub = parser.add_subparsers(dest='command', required=True)

    bracket = sub.add_parser('bracket', parents=[common], help='Print {u_i lambda u_j}')
    bracket.add_argument('name', help='Structure name, e.g. w2, v-mat(2,2), gfz(3)')
    bracket.add_argument('i', type=int, help='Index of the first generator')
    bracket.add_argument('j', type=int, help='Index of the second generator')
    bracket.add_argument('--ab', type=_entry, default=(1, 1), help='Matrix entry of the first generator')
    bracket.add_argument('--cd', type=_entry, default=(1, 1), help='Matrix entry of the second generator')
    bracket.add_argument('--structure', choices=['H', 'K', 'HD'], default='H')
    bracket.add_argument('--pencil', action='store_true', help='Use the pencil H - cK')
    bracket.add_argument('--cross-check', action='store_true',
                         help='Compare AGD entries with the Adler residue route')

    verify = sub.add_parser('verify', parents=[common], help='Verify PVA axioms on generators')
    verify.add_argument('name')
    verify.add_argument('--checks', default='skew,jacobi',
                        help=f'Comma separated subset of {",".join(VERIFY_CHECKS)}')
    verify.add_argument('--structure', choices=['H', 'K', 'HD'], default='H')
    verify.add_argument('--max-index', type=int, default=None,
                        help='Highest generator index for infinite algebras')
    verify.add_argument('--sample', type=int, default=None, help='Random sample of tuples per check')
    verify.add_argument('--cross-check', action='store_true')
    verify.add_argument('--output', type=str, default=None, help='Also write the JSON report here')

    hierarchy = sub.add_parser('hierarchy', parents=[common], help='Flows of an AGD hierarchy')
    hierarchy.add_argument('name')
    hierarchy.add_argument('--k', type=int, default=1, help='Flow index')
    hierarchy.add_argument('--route', choices=['lax', 'H', 'K', 'HD'], default='lax')
    hierarchy.add_argument('--max-index', type=int, default=None)
    hierarchy.add_argument('--check', action='store_true',
                           help='Generate flows up to --k and compare routes and the Lenard-Magri recursion')
    hierarchy.add_argument('--pde', choices=REDUCED_EQUATIONS, default=None,
                           help='Verify a named equation from the hierarchy flows')

    densities = sub.add_parser('densities', parents=[common], help='Conserved densities h_1..h_kmax')
    densities.add_argument('name')
    densities.add_argument('--kmax', type=int, default=None)

    miura = sub.add_parser('miura', parents=[common], help='Miura maps')
    miura.add_argument('--N', type=int, default=2, help='Order of the factored operator')
    miura.add_argument('--reduced', action='store_true', help='Dirac-reduced map onto W_N')
    miura.add_argument('--type', type=str, default=None, help='Generalized map of type M,N')
    miura.add_argument('--m', type=int, default=1, help='Matrix size of the factors (with --type)')
    miura.add_argument('--check', action='store_true', help='Check the homomorphism residuals')

    report = sub.add_parser('report', parents=[common], help='Run the verification battery')
    report.add_argument('-o', '--output', type=str, default=settings.DEFAULT_REPORT_FILE,
                        help=f'Excel report path (default: {settings.DEFAULT_REPORT_FILE})')
    report.add_argument('--pdf', type=str, nargs='?', const='', default=None,
                        help='Also write a PDF summary (default path: next to the Excel file)')
    report.add_argument('--full', action='store_true', help='Include the slower matrix items')

    return parser.parse_args(argv)


def _renderer(args, aliases: Optional[Dict[VarKey, str]] = None, m: int = 1) -> ExpressionRenderer:
    fmt = args.format if args.format in ("text", "latex") else "text"
    return ExpressionRenderer(fmt, aliases, m)


def _is_json(args) -> bool:
    return args.format == "json"


def cmd_bracket(args) -> int:
    """Print one bracket of a named structure"""
    bundle = StructureFactory.resolve(args.name)
    bundle.cross_check = args.cross_check
    choice = "pencil" if args.pencil else args.structure
    structure = bundle.select(choice)
    x = bundle.key(args.i, *args.ab)
    y = bundle.key(args.j, *args.cd)
    value = structure.bracket(x, y)
    if _is_json(args):
        document = {"structure": structure.name, "x": encode_key(x), "y": encode_key(y)}
        print(dumps({**document, **encode_value(value)}))
        return EXIT_OK
    renderer = _renderer(args, structure.aliases, structure.universe.m)
    lam = renderer.lam
    print(f"{{{renderer.key(x)} {lam} {renderer.key(y)}}} = {renderer.value(value)}")
    return EXIT_OK


def _print_failures(renderer: ExpressionRenderer, records, limit: int = 10) -> None:
    for record in records[:limit]:
        residual = record.residual
        text = renderer.lambda_mu(residual) if hasattr(residual, "terms") else renderer.value(residual)
        print(f"   {record.check} ({', '.join(record.labels)}): {text}")
    if len(records) > limit:
        print(f"   ... {len(records) - limit} more")


def cmd_verify(args) -> int:
    """Run the requested checks; exit 1 when a residual is nonzero"""
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = [c for c in checks if c not in VERIFY_CHECKS]
    if unknown:
        raise ValueError(f"Unknown checks: {', '.join(unknown)}")
    bundle = StructureFactory.resolve(args.name)
    bundle.cross_check = args.cross_check
    structure = bundle.select(args.structure)
    renderer = _renderer(args, structure.aliases, structure.universe.m)
    max_index = args.max_index
    if max_index is None and not structure.universe.is_finite:
        max_index = settings.INFINITE_INDEX_LIMIT
    failed = False
    records = []
    issues: List[str] = []

    axioms = [c for c in checks if c in ("skew", "jacobi", "compat")]
    if axioms:
        partner = bundle.select("K") if "compat" in axioms else None
        verifier = AxiomVerifier(axioms, partner=partner, max_index=max_index,
                                 jobs=args.jobs, sample=args.sample)
        result = verifier.calculate(structure)
        records.extend(result.records)
        issues.extend(result.issues)
        if not _is_json(args):
            for check in axioms:
                stats = result.stats[check]
                status = "✅" if not stats['failed'] else "❌"
                print(f"{status} {check}: {stats['evaluated'] - stats['failed']}/{stats['evaluated']} "
                      f"residuals vanish on {structure.name}")
            _print_failures(renderer, result.failures())
        failed = failed or not result.all_passed

    if "oracle" in checks:
        if not bundle.is_agd:
            raise UnsupportedOperationError("oracle", f"{args.name} is not an AGD structure")
        kinds = ["H", "K"] if not bundle.reduced else ["K"]
        for kind in kinds:
            mismatches = oracle_mismatches(bundle.ctx, kind, max_index=max_index)
            issues.extend(f"oracle {kind}: {m}" for m in mismatches)
            if not _is_json(args):
                status = "✅" if not mismatches else "❌"
                print(f"{status} oracle {kind}: {len(mismatches)} mismatching entries")
            failed = failed or bool(mismatches)

    if "virasoro" in checks:
        if not (bundle.is_agd and bundle.reduced):
            raise UnsupportedOperationError("virasoro", "the Virasoro check needs a W algebra")
        report = virasoro_report(bundle.ctx, bundle.select("H"), max_index)
        issues.extend(report.issues)
        if not _is_json(args):
            status = "✅" if report.passed else "❌"
            weights = ", ".join(f"{label}: {w}" for label, w in report.weights.items())
            print(f"{status} virasoro: c = {report.central_charge}; weights {weights}")
        failed = failed or not report.passed

    document = encode_records(structure.name, records, issues)
    if _is_json(args):
        print(dumps(document))
    if args.output:
        JsonExporter().export(document, args.output)
    return EXIT_RESIDUAL if failed else EXIT_OK


def cmd_hierarchy(args) -> int:
    """Print the flow of t_k, or check the hierarchy up to k"""
    if args.pde:
        residuals = verify_reduced_pde(args.pde)
        renderer = _renderer(args)
        nonzero = {label: r for label, r in residuals.items() if r}
        if _is_json(args):
            encoded = {label: encode_poly(r) for label, r in residuals.items()}
            print(dumps({"equation": args.pde, "residuals": encoded}))
        else:
            for label, residual in residuals.items():
                status = "✅" if not residual else "❌"
                print(f"{status} {label}: residual {renderer.poly(residual)}")
        return EXIT_RESIDUAL if nonzero else EXIT_OK

    bundle = StructureFactory.resolve(args.name)
    spec = StructureFactory.create_hierarchy_spec(args.name, max(args.k, 1), args.floor)
    if args.check:
        result = HierarchyCalculator(max_index=args.max_index).calculate(spec)
        if _is_json(args):
            print(dumps({
                "hierarchy": result.spec_name,
                "densities": {str(k): encode_poly(h) for k, h in result.densities.items()},
                "flows": [encode_flow(eq, spec.m) for eq in result.flows.values()],
                "issues": result.issues,
            }))
        else:
            for issue in result.issues:
                print(f"❌ {issue}")
            if result.all_passed:
                print(f"✅ {result.spec_name}: flows 1..{spec.k_max} agree across routes")
        return EXIT_OK if result.all_passed else EXIT_RESIDUAL

    if args.route == "lax":
        equation = lax_flow(spec, args.k, args.max_index)
    else:
        equation = bracket_flow(spec, args.route, args.k, args.max_index)
    if _is_json(args):
        print(dumps(encode_flow(equation, spec.m)))
    else:
        renderer = _renderer(args, bundle.aliases, spec.m)
        for line in renderer.flows(equation):
            print(line)
    return EXIT_OK


def cmd_densities(args) -> int:
    """Print h_1..h_kmax of a hierarchy"""
    spec = StructureFactory.create_hierarchy_spec(args.name, args.kmax, args.floor)
    bundle = StructureFactory.resolve(args.name)
    values = {k: density(spec, k) for k in range(1, spec.k_max + 1)}
    if _is_json(args):
        encoded = {str(k): encode_poly(h) for k, h in values.items()}
        print(dumps({"hierarchy": spec.label(), "densities": encoded}))
        return EXIT_OK
    renderer = _renderer(args, bundle.aliases, spec.m)
    for k, h in values.items():
        name = f"h_{{{k}}}" if renderer.latex else f"h_{k}"
        print(f"{name} = {renderer.poly(h)}")
    return EXIT_OK


def cmd_miura(args) -> int:
    """Print the images of a Miura map; with --check also its homomorphism residuals"""
    if args.type:
        try:
            M, N = (int(part) for part in args.type.split(","))
        except ValueError:
            raise ValueError(f"--type expects M,N, got '{args.type}'")
        miura = general_miura(M, N, m=args.m)
    elif args.reduced:
        miura = dirac_miura(args.N)
    else:
        miura = miura_image(args.N)

    aliases = {**miura.target.aliases, **miura.source.aliases}
    status = EXIT_OK
    if _is_json(args):
        print(dumps(encode_miura(miura)))
    else:
        renderer = _renderer(args, aliases, miura.m)
        for key in miura.source_generators:
            print(f"{renderer.key(key)} = {renderer.poly(miura.images[key])}")
    if args.check:
        result = MiuraCalculator(jobs=args.jobs).calculate(miura)
        if not _is_json(args):
            mark = "✅" if result.all_passed else "❌"
            print(f"{mark} {miura.name}: {result.stats['pairs'] - result.stats['failed']}/"
                  f"{result.stats['pairs']} pairs respect the brackets")
            for issue in result.issues:
                print(f"   {issue}")
        status = EXIT_OK if result.all_passed else EXIT_RESIDUAL
    return status


def cmd_report(args) -> int:
    """Run the battery and write the Excel (and optionally PDF) report"""
    data = run_battery(full=args.full, jobs=args.jobs)
    VerificationReportExporter().export(data, args.output)
    print(f"✅ Excel report saved to {args.output}")
    if args.pdf is not None:
        pdf_path = args.pdf or args.output.rsplit(".", 1)[0] + ".pdf"
        ReportLabExporter().export(data, pdf_path)
        print(f"✅ PDF report saved to {pdf_path}")
    summary = data.summary_dataframe()
    failed = summary[~summary['passed']] if not summary.empty else summary
    for record in failed.to_dict('records'):
        print(f"❌ {record['section']} {record['item']}: {record['detail']}")
    return EXIT_OK if data.all_passed else EXIT_RESIDUAL


COMMANDS = {
    'bracket': cmd_bracket,
    'verify': cmd_verify,
    'hierarchy': cmd_hierarchy,
    'densities': cmd_densities,
    'miura': cmd_miura,
    'report': cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    args = parse_arguments(argv)

    log_level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    configure_logging(log_level, args.log_file)
    logger = logging.getLogger(__name__)

    try:
        load_runtime_overrides(args.env_file)
        if args.format is None:
            args.format = settings.DEFAULT_FORMAT
        logger.info(f"Running {args.command}")
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        print("\n\n⚠️  Interrupted by user", file=sys.stderr)
        return EXIT_INTERRUPTED
    except WAlgebraError as e:
        print(f"\n❌ {e.message}", file=sys.stderr)
        if e.details:
            print(f"   {e.details}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as e:
        print(f"\n❌ {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logger.exception("Unexpected error in main()")
        print(f"\n❌ Unexpected error: {e}", file=sys.stderr)
        print("   Run with -vv --log-file for details.", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
