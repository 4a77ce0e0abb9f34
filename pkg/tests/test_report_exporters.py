"""
Tests for the verification battery and its Excel and PDF reports
"""
from fractions import Fraction

import pytest
from openpyxl import load_workbook

from calculators.adler_structures import virasoro_report
from calculators.axiom_verifier import AxiomVerifier
from calculators.miura_calculator import MiuraCalculator, dirac_miura
from exporters.reportlab_exporter import ReportLabExporter
from exporters.verification_report_exporter import VerificationReportExporter
from services.report_service import ReportData, run_battery
from services.structure_factory import StructureFactory
from utils.exceptions import ExcelExportError


@pytest.fixture
def report_data():
    broken = StructureFactory.resolve("broken-demo").select("H")
    w2 = StructureFactory.resolve("w2")
    return ReportData(
        verification=[AxiomVerifier(("skew", "jacobi"), jobs=1).calculate(broken)],
        miura=[MiuraCalculator(jobs=1).calculate(dirac_miura(2))],
        virasoro=[virasoro_report(w2.ctx, w2.select("H"))],
        oracle={"v2 H": []},
        equations={"boussinesq": True},
    )


class TestReportData:
    """Summary of a battery"""

    def test_failures_propagate(self, report_data):
        """A failing Jacobi check fails the whole report"""
        assert not report_data.all_passed

    def test_summary_rows(self, report_data):
        """One row per item, in section order"""
        df = report_data.summary_dataframe()
        assert list(df["section"]) == ["axioms", "oracle", "equation", "miura", "virasoro"]
        assert list(df["passed"]) == [False, True, True, True, True]

    def test_virasoro_detail(self, report_data):
        """The central charge of W_2 is 1/2"""
        assert report_data.virasoro[0].central_charge == Fraction(1, 2)
        assert report_data.summary_dataframe()["detail"].iloc[-1] == "c = 1/2"

    def test_empty_report_passes(self):
        """Nothing run means nothing failed"""
        assert ReportData().all_passed
        assert ReportData().summary_dataframe().empty


class TestExcelReport:
    """Workbook layout"""

    def test_sheets(self, report_data, tmp_path):
        """Summary, one sheet per identity, then miura and virasoro"""
        path = tmp_path / "report.xlsx"
        assert VerificationReportExporter().export(report_data, str(path))
        workbook = load_workbook(path)
        assert workbook.sheetnames == ["Summary", "jacobi", "skew", "miura", "virasoro"]

    def test_empty_report(self, tmp_path):
        """An empty battery still gives a summary sheet"""
        path = tmp_path / "empty.xlsx"
        VerificationReportExporter().export(ReportData(), str(path))
        assert load_workbook(path).sheetnames == ["Summary"]

    def test_unwritable_path(self, report_data, tmp_path):
        """A directory in place of the file is an export error"""
        with pytest.raises(ExcelExportError):
            VerificationReportExporter().export(report_data, str(tmp_path))


class TestPdfReport:
    """ReportLab output"""

    def test_pdf_written(self, report_data, tmp_path):
        """The document is created and non-empty"""
        path = tmp_path / "nested" / "report.pdf"
        assert ReportLabExporter().export(report_data, str(path))
        assert path.stat().st_size > 0


@pytest.mark.slow
class TestBattery:
    """The quick battery"""

    def test_quick_battery_passes(self):
        """Every standard item holds"""
        data = run_battery(full=False, jobs=1)
        assert data.all_passed, data.summary_dataframe()
        assert len(data.virasoro) == 2
