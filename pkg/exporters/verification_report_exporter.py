import logging
from pathlib import Path

import pandas as pd

from exporters.exporter_interface import ExporterInterface
from services.report_service import ReportData
from utils.exceptions import ExcelExportError

logger = logging.getLogger(__name__)


class VerificationReportExporter(ExporterInterface[ReportData]):
    """Exporter for verification batteries to an Excel workbook"""

    def export(self, data: ReportData, output_path: str) -> bool:
        """
        Export the battery to an Excel file: a summary sheet and one sheet per section.

        Args:
            data: Battery results
            output_path: Path to the output Excel file

        Returns:
            True if export was successful

        Raises:
            ExcelExportError: If the workbook cannot be written
        """
        try:
            Path(output_path).parent.mkdir(parents=True, exist_ok=True)
            with pd.ExcelWriter(output_path, engine='openpyxl') as writer:
                self._export_summary(data, writer)
                self._export_axioms(data, writer)
                self._export_hierarchies(data, writer)
                self._export_miura(data, writer)
                self._export_virasoro(data, writer)
            logger.info(f"Verification report written to {output_path}")
            return True
        except (OSError, ValueError) as e:
            raise ExcelExportError(output_path, str(e)) from e

    def _export_summary(self, data: ReportData, writer) -> None:
        df = data.summary_dataframe()
        if df.empty:
            df = pd.DataFrame([{'section': '', 'item': 'no checks were run', 'passed': None, 'detail': ''}])
        df.to_excel(writer, sheet_name='Summary', index=False)

    def _export_axioms(self, data: ReportData, writer) -> None:
        """One sheet per identity: skew, jacobi, compat"""
        frames = [result.to_dataframe() for result in data.verification]
        frames = [df for df in frames if not df.empty]
        if not frames:
            return
        records = pd.concat(frames, ignore_index=True)
        for check, group in records.groupby('check', sort=True):
            group.to_excel(writer, sheet_name=str(check)[:31], index=False)

    def _export_hierarchies(self, data: ReportData, writer) -> None:
        frames = [result.to_dataframe() for result in data.hierarchies]
        frames = [df for df in frames if not df.empty]
        if frames:
            pd.concat(frames, ignore_index=True).to_excel(writer, sheet_name='hierarchy', index=False)

    def _export_miura(self, data: ReportData, writer) -> None:
        frames = [result.to_dataframe() for result in data.miura]
        frames = [df for df in frames if not df.empty]
        if frames:
            pd.concat(frames, ignore_index=True).to_excel(writer, sheet_name='miura', index=False)

    def _export_virasoro(self, data: ReportData, writer) -> None:
        rows = []
        for report in data.virasoro:
            for label, weight in report.weights.items():
                rows.append({
                    'structure': report.structure_name,
                    'central_charge': str(report.central_charge),
                    'generator': label,
                    'weight': str(weight),
                    'expected': str(report.expected_weights.get(label, '')),
                })
        if rows:
            pd.DataFrame(rows).to_excel(writer, sheet_name='virasoro', index=False)
