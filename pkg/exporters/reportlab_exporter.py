import logging
import os
from typing import Any, List

from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER, TA_LEFT
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import cm
from reportlab.pdfbase import pdfmetrics
from reportlab.pdfbase.ttfonts import TTFont
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from config.settings import settings
from exporters.exporter_interface import ExporterInterface
from services.report_service import ReportData
from utils.exceptions import PDFExportError

logger = logging.getLogger(__name__)

FONT_DIRS = [
    '/usr/share/fonts/truetype/dejavu',
    '/usr/share/fonts/TTF',
    '/usr/share/fonts/truetype',
    '/System/Library/Fonts',
    '/Library/Fonts',
    os.path.expanduser('~/Library/Fonts'),
]


class ReportLabExporter(ExporterInterface[ReportData]):
    """Exporter for a PDF summary of a verification battery"""

    def __init__(self):
        self._register_fonts()
        self.styles = getSampleStyleSheet()
        self._create_custom_styles()

    def _register_fonts(self):
        """DejaVu renders lambda and partial; Helvetica is the fallback"""
        windows_font_dir = os.environ.get('WINDIR')
        font_dirs = ([os.path.join(windows_font_dir, 'Fonts')] if windows_font_dir else []) + FONT_DIRS
        for font_dir in font_dirs:
            regular = os.path.join(font_dir, 'DejaVuSans.ttf')
            bold = os.path.join(font_dir, 'DejaVuSans-Bold.ttf')
            if not os.path.exists(regular):
                continue
            try:
                pdfmetrics.registerFont(TTFont('DejaVuSans', regular))
                self.base_font_name = 'DejaVuSans'
                self.bold_font_name = 'DejaVuSans'
                if os.path.exists(bold):
                    pdfmetrics.registerFont(TTFont('DejaVuSans-Bold', bold))
                    self.bold_font_name = 'DejaVuSans-Bold'
                logger.info(f"Using DejaVu fonts from {font_dir}")
                return
            except Exception as e:
                logger.debug(f"Failed to register DejaVu from {font_dir}: {e}")

        self.base_font_name = 'Helvetica'
        self.bold_font_name = 'Helvetica-Bold'
        logger.warning("No Unicode font found; Greek letters may not render in the PDF report")

    def _create_custom_styles(self):
        self.styles.add(ParagraphStyle(name='ReportTitle', parent=self.styles['Title'],
            fontName=self.bold_font_name, fontSize=16, alignment=TA_CENTER, spaceAfter=12))
        self.styles.add(ParagraphStyle(name='ReportSection', parent=self.styles['Heading2'],
            fontName=self.bold_font_name, fontSize=12, alignment=TA_LEFT, spaceAfter=8))
        self.styles.add(ParagraphStyle(name='ReportBodyText', parent=self.styles['Normal'],
            fontName=self.base_font_name, fontSize=10, alignment=TA_LEFT, spaceAfter=6))
        self.table_style = TableStyle([
            ('BACKGROUND', (0, 0), (-1, 0), colors.lightgrey),
            ('FONTNAME', (0, 0), (-1, 0), self.bold_font_name),
            ('FONTNAME', (0, 1), (-1, -1), self.base_font_name),
            ('FONTSIZE', (0, 0), (-1, -1), 8),
            ('ALIGN', (0, 0), (-1, -1), 'LEFT'),
            ('GRID', (0, 0), (-1, -1), 0.5, colors.black),
            ('ROWBACKGROUNDS', (0, 1), (-1, -1), [colors.white, colors.whitesmoke]),
        ])

    def create_title(self, data: ReportData) -> List[Any]:
        status = "all checks passed" if data.all_passed else "some checks failed"
        return [
            Paragraph(f"{settings.APP_NAME} verification report", self.styles['ReportTitle']),
            Paragraph(f"Version {settings.APP_VERSION}: {status}.", self.styles['ReportBodyText']),
            Spacer(1, 0.5 * cm),
        ]

    def create_summary_section(self, data: ReportData) -> List[Any]:
        elements: List[Any] = [Paragraph("Summary", self.styles['ReportSection'])]
        df = data.summary_dataframe()
        if df.empty:
            elements.append(Paragraph("No checks were run.", self.styles['ReportBodyText']))
            return elements
        rows = [["Section", "Item", "Result", "Detail"]]
        for record in df.to_dict('records'):
            rows.append([
                record['section'], record['item'],
                "pass" if record['passed'] else "FAIL",
                Paragraph(str(record['detail'])[:200], self.styles['ReportBodyText']),
            ])
        table = Table(rows, colWidths=[2.5 * cm, 4.5 * cm, 1.5 * cm, 8.5 * cm], repeatRows=1)
        table.setStyle(self.table_style)
        elements.append(table)
        return elements

    def create_virasoro_section(self, data: ReportData) -> List[Any]:
        if not data.virasoro:
            return []
        elements: List[Any] = [Spacer(1, 0.5 * cm), Paragraph("Central charges", self.styles['ReportSection'])]
        rows = [["Structure", "c", "Weights"]]
        for report in data.virasoro:
            weights = ", ".join(f"{label}: {weight}" for label, weight in report.weights.items())
            rows.append([report.structure_name, str(report.central_charge), weights])
        table = Table(rows, colWidths=[4 * cm, 2 * cm, 11 * cm], repeatRows=1)
        table.setStyle(self.table_style)
        elements.append(table)
        return elements

    def export(self, data: ReportData, output_path: str) -> bool:
        """
        Export the battery summary to a PDF file.

        Args:
            data: Battery results
            output_path: Path to the output PDF

        Returns:
            True if export was successful

        Raises:
            PDFExportError: If the document cannot be built
        """
        try:
            os.makedirs(os.path.dirname(os.path.abspath(output_path)), exist_ok=True)
            doc = SimpleDocTemplate(output_path, pagesize=A4, leftMargin=2 * cm, rightMargin=2 * cm,
                                    topMargin=2 * cm, bottomMargin=2 * cm)
            elements = self.create_title(data)
            elements.extend(self.create_summary_section(data))
            elements.extend(self.create_virasoro_section(data))
            doc.build(elements)
            logger.info(f"PDF report written to {output_path}")
            return True
        except Exception as e:
            raise PDFExportError(output_path, str(e)) from e
