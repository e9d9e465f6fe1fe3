"""
Report Generator

Plain-text run summaries and optional PDF reports of certificates and
moduli checks.
"""

import io
from typing import Dict, List, Optional

from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER
from reportlab.lib.pagesizes import letter
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import inch
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from utils.rates import RateCertificate

HEADER_COLOR = colors.HexColor('#0066cc')
PASS_COLOR = colors.HexColor('#28a745')
FAIL_COLOR = colors.HexColor('#dc3545')


def _fmt(value, spec: str = ".6g") -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (int, float)):
        return format(value, spec)
    return str(value)


# ========================================
# TEXT SUMMARY
# ========================================

def generate_summary_text(name: str, report: Dict, certificates: List[RateCertificate]) -> str:
    """One block of human-readable lines, printed by the CLI."""
    space = report["space"]
    dc = report["dc"]
    lines = [
        f"== {name} ==",
        f"space: {space['kind']} dim={space['dim']} p={_fmt(space['p'])} c={_fmt(space['c'])} d={_fmt(space['d'])}",
        f"d_c = {_fmt(dc['dc'])} (k1={_fmt(dc['k1'])}, k2={_fmt(dc['k2'])})",
    ]
    for check, result in report["checks"].items():
        status = "pass" if result["passed"] else "FAIL"
        lines.append(f"{check}: {status} (max violation {result['max_violation']:.3e})")

    operator = report.get("operator")
    if operator is not None:
        summary = operator["trajectory"]
        lines.append(f"operator: {operator['label']} k={operator['k']} b={_fmt(operator['b'])}")
        lines.append(
            f"trajectory: {summary['n_max']} steps, residual {summary['initial_residual']:.3e}"
            f" -> {summary['final_residual']:.3e} ({summary['status']})"
        )
        lines.append(f"lemma2: {'pass' if operator['lemma2']['passed'] else 'FAIL'}; "
                     f"equivalence deviation {operator['equivalence_deviation']:.3e}")

    for cert in certificates:
        residual = "-" if cert.max_residual_beyond is None else f"{cert.max_residual_beyond:.3e}"
        witness = "" if cert.witness_index is None else f" witness n={cert.witness_index}"
        lines.append(
            f"{cert.variant} eps={cert.epsilon:g}: h={cert.predicted_index} "
            f"max residual beyond {residual} [{cert.status}]{witness}"
        )
    overall = report["passed"] and all(c.passed for c in certificates)
    lines.append(f"result: {'PASS' if overall else 'FAIL'}")
    return "\n".join(lines)


# ========================================
# PDF REPORT
# ========================================

class RunReportGenerator:
    """Build the PDF for one run or moduli report."""

    def __init__(self):
        self.styles = getSampleStyleSheet()
        self._setup_custom_styles()

    def _setup_custom_styles(self):
        self.styles.add(ParagraphStyle(
            name='ReportTitle',
            parent=self.styles['Heading1'],
            fontSize=20,
            textColor=HEADER_COLOR,
            spaceAfter=16,
            alignment=TA_CENTER,
            fontName='Helvetica-Bold'
        ))
        self.styles.add(ParagraphStyle(
            name='SectionHeading',
            parent=self.styles['Heading2'],
            fontSize=14,
            textColor=colors.HexColor('#333333'),
            spaceAfter=10,
            spaceBefore=12,
            fontName='Helvetica-Bold'
        ))

    def _table(self, data: List[List[str]], col_widths: List[float], status_col: Optional[int] = None) -> Table:
        table = Table(data, colWidths=col_widths)
        style = [
            ('BACKGROUND', (0, 0), (-1, 0), HEADER_COLOR),
            ('TEXTCOLOR', (0, 0), (-1, 0), colors.whitesmoke),
            ('ALIGN', (0, 0), (-1, -1), 'CENTER'),
            ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
            ('FONTSIZE', (0, 0), (-1, -1), 9),
            ('GRID', (0, 0), (-1, -1), 0.5, colors.grey),
            ('ROWBACKGROUNDS', (0, 1), (-1, -1), [colors.white, colors.HexColor('#f8f9fa')]),
        ]
        if status_col is not None:
            for row, values in enumerate(data[1:], start=1):
                color = PASS_COLOR if values[status_col] == "pass" else FAIL_COLOR
                style.append(('TEXTCOLOR', (status_col, row), (status_col, row), color))
        table.setStyle(TableStyle(style))
        return table

    def _create_header(self, name: str, report: Dict) -> List:
        space = report["space"]
        elements = [Paragraph(f"Mann Iteration Report: {name}", self.styles['ReportTitle'])]
        elements.append(Paragraph(
            f"<b>Space:</b> {space['kind']} (dim {space['dim']}, p = {_fmt(space['p'])}) "
            f"&nbsp;&nbsp; <b>c</b> = {_fmt(space['c'])} &nbsp;&nbsp; <b>d</b> = {_fmt(space['d'])}",
            self.styles['Normal']
        ))
        elements.append(Spacer(1, 0.2 * inch))
        return elements

    def _create_constants(self, report: Dict) -> List:
        dc = report["dc"]
        alpha = report["alpha"]
        elements = [Paragraph("Constants", self.styles['SectionHeading'])]
        data = [
            ["c", "alpha", "k1", "k2", "d_c", "alpha grid max"],
            [_fmt(dc["c"]), _fmt(dc["alpha"]), _fmt(dc["k1"]), _fmt(dc["k2"]), _fmt(dc["dc"]),
             _fmt(alpha["max"], ".10f")],
        ]
        elements.append(self._table(data, [1.0 * inch] * 6))
        return elements

    def _create_checks(self, report: Dict) -> List:
        elements = [Paragraph("Sampled Inequalities", self.styles['SectionHeading'])]
        data = [["Check", "Constant", "Samples", "Max violation", "Status"]]
        for check, result in report["checks"].items():
            data.append([check, _fmt(result["constant"]), str(result["samples_checked"]),
                         f"{result['max_violation']:.3e}", "pass" if result["passed"] else "fail"])
        elements.append(self._table(data, [1.6 * inch, 1.0 * inch, 1.0 * inch, 1.2 * inch, 0.8 * inch], 4))
        return elements

    def _create_moduli(self, report: Dict) -> List:
        elements = [Paragraph("Moduli Estimates", self.styles['SectionHeading'])]
        data = [["tau", "rho estimate", "c tau^2"]]
        for row in report["rho"]:
            data.append([_fmt(row["tau"]), _fmt(row["estimate"]["value"]), _fmt(row["declared_bound"])])
        elements.append(self._table(data, [1.2 * inch, 1.6 * inch, 1.6 * inch]))
        elements.append(Spacer(1, 0.15 * inch))

        data = [["eps", "delta estimate", "eta(eps)", "eta valid"]]
        for row in report["delta"]:
            data.append([_fmt(row["eps"]), _fmt(row["estimate"]["value"]), _fmt(row["eta"]),
                         "pass" if row["eta_valid"] else "fail"])
        elements.append(self._table(data, [1.0 * inch, 1.6 * inch, 1.6 * inch, 1.0 * inch], 3))
        return elements

    def _create_certificates(self, certificates: List[RateCertificate]) -> List:
        elements = [Paragraph("Rate Certificates", self.styles['SectionHeading'])]
        if not certificates:
            elements.append(Paragraph("No certificates in this report.", self.styles['Normal']))
            return elements
        data = [["Rate", "eps", "h(eps)", "Max residual beyond", "Witness", "Status"]]
        for cert in certificates:
            data.append([cert.variant, _fmt(cert.epsilon), str(cert.predicted_index),
                         _fmt(cert.max_residual_beyond, ".3e"), _fmt(cert.witness_index),
                         cert.status])
        elements.append(self._table(
            data, [0.6 * inch, 0.8 * inch, 1.1 * inch, 1.6 * inch, 0.9 * inch, 1.0 * inch], 5))
        return elements

    def generate_report(self, name: str, report: Dict, certificates: List[RateCertificate]) -> bytes:
        buffer = io.BytesIO()
        # invariant=1 drops the creation date and random document id
        doc = SimpleDocTemplate(buffer, pagesize=letter, invariant=1, title=name,
                                rightMargin=0.75 * inch, leftMargin=0.75 * inch,
                                topMargin=1 * inch, bottomMargin=1 * inch)
        story = []
        story.extend(self._create_header(name, report))
        story.extend(self._create_constants(report))
        story.extend(self._create_checks(report))
        story.extend(self._create_moduli(report))
        story.extend(self._create_certificates(certificates))
        doc.build(story)
        return buffer.getvalue()


# Global instance
report_generator = RunReportGenerator()


def generate_pdf_report(name: str, report: Dict, certificates: List[RateCertificate]) -> bytes:
    """PDF bytes for a run (or moduli-only) report."""
    return report_generator.generate_report(name, report, certificates)
