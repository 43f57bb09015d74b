"""Excel workbooks for optimizer statistics and corpus results."""

from __future__ import annotations

from typing import TYPE_CHECKING, Dict, List, Optional

import openpyxl
from openpyxl.styles import Font
from openpyxl.utils import get_column_letter
from openpyxl.worksheet.worksheet import Worksheet

from core.logger import logger

if TYPE_CHECKING:
    from cli.corpus import CorpusSummary
    from optimize.stats import OptStats


class ExportService:
    """Builds Excel workbooks from report objects. No CLI dependencies."""

    PASS_HEADERS = ["Function", "Pass", "Examined", "Removed", "Merged", "Rewritten", "Flagged"]
    CORPUS_HEADERS = [
        "Case",
        "Category",
        "Variant",
        "Expected",
        "Verdict",
        "Site",
        "Passed",
        "Checks",
        "Escapes",
        "Runtime calls",
        "Note",
    ]
    TOTAL_LABEL = "(all)"

    @staticmethod
    def build_workbook(
        stats: Optional[OptStats] = None,
        corpus: Optional[CorpusSummary] = None,
        check_counts: Optional[Dict[str, int]] = None,
    ) -> openpyxl.Workbook:
        """Build a workbook with a Passes sheet and/or a Corpus sheet.

        Args:
            stats: Optimizer statistics for the Passes sheet.
            corpus: Corpus run summary for the Corpus sheet.
            check_counts: Optional {label: count} rows appended below the pass table.

        Returns:
            openpyxl.Workbook ready to be saved.
        """
        wb = openpyxl.Workbook()
        first = wb.active
        wrote = False

        if stats is not None:
            first.title = "Passes"
            ExportService._write_passes_sheet(first, stats, check_counts or {})
            wrote = True

        if corpus is not None:
            ws = wb.create_sheet("Corpus") if wrote else first
            ws.title = "Corpus"
            ExportService._write_corpus_sheet(ws, corpus)

        return wb

    @staticmethod
    def save(wb: openpyxl.Workbook, path: str) -> None:
        wb.save(path)
        logger.info(f"Workbook written to {path}")

    @staticmethod
    def _header(ws: Worksheet, headers: List[str]) -> None:
        bold = Font(bold=True)
        for col, header in enumerate(headers, start=1):
            cell = ws.cell(row=1, column=col, value=header)
            cell.font = bold

    @staticmethod
    def _write_passes_sheet(
        ws: Worksheet, stats: OptStats, check_counts: Dict[str, int]
    ) -> None:
        ExportService._header(ws, ExportService.PASS_HEADERS)

        rows = [(ExportService.TOTAL_LABEL, name, c) for name, c in stats.passes.items()]
        for function in sorted(stats.per_function):
            for name, counters in stats.per_function[function].items():
                rows.append((function, name, counters))

        row = 2
        for function, name, c in rows:
            values = [function, name, c.examined, c.removed, c.merged, c.rewritten, c.flagged]
            for col, value in enumerate(values, start=1):
                ws.cell(row=row, column=col, value=value)
            row += 1

        if check_counts:
            row += 1
            for label, count in check_counts.items():
                ws.cell(row=row, column=1, value=label).font = Font(bold=True)
                ws.cell(row=row, column=3, value=count)
                row += 1

        ExportService._autofit(ws, len(ExportService.PASS_HEADERS))

    @staticmethod
    def _write_corpus_sheet(ws: Worksheet, corpus: CorpusSummary) -> None:
        ExportService._header(ws, ExportService.CORPUS_HEADERS)

        for row, r in enumerate(corpus.results, start=2):
            values = [
                r.name,
                r.category,
                r.variant,
                r.expected,
                r.verdict,
                r.site or "",
                "yes" if r.passed else "NO",
                r.checks,
                r.escapes,
                r.runtime_calls,
                r.note or "",
            ]
            for col, value in enumerate(values, start=1):
                ws.cell(row=row, column=col, value=value)

        ExportService._autofit(ws, len(ExportService.CORPUS_HEADERS))

    @staticmethod
    def _autofit(ws, num_cols: int, min_width: int = 10, max_width: int = 50) -> None:
        """Set column widths based on content."""
        for col in range(1, num_cols + 1):
            letter = get_column_letter(col)
            max_len = max(
                (len(str(cell.value)) for cell in ws[letter] if cell.value is not None),
                default=0,
            )
            ws.column_dimensions[letter].width = max(min_width, min(max_len + 2, max_width))
