"""Tests for ExportService."""

import openpyxl
import pytest

from cli.corpus import run_corpus
from core.export_service import ExportService
from instrument.passes import instrument_program
from optimize.pipeline import run_pipeline
from optimize.stats import PASS_ORDER


@pytest.fixture
def stats(load_fixture):
    instrumented, _ = instrument_program(load_fixture("list4.ir"))
    _, result = run_pipeline(instrumented, "all")
    return result


@pytest.fixture(scope="module")
def corpus_summary():
    from core.resources import corpus_dir

    return run_corpus(corpus_dir(), "all")


def _column(ws, col):
    return [ws.cell(row, col).value for row in range(2, ws.max_row + 1)]


def test_build_workbook_returns_workbook(stats):
    assert isinstance(ExportService.build_workbook(stats=stats), openpyxl.Workbook)


def test_passes_sheet_only(stats):
    wb = ExportService.build_workbook(stats=stats)
    assert wb.sheetnames == ["Passes"]


def test_corpus_sheet_only(corpus_summary):
    wb = ExportService.build_workbook(corpus=corpus_summary)
    assert wb.sheetnames == ["Corpus"]


def test_both_sheets(stats, corpus_summary):
    wb = ExportService.build_workbook(stats=stats, corpus=corpus_summary)
    assert wb.sheetnames == ["Passes", "Corpus"]


def test_passes_sheet_has_bold_header(stats):
    ws = ExportService.build_workbook(stats=stats)["Passes"]
    assert [ws.cell(1, c).value for c in range(1, 8)] == ExportService.PASS_HEADERS
    assert ws.cell(1, 1).font.bold is True


def test_passes_sheet_totals_first(stats):
    ws = ExportService.build_workbook(stats=stats)["Passes"]
    totals = [
        (ws.cell(row, 2).value, ws.cell(row, 4).value)
        for row in range(2, 2 + len(PASS_ORDER))
    ]
    assert all(ws.cell(row, 1).value == "(all)" for row in range(2, 2 + len(PASS_ORDER)))
    assert ("redundant", 3) in totals


def test_passes_sheet_per_function_rows(stats):
    ws = ExportService.build_workbook(stats=stats)["Passes"]
    functions = set(_column(ws, 1))
    assert "foo" in functions


def test_check_counts_appended(stats):
    ws = ExportService.build_workbook(stats=stats, check_counts={"after range-check": 1})["Passes"]
    labels = _column(ws, 1)
    assert labels[-1] == "after range-check"
    assert ws.cell(ws.max_row, 3).value == 1
    assert ws.cell(ws.max_row, 1).font.bold is True


def test_corpus_sheet_rows(corpus_summary):
    ws = ExportService.build_workbook(corpus=corpus_summary)["Corpus"]
    assert ws.cell(1, 1).value == "Case"
    assert ws.max_row == len(corpus_summary.results) + 1
    assert set(_column(ws, 7)) == {"yes"}


def test_save_round_trips(tmp_path, stats):
    path = str(tmp_path / "report.xlsx")
    ExportService.save(ExportService.build_workbook(stats=stats), path)
    assert openpyxl.load_workbook(path)["Passes"].cell(1, 2).value == "Pass"


def test_column_widths_set(stats):
    ws = ExportService.build_workbook(stats=stats)["Passes"]
    assert ws.column_dimensions["A"].width >= 10
