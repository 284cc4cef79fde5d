"""
Report Export Module for the Music Dependency Parser
Writes evaluation tables to CSV and multi-sheet Excel workbooks, and loss
logs to JSON lines
"""

import logging
import math
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

import pandas as pd

from .config import DEFAULT_OUTPUT_DIR, METRIC_NAMES, REPORT_SHEETS

logger = logging.getLogger(__name__)


class ReportExporter:
    """
    Evaluation report writer: per-piece metrics, summary and loss log sheets
    """

    def __init__(self, output_dir: str = DEFAULT_OUTPUT_DIR):
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    def export_report(self, report: pd.DataFrame, filename: Optional[str] = None,
                      loss_log: Optional[pd.DataFrame] = None, summary: Optional[Dict[str, Any]] = None,
                      excel: bool = True) -> Dict[str, str]:
        """
        Write the metric table as CSV and, optionally, as an Excel workbook

        Args:
            report: per-piece table from metrics.corpus_report (last row 'mean')
            filename: base name without extension; timestamped when omitted
            loss_log: per-epoch losses for the 'Loss log' sheet
            summary: extra key/value pairs for the 'Summary' sheet

        Returns:
            Dict with the 'csv' path and, when written, the 'excel' path
        """
        if filename is None:
            filename = f"evaluation_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
        csv_path = os.path.join(self.output_dir, f"{filename}.csv")
        report.to_csv(csv_path, index=False)
        files = {'csv': csv_path}
        logger.info(f"📄 Metric table saved to: {csv_path}")

        if excel:
            xlsx_path = os.path.join(self.output_dir, f"{filename}.xlsx")
            self._export_excel(report, xlsx_path, loss_log, summary or {})
            files['excel'] = xlsx_path
        return files

    def _export_excel(self, report: pd.DataFrame, path: str, loss_log: Optional[pd.DataFrame],
                      summary: Dict[str, Any]) -> None:
        with pd.ExcelWriter(path, engine='xlsxwriter',
                            engine_kwargs={'options': {'nan_inf_to_errors': True}}) as writer:
            workbook = writer.book
            self._add_formats(workbook)
            self._export_per_piece(report, writer)
            self._export_summary(report, summary, workbook)
            if loss_log is not None and not loss_log.empty:
                self._export_loss_log(loss_log, writer)
        logger.info(f"✅ Excel report completed: {path}")

    def _add_formats(self, workbook):
        self.header_format = workbook.add_format({
            'bold': True,
            'font_color': 'white',
            'bg_color': '#4472C4',
            'border': 1,
            'align': 'center',
        })
        self.title_format = workbook.add_format({'bold': True, 'font_size': 14, 'font_color': '#2F5597'})
        self.metric_format = workbook.add_format({'num_format': '0.000', 'border': 1})
        self.text_format = workbook.add_format({'border': 1})

    def _export_per_piece(self, report: pd.DataFrame, writer) -> None:
        sheet_name = REPORT_SHEETS['per_piece']
        report.to_excel(writer, sheet_name=sheet_name, index=False)
        worksheet = writer.sheets[sheet_name]
        for col_num, value in enumerate(report.columns):
            worksheet.write(0, col_num, value, self.header_format)
            width = max(12, min(40, int(report[value].astype(str).str.len().max() or 0) + 2))
            worksheet.set_column(col_num, col_num, width)

    def _export_summary(self, report: pd.DataFrame, summary: Dict[str, Any], workbook) -> None:
        worksheet = workbook.add_worksheet(REPORT_SHEETS['summary'])
        worksheet.write(0, 0, 'Evaluation summary', self.title_format)
        worksheet.set_column(0, 0, 24)
        worksheet.set_column(1, 1, 16)

        row = 2
        worksheet.write(row, 0, 'Metric', self.header_format)
        worksheet.write(row, 1, 'Mean', self.header_format)
        row += 1
        means = report[report['title'] == 'mean'] if 'title' in report.columns else report.iloc[0:0]
        for metric in METRIC_NAMES + ['valid_trees']:
            if metric not in report.columns or means.empty:
                continue
            value = means[metric].iloc[0]
            worksheet.write(row, 0, metric.replace('_', ' ').title(), self.text_format)
            if isinstance(value, float) and math.isnan(value):
                worksheet.write(row, 1, 'n/a', self.text_format)
            else:
                worksheet.write(row, 1, float(value), self.metric_format)
            row += 1

        row += 1
        for key, value in summary.items():
            worksheet.write(row, 0, key.replace('_', ' ').title(), self.text_format)
            worksheet.write(row, 1, value if isinstance(value, (int, float)) else str(value), self.text_format)
            row += 1

    def _export_loss_log(self, loss_log: pd.DataFrame, writer) -> None:
        sheet_name = REPORT_SHEETS['loss_log']
        loss_log.to_excel(writer, sheet_name=sheet_name, index=False)
        worksheet = writer.sheets[sheet_name]
        for col_num, value in enumerate(loss_log.columns):
            worksheet.write(0, col_num, value, self.header_format)


def export_report(report: pd.DataFrame, output_dir: str = DEFAULT_OUTPUT_DIR, filename: Optional[str] = None,
                  loss_log: Optional[pd.DataFrame] = None, summary: Optional[Dict[str, Any]] = None,
                  excel: bool = True) -> Dict[str, str]:
    """Convenience function for report export"""
    return ReportExporter(output_dir).export_report(report, filename, loss_log, summary, excel)


def write_loss_log(records: List[Dict[str, float]], path: str) -> str:
    """One JSON object per optimizer step"""
    os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
    pd.DataFrame(records).to_json(path, orient='records', lines=True)
    logger.info(f"📈 Loss log saved to: {path}")
    return path
