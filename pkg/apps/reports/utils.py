"""
Run reports: construction, canonical JSON and table export.
"""
import csv
import json
import logging
import math
import time
from contextlib import contextmanager
from datetime import timedelta

import numpy as np

from apps.design import conf

logger = logging.getLogger(__name__)

BENCH_HEADERS = [
    'generator', 'd', 'k', 'm', 'seed', 'objective',
    'fractional_objective', 'integral_objective', 'certified_ratio', 'theorem_bound', 'within_bound',
]


class PhaseTimer:
    """Wall-clock seconds per named phase."""

    def __init__(self):
        self.timings = {}

    @contextmanager
    def phase(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    @property
    def total(self):
        return sum(self.timings.values())

    def as_duration(self):
        return timedelta(seconds=self.total)


def _plain(value):
    """JSON-safe copy: numpy scalars and arrays become Python values, non-finite floats null."""
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_plain(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def canonical_json(report):
    """Sorted keys, two-space indent; byte-identical for identical reports."""
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False)


def build_report(command, instance_file, kind=None, frac=None, result=None, certified=None,
                 checks=None, timings=None):
    """
    Assemble a RunReport.

    The certified ratio and the theorem bound are always present (null until
    a rounding exists); timings are kept apart from the deterministic fields.
    """
    report = {
        'schema': conf.get("SCHEMA"),
        'command': command,
        'instance_digest': instance_file.digest() if instance_file is not None else None,
        'objective': kind.as_dict() if kind is not None else None,
        'certified_ratio': None,
        'theorem_bound': None,
    }
    if frac is not None:
        report['fractional'] = frac.as_dict()
        report['fractional_objective'] = frac.objective_value
        report['solver_certificate'] = dict(frac.certificate)
    if result is not None:
        report.update(result.as_dict())
    if certified is not None:
        report['certified'] = bool(certified)
    if checks is not None:
        report['checks'] = [check.as_dict() for check in checks]
    report['timings'] = dict(timings or {})
    return _plain(report)


def strip_timings(report):
    return {key: value for key, value in report.items() if key != 'timings'}


def write_report(report, path=None, stream=None):
    text = canonical_json(report)
    if path:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
            handle.write('\n')
        logger.debug("report written to %s", path)
    if stream is not None:
        stream.write(text)
    return text


def export_to_csv(data, path, headers):
    """
    Write rows to a CSV file.

    Args:
        data: List of dictionaries or list of lists
        path: Destination file
        headers: List of column headers
    """
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(headers)
        for row in data:
            if isinstance(row, dict):
                writer.writerow([_plain(row.get(header, '')) for header in headers])
            else:
                writer.writerow([_plain(value) for value in row])
    return path


def export_to_excel(data, path, headers, sheet_name='Bench'):
    """
    Write rows to an .xlsx workbook with a styled header row.

    Falls back to CSV (next to ``path``) when openpyxl is not installed.
    """
    try:
        from openpyxl import Workbook
        from openpyxl.styles import Alignment, Font, PatternFill
    except ImportError:
        logger.warning("openpyxl is not installed; writing CSV instead")
        return export_to_csv(data, str(path).replace('.xlsx', '.csv'), headers)

    wb = Workbook()
    ws = wb.active
    ws.title = sheet_name

    header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
    header_font = Font(bold=True, color="FFFFFF")
    for col_num, header in enumerate(headers, 1):
        cell = ws.cell(row=1, column=col_num, value=header)
        cell.fill = header_fill
        cell.font = header_font
        cell.alignment = Alignment(horizontal='center')

    for row_num, row_data in enumerate(data, 2):
        values = [row_data.get(header, '') for header in headers] if isinstance(row_data, dict) else row_data
        for col_num, value in enumerate(values, 1):
            ws.cell(row=row_num, column=col_num, value=_plain(value))

    for column in ws.columns:
        width = max(len(str(cell.value)) if cell.value is not None else 0 for cell in column)
        ws.column_dimensions[column[0].column_letter].width = min(width + 2, 50)

    wb.save(path)
    return path


def export_table(data, path, headers, fmt='csv'):
    if fmt == 'xlsx':
        return export_to_excel(data, path, headers)
    return export_to_csv(data, path, headers)


def save_run(command, report, timer=None, status='completed', error_message=''):
    """Persist a report as a RunRecord."""
    from .models import RunRecord

    objective = report.get('objective') or {}
    label = objective.get('tag', '') if isinstance(objective, dict) else str(objective)
    if isinstance(objective, dict) and objective.get('tag') == 'ratio':
        label = f"ratio({objective['l_prime']},{objective['l']})"
    return RunRecord.objects.create(
        command=command,
        status=status,
        instance_digest=report.get('instance_digest') or '',
        objective=label,
        certified_ratio=report.get('certified_ratio'),
        theorem_bound=report.get('theorem_bound'),
        report=report,
        processing_time=timer.as_duration() if timer is not None else None,
        error_message=error_message,
    )
