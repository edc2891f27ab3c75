import csv
import json
import math
import os
import tempfile
from datetime import timedelta
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, TestCase
from django.utils import timezone

from apps.design.instances import InstanceFile
from apps.design.relax import E_DESIGN, validate_fractional
from apps.design.rounding import certify, round_design

from .models import RunRecord
from .utils import (
    BENCH_HEADERS,
    PhaseTimer,
    build_report,
    canonical_json,
    export_table,
    export_to_csv,
    export_to_excel,
    save_run,
    strip_timings,
    write_report,
)


def scalar_report():
    instance_file = InstanceFile.from_dict({'d': 1, 'k': 2, 'vectors': [[1], [2]], 'x': [0, 2]})
    inst = instance_file.instance()
    frac = validate_fractional(inst, instance_file.x, E_DESIGN)
    result = round_design(inst, frac, E_DESIGN)
    return build_report('round', instance_file, E_DESIGN, frac=frac, result=result,
                        certified=certify(result, frac, E_DESIGN), timings={'round': 0.25})


class CanonicalJsonTests(SimpleTestCase):

    def test_sorted_and_indented(self):
        text = canonical_json({'b': 1, 'a': [np.float64(0.5), np.int64(2)]})
        self.assertEqual(text, '{\n  "a": [\n    0.5,\n    2\n  ],\n  "b": 1\n}')

    def test_non_finite_become_null(self):
        self.assertEqual(json.loads(canonical_json({'ratio': math.inf, 'gap': float('nan')})),
                         {'ratio': None, 'gap': None})

    def test_arrays_and_booleans(self):
        data = json.loads(canonical_json({'x': np.array([1.0, 2.0]), 'ok': np.bool_(True)}))
        self.assertEqual(data, {'x': [1.0, 2.0], 'ok': True})


class BuildReportTests(SimpleTestCase):

    def test_round_report(self):
        report = scalar_report()
        self.assertEqual(report['schema'], 1)
        self.assertEqual(report['selection'], [1, 1])
        self.assertEqual(report['objective'], {'tag': 'E'})
        self.assertAlmostEqual(report['certified_ratio'], 1.0)
        self.assertTrue(report['certified'])
        self.assertIn('lambda_min', report['solver_certificate'])
        self.assertEqual(report['timings'], {'round': 0.25})
        self.assertEqual(len(report['instance_digest']), 64)

    def test_ratio_fields_always_present(self):
        report = build_report('solve', None)
        self.assertIsNone(report['certified_ratio'])
        self.assertIsNone(report['theorem_bound'])
        self.assertIsNone(report['instance_digest'])

    def test_strip_timings(self):
        self.assertNotIn('timings', strip_timings(scalar_report()))

    def test_write_report(self):
        report = scalar_report()
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'report.json')
            text = write_report(report, path=path)
            with open(path, encoding='utf-8') as handle:
                self.assertEqual(handle.read(), text + '\n')
        self.assertEqual(json.loads(text), report)


class PhaseTimerTests(SimpleTestCase):

    def test_phases_accumulate(self):
        timer = PhaseTimer()
        with timer.phase('relax'):
            pass
        with timer.phase('relax'):
            pass
        with timer.phase('round'):
            pass
        self.assertEqual(set(timer.timings), {'relax', 'round'})
        self.assertGreaterEqual(timer.total, 0.0)
        self.assertIsInstance(timer.as_duration(), timedelta)

    def test_phase_recorded_on_error(self):
        timer = PhaseTimer()
        with self.assertRaises(RuntimeError):
            with timer.phase('relax'):
                raise RuntimeError('boom')
        self.assertIn('relax', timer.timings)


class ExportTests(SimpleTestCase):
    rows = [
        {'generator': 'gaussian', 'd': 2, 'k': 3, 'm': 5, 'seed': 0, 'objective': 'D',
         'fractional_objective': 0.5, 'integral_objective': 0.6, 'certified_ratio': 1.2,
         'theorem_bound': 1.73, 'within_bound': True},
        {'generator': 'gaussian', 'd': 2, 'k': 3, 'm': 5, 'seed': 0, 'objective': 'E',
         'fractional_objective': 0.5, 'integral_objective': math.inf, 'certified_ratio': math.inf,
         'theorem_bound': 5.8, 'within_bound': False},
    ]

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_csv(self):
        path = export_to_csv(self.rows, os.path.join(self.tmp.name, 'bench.csv'), BENCH_HEADERS)
        with open(path, newline='', encoding='utf-8') as handle:
            read = list(csv.reader(handle))
        self.assertEqual(read[0], BENCH_HEADERS)
        self.assertEqual(read[1][BENCH_HEADERS.index('objective')], 'D')
        self.assertEqual(read[2][BENCH_HEADERS.index('certified_ratio')], '')

    def test_csv_from_lists(self):
        path = export_to_csv([[1, 2.5]], os.path.join(self.tmp.name, 'plain.csv'), ['a', 'b'])
        with open(path, newline='', encoding='utf-8') as handle:
            self.assertEqual(list(csv.reader(handle)), [['a', 'b'], ['1', '2.5']])

    def test_excel(self):
        from openpyxl import load_workbook

        path = export_to_excel(self.rows, os.path.join(self.tmp.name, 'bench.xlsx'), BENCH_HEADERS)
        sheet = load_workbook(path).active
        self.assertEqual(sheet.title, 'Bench')
        self.assertEqual([cell.value for cell in sheet[1]], BENCH_HEADERS)
        self.assertTrue(sheet.cell(row=1, column=1).font.bold)
        self.assertEqual(sheet.cell(row=2, column=BENCH_HEADERS.index('certified_ratio') + 1).value, 1.2)
        self.assertIsNone(sheet.cell(row=3, column=BENCH_HEADERS.index('certified_ratio') + 1).value)

    def test_excel_falls_back_to_csv(self):
        with mock.patch.dict('sys.modules', {'openpyxl': None, 'openpyxl.styles': None}):
            path = export_to_excel(self.rows, os.path.join(self.tmp.name, 'bench.xlsx'), BENCH_HEADERS)
        self.assertTrue(path.endswith('bench.csv'))
        self.assertTrue(os.path.exists(path))

    def test_export_table_dispatch(self):
        path = export_table(self.rows, os.path.join(self.tmp.name, 'bench.csv'), BENCH_HEADERS, fmt='csv')
        self.assertTrue(os.path.exists(path))


class RunRecordTests(TestCase):

    def test_save_run(self):
        timer = PhaseTimer()
        with timer.phase('round'):
            report = scalar_report()
        record = save_run('round', report, timer)
        self.assertEqual(record.objective, 'E')
        self.assertEqual(record.status, 'completed')
        self.assertEqual(record.instance_digest, report['instance_digest'])
        self.assertTrue(record.within_bound)
        self.assertIsNotNone(record.processing_time)

    def test_ratio_label(self):
        report = {'objective': {'tag': 'ratio', 'l_prime': 1, 'l': 3}, 'certified_ratio': 2.0, 'theorem_bound': 1.5}
        record = save_run('bench', report)
        self.assertEqual(record.objective, 'ratio(1,3)')
        self.assertFalse(record.within_bound)

    def test_ordering_and_str(self):
        first = RunRecord.objects.create(command='solve', objective='D', created_at=timezone.now() - timedelta(minutes=1))
        second = RunRecord.objects.create(command='verify')
        self.assertEqual(list(RunRecord.objects.all()), [second, first])
        self.assertTrue(str(second).startswith('verify - '))
        self.assertIsNone(second.within_bound)
