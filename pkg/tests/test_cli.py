#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   Testing module for the ``cli`` module.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

:Comments:  The full pipeline is run once on a simulated chart; the
            tests then inspect its exit codes and artifacts.

"""
# pylint: disable=wrong-import-order

import contextlib
import hashlib
import io
import json
import os
import shutil
import yaml
try:  # pragma: nocover
    from .base import TestBase
    from .testlibs import msgs
except ImportError:
    from base import TestBase
    from testlibs import msgs
# TestBase must be imported before trajhedge.
from trajhedge import __version__, cli


class TestCLI(TestBase):
    """Testing class used to test the ``cli`` module."""

    _MSG1 = msgs.templates.not_as_expected.general
    _PIPELINE = ('simulate-gbm', 'ingest', 'calibrate', 'build', 'price', 'pnl', 'export-graph', 'match')

    @classmethod
    def setUpClass(cls):
        """Run this method at the start of all tests in this module.

        :Tasks:

            - Print the start of test message.
            - Write a small configuration and run the pipeline.

        """
        msgs.startoftest.message(module_name='cli')
        cls.tmp = cls.make_tmpdir()
        cls.out = os.path.join(cls.tmp, 'out')
        cls.cfg = cls.write_config('run.yaml')
        cls.codes = {cmd: cls.run_cli(cmd, '-c', cls.cfg) for cmd in cls._PIPELINE}

    @classmethod
    def write_config(cls, name: str, **overrides) -> str:
        """Write a pipeline configuration into the scratch directory."""
        chart = os.path.join(cls.out, 'chart.csv')
        data = {'input': {'chart': chart, 'test_chart': chart},
                'grid': {'delta': 3, 'steps_per_window': 20},
                'model': {'name': 'B', 'deltaB': 0.03},
                'graph': {'n_max': 1, 'constraints': []},
                'simulate': {'sigma1': 0.02, 'sigma2': 0.02, 'days': 30, 'seed': 3},
                'pnl': {'samples': 50},
                'calibration': {'model': 'B', 'deltas': [0.01, 0.03]},
                'output': cls.out}
        data.update(overrides)
        path = os.path.join(cls.tmp, name)
        with open(path, 'w', encoding='utf-8') as f:
            yaml.safe_dump(data, f)
        return path

    @staticmethod
    def run_cli(*argv) -> int:
        """Run the command line interface and return its exit code."""
        try:
            cli.main(list(argv))
        except SystemExit as err:
            return err.code
        return None  # pragma: nocover

    @staticmethod
    def calc_file_hash(path: str) -> str:
        """Calculate the MD5 hash of a file."""
        with open(path, 'rb') as f:
            return hashlib.md5(f.read()).hexdigest()

    def _read_json(self, *parts) -> dict:
        with open(os.path.join(self.out, *parts), encoding='utf-8') as f:
            return json.load(f)

    def test00a__argp__invalid_command(self):
        """Test the argument parser with an unknown command.

        :Test:
            - Verify argparse exits with code 2.

        """
        self.redirect_stderr_to_devnull()
        try:
            with self.assertRaises(SystemExit) as cm:
                cli.ArgParser().parse(['nonsense'])
        finally:
            self.restore_stderr()
        self.assertEqual(2, cm.exception.code)

    def test01a__pipeline__exit_codes(self):
        """Test every pipeline stage succeeds.

        :Test:
            - Verify each command exits with code 0.

        """
        for cmd in self._PIPELINE:
            with self.subTest(command=cmd):
                tst = self.codes[cmd]
                self.assertEqual(0, tst, msg=self._MSG1.format(0, tst))

    def test01b__pipeline__bounds(self):
        """Test the bounds file.

        :Test:
            - Verify the bounds are finite and ordered.
            - Verify the default payoff and traded assets.

        """
        bounds = self._read_json('bounds.json')
        with self.subTest('Ordered'):
            self.assertFalse(bounds['degenerate'])
            self.assertLessEqual(bounds['under'], bounds['super'])
        with self.subTest('Roles'):
            self.assertEqual(('asset2', 'asset1'), (bounds['target'], bounds['trade']))

    def test01c__pipeline__provenance(self):
        """Test the provenance line of every CSV artifact.

        :Test:
            - Verify each CSV opens with the version and config digest.

        """
        prefix = f'# trajhedge {__version__} config='
        found = 0
        for root, _, files in os.walk(self.out):
            for fn in (f for f in files if f.endswith('.csv')):
                found += 1
                with open(os.path.join(root, fn), encoding='utf-8') as f:
                    line = f.readline()
                with self.subTest(file=fn):
                    self.assertTrue(line.startswith(prefix), msg=self._MSG1.format(prefix, line))
        self.assertGreater(found, 10)

    def test01d__pipeline__artifacts(self):
        """Test the remaining pipeline artifacts.

        :Test:
            - Verify one P&L report per capital, in capital order.
            - Verify both matches are reported.
            - Verify the plotting and calibration files exist.

        """
        with self.subTest('P&L'):
            reports = self._read_json('pnl.json')['reports']
            self.assertEqual(3, len(reports))
            pct = [r['percent_profitable'] for r in reports]
            self.assertEqual(sorted(pct), pct, msg=self._MSG1.format('non-decreasing', pct))
        with self.subTest('Match'):
            self.assertEqual({'ne_tree', 'graph'}, set(self._read_json('match.json')))
        with self.subTest('Files'):
            for name in ('fan.csv', 'edges_xy.csv', 'calibration.csv', 'root.json',
                         os.path.join('graph', 'nodes.csv'), os.path.join('pnl', 'hist_0.csv')):
                self.assertTrue(os.path.isfile(os.path.join(self.out, name)), msg=name)

    def test02a__ingest__deterministic(self):
        """Test re-running ingest into another directory.

        :Test:
            - Verify the artifacts are byte-identical.

        """
        other = os.path.join(self.tmp, 'again')
        code = self.run_cli('ingest', '-c', self.cfg, '-o', other)
        self.assertEqual(0, code)
        for name in ('ne.csv', 'windows.csv', 'tables.json', 'root.json'):
            with self.subTest(file=name):
                exp = self.calc_file_hash(os.path.join(self.out, name))
                tst = self.calc_file_hash(os.path.join(other, name))
                self.assertEqual(exp, tst, msg=self._MSG1.format(exp, tst))

    def test02b__price__swapped_roles(self):
        """Test pricing asset 1 while trading asset 2.

        :Test:
            - Verify the command line roles override the configuration.

        """
        other = os.path.join(self.tmp, 'swapped')
        shutil.copytree(os.path.join(self.out, 'graph'), os.path.join(other, 'graph'))
        code = self.run_cli('price', '-c', self.cfg, '-o', other, '--target', 'asset1', '--trade', 'asset2')
        with open(os.path.join(other, 'bounds.json'), encoding='utf-8') as f:
            bounds = json.load(f)
        with self.subTest('Exit code'):
            self.assertIn(code, (0, 1))
        with self.subTest('Roles'):
            self.assertEqual(('asset1', 'asset2'), (bounds['target'], bounds['trade']))
            self.assertEqual(code == 1, bounds['degenerate'])

    def test03a__ingest__missing_chart(self):
        """Test ingesting a chart which does not exist.

        :Test:
            - Verify the exit code is 2.
            - Verify the path is logged.

        """
        missing = os.path.join(self.tmp, 'absent.csv')
        cfg = self.write_config('missing.yaml', input={'chart': missing},
                                output=os.path.join(self.tmp, 'missing'))
        with self.assertLogs(level='ERROR') as cm:
            code = self.run_cli('ingest', '-c', cfg)
        with self.subTest('Exit code'):
            self.assertEqual(2, code, msg=self._MSG1.format(2, code))
        with self.subTest('Message'):
            self.assertTrue(any(missing in line for line in cm.output))

    def test03b__config__invalid(self):
        """Test invalid configurations.

        :Test:
            - Verify an unknown key exits with code 2.
            - Verify a missing chart setting exits with code 2.
            - Verify a missing configuration file exits with code 2.

        """
        with self.subTest('Unknown key'):
            self.assertEqual(2, self.run_cli('config', '-c', self.resource('config_unknown_key.yaml')))
        with self.subTest('No chart'):
            cfg = self.write_config('nochart.yaml', input={}, output=os.path.join(self.tmp, 'nochart'))
            self.assertEqual(2, self.run_cli('ingest', '-c', cfg))
        with self.subTest('No file'):
            self.assertEqual(2, self.run_cli('config', '-c', os.path.join(self.tmp, 'none.yaml')))

    def test03c__build__missing_artifacts(self):
        """Test building before ingesting.

        :Test:
            - Verify the exit code is 2.

        """
        code = self.run_cli('build', '-o', os.path.join(self.tmp, 'empty'))
        self.assertEqual(2, code, msg=self._MSG1.format(2, code))

    def test04a__config__schema(self):
        """Test printing the configuration schema.

        :Test:
            - Verify the exit code is 0.
            - Verify the schema documents the keys.

        """
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = self.run_cli('config', '--schema')
        with self.subTest('Exit code'):
            self.assertEqual(0, code)
        with self.subTest('Keys'):
            self.assertIn('deltaB', buf.getvalue())
            self.assertIn('steps_per_window', buf.getvalue())

    def test04b__config__resolved(self):
        """Test printing the resolved configuration.

        :Test:
            - Verify the printed YAML holds the file's values.

        """
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = self.run_cli('config', '-c', self.cfg)
        data = yaml.safe_load(buf.getvalue())
        self.assertEqual(0, code)
        self.assertEqual(20, data['grid']['steps_per_window'])
        self.assertEqual([], data['graph']['constraints'])

    def test05a__pipeline__bundled_config(self):
        """Test the bundled full-scale pipeline configuration.

        :Test:
            - Verify the shipped file enforces every pruning constraint
              at 130 step windows, deltaB 0.011 and three rebalances.
            - Verify each stage exits with code 0.
            - Verify the graph holds thousands of nodes.
            - Verify the bounds are finite and straddle X2_0.

        """
        with open(os.path.join(self._DIR_PROJ_ROOT, 'configs', 'gbm_pipeline.yaml'), encoding='utf-8') as f:
            data = yaml.safe_load(f)
        with self.subTest('Parameters'):
            self.assertEqual((3, 130), (data['grid']['delta'], data['grid']['steps_per_window']))
            self.assertEqual(('B', 0.011), (data['model']['name'], data['model']['deltaB']))
            self.assertEqual(3, data['graph']['n_max'])
            self.assertEqual([1, 2, 3, 4, 5, 6, 7], data['graph']['constraints'])
        out = os.path.join(self.tmp, 'bundled')
        data['input'] = {'chart': os.path.join(out, 'chart.csv')}
        data['output'] = out
        cfg = os.path.join(self.tmp, 'bundled.yaml')
        with open(cfg, 'w', encoding='utf-8') as f:
            yaml.safe_dump(data, f)
        for cmd in ('simulate-gbm', 'ingest', 'build', 'price'):
            with self.subTest(command=cmd):
                code = self.run_cli(cmd, '-c', cfg)
                self.assertEqual(0, code, msg=self._MSG1.format(0, code))
        with open(os.path.join(out, 'graph_summary.json'), encoding='utf-8') as f:
            summary = json.load(f)
        with open(os.path.join(out, 'bounds.json'), encoding='utf-8') as f:
            bounds = json.load(f)
        with self.subTest('Size'):
            self.assertFalse(summary['degenerate'])
            self.assertGreater(summary['nodes'], 1000, msg=self._MSG1.format('> 1000', summary['nodes']))
            self.assertGreaterEqual(summary['edges'], summary['nodes'] - 1)
        with self.subTest('Bounds'):
            self.assertFalse(bounds['degenerate'])
            self.assertLessEqual(bounds['under'], bounds['x_target_0'] + 1e-9)
            self.assertLessEqual(bounds['x_target_0'], bounds['super'] + 1e-9)
