#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Command line front end.

            Each command runs one pipeline stage, reading its inputs
            from, and writing its outputs to, the output directory set
            in the configuration::

                simulate-gbm -> chart.csv
                ingest       -> discounted.csv, windows.csv, ne.csv,
                                hull.csv, root.json, tables.json,
                                tables/*.csv
                calibrate    -> calibration.csv
                build        -> graph/, graph_summary.json, edges_xy.csv
                price        -> pricing.csv, bounds.json
                pnl          -> pnl.json, pnl/hist_*.csv
                match        -> match.json
                export-graph -> edges_xy.csv, fan.csv
                config       -> (prints the key schema)

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

:Note:      Per the ``logging`` documentation, the logging functions
            are optimised to use lazy % string formatting rather than
            f-strings.

"""
# pylint: disable=import-error

import argparse
import logging
import os
import sys
import traceback
from enum import Enum

import yaml

from . import analysis, artifacts, config, escapes, graph, marketdata, pruning, superhedge
from ._version import __version__
from .exceptions import ConfigError, DegenerateError, TrajHedgeError

_FAN_SAMPLES = 100


class ArgParser:
    """Command line argument parsing class for the project."""

    # Program usage and help strings.
    _proj = 'trajhedge'
    _vers = __version__
    _desc = 'Trajectory based superhedging bounds from historical price charts.'
    _usag = 'trajhedge COMMAND [-c CONFIG] [options]'
    _cmds = ('simulate-gbm', 'ingest', 'calibrate', 'build', 'price', 'pnl', 'match', 'export-graph', 'config')
    _h_cmd = ('Pipeline stage to run. One of:\n  ' + ', '.join(_cmds))
    _h_cnfg = 'Path to the YAML configuration file. Defaults to built-in values.'
    _h_dbug = 'Print verbose debugging output while processing.'
    _h_outp = 'Output directory; overrides the configured value.'
    _h_schm = 'With the config command: print the configuration key schema.'
    _h_targ = 'With the price command: payoff asset (asset1 or asset2).'
    _h_trad = 'With the price command: traded asset (asset1 or asset2).\n\n'
    _h_vers = 'Display the version and exit.'
    _h_help = 'Display this help and usage, then exit.'

    def __init__(self):
        """Argument parser class initialiser."""
        self._args = None
        self._epil = self._build_epilog()

    @property
    def args(self):
        """Accessor to parsed arguments."""
        return self._args

    def parse(self, argv: list=None):
        """Parse command line arguments.

        Args:
            argv (list, optional): Arguments to be parsed. Defaults to
                ``sys.argv[1:]``.

        """
        argp = argparse.ArgumentParser(prog=self._proj,
                                       usage=self._usag,
                                       description=self._desc,
                                       epilog=self._epil,
                                       formatter_class=argparse.RawTextHelpFormatter,
                                       add_help=False)
        # Order matters here as it affects the display -->
        argp.add_argument('COMMAND', help=self._h_cmd, choices=self._cmds, metavar='COMMAND')
        argp.add_argument('-c', '--config', help=self._h_cnfg, default=None)
        argp.add_argument('-d', '--debug', help=self._h_dbug, action='store_true')
        argp.add_argument('-o', '--output', help=self._h_outp, default=None)
        argp.add_argument('--schema', help=self._h_schm, action='store_true')
        argp.add_argument('--target', help=self._h_targ, choices=('asset1', 'asset2'))
        argp.add_argument('--trade', help=self._h_trad, choices=('asset1', 'asset2'))
        argp.add_argument('-h', '--help', help=self._h_help, action='help')
        argp.add_argument('-v', '--version', help=self._h_vers, action='version', version=self._epil)
        self._args = argp.parse_args(argv)

    def _build_epilog(self) -> str:
        """Build the epilog string for terminal display.

        Returns:
            str: The NOTICE text followed by the program version.

        """
        path = os.path.join(os.path.dirname(os.path.realpath(__file__)), 'NOTICE')
        with open(path, 'r', encoding='utf-8') as f:
            notice = f.read()
        epil = f'{notice}\n\n{self._proj} v{self._vers}'
        return epil


class ExCode(Enum):
    """Exit code enumerators."""

    GEN_OK = 0
    ERR_DEGEN = 1
    ERR_VALID = 2
    ERR_INITL = 255


class TrajHedge:
    """Pipeline runner.

    Every command is a thin delegate onto the library modules; stages
    hand off through files in the output directory.

    Args:
        argv (list, optional): Command line arguments. Defaults to
            ``sys.argv[1:]``.

    """

    def __init__(self, argv: list=None):
        """Pipeline runner class initialiser."""
        self._args = None
        self._cfg = None
        self._excode = ExCode.ERR_INITL # Initial exit code value.
        self._out = None                # Output directory.
        self._written = []              # Paths written by this run.
        self._setup_parse_arguments(argv)
        self._setup_logger()

    @property
    def cfg(self) -> config.RunConfig:
        """Accessor to the loaded configuration."""
        return self._cfg

    def run(self):
        """Program entry-point.

        This method operates using 'running boolean' logic, whereby each
        step is only executed if the previous step succeeds. Any step
        which fails, falls through to the end of the method with the
        associated exit status.

        """
        # pylint: disable=multiple-statements
        try:
            s = self._load_config()
            if s: self._startup_msgs()
            if s: s = self._dispatch()
            if s: self._excode = ExCode.GEN_OK
            self._shutdown_msgs()
        except Exception:  # pragma: nocover
            print()
            logging.critical('The following error occurred:\n\n%s\nProcessing aborted.\n',
                             traceback.format_exc())
        sys.exit(self._excode.value)

    # Commands -->

    def _cmd_build(self) -> bool:
        """Grow the trajectory graph from the ingested artifacts."""
        cfg, g = self._cfg, self._cfg.graph
        ne = escapes.EmpiricalSet.from_frame(artifacts.read_csv(self._path('ne.csv')))
        if g.vertices_only:
            ne = ne.vertices_only()
        tables = pruning.PruningTables.from_dict(artifacts.read_json(self._path('tables.json')))
        root = artifacts.read_json(self._path('root.json'))
        hook = None
        if g.dubin.enabled:
            hook = analysis.DubinPruner(g.dubin.alpha, g.dubin.beta, g.dubin.threshold)
        opts = graph.BuildOptions(hull_shrink=g.hull_shrink,
                                  merge=g.merge,
                                  constraints=g.constraints,
                                  dubin=hook)
        grf = graph.build((root['k1'], root['k2']), ne, tables, g.n_max, opts, disc=cfg.disc())
        self._written += graph.export(grf, self._path('graph'), cfg.provenance())
        self._json(grf.summary(), 'graph_summary.json')
        self._csv(graph.plot_edges(grf), 'edges_xy.csv')
        if grf.degenerate:
            self._excode = ExCode.ERR_DEGEN
            return False
        return True

    def _cmd_calibrate(self) -> bool:
        """Sweep historical escape count envelopes over the thresholds."""
        cal = self._cfg.calibration
        if not cal.deltas:
            raise ConfigError('calibration.deltas', 'required by the calibrate command')
        if cal.model == 'A' and not cal.deltas1:
            raise ConfigError('calibration.deltas1', 'required for a Model A sweep')
        chart = self._discounted(self._require('input.chart', self._cfg.input.chart))
        sweep = analysis.calibration_sweep(chart, self._cfg.time_grid(), self._cfg.disc(),
                                           cal.model, list(cal.deltas), list(cal.deltas1))
        self._csv(sweep.to_frame(), 'calibration.csv')
        return True

    def _cmd_config(self) -> bool:
        """Print the key schema, or the resolved configuration."""
        if self._args.schema:
            print(config.schema(), end='')
        else:
            print(yaml.safe_dump(self._cfg.to_dict(), sort_keys=False), end='')
        return True

    def _cmd_export_graph(self) -> bool:
        """Write plotting artifacts for a built graph."""
        grf = graph.load(self._path('graph'))
        self._csv(graph.plot_edges(grf), 'edges_xy.csv')
        if not grf.degenerate:
            self._csv(graph.trajectory_fan(grf, _FAN_SAMPLES, self._cfg.pnl.seed), 'fan.csv')
        return True

    def _cmd_ingest(self) -> bool:
        """Load a chart and derive the empirical set and pruning tables."""
        cfg = self._cfg
        chart = self._discounted(self._require('input.chart', cfg.input.chart))
        grid, disc, params = cfg.time_grid(), cfg.disc(), cfg.escape_params()
        wins = marketdata.windows(chart, grid, disc)
        ne = escapes.empirical_set(wins, params)
        tables = pruning.tables_from_windows(wins, grid, params, disc)
        self._csv(marketdata.discounted_frame(chart), 'discounted.csv')
        self._csv(marketdata.dump_windows(wins), 'windows.csv')
        self._csv(ne.to_frame(), 'ne.csv')
        self._csv(escapes.hull_frame(escapes.hull2d(ne)), 'hull.csv')
        self._json(tables.to_dict(), 'tables.json')
        for name, df in tables.to_frames().items():
            self._csv(df, os.path.join('tables', f'{name}.csv'))
        self._json({'k1': disc.snap(chart.x1[-1], 1),
                    'k2': disc.snap(chart.x2[-1], 2),
                    'x1': float(chart.x1[-1]),
                    'x2': float(chart.x2[-1])},
                   'root.json')
        return True

    def _cmd_match(self) -> bool:
        """Match the most recent window of the test chart."""
        cfg = self._cfg
        chart = self._discounted(self._require('input.test_chart', cfg.input.test_chart))
        test = marketdata.windows(chart, cfg.time_grid(), cfg.disc())[-1]
        params = cfg.escape_params()
        ne = escapes.EmpiricalSet.from_frame(artifacts.read_csv(self._path('ne.csv')))
        out = {'ne_tree': self._match_dict(analysis.match(ne, test, params, cfg.disc()))}
        if os.path.isfile(self._path('graph', 'graph.json')):
            out['graph'] = self._match_dict(analysis.match(graph.load(self._path('graph')), test, params))
        self._json(out, 'match.json')
        return True

    def _cmd_pnl(self) -> bool:
        """Sample hedged portfolios at each configured capital."""
        cfg = self._cfg
        grf = graph.load(self._path('graph'))
        bounds = artifacts.read_json(self._path('bounds.json'))
        payoff = superhedge.Payoff.asset(int(bounds['target'][-1]))
        sup, und = superhedge.results_from_frame(artifacts.read_csv(self._path('pricing.csv')),
                                                 grf, payoff, int(bounds['trade'][-1]))
        pricing = sup if cfg.pnl.strategy == superhedge.SUPER else und
        reports = []
        for j, V in enumerate(cfg.capitals(bounds['x_target_0'])):
            rep = analysis.pnl(grf, pricing, V, cfg.pnl.samples, cfg.pnl.seed,
                               epsilon=cfg.pnl.epsilon, workers=cfg.workers)
            self._csv(rep.histogram_frame(), os.path.join('pnl', f'hist_{j}.csv'))
            reports.append(rep.to_dict())
        self._json({'reports': reports}, 'pnl.json')
        return True

    def _cmd_price(self) -> bool:
        """Price the target asset's terminal level in both directions."""
        pr = self._cfg.pricing
        target = self._args.target or pr.target
        trade = self._args.trade or pr.trade
        grf = graph.load(self._path('graph'))
        payoff = superhedge.Payoff.asset(int(target[-1]))
        sup = superhedge.price(grf, payoff, traded=int(trade[-1]), direction=superhedge.SUPER)
        und = superhedge.price(grf, payoff, traded=int(trade[-1]), direction=superhedge.UNDER)
        self._csv(superhedge.pricing_frame(sup, und), 'pricing.csv')
        degenerate = sup.degenerate or und.degenerate
        self._json({'super': sup.root if not sup.degenerate else str(sup.values[0].value),
                    'under': und.root if not und.degenerate else str(und.values[0].value),
                    'x_target_0': grf.price(0, int(target[-1])),
                    'target': target,
                    'trade': trade,
                    'degenerate': degenerate},
                   'bounds.json')
        if degenerate:
            self._excode = ExCode.ERR_DEGEN
            return False
        return True

    def _cmd_simulate_gbm(self) -> bool:
        """Simulate a GBM chart into the output directory."""
        sim = self._cfg.simulate
        chart = marketdata.simulate_gbm(sim.mu1, sim.sigma1, sim.mu2, sim.sigma2, sim.s0,
                                        sim.days, self._cfg.time_grid(), sim.seed)
        path = self._path('chart.csv')
        marketdata.write_chart(chart, path, header=self._cfg.provenance())
        self._written.append(path)
        return True

    # Plumbing -->

    def _csv(self, df, name: str):
        self._written.append(artifacts.write_csv(df, self._path(name), self._cfg.provenance()))

    def _discounted(self, path: str) -> marketdata.DiscountedChart:
        chart = marketdata.load_chart(path,
                                      delta=self._cfg.grid.delta,
                                      timestamps=self._cfg.input.timestamps)
        return marketdata.discount(chart, self._cfg.numeraire)

    def _dispatch(self) -> bool:
        """Run the selected command, mapping failures onto exit codes.

        Returns:
            bool: True if the command succeeded, otherwise False with
            the associated exit code being set.

        """
        cmd = getattr(self, '_cmd_' + self._args.COMMAND.replace('-', '_'))
        try:
            return cmd()
        except DegenerateError as err:
            logging.error('%s', err)
            self._excode = ExCode.ERR_DEGEN
        except FileNotFoundError as err:
            logging.error('%s', err)
            self._excode = ExCode.ERR_VALID
        except (TrajHedgeError, ValueError) as err:
            logging.error('%s: %s', type(err).__name__, err)
            self._excode = ExCode.ERR_VALID
        return False

    def _json(self, obj: dict, name: str):
        self._written.append(artifacts.write_json(obj, self._path(name)))

    def _load_config(self) -> bool:
        """Load and validate the configuration file, if given.

        Returns:
            bool: True if the configuration is valid, otherwise False
            with the associated exit code being set.

        """
        try:
            self._cfg = config.load(self._args.config) if self._args.config else config.from_dict({})
        except (FileNotFoundError, ConfigError) as err:
            logging.error('%s', err)
            self._excode = ExCode.ERR_VALID
            return False
        self._out = os.path.realpath(self._args.output or self._cfg.output)
        return True

    @staticmethod
    def _match_dict(res: analysis.MatchResult) -> dict:
        return {'path': [list(p) for p in res.path],
                'node_ids': list(res.node_ids),
                'errors': list(res.errors),
                'total': res.total,
                'complete': res.complete}

    def _path(self, *parts) -> str:
        return os.path.join(self._out, *parts)

    @staticmethod
    def _require(key: str, value):
        if not value:
            raise ConfigError(key, 'required by this command')
        return value

    def _setup_logger(self):
        """Setup: Set the project logger."""
        level = logging.DEBUG if self._args.debug else logging.INFO
        logging.basicConfig(level=level, format="[%(levelname)s]: %(message)s")

    def _setup_parse_arguments(self, argv: list):
        """Setup: Parse the command line arguments."""
        ap = ArgParser()
        ap.parse(argv)
        self._args = ap.args

    def _shutdown_msgs(self):
        """Print any shutdown messages."""
        if self._excode == ExCode.GEN_OK:
            if self._written:
                logging.info('The following artifacts have been written:%s',
                             ''.join(map('\n\t - {}'.format, self._written)))
        elif self._excode == ExCode.ERR_DEGEN:
            logging.warning('Numerical degeneracy reported. Exit code: %d', self._excode.value)
        else:
            logging.error('Processing failed. Exit code: %d', self._excode.value)

    def _startup_msgs(self):
        """Print any startup messages."""
        logging.debug('Starting up ...')
        logging.debug('Command: %s; config digest: %s; output: %s',
                      self._args.COMMAND, self._cfg.digest(), self._out)


def main(argv: list=None):
    """Console script entry-point."""
    TrajHedge(argv).run()


if __name__ == '__main__':
    main()
