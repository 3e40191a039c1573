#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   Testing module for the ``superhedge`` module.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

:Comments:  The backward recursion is checked against a linear program
            over every path of small random trees.

"""
# pylint: disable=wrong-import-order

import math
import os
import numpy as np
try:  # pragma: nocover
    from .base import TestBase
    from .testlibs import fixtures, msgs
except ImportError:
    from base import TestBase
    from testlibs import fixtures, msgs
# TestBase must be imported before trajhedge.
from trajhedge import graph, pruning, superhedge
from trajhedge.artifacts import read_csv, write_csv
from trajhedge.escapes import EscapeParams, empirical_set
from trajhedge.exceptions import GraphError, PayoffError
from trajhedge.geometry import NodeClass
from trajhedge.marketdata import DiscretizationParams
from trajhedge.superhedge import SUPER, UNDER, Infinity, OneStepMarket, Payoff


def _leaf_paths(tree) -> list:
    """All root-to-leaf paths of a tree."""
    out, stack = [], [[0]]
    while stack:
        path = stack.pop()
        cs = tree.children(path[-1])
        if not cs:
            out.append(path)
        stack.extend(path + [c] for c in cs)
    return out


def _spread(g, nid) -> float:
    """A call on the spread of asset 2 over asset 1."""
    return max(g.price(nid, 2) - g.price(nid, 1), 0.0)


class TestSuperhedge(TestBase):
    """Testing class used to test the ``superhedge`` module."""

    _MSG1 = msgs.templates.not_as_expected.general
    _MSG2 = msgs.templates.not_as_expected.bound
    _X2 = Payoff.asset(2)

    @classmethod
    def setUpClass(cls):
        """Run this method at the start of all tests in this module.

        :Tasks:

            - Print the start of test message.

        """
        msgs.startoftest.message(module_name='superhedge')

    def test01a__one_step_super__cases(self):
        """Test the one-step superhedge on hand-picked markets.

        :Test:
            - Verify the value and hedge of a straddling market.
            - Verify a vertex takes the mean of its adjacent slopes.
            - Verify a single child at the node price.
            - Verify an out-of-range price is infinite.

        """
        cases = ((OneStepMarket(0, ((-1, 0), (1, 2))), (1.0, 1.0)),
                 (OneStepMarket(0, ((-1, 0), (0, 3), (1, 0))), (3.0, 0.0)),
                 (OneStepMarket(0, ((-1, 1), (0, 0), (1, 1))), (1.0, 0.0)),
                 (OneStepMarket(2, ((2, 5), (2, 7))), (7.0, 0.0)),
                 (OneStepMarket(0, ((1, 0), (2, 1))), Infinity.MINUS))
        for market, exp in cases:
            with self.subTest(market=market):
                tst = superhedge.one_step_super(market)
                self.assertEqual(exp, tst, msg=self._MSG1.format(exp, tst))

    def test01b__one_step_under__cases(self):
        """Test the one-step underhedge.

        :Test:
            - Verify the greatest convex minorant at the node price.
            - Verify an out-of-range price is infinite.

        """
        with self.subTest('Value'):
            tst = superhedge.one_step_under(OneStepMarket(0, ((-1, 0), (0, 3), (1, 0))))
            self.assertEqual((0.0, 0.0), tst, msg=self._MSG1.format((0.0, 0.0), tst))
        with self.subTest('Out of range'):
            self.assertIs(Infinity.PLUS, superhedge.one_step_under(OneStepMarket(5, ((1, 0), (2, 1)))))
        with self.subTest('Empty'):
            with self.assertRaises(ValueError):
                superhedge.one_step_under(OneStepMarket(0, ()))

    def test02a__price__null_subtree(self):
        """Test the eight node tree with a null subtree.

        :Test:
            - Verify the root bounds are 2 and -2.
            - Verify node 1 carries no finite bound.
            - Verify excising the null subtree leaves the bounds.

        """
        for excise in (False, True):
            tree = fixtures.null_subtree_tree(excise=excise)
            sup = superhedge.price(tree, self._X2, traded=1, direction=SUPER)
            und = superhedge.price(tree, self._X2, traded=1, direction=UNDER)
            with self.subTest(excise=excise):
                self.assertEqual((2.0, -2.0), (sup.root, und.root),
                                 msg=self._MSG1.format((2.0, -2.0), (sup.root, und.root)))
                self.assertEqual(0.0, sup.hedges[0])
        with self.subTest('Null node'):
            sup = superhedge.price(fixtures.null_subtree_tree(), self._X2, traded=1, direction=SUPER)
            self.assertFalse(sup.finite(1))
            self.assertIsNone(sup.hedges[1])
            self.assertEqual(-math.inf, sup.bound(5))

    def test02b__price__complete_market(self):
        """Test a one-step market where asset 2 replicates.

        :Test:
            - Verify the bounds meet at the asset 2 price.

        """
        tree = fixtures.make_tree([(10, 20), (12, 24), (9, 18), (11, 22)], [[1, 2, 3], [], [], []])
        sup = superhedge.price(tree, self._X2, direction=SUPER)
        und = superhedge.price(tree, self._X2, direction=UNDER)
        with self.subTest('Bounds'):
            self.assertAlmostEqual(20.0, sup.root, places=12)
            self.assertAlmostEqual(20.0, und.root, places=12)
        with self.subTest('Hedge'):
            self.assertAlmostEqual(2.0, sup.hedges[0], places=12)

    def test02c__price__hedge_units(self):
        """Test hedges are expressed per unit of the traded asset.

        :Test:
            - Verify the hedge does not depend on the grid step.

        """
        levels, children = [(0, 0), (-1, 0), (1, 4)], [[1, 2], [], []]
        for dhat in (1, 0.5):
            tree = fixtures.make_tree(levels, children, dhat=dhat)
            sup = superhedge.price(tree, self._X2)
            with self.subTest(dhat=dhat):
                self.assertAlmostEqual(2.0, sup.hedges[0], places=12)
                self.assertAlmostEqual(2.0 * dhat, sup.root, places=12)

    def test02d__price__random_trees_match_lp(self):
        """Test the recursion against linear programming.

        :Test:
            - Verify both directions agree on 100 random trees, for a
              linear and a non-linear payoff.
            - Verify infinite bounds agree.

        """
        rng = np.random.default_rng(1729)
        payoffs = (self._X2, Payoff(func=_spread, name='spread'))
        for n in range(100):
            tree = fixtures.random_tree(rng)
            for payoff in payoffs:
                for direction in (SUPER, UNDER):
                    exp = superhedge.brute_force_price(tree, payoff, traded=1, direction=direction)
                    tst = superhedge.price(tree, payoff, traded=1, direction=direction).root
                    with self.subTest(tree=n, payoff=payoff.name, direction=direction):
                        if math.isinf(exp) or math.isinf(tst):
                            self.assertEqual(exp, tst, msg=self._MSG1.format(exp, tst))
                        else:
                            self.assertAlmostEqual(exp, tst, delta=1e-7 * max(1.0, abs(exp)),
                                                   msg=self._MSG1.format(exp, tst))

    def test02e__price__duality(self):
        """Test the underhedge is the negated superhedge of ``-F``.

        :Test:
            - Verify on random trees.

        """
        rng = np.random.default_rng(3)
        for _ in range(20):
            tree = fixtures.random_tree(rng)
            und = superhedge.price(tree, self._X2, direction=UNDER)
            sup = superhedge.price(tree, self._X2.negated(), direction=SUPER)
            self.assertEqual(und.bound(0), -sup.bound(0))

    def test03a__hedge_trace__super_certificate(self):
        """Test the superhedge dominates the payoff.

        :Test:
            - Verify every non-null path ends with a non-negative
              profit, starting from the superhedging bound.
            - Verify every rebalance is self-financing.

        """
        rng = np.random.default_rng(99)
        checked = 0
        for _ in range(30):
            tree = fixtures.random_tree(rng)
            res = superhedge.price(tree, Payoff(func=_spread), traded=1)
            if res.degenerate:
                continue
            for path in _leaf_paths(tree):
                trace = superhedge.hedge_trace(res, path, res.root)
                if trace.null:
                    continue
                checked += 1
                self.assertGreaterEqual(trace.profit, -1e-9, msg=self._MSG2.format(trace.profit, -1e-9))
                for h, c, v, n in zip(trace.hedges, trace.cash, trace.values, path):
                    self.assertAlmostEqual(v, c + h * tree.price(n, 1), places=9)
        self.assertGreater(checked, 0)

    def test03b__hedge_trace__invalid(self):
        """Test trajectories leaving the graph.

        :Test:
            - Verify a path not starting at the root raises GraphError.
            - Verify a non-edge raises GraphError.

        """
        tree = fixtures.null_subtree_tree()
        res = superhedge.price(tree, self._X2)
        for path in ([1, 5, 7], [0, 5, 7], [0, 1]):
            with self.subTest(path=path):
                with self.assertRaises(GraphError):
                    superhedge.hedge_trace(res, path, 2.0)

    def test04a__price__payoff_errors(self):
        """Test invalid payoffs and arguments.

        :Test:
            - Verify a non-finite payoff raises PayoffError.
            - Verify a path-dependent payoff on a merged graph raises
              ValueError.
            - Verify invalid directions and assets raise ValueError.

        """
        tree = fixtures.null_subtree_tree()
        with self.subTest('Not finite'):
            with self.assertRaises(PayoffError):
                superhedge.price(tree, Payoff(func=lambda g, n: float('nan'), name='nan'))
        with self.subTest('Path-dependent'):
            ne = fixtures.lattice_set(np.random.default_rng(0))
            g = graph.build((0, 0), ne, None, 1, disc=DiscretizationParams(1, 1))
            with self.assertRaises(ValueError):
                superhedge.price(g, Payoff(func=lambda g, p: len(p), path_dependent=True))
        with self.subTest('Arguments'):
            with self.assertRaises(ValueError):
                superhedge.price(tree, self._X2, direction='sideways')
            with self.assertRaises(ValueError):
                superhedge.price(tree, self._X2, traded=3)
            with self.assertRaises(ValueError):
                Payoff.asset(0)

    def test04b__price__path_dependent_tree(self):
        """Test a path-dependent payoff on a tree.

        :Test:
            - Verify the running maximum of asset 2 prices as the LP.

        """
        payoff = Payoff(func=lambda g, p: max(g.price(n, 2) for n in p), path_dependent=True, name='max2')
        rng = np.random.default_rng(5)
        for _ in range(10):
            tree = fixtures.random_tree(rng, max_depth=3)
            exp = superhedge.brute_force_price(tree, payoff)
            tst = superhedge.price(tree, payoff).root
            if math.isinf(exp) or math.isinf(tst):
                self.assertEqual(exp, tst)
            else:
                self.assertAlmostEqual(exp, tst, delta=1e-7 * max(1.0, abs(exp)))

    def test05a__pricing_frame__reload(self):
        """Test the pricing dump.

        :Test:
            - Verify infinite bounds and missing hedges survive a CSV
              round trip.
            - Verify the degenerate flag.

        """
        tree = fixtures.null_subtree_tree()
        sup = superhedge.price(tree, self._X2, direction=SUPER)
        und = superhedge.price(tree, self._X2, direction=UNDER)
        path = write_csv(superhedge.pricing_frame(sup, und),
                         os.path.join(self.make_tmpdir(), 'pricing.csv'), provenance='trajhedge test')
        df = read_csv(path)
        tst_sup, tst_und = superhedge.results_from_frame(df, tree, self._X2, 1)
        with self.subTest('Values'):
            self.assertEqual(sup.values, tst_sup.values)
            self.assertEqual(und.values, tst_und.values)
        with self.subTest('Hedges'):
            self.assertEqual(sup.hedges, tst_sup.hedges)
        with self.subTest('Flag'):
            self.assertEqual([0, 1, 0, 0, 0, 1, 0, 0], list(df['degenerate_flag']))

    def test06a__price__sandwich_on_gbm_graphs(self):
        """Test the bounds bracket the asset 2 price.

        :Test:
            - Build pruned graphs from 50 simulated charts.
            - Verify ``under <= X2_0 <= super`` on every graph without
              a type II internal node.

        """
        params = EscapeParams('B', deltaB='0.03')
        qualifying = 0
        for seed in range(50):
            chart, grid, disc, wins = fixtures.gbm_windows(seed=seed)
            ne = empirical_set(wins, params)
            tables = pruning.tables_from_windows(wins, grid, params, disc)
            root = (disc.snap(chart.x1[-1], 1), disc.snap(chart.x2[-1], 2))
            g = graph.build(root, ne, tables, 2, disc=disc)
            if g.degenerate or any(n.node_class is NodeClass.TYPE_II for n in g.nodes if g.children(n.id)):
                continue
            qualifying += 1
            x2 = g.price(0, 2)
            sup = superhedge.price(g, self._X2, traded=1, direction=SUPER).root
            und = superhedge.price(g, self._X2, traded=1, direction=UNDER).root
            with self.subTest(seed=seed):
                self.assertLessEqual(und, x2 + 1e-9, msg=self._MSG2.format(und, x2))
                self.assertLessEqual(x2, sup + 1e-9, msg=self._MSG2.format(x2, sup))
        self.assertGreater(qualifying, 0)

    def test06b__price__monotone_in_hull_shrink(self):
        """Test shrinking the hull narrows the bounds.

        :Test:
            - Build graphs from 20 simulated charts, where re-snapping
              the shrunk moves rounds unevenly.
            - Verify the superhedge is non-increasing and the underhedge
              non-decreasing as the shrink factor grows.

        """
        params = EscapeParams('B', deltaB='0.03')
        for seed in range(20):
            chart, grid, disc, wins = fixtures.gbm_windows(seed=100 + seed)
            ne = empirical_set(wins, params)
            root = (disc.snap(chart.x1[-1], 1), disc.snap(chart.x2[-1], 2))
            sups, unds = [], []
            for eps in (0.0, 0.05, 0.1, 0.2):
                opts = graph.BuildOptions(hull_shrink=eps, horizon=10 * grid.steps_per_window)
                g = graph.build(root, ne, None, 2, opts, disc=disc)
                sups.append(superhedge.price(g, self._X2, direction=SUPER).root)
                unds.append(superhedge.price(g, self._X2, direction=UNDER).root)
            with self.subTest(seed=seed):
                self.assertTrue(all(a >= b - 1e-9 for a, b in zip(sups, sups[1:])), msg=self._MSG1.format('non-increasing', sups))
                self.assertTrue(all(a <= b + 1e-9 for a, b in zip(unds, unds[1:])), msg=self._MSG1.format('non-decreasing', unds))

    def test06c__price__merged_graph_matches_tree(self):
        """Test merging equal tuples leaves the bounds unchanged.

        :Test:
            - Build the same pruned graph as a DAG and as a tree.
            - Verify the tree has at least as many nodes as the DAG.
            - Verify both directions give the same root bound.

        """
        params = EscapeParams('B', deltaB='0.03')
        checked = 0
        for seed in (21, 22, 23):
            chart, grid, disc, wins = fixtures.gbm_windows(seed=seed)
            ne = empirical_set(wins, params)
            tables = pruning.tables_from_windows(wins, grid, params, disc)
            root = (disc.snap(chart.x1[-1], 1), disc.snap(chart.x2[-1], 2))
            dag = graph.build(root, ne, tables, 2, graph.BuildOptions(merge=True), disc=disc)
            tree = graph.build(root, ne, tables, 2, graph.BuildOptions(merge=False), disc=disc)
            if dag.degenerate:
                continue
            checked += 1
            with self.subTest(seed=seed, check='size'):
                self.assertGreaterEqual(len(tree), len(dag))
                self.assertFalse(tree.merge)
            for direction in (SUPER, UNDER):
                exp = superhedge.price(tree, self._X2, direction=direction)
                tst = superhedge.price(dag, self._X2, direction=direction)
                with self.subTest(seed=seed, direction=direction):
                    if not (exp.finite(0) and tst.finite(0)):
                        self.assertEqual(exp.values[0], tst.values[0], msg=self._MSG1.format(exp.values[0], tst.values[0]))
                    else:
                        self.assertAlmostEqual(exp.root, tst.root, delta=1e-9, msg=self._MSG1.format(exp.root, tst.root))
        self.assertGreater(checked, 0)
