#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Experiments on priced trajectory graphs.

            This module provides:

                - Profit-and-loss sampling of hedged portfolios.
                - Calibration sweeps of historical escape counts over a
                  range of thresholds.
                - Matching of a test window against a graph, or against
                  the tree grown freely from the empirical set.
                - Anchored cone-crossing counts, the corresponding
                  upper bound check, and a construction-time pruning
                  hook based on that bound.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

"""
# pylint: disable=invalid-name

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .escapes import EmpiricalSet, EscapeParams, escape_counts, escape_times
from .exceptions import DegenerateError, GraphError
from .graph import TrajectoryGraph, sample_trajectory
from .marketdata import DiscountedChart, DiscretizationParams, TimeGrid, Window
from .superhedge import SUPER, Payoff, PricingResult, hedge_trace, price

logger = logging.getLogger(__name__)

_RHO, _TAU = 'rho', 'tau'
_MIN_BINS = 20
_MAX_BINS = 1000
_TOL = 1e-9


@dataclass(frozen=True)
class PnLReport:
    """Profit-and-loss summary for one initial capital.

    Args:
        capital (float): Initial capital ``V``.
        samples (int): Number of non-null samples used.
        null_samples (int): Number of samples through a null node.
        percent_profitable (float): Share of samples with a profit.
        bin_edges (tuple): Histogram bin edges.
        counts (tuple): Histogram counts.
        binning (str): Binning rule used.
        epsilon (float): Credit added to each profit.
        strategy (str): ``'super'`` or ``'under'`` hedges.

    """

    capital: float
    samples: int
    null_samples: int
    percent_profitable: float
    bin_edges: tuple
    counts: tuple
    binning: str
    epsilon: float
    strategy: str

    def to_dict(self) -> dict:
        """JSON-compatible form, without the histogram."""
        return {'capital': self.capital,
                'samples': self.samples,
                'null_samples': self.null_samples,
                'percent_profitable': self.percent_profitable,
                'binning': self.binning,
                'bins': len(self.counts),
                'epsilon': self.epsilon,
                'strategy': self.strategy}

    def histogram_frame(self) -> pd.DataFrame:
        """Histogram with columns ``lower,upper,count``."""
        return pd.DataFrame({'lower': self.bin_edges[:-1],
                             'upper': self.bin_edges[1:],
                             'count': self.counts})


@dataclass(frozen=True)
class CalibrationSweep:
    """Historical escape count envelopes over a grid of thresholds.

    Args:
        model (str): ``'A'`` or ``'B'``.
        rows (tuple): ``(delta0, delta1, n_lower, n_upper)`` per cell;
            ``delta1`` is None for Model B.

    """

    model: str
    rows: tuple

    def to_frame(self) -> pd.DataFrame:
        """Columns ``delta0[,delta1],n_lower,n_upper``."""
        df = pd.DataFrame(list(self.rows), columns=['delta0', 'delta1', 'n_lower', 'n_upper'])
        return df.drop(columns='delta1') if self.model == 'B' else df


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching a test window.

    Args:
        path (tuple): Matched node tuples ``(k1, k2, i, t, w)``.
        node_ids (tuple): Matched node ids (graph sources only).
        errors (tuple): One-step L1 errors, starting with the root.
        complete (bool): False if the source ran out of children
            before the test sequence ended.

    """

    path: tuple
    node_ids: tuple
    errors: tuple
    complete: bool = True

    @property
    def total(self) -> float:
        """Total accumulated error."""
        return float(sum(self.errors))


@dataclass(frozen=True)
class ConeCrossing:
    """Anchored cone-crossing times of a path.

    Indices that are not reached take the value ``N + 1``.

    Args:
        alpha (float): Lower cone slope.
        beta (float): Upper cone slope.
        rho (tuple): ``rho_0 .. rho_k``.
        tau (tuple): ``tau_0 .. tau_{k+1}``.
        count (int): Number of completed crossings ``k``.

    """

    alpha: float
    beta: float
    rho: tuple
    tau: tuple
    count: int

    @property
    def bound(self) -> float:
        """``(alpha / beta) ** (count + 1)``."""
        return (self.alpha / self.beta) ** (self.count + 1)


@dataclass(frozen=True)
class DubinPruner:
    """Construction-time pruning hook on cone-crossing counts.

    A path state is exhausted once ``(alpha / beta) ** count`` falls
    below ``threshold``.

    """

    alpha: float
    beta: float
    threshold: float

    def __post_init__(self):
        _validate_cone(self.alpha, self.beta)
        if not 0 < self.threshold <= 1:
            raise ValueError('threshold must lie in (0, 1].')

    def advance(self, state: tuple, f1: float, f2: float) -> tuple:
        """Advance a path state ``(count, phase, anchor)`` by one node."""
        return _advance(state, f1, f2, self.alpha, self.beta)[0]

    def exhausted(self, state: tuple) -> bool:
        """True if the state's crossing count exceeds the bound."""
        return (self.alpha / self.beta) ** state[0] < self.threshold

    def start(self, f1: float, f2: float) -> tuple:
        """State after the root node."""
        return self.advance((0, _RHO, f2), f1, f2)


def pnl(graph: TrajectoryGraph,
        pricing: PricingResult,
        V: float,
        n: int,
        seed: int,
        epsilon: float=0.0,
        workers: int=1) -> PnLReport:
    """Sample hedged portfolios and tabulate their profits.

    Each sample draws a uniform trajectory from its own random stream,
    spawned from ``seed``, so results do not depend on ``workers``.

    Args:
        graph (TrajectoryGraph): The priced graph.
        pricing (PricingResult): Supplies the hedges (super or under).
        V (float): Initial capital.
        n (int): Number of samples.
        seed (int): Master seed.
        epsilon (float, optional): Credit added to every profit.
            Defaults to 0.
        workers (int, optional): Sampling threads. Defaults to 1.

    :Profit:

        A sample is profitable if ``Pi_N - F + epsilon`` exceeds 1e-9.
        Samples through a null node are counted apart and excluded.

    Raises:
        DegenerateError: If the root bound is infinite.

    Returns:
        PnLReport: The report.

    """
    if pricing.degenerate:
        raise DegenerateError('Cannot run a P&L experiment on a degenerate root bound.')
    if n < 1:
        raise ValueError('n must be at least 1.')
    streams = np.random.SeedSequence(seed).spawn(n)

    def one(ss):
        trace = hedge_trace(pricing, sample_trajectory(graph, np.random.default_rng(ss)), V)
        return None if trace.null else trace.profit

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            profits = list(pool.map(one, streams))
    else:
        profits = list(map(one, streams))
    valid = np.array([p for p in profits if p is not None], dtype=float)
    nulls = n - len(valid)
    pct = 100.0 * float(np.mean(valid + epsilon > _TOL)) if len(valid) else 0.0
    edges, counts, rule = _histogram(valid)
    logger.info('P&L at V=%.10g (%s): %.2f%% profitable over %d samples (%d null).',
                V, pricing.direction, pct, len(valid), nulls)
    return PnLReport(capital=float(V),
                     samples=len(valid),
                     null_samples=nulls,
                     percent_profitable=pct,
                     bin_edges=tuple(edges),
                     counts=tuple(int(c) for c in counts),
                     binning=rule,
                     epsilon=float(epsilon),
                     strategy=pricing.direction)


def calibration_sweep(chart: DiscountedChart,
                      grid: TimeGrid,
                      disc: DiscretizationParams,
                      model: str,
                      deltas: list,
                      deltas1: list=None) -> CalibrationSweep:
    """Escape count envelopes at the window horizon over a threshold grid.

    Args:
        chart (DiscountedChart): Historical chart.
        grid (TimeGrid): Time grid.
        disc (DiscretizationParams): Grid steps.
        model (str): ``'A'`` or ``'B'``.
        deltas (list): Model B thresholds, or Model A ``delta0`` values.
        deltas1 (list, optional): Model A ``delta1`` values; the sweep
            covers the ``deltas x deltas1`` rectangle.

    Returns:
        CalibrationSweep: One ``(N_*, N^*)`` pair per grid cell.

    """
    model = str(model).upper()
    if not deltas or (model == 'A' and not deltas1):
        raise ValueError('The threshold range must not be empty.')
    if model == 'B':
        cells = [(d, None, EscapeParams('B', deltaB=d)) for d in deltas]
    else:
        cells = [(d0, d1, EscapeParams('A', delta0=d0, delta1=d1)) for d0 in deltas for d1 in deltas1]
    rows = []
    for d0, d1, params in cells:
        counts = escape_counts(chart, grid, params, disc)
        rows.append((float(d0), None if d1 is None else float(d1), min(counts), max(counts)))
    logger.info('Calibration sweep (model %s): %d cells over %d windows.', model, len(rows), len(counts))
    return CalibrationSweep(model=model, rows=tuple(rows))


def target_sequence(window: Window, params: EscapeParams) -> list:
    """Escape nodes ``(k1, k2, i, t, w)`` of a test window."""
    esc = escape_times(window, params)
    w = window.w
    v0 = esc.indices[0]
    return [(window.k1[v], window.k2[v], i, v - v0, w[v]) for i, v in enumerate(esc.indices)]


def match(source, window: Window, params: EscapeParams, disc: DiscretizationParams=None) -> MatchResult:
    """Match a test window greedily against a graph or an empirical set.

    At each step the child with the least one-step L1 error over
    ``(X1, X2, i, T, W)`` is chosen, ties going to the smallest
    ``(|m1|, |m2|, q, eta)`` increment. Prices are compared in
    numeraire units, time in grid steps.

    Args:
        source (TrajectoryGraph | EmpiricalSet): A graph, or the set
            whose free tree is rooted at the window's first sample.
        window (Window): Test window.
        params (EscapeParams): Escape thresholds used for the source.
        disc (DiscretizationParams, optional): Grid steps; required for
            an empirical set source.

    Raises:
        GraphError: If the source graph is empty.

    Returns:
        MatchResult: The matched path and its errors.

    """
    targets = target_sequence(window, params)
    src = _Source(source, targets[0], disc)
    cur = src.root()
    path, ids = [src.node(cur)], [cur] if src.is_graph else []
    errors = [src.error(cur, targets[0])]
    for tgt in targets[1:]:
        kids = src.children(cur)
        if not kids:
            return MatchResult(tuple(path), tuple(ids), tuple(errors), complete=False)
        cur = min(kids, key=lambda c: (src.error(c, tgt), src.step_key(cur, c)))
        path.append(src.node(cur))
        if src.is_graph:
            ids.append(cur)
        errors.append(src.error(cur, tgt))
    return MatchResult(tuple(path), tuple(ids), tuple(errors))


def match_exhaustive(source, window: Window, params: EscapeParams, disc: DiscretizationParams=None) -> MatchResult:
    """Best match over every path of the source (small fixtures only).

    Paths are compared on total error among those of the greatest
    reachable length, up to the length of the test sequence.

    """
    targets = target_sequence(window, params)
    src = _Source(source, targets[0], disc)
    best = None
    stack = [(src.root(),)]
    while stack:
        seq = stack.pop()
        kids = src.children(seq[-1]) if len(seq) < len(targets) else ()
        if kids:
            stack.extend(seq + (c,) for c in kids)
            continue
        errs = tuple(src.error(c, t) for c, t in zip(seq, targets))
        key = (-len(seq), sum(errs))
        if best is None or key < best[0]:
            best = (key, seq, errs)
    _, seq, errs = best
    return MatchResult(path=tuple(src.node(c) for c in seq),
                       node_ids=tuple(seq) if src.is_graph else (),
                       errors=errs,
                       complete=len(seq) == len(targets))


def cone_crossings(path: list, alpha: float, beta: float) -> ConeCrossing:
    """Count anchored cone-crossings along a path.

    Starting from ``tau_0 = 0``, ``rho_k`` is the earliest index at or
    after ``tau_k`` with ``f2[tau_k] / f1[rho_k] <= alpha``, and
    ``tau_{k+1}`` the earliest index at or after ``rho_k`` with
    ``f2[tau_{k+1}] / f1[rho_k] >= beta``.

    Args:
        path (list): ``(f1, f2)`` pairs with ``f1 > 0`` and ``f2 >= 0``.
        alpha (float): Lower slope, ``0 <= alpha < beta``.
        beta (float): Upper slope.

    Raises:
        ValueError: On an invalid cone or non-positive ``f1``.

    Returns:
        ConeCrossing: Crossing times and the completed count.

    """
    _validate_cone(alpha, beta)
    if not path:
        raise ValueError('The path must not be empty.')
    end = len(path)
    rho, tau = [], [0]
    state = (0, _RHO, path[0][1])
    for n, (f1, f2) in enumerate(path):
        state, events = _advance(state, f1, f2, alpha, beta)
        for e in events:
            (rho if e == _RHO else tau).append(n)
    count = len(tau) - 1
    rho += [end] * (count + 1 - len(rho))
    tau += [end] * (count + 2 - len(tau))
    return ConeCrossing(alpha=alpha, beta=beta, rho=tuple(rho), tau=tuple(tau), count=count)


def crossing_indicator(k: int, alpha: float, beta: float) -> Payoff:
    """Path payoff ``1{tau_{k+1} completed}`` on ``(X1, X2)`` prices."""
    def func(graph, path):
        pts = [(graph.price(n, 1), graph.price(n, 2)) for n in path]
        return 1.0 if cone_crossings(pts, alpha, beta).count >= k + 1 else 0.0
    return Payoff(func=func, path_dependent=True, name=f'crossings>{k}')


def dubin_check(tree: TrajectoryGraph, alpha: float, beta: float, k: int) -> tuple:
    """Superhedge the crossing indicator by trading asset 2.

    Args:
        tree (TrajectoryGraph): A tree mode graph.
        alpha (float): Lower slope.
        beta (float): Upper slope.
        k (int): Crossing count; the indicator is of ``tau_{k+1}``.

    Raises:
        DegenerateError: If the root bound is infinite.

    Returns:
        tuple: ``(lhs, rhs)`` with ``lhs`` the superhedging bound of the
        indicator and ``rhs = (alpha / beta) ** (k + 1)``.

    """
    _validate_cone(alpha, beta)
    res = price(tree, crossing_indicator(k, alpha, beta), traded=2, direction=SUPER)
    if res.degenerate:
        raise DegenerateError('The crossing indicator has a degenerate bound.')
    return res.root, (alpha / beta) ** (k + 1)


#%% Helpers

class _Source:
    """Uniform view of a graph, or of the free tree of an empirical set."""

    def __init__(self, source, root: tuple, disc: DiscretizationParams):
        if isinstance(source, TrajectoryGraph):
            if not len(source):
                raise GraphError('Cannot match against an empty graph.')
            self.is_graph = True
            self._graph = source
            disc = source.disc
        elif isinstance(source, EmpiricalSet):
            if disc is None:
                raise ValueError('Grid steps are required to match against an empirical set.')
            self.is_graph = False
            self._incs = [inc for inc in source if inc.q > 0]
            self._root = tuple(root[:2]) + (0, 0, 0)
        else:
            raise TypeError(f'Cannot match against {type(source).__name__}.')
        self._d = (float(disc.dhat1), float(disc.dhat2))

    def children(self, cur) -> list:
        if self.is_graph:
            return list(self._graph.children(cur))
        k1, k2, i, t, w = cur
        return [(k1 + c.m1, k2 + c.m2, i + 1, t + c.q, w + c.eta) for c in self._incs]

    def error(self, cur, tgt: tuple) -> float:
        n = self.node(cur)
        return (abs(n[0] - tgt[0]) * self._d[0] + abs(n[1] - tgt[1]) * self._d[1]
                + sum(abs(a - b) for a, b in zip(n[2:], tgt[2:])))

    def node(self, cur) -> tuple:
        return self._graph.nodes[cur].tuple if self.is_graph else cur

    def root(self):
        return 0 if self.is_graph else self._root

    def step_key(self, cur, child) -> tuple:
        a, b = self.node(cur), self.node(child)
        return (abs(b[0] - a[0]), abs(b[1] - a[1]), b[3] - a[3], b[4] - a[4])


def _advance(state: tuple, f1: float, f2: float, alpha: float, beta: float) -> tuple:
    """Process one index of a path.

    Returns:
        tuple: The new state and the list of events (``'rho'`` or
        ``'tau'``) occurring at this index, in order.

    """
    if f1 <= 0:
        raise ValueError('f1 must be strictly positive.')
    if f2 < 0:
        raise ValueError('f2 must be non-negative.')
    count, phase, anchor = state
    events = []
    while True:
        if phase == _RHO and anchor / f1 <= alpha:
            phase, anchor = _TAU, f1
        elif phase == _TAU and f2 / anchor >= beta:
            count, phase, anchor = count + 1, _RHO, f2
        else:
            return (count, phase, anchor), events
        events.append(_TAU if phase == _RHO else _RHO)


def _histogram(values: np.ndarray) -> tuple:
    """Freedman-Diaconis histogram with between 20 and 1000 bins."""
    if not len(values):
        return np.zeros(1), np.zeros(0, dtype=int), 'empty'
    edges = np.histogram_bin_edges(values, bins='fd')
    rule = 'fd'
    if len(edges) - 1 < _MIN_BINS:
        edges, rule = np.histogram_bin_edges(values, bins=_MIN_BINS), f'fixed-{_MIN_BINS}'
    elif len(edges) - 1 > _MAX_BINS:
        edges, rule = np.histogram_bin_edges(values, bins=_MAX_BINS), f'fixed-{_MAX_BINS}'
    counts, edges = np.histogram(values, bins=edges)
    return edges, counts, rule


def _validate_cone(alpha: float, beta: float):
    if not 0 <= alpha < beta:
        raise ValueError('The cone requires 0 <= alpha < beta.')
