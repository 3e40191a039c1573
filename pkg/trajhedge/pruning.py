#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Worst-case pruning tables and candidate admissibility.

            Historical windows define min/max envelopes for the escape
            count, elapsed time, accumulated variation and relative
            normed price change, indexed by time, by rebalance index or
            by variation. A candidate node is admissible only if it lies
            within every envelope.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

:Note:      All table indices and values are integers (time in grid
            steps, variation in grid units) except the relative normed
            change, which is evaluated on grid prices by
            :func:`relative_norm` for both the tables and the candidates.
            Tabulated norms are measured from the window start and
            candidate norms from the graph root, so a replayed
            historical path reproduces the tabulated values bit for bit.

"""
# pylint: disable=invalid-name

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import pandas as pd

from .escapes import EscapeParams, escape_times
from .marketdata import DiscountedChart, DiscretizationParams, TimeGrid, windows

logger = logging.getLogger(__name__)

ALL_CONSTRAINTS = (1, 2, 3, 4, 5, 6, 7)
_TOL = 1e-12


class Admissibility(NamedTuple):
    """Outcome of an admissibility test."""

    ok: bool
    reason: str = None

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class WindowSubsets:
    """Window subsets over which the i- and w-indexed envelopes are taken.

    Args:
        by_i (dict): ``i`` -> indices of windows with at least ``i``
            escapes.
        by_w (dict): ``w`` -> indices of windows attaining variation
            ``w`` at some time.

    """

    by_i: dict
    by_w: dict


@dataclass(frozen=True)
class PruningTables:
    """Historical min/max envelopes.

    Every table maps an index onto a closed ``(lower, upper)`` pair.

    Args:
        steps (int): Window length in grid steps (``M_T``).
        disc (DiscretizationParams): Grid steps, used for normed changes.
        x_norm (dict): ``i`` -> relative normed change bounds.
        n_of_t (dict): ``rho`` -> escape count bounds.
        t_of_i (dict): ``i`` -> elapsed time bounds.
        w_of_t (dict): ``rho`` -> variation bounds.
        w_of_i (dict): ``i`` -> variation bounds.
        n_of_w (dict): ``w`` -> escape count bounds.
        t_of_w (dict): ``w`` -> elapsed time bounds.
        w_star (int): Largest accumulated variation seen.

    """

    steps: int
    disc: DiscretizationParams
    x_norm: dict
    n_of_t: dict
    t_of_i: dict
    w_of_t: dict
    w_of_i: dict
    n_of_w: dict
    t_of_w: dict
    w_star: int
    _wkeys: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, '_wkeys', tuple(sorted(self.n_of_w)))

    @property
    def i_star(self) -> int:
        """Largest historical escape count."""
        return max(self.t_of_i)

    def lookup_w(self, table: dict, w: int) -> tuple:
        """Look up a w-indexed table.

        Unattained ``w`` up to ``w*`` use the nearest attained value
        below; beyond ``w*`` the bounds are ``(0, 0)``.

        Returns:
            tuple: The ``(lower, upper)`` pair, or None when no attained
            value lies below ``w``.

        """
        if w > self.w_star:
            return (0, 0)
        pos = bisect.bisect_right(self._wkeys, w)
        if not pos:
            return None
        return table[self._wkeys[pos - 1]]

    def to_dict(self) -> dict:
        """Serialize the tables to a JSON-compatible dictionary."""
        def enc(table):
            return {str(k): list(v) for k, v in table.items()}
        return {'steps': self.steps,
                'dhat1': str(self.disc.dhat1),
                'dhat2': str(self.disc.dhat2),
                'w_star': self.w_star,
                **{name: enc(getattr(self, name)) for name in _TABLES}}

    @classmethod
    def from_dict(cls, d: dict) -> PruningTables:
        """Rebuild the tables from :meth:`to_dict` output."""
        def dec(table, cast):
            return {int(k): (cast(v[0]), cast(v[1])) for k, v in table.items()}
        return cls(steps=int(d['steps']),
                   disc=DiscretizationParams(d['dhat1'], d['dhat2']),
                   w_star=int(d['w_star']),
                   **{name: dec(d[name], float if name == 'x_norm' else int) for name in _TABLES})

    def to_frames(self) -> dict:
        """One frame per table, with columns ``index,lower,upper``."""
        return {name: pd.DataFrame([(k, *v) for k, v in sorted(getattr(self, name).items())],
                                   columns=['index', 'lower', 'upper'])
                for name in _TABLES}


_TABLES = ('x_norm', 'n_of_t', 't_of_i', 'w_of_t', 'w_of_i', 'n_of_w', 't_of_w')


def relative_norm(k1: int, k2: int, r1: int, r2: int, disc: DiscretizationParams) -> float:
    """Relative normed change of grid prices ``(k1, k2)`` from ``(r1, r2)``.

    Returns:
        float: ``|x - r| / |r|`` with the Euclidean norm on prices.

    """
    d1, d2 = float(disc.dhat1), float(disc.dhat2)
    num = math.hypot((k1 - r1) * d1, (k2 - r2) * d2)
    den = math.hypot(r1 * d1, r2 * d2)
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def build_tables(chart: DiscountedChart,
                 grid: TimeGrid,
                 eparams: EscapeParams,
                 disc: DiscretizationParams) -> PruningTables:
    """Build the pruning tables from every window of a chart.

    Args:
        chart (DiscountedChart): Historical chart.
        grid (TimeGrid): Time grid.
        eparams (EscapeParams): Escape thresholds.
        disc (DiscretizationParams): Grid steps.

    Returns:
        PruningTables: The populated tables.

    """
    return tables_from_windows(windows(chart, grid, disc), grid, eparams, disc)


def tables_from_windows(wins: list,
                        grid: TimeGrid,
                        eparams: EscapeParams,
                        disc: DiscretizationParams) -> PruningTables:
    """Build the pruning tables from a list of windows.

    :Tables:

        - Time-indexed (every window): escape count and variation at
          each ``rho`` in ``0 .. M_T``.
        - Index-indexed (windows of ``by_i[i]``): relative normed
          change, elapsed time and variation at the ``i``-th escape.
        - Variation-indexed (windows of ``by_w[w]``): escape count and
          elapsed time at every ``rho`` where the variation equals
          ``w``.

    """
    steps = grid.steps_per_window
    escs = [escape_times(win, eparams) for win in wins]
    counts = [_counts_by_step(esc.indices, steps) for esc in escs]
    subsets = window_subsets(wins, escs)
    n_of_t, w_of_t = {}, {}
    x_norm, t_of_i, w_of_i = {}, {}, {}
    n_of_w, t_of_w = {}, {}
    for win, cnt in zip(wins, counts):
        for rho in range(steps + 1):
            _widen(n_of_t, rho, cnt[rho])
            _widen(w_of_t, rho, win.w[rho])
    for i, members in subsets.by_i.items():
        for n in members:
            win, idx = wins[n], escs[n].indices
            v0, v = idx[0], idx[i]
            _widen(x_norm, i, relative_norm(win.k1[v], win.k2[v], win.k1[v0], win.k2[v0], disc))
            _widen(t_of_i, i, v - v0)
            _widen(w_of_i, i, win.w[v])
    for w, members in subsets.by_w.items():
        for n in members:
            for rho, wr in enumerate(wins[n].w[:steps + 1]):
                if wr == w:
                    _widen(n_of_w, w, counts[n][rho])
                    _widen(t_of_w, w, rho)
    tables = PruningTables(steps=steps,
                           disc=disc,
                           x_norm=x_norm,
                           n_of_t=n_of_t,
                           t_of_i=t_of_i,
                           w_of_t=w_of_t,
                           w_of_i=w_of_i,
                           n_of_w=n_of_w,
                           t_of_w=t_of_w,
                           w_star=max(w_of_t[steps][1], 0) if wins else 0)
    logger.info('Pruning tables built from %d windows: i* = %d, w* = %d',
                len(wins), tables.i_star, tables.w_star)
    return tables


def window_subsets(wins: list, escs: list) -> WindowSubsets:
    """Group window indices by escape count and by attained variation.

    Args:
        wins (list): Windows.
        escs (list): The :class:`EscapeTimes` of each window.

    """
    by_i, by_w = {}, {}
    for n, (win, esc) in enumerate(zip(wins, escs)):
        for i in range(esc.count + 1):
            by_i.setdefault(i, []).append(n)
        for w in sorted(set(win.w)):
            by_w.setdefault(w, []).append(n)
    return WindowSubsets(by_i={k: tuple(v) for k, v in by_i.items()},
                         by_w={k: tuple(v) for k, v in by_w.items()})


def admissible(parent, candidate, tables: PruningTables, root, enabled: tuple=ALL_CONSTRAINTS) -> Admissibility:
    """Test a candidate node against the pruning tables.

    Args:
        parent (GraphNode): Node the candidate was generated from.
        candidate (GraphNode): Candidate child node.
        tables (PruningTables): Historical envelopes.
        root (GraphNode): Initial node of the graph; the relative
            normed change is measured from its prices.
        enabled (tuple, optional): Constraint numbers to enforce.
            Defaults to all seven. The horizon is always enforced.

    :Constraints:

        1. Relative normed change from the root within ``x_norm[i+1]``.
        2. ``i+1`` within ``n_of_t[T]``.
        3. ``i+1`` within ``n_of_w[W]``.
        4. ``T`` within ``t_of_i[i+1]``.
        5. ``T`` within ``t_of_w[W]``.
        6. ``W`` within ``w_of_i[i+1]``.
        7. ``W`` within ``w_of_t[T]``.

    Returns:
        Admissibility: Truthy if every enabled constraint holds,
        otherwise falsy with the first failure as the reason.

    """
    if candidate.i != parent.i + 1:
        raise ValueError('Candidate is not a child of the given parent.')
    i, t, w = candidate.i, candidate.t_steps, candidate.w
    if t > tables.steps:
        return Admissibility(False, 'horizon')
    xn = relative_norm(candidate.k1, candidate.k2, root.k1, root.k2, tables.disc)
    checks = {1: (xn, tables.x_norm.get(i)),
              2: (i, tables.n_of_t.get(t)),
              3: (i, tables.lookup_w(tables.n_of_w, w)),
              4: (t, tables.t_of_i.get(i)),
              5: (t, tables.lookup_w(tables.t_of_w, w)),
              6: (w, tables.w_of_i.get(i)),
              7: (w, tables.w_of_t.get(t))}
    for n in enabled:
        value, bounds = checks[n]
        if bounds is None or not _within(value, bounds):
            return Admissibility(False, f'constraint {n} ({_TABLE_OF[n]})')
    return Admissibility(True)


_TABLE_OF = {1: 'x_norm', 2: 'n_of_t', 3: 'n_of_w', 4: 't_of_i', 5: 't_of_w', 6: 'w_of_i', 7: 'w_of_t'}


#%% Helpers

def _counts_by_step(indices: tuple, steps: int) -> list:
    """Escape count at every step ``0 .. steps`` of a window."""
    out = [0] * (steps + 1)
    for v in indices[1:]:
        out[v] += 1
    for rho in range(1, steps + 1):
        out[rho] += out[rho - 1]
    return out


def _widen(table: dict, key: int, value):
    """Widen the ``(lower, upper)`` cell at ``key`` to include ``value``."""
    if key in table:
        lo, hi = table[key]
        table[key] = (min(lo, value), max(hi, value))
    else:
        table[key] = (value, value)


def _within(value, bounds: tuple) -> bool:
    lo, hi = bounds
    if isinstance(value, float):
        return lo - _TOL <= value <= hi + _TOL
    return lo <= value <= hi
