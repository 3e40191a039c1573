#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Delta-escape detection and the empirical increment set.

            An escape is the first time the discounted price pair moves
            beyond a threshold from its last anchor. Two threshold
            forms are supported:

                - Model A: an absolute move of asset 1 *or* a relative
                  move of asset 2.
                - Model B: a relative move of either asset.

            Consecutive escapes of every historical window yield integer
            increments ``(m1, m2, 1, q, eta)`` which, deduplicated,
            form the empirical set used to grow trajectory graphs.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

"""
# pylint: disable=invalid-name

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import pandas as pd

from .geometry import convex_hull
from .marketdata import (DiscountedChart,
                         DiscretizationParams,
                         TimeGrid,
                         Window,
                         as_fraction,
                         windows)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EscapeParams:
    """Escape thresholds.

    Args:
        model (str): ``'A'`` or ``'B'``.
        delta0 (Fraction, optional): Model A absolute threshold on x1.
        delta1 (Fraction, optional): Model A relative threshold on x2.
        deltaB (Fraction, optional): Model B relative threshold.

    """

    model: str = 'B'
    delta0: Fraction = None
    delta1: Fraction = None
    deltaB: Fraction = None

    def __post_init__(self):
        model = str(self.model).upper()
        object.__setattr__(self, 'model', model)
        if model == 'A':
            names = ('delta0', 'delta1')
        elif model == 'B':
            names = ('deltaB',)
        else:
            raise ValueError(f"Invalid escape model '{self.model}'; expected 'A' or 'B'.")
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ValueError(f'Model {model} requires {name}.')
            value = as_fraction(value)
            if value <= 0:
                raise ValueError(f'{name} must be strictly positive.')
            object.__setattr__(self, name, value)

    def escaped(self, anchor: tuple, point: tuple) -> bool:
        """Test the escape condition of ``point`` against ``anchor``.

        Args:
            anchor (tuple): ``(x1, x2)`` at the previous escape.
            point (tuple): ``(x1, x2)`` at the candidate time.

        Returns:
            bool: True if the point has escaped.

        """
        a1, a2 = anchor
        x1, x2 = point
        if self.model == 'A':
            if abs(x1 - a1) >= self.delta0:
                return True
            return a2 != 0 and abs(x2 - a2) / abs(a2) >= self.delta1
        rel1 = abs(x1 - a1) / abs(a1) if a1 else None
        rel2 = abs(x2 - a2) / abs(a2) if a2 else None
        return any(r is not None and r >= self.deltaB for r in (rel1, rel2))


@dataclass(frozen=True)
class EscapeTimes:
    """Escape times of a window.

    Args:
        times (tuple): Grid times ``t_0 < t_1 < ... < t_N``, with
            ``t_0`` the window start.
        indices (tuple): The matching sample indices within the window.

    """

    times: tuple
    indices: tuple

    @property
    def count(self) -> int:
        """Number of escapes ``N``."""
        return len(self.times) - 1

    def count_until(self, rho: int) -> int:
        """Number of escapes at or before offset ``rho`` from the start."""
        t0 = self.times[0]
        return sum(1 for t in self.times[1:] if t - t0 <= rho)


@dataclass(frozen=True, order=True)
class EmpiricalIncrement:
    """One escape-to-escape transition on the grid.

    Args:
        m1 (int): Grid move of asset 1.
        m2 (int): Grid move of asset 2.
        q (int): Elapsed time in grid steps.
        eta (int): Accumulated variation over the transition.

    """

    m1: int
    m2: int
    q: int
    eta: int

    @property
    def one(self) -> int:
        """Rebalance index increment, always 1."""
        return 1

    @property
    def key(self) -> tuple:
        """The ``(|m1|, |m2|, q, eta)`` tie-breaking key."""
        return (abs(self.m1), abs(self.m2), self.q, self.eta)

    def as_tuple(self) -> tuple:
        """The full 5-tuple ``(m1, m2, 1, q, eta)``."""
        return (self.m1, self.m2, 1, self.q, self.eta)


SENTINEL = EmpiricalIncrement(0, 0, 0, 0)


@dataclass(frozen=True)
class EmpiricalSet:
    """Deduplicated empirical increments with per-window provenance.

    Args:
        increments (tuple): Sorted unique increments.
        provenance (tuple): One :class:`collections.Counter` per window,
            counting that window's increments.

    """

    increments: tuple
    provenance: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.increments:
            raise ValueError('An empirical set cannot be empty.')

    def __iter__(self):
        return iter(self.increments)

    def __len__(self):
        return len(self.increments)

    @classmethod
    def from_increments(cls, per_window: list) -> EmpiricalSet:
        """Build the set from lists of increments, one list per window."""
        prov = tuple(Counter(incs) for incs in per_window)
        uniq = set().union(*prov) if prov else set()
        return cls(increments=tuple(sorted(uniq)), provenance=prov)

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> EmpiricalSet:
        """Rebuild a set from the frame produced by :meth:`to_frame`.

        Provenance is reduced to a single counter holding the totals.

        """
        counts = Counter()
        n = df['count'] if 'count' in df.columns else pd.Series(1, index=df.index)
        for m1, m2, q, eta, c in zip(df['m1'], df['m2'], df['q'], df['eta'], n):
            counts[EmpiricalIncrement(int(m1), int(m2), int(q), int(eta))] += int(c)
        return cls(increments=tuple(sorted(counts)), provenance=(counts,))

    @property
    def counts(self) -> Counter:
        """Total count of each increment over all windows."""
        return sum(self.provenance, Counter())

    def to_frame(self) -> pd.DataFrame:
        """Tabulate the set with columns ``m1,m2,one,q,eta,count``."""
        counts = self.counts
        return pd.DataFrame([(*inc.as_tuple(), counts.get(inc, 0)) for inc in self.increments],
                            columns=['m1', 'm2', 'one', 'q', 'eta', 'count'])

    def vertices_only(self) -> EmpiricalSet:
        """Keep the increments whose ``(m1, m2)`` is a hull vertex."""
        verts = set(hull2d(self))
        keep = tuple(inc for inc in self.increments if (inc.m1, inc.m2) in verts)
        prov = tuple(Counter({k: v for k, v in c.items() if k in keep}) for c in self.provenance)
        return EmpiricalSet(increments=keep, provenance=prov)


def escape_times(window: Window, params: EscapeParams) -> EscapeTimes:
    """Compute the escape times of a window.

    Each escape is the earliest sample after the previous escape at
    which the escape condition holds against the previous escape's
    prices.

    Args:
        window (Window): Window, evaluated on its real valued prices.
        params (EscapeParams): Escape thresholds.

    Returns:
        EscapeTimes: Times ``t_0 .. t_N``; ``N = 0`` when nothing escapes.

    """
    idx = [0]
    anchor = (window.x1[0], window.x2[0])
    for v in range(1, len(window)):
        point = (window.x1[v], window.x2[v])
        if params.escaped(anchor, point):
            idx.append(v)
            anchor = point
    return EscapeTimes(times=tuple(window.time(v) for v in idx), indices=tuple(idx))


def window_increments(window: Window, times: EscapeTimes) -> list:
    """Grid increments between consecutive escapes of a window.

    Args:
        window (Window): The window.
        times (EscapeTimes): Escape times computed on this window.

    Returns:
        list: One :class:`EmpiricalIncrement` per escape; the sentinel
        alone when the window has no escape.

    """
    if not times.count:
        return [SENTINEL]
    w = window.w
    ix = times.indices
    return [EmpiricalIncrement(m1=window.k1[b] - window.k1[a],
                               m2=window.k2[b] - window.k2[a],
                               q=b - a,
                               eta=w[b] - w[a])
            for a, b in zip(ix, ix[1:])]


def build_NE(chart: DiscountedChart,
             grid: TimeGrid,
             params: EscapeParams,
             disc: DiscretizationParams) -> EmpiricalSet:
    """Collect the empirical increment set over all windows of a chart.

    Args:
        chart (DiscountedChart): Historical chart.
        grid (TimeGrid): Time grid.
        params (EscapeParams): Escape thresholds.
        disc (DiscretizationParams): Grid steps.

    Returns:
        EmpiricalSet: Union of the per-window increments.

    """
    return empirical_set(windows(chart, grid, disc), params)


def empirical_set(wins: list, params: EscapeParams) -> EmpiricalSet:
    """Collect the empirical increment set over the given windows."""
    per_window = [window_increments(win, escape_times(win, params)) for win in wins]
    ne = EmpiricalSet.from_increments(per_window)
    logger.info('Empirical set built from %d windows: |N_E| = %d', len(wins), len(ne))
    return ne


def hull2d(ne: EmpiricalSet) -> list:
    """Convex hull of the ``(m1, m2)`` moves of an empirical set.

    Returns:
        list: Vertices, counter-clockwise, collinear points excluded.

    """
    return convex_hull((inc.m1, inc.m2) for inc in ne)


def hull_frame(vertices: list) -> pd.DataFrame:
    """Tabulate hull vertices with columns ``m1,m2``."""
    return pd.DataFrame(list(vertices), columns=['m1', 'm2'])


def escape_counts(chart: DiscountedChart,
                  grid: TimeGrid,
                  params: EscapeParams,
                  disc: DiscretizationParams,
                  rho: int=None) -> list:
    """Escape counts ``N(x, I, rho)`` of every window of a chart.

    Args:
        rho (int, optional): Offset from the window start in grid steps.
            Defaults to the window horizon.

    Returns:
        list: One count per window, oldest window first.

    """
    rho = grid.steps_per_window if rho is None else rho
    out = [escape_times(win, params).count_until(rho * grid.delta) for win in windows(chart, grid, disc)]
    logger.debug('Escape counts at rho=%d: %s', rho, out)
    return out
