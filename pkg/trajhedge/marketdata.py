#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Market data ingestion for the trajectory models.

            Price charts for three assets (the numeraire plus the two
            modelled assets) are loaded and validated, discounted by the
            numeraire, cut into disjoint time windows and snapped onto
            the ``(k1, k2)`` integer grid. A seeded geometric Brownian
            motion simulator provides synthetic charts in the same form.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

:Note:      Discounted prices are held as exact rationals
            (:class:`fractions.Fraction`) so discounting can be reversed
            exactly and grid snapping has no floating point ties.

"""
# pylint: disable=invalid-name

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Sequence

import numpy as np
import pandas as pd

from .exceptions import ChartError

logger = logging.getLogger(__name__)

_COLUMNS = ('timestamp', 's0', 's1', 's2')


def as_fraction(value) -> Fraction:
    """Convert a number (or numeric string) to an exact rational.

    Floats are read through their shortest decimal representation, so
    ``0.01`` becomes exactly ``1/100``.

    Args:
        value (int | float | str | Fraction): Value to convert.

    Returns:
        Fraction: The rational value.

    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    return Fraction(str(value).strip())


def round_half_away(value: Fraction) -> int:
    """Round a rational to the nearest integer, ties away from zero.

    Args:
        value (Fraction): Value to round.

    Returns:
        int: The rounded value.

    """
    n = math.floor(abs(value) + Fraction(1, 2))
    return n if value >= 0 else -n


@dataclass(frozen=True)
class TimeGrid:
    """Fixed time grid.

    Args:
        delta (int): Smallest time resolution, in minutes.
        steps_per_window (int): Number of steps per window (``M_T``).

    """

    delta: int = 3
    steps_per_window: int = 130

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError('delta must be positive.')
        if self.steps_per_window < 1:
            raise ValueError('steps_per_window must be at least 1.')

    @property
    def window_length(self) -> int:
        """Window length ``T = M_T * delta`` in minutes."""
        return self.steps_per_window * self.delta

    @property
    def samples_per_window(self) -> int:
        """Number of samples in a window (``M_T + 1``)."""
        return self.steps_per_window + 1


@dataclass(frozen=True)
class DiscretizationParams:
    """Grid steps for the two modelled assets, in numeraire units.

    Args:
        dhat1 (Fraction): Grid step for the first asset.
        dhat2 (Fraction): Grid step for the second asset.

    """

    dhat1: Fraction = Fraction(1, 100)
    dhat2: Fraction = Fraction(1, 100)

    def __post_init__(self):
        object.__setattr__(self, 'dhat1', as_fraction(self.dhat1))
        object.__setattr__(self, 'dhat2', as_fraction(self.dhat2))
        if self.dhat1 <= 0 or self.dhat2 <= 0:
            raise ValueError('Discretization steps must be positive.')

    def snap(self, x: Fraction, asset: int) -> int:
        """Return the grid index ``k`` with ``round(x) = k * dhat``.

        Args:
            x (Fraction): Discounted price.
            asset (int): Modelled asset number, 1 or 2.

        Returns:
            int: Grid index, rounded half away from zero.

        """
        return round_half_away(x / self.step(asset))

    def step(self, asset: int) -> Fraction:
        """Accessor for the grid step of asset 1 or 2."""
        return self.dhat1 if asset == 1 else self.dhat2


@dataclass(frozen=True)
class UndiscountedChart:
    """Quoted prices of the numeraire (``s0``) and two assets.

    Timestamps are integer minutes, ascending, with the most recent
    sample at 0.

    """

    timestamps: tuple
    s0: tuple
    s1: tuple
    s2: tuple

    def __post_init__(self):
        n = len(self.timestamps)
        if not len(self.s0) == len(self.s1) == len(self.s2) == n:
            raise ChartError('price series lengths differ')

    def __len__(self):
        return len(self.timestamps)

    def series(self, asset: int) -> tuple:
        """Accessor for the price series of asset 0, 1 or 2."""
        return (self.s0, self.s1, self.s2)[asset]


@dataclass(frozen=True)
class DiscountedChart:
    """Prices of the two modelled assets in numeraire units.

    Args:
        timestamps (tuple): Grid times, as on the source chart.
        x1 (tuple): First modelled asset, as rationals.
        x2 (tuple): Second modelled asset, as rationals.
        numeraire (int): Index of the source asset used as numeraire.

    """

    timestamps: tuple
    x1: tuple
    x2: tuple
    numeraire: int = 0

    def __len__(self):
        return len(self.timestamps)

    @property
    def assets(self) -> tuple:
        """Source indices of the two modelled assets, in order."""
        return tuple(j for j in range(3) if j != self.numeraire)


@dataclass(frozen=True)
class Window:
    """A window of ``M_T + 1`` consecutive samples.

    Both the real valued (``x1``, ``x2``) and the grid (``k1``, ``k2``)
    forms are held; escapes are detected on the former, increments are
    measured on the latter.

    """

    t0: int
    delta: int
    x1: tuple
    x2: tuple
    k1: tuple
    k2: tuple

    def __len__(self):
        return len(self.k1)

    @cached_property
    def w(self) -> tuple:
        """Accumulated variation at every sample of the window."""
        steps = (np.abs(np.diff(np.asarray(self.k1, dtype=np.int64)))
                 + np.abs(np.diff(np.asarray(self.k2, dtype=np.int64))))
        return (0,) + tuple(int(v) for v in np.cumsum(steps))

    def index_of(self, t: int) -> int:
        """Convert a grid time into a sample index.

        Raises:
            ValueError: If ``t`` is not a grid time of this window.

        """
        v, r = divmod(t - self.t0, self.delta)
        if r or not 0 <= v < len(self):
            raise ValueError(f't={t} is outside the window starting at {self.t0}.')
        return v

    def time(self, v: int) -> int:
        """Grid time of sample index ``v``."""
        return self.t0 + v * self.delta


def load_chart(path: str, schema: dict=None, delta: int=3, timestamps: str='minutes') -> UndiscountedChart:
    """Load and validate a three-asset price chart from CSV.

    Args:
        path (str): Path to the CSV file.
        schema (dict, optional): Mapping of the canonical column names
            (``timestamp``, ``s0``, ``s1``, ``s2``) onto the file's
            column names. Defaults to the identity mapping.
        delta (int, optional): Grid spacing in minutes. Defaults to 3.
        timestamps (str, optional): Either ``'minutes'`` (integers) or
            ``'iso'`` (ISO-8601 strings). Defaults to ``'minutes'``.

    :Validation:

        - Every mapped column is present.
        - Every price parses and is strictly positive.
        - Timestamps are strictly increasing with uniform spacing
          ``delta``.

    Rows are sorted ascending and timestamps are shifted so the most
    recent sample is at time 0.

    Raises:
        FileNotFoundError: If the file does not exist.
        ChartError: On any validation failure, naming the 0-based row.

    Returns:
        UndiscountedChart: The validated chart.

    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f'Chart file not found: {path}')
    schema = {**{c: c for c in _COLUMNS}, **(schema or {})}
    df = pd.read_csv(path, dtype=str, comment='#', skipinitialspace=True)
    for col in _COLUMNS:
        if schema[col] not in df.columns:
            raise ChartError(f"missing column '{schema[col]}'")
    df = df[[schema[c] for c in _COLUMNS]]
    df.columns = list(_COLUMNS)
    if df.empty:
        raise ChartError('insufficient data')
    ts = _parse_timestamps(df['timestamp'], mode=timestamps)
    order = np.argsort(ts, kind='stable')
    # Sorted rows keep their file index for error reporting.
    df = df.iloc[order]
    rows = df.index.to_numpy()
    ts = ts[order]
    prices = {}
    for col in _COLUMNS[1:]:
        prices[col] = _parse_prices(df[col], col=col)
    steps = np.diff(ts)
    for n, step in enumerate(steps, start=1):
        if step != delta:
            raise ChartError('time-grid gap' if step > delta else 'irregular time grid', row=int(rows[n]))
    ts = ts - ts[-1]
    logger.debug('Loaded %d rows from %s', len(ts), path)
    return UndiscountedChart(timestamps=tuple(int(t) for t in ts),
                             s0=prices['s0'],
                             s1=prices['s1'],
                             s2=prices['s2'])


def discount(chart: UndiscountedChart, numeraire: int=0) -> DiscountedChart:
    """Express the two non-numeraire assets in numeraire units.

    Args:
        chart (UndiscountedChart): Source chart.
        numeraire (int, optional): Index of the numeraire asset, in
            ``{0, 1, 2}``. Defaults to 0.

    Raises:
        ChartError: If the numeraire is zero at any time.

    Returns:
        DiscountedChart: Exact ratios ``x^j = s^j / s^numeraire`` for
        the two remaining assets, ordered by their original index.

    """
    if numeraire not in (0, 1, 2):
        raise ValueError(f'Invalid numeraire index: {numeraire}')
    base = chart.series(numeraire)
    for row, s in enumerate(base):
        if s == 0:
            raise ChartError('zero numeraire value', row=row)
    a, b = (j for j in range(3) if j != numeraire)
    x1 = tuple(as_fraction(s) / as_fraction(n) for s, n in zip(chart.series(a), base))
    x2 = tuple(as_fraction(s) / as_fraction(n) for s, n in zip(chart.series(b), base))
    return DiscountedChart(timestamps=chart.timestamps, x1=x1, x2=x2, numeraire=numeraire)


def windows(chart: DiscountedChart, grid: TimeGrid, params: DiscretizationParams) -> list:
    """Cut a discounted chart into disjoint windows and snap to the grid.

    Windows hold ``M_T + 1`` samples each and are aligned from the most
    recent sample backward; a partial window at the old end of the
    chart is discarded.

    Args:
        chart (DiscountedChart): Source chart.
        grid (TimeGrid): Time grid.
        params (DiscretizationParams): Grid steps.

    Raises:
        ChartError: If the chart is shorter than one window.

    Returns:
        list: A list of :class:`Window` objects, oldest first.

    """
    size = grid.samples_per_window
    count = len(chart) // size
    if not count:
        raise ChartError('insufficient data')
    out = []
    for j in reversed(range(count)):
        end = len(chart) - j * size
        sl = slice(end - size, end)
        x1, x2 = chart.x1[sl], chart.x2[sl]
        out.append(Window(t0=chart.timestamps[end - size],
                          delta=grid.delta,
                          x1=x1,
                          x2=x2,
                          k1=tuple(params.snap(x, 1) for x in x1),
                          k2=tuple(params.snap(x, 2) for x in x2)))
    logger.debug('Cut %d windows of %d samples (%d samples discarded).',
                 count, size, len(chart) - count * size)
    return out


def variation(window: Window, t: int) -> int:
    """Accumulated variation of a window up to time ``t``.

    Args:
        window (Window): The window.
        t (int): Grid time within the window.

    Raises:
        ValueError: If ``t`` is outside the window.

    Returns:
        int: Sum of the absolute grid moves of both assets from the
        window start to ``t``.

    """
    return window.w[window.index_of(t)]


def simulate_gbm(mu1: float,
                 sigma1: float,
                 mu2: float,
                 sigma2: float,
                 s0: Sequence,
                 days: int,
                 grid: TimeGrid,
                 seed: int) -> UndiscountedChart:
    """Simulate a chart with two independent geometric Brownian motions.

    The numeraire is held constant at ``s0[0]``. Each day spans one
    window of ``M_T + 1`` samples and continues from the previous day's
    close. Steps use exact log-normal increments with per-step drift
    and volatility.

    Args:
        mu1 (float): Per-step drift of asset 1.
        sigma1 (float): Per-step volatility of asset 1.
        mu2 (float): Per-step drift of asset 2.
        sigma2 (float): Per-step volatility of asset 2.
        s0 (Sequence): Initial prices of the numeraire, asset 1 and
            asset 2.
        days (int): Number of simulated days.
        grid (TimeGrid): Time grid.
        seed (int): Random seed.

    Returns:
        UndiscountedChart: A chart of ``days * (M_T + 1)`` samples.

    """
    if sigma1 < 0 or sigma2 < 0:
        raise ValueError('Volatilities must be non-negative.')
    if days < 1:
        raise ValueError('days must be at least 1.')
    if len(s0) != 3 or min(s0) <= 0:
        raise ValueError('s0 must hold three positive prices.')
    n = days * grid.samples_per_window
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2, n - 1))
    paths = []
    for row, (mu, sigma, start) in enumerate(((mu1, sigma1, s0[1]), (mu2, sigma2, s0[2]))):
        logret = (mu - 0.5 * sigma**2) + sigma * z[row]
        paths.append(start * np.exp(np.concatenate(([0.0], np.cumsum(logret)))))
    ts = tuple(int(t) for t in np.arange(-(n - 1), 1) * grid.delta)
    logger.debug('Simulated %d samples over %d days (seed=%d).', n, days, seed)
    return UndiscountedChart(timestamps=ts,
                             s0=tuple(as_fraction(float(s0[0])) for _ in range(n)),
                             s1=tuple(as_fraction(float(v)) for v in paths[0]),
                             s2=tuple(as_fraction(float(v)) for v in paths[1]))


def write_chart(chart: UndiscountedChart, path: str, header: str=None):
    """Write a chart in the input CSV format.

    Args:
        chart (UndiscountedChart): Chart to be written.
        path (str): Output path.
        header (str, optional): Comment line written above the header
            row. Defaults to None.

    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    df = pd.DataFrame({'timestamp': chart.timestamps,
                       's0': [_fmt(v) for v in chart.s0],
                       's1': [_fmt(v) for v in chart.s1],
                       's2': [_fmt(v) for v in chart.s2]})
    with open(path, 'w', encoding='utf-8', newline='') as f:
        if header:
            f.write(f'# {header}\n')
        df.to_csv(f, index=False, lineterminator='\n')


def discounted_frame(chart: DiscountedChart) -> pd.DataFrame:
    """Tabulate a discounted chart with columns ``timestamp,x1,x2``."""
    return pd.DataFrame({'timestamp': chart.timestamps,
                         'x1': [_fmt(v) for v in chart.x1],
                         'x2': [_fmt(v) for v in chart.x2]})


def dump_windows(wins: list) -> pd.DataFrame:
    """Tabulate windows for plotting.

    Returns:
        pd.DataFrame: Columns ``window,t,k1,k2,w``.

    """
    frames = []
    for n, win in enumerate(wins):
        frames.append(pd.DataFrame({'window': n,
                                    't': [win.time(v) for v in range(len(win))],
                                    'k1': win.k1,
                                    'k2': win.k2,
                                    'w': win.w}))
    return pd.concat(frames, ignore_index=True)


#%% Helpers

def _fmt(value: Fraction) -> str:
    """Format a price for CSV output, exactly when it is a finite decimal."""
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    return _decimal(value) if d == 1 else repr(float(value))


def _decimal(value: Fraction) -> str:
    """Exact decimal expansion of a terminating rational."""
    digits = 0
    while (value * 10**digits).denominator != 1:
        digits += 1
    num = value * 10**digits
    sign = '-' if num < 0 else ''
    s = str(abs(num.numerator)).rjust(digits + 1, '0')
    return f'{sign}{s[:-digits]}.{s[-digits:]}'


def _parse_prices(values: pd.Series, col: str) -> tuple:
    """Parse a price column, indexed by file row, into exact rationals.

    Raises:
        ChartError: On unparseable or non-positive prices.

    """
    out = []
    for row, v in values.items():
        try:
            p = as_fraction(v)
        except (ValueError, ZeroDivisionError) as err:
            raise ChartError(f"unparseable price in column '{col}'", row=int(row)) from err
        if p <= 0:
            raise ChartError('non-positive numeraire' if col == 's0'
                             else f"non-positive price in column '{col}'", row=int(row))
        out.append(p)
    return tuple(out)


def _parse_timestamps(col: pd.Series, mode: str) -> np.ndarray:
    """Parse a timestamp column into integer minutes.

    Raises:
        ChartError: On unparseable or non-integer timestamps.

    """
    if mode == 'iso':
        try:
            ts = pd.to_datetime(col, utc=True)
        except (ValueError, TypeError) as err:
            raise ChartError(f'unparseable timestamp ({err})') from err
        secs = (ts - ts.min()).dt.total_seconds().to_numpy()
        if np.any(secs % 60):
            raise ChartError('timestamps are not whole minutes')
        return (secs // 60).astype(np.int64)
    if mode != 'minutes':
        raise ValueError(f"Invalid timestamp mode '{mode}'; expected 'minutes' or 'iso'.")
    out = np.empty(len(col), dtype=np.int64)
    for row, v in enumerate(col):
        try:
            out[row] = int(str(v).strip())
        except ValueError as err:
            raise ChartError('unparseable timestamp', row=row) from err
    return out
