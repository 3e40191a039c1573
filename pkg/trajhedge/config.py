#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Run configuration.

            A single YAML file is mapped onto a frozen tree of
            dataclasses. Every key carries its caster, default and
            documentation in the field metadata; the printed schema is
            generated from the same metadata.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

:Example:

    Load a configuration file::

        >>> from trajhedge.config import load
        >>> cfg = load('run.yaml')
        >>> cfg.model.name, cfg.graph.n_max
        ('B', 3)

"""
# pylint: disable=invalid-name

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import yaml

from ._version import __version__
from .escapes import EscapeParams
from .exceptions import ConfigError
from .marketdata import DiscretizationParams, TimeGrid


def _key(default=None, cast=None, doc: str='', choices: tuple=None):
    """Declare a configuration key."""
    meta = {'cast': cast, 'doc': doc, 'choices': choices}
    if isinstance(default, (list, dict)):
        raise TypeError('Use a tuple for sequence defaults.')
    return field(default=default, metadata=meta)


def _section(cls, doc: str=''):
    """Declare a nested configuration section."""
    return field(default_factory=cls, metadata={'section': cls, 'doc': doc})


def _floats(value) -> tuple:
    return tuple(float(v) for v in value)


def _ints(value) -> tuple:
    return tuple(int(v) for v in value)


def _bool(value) -> bool:
    if not isinstance(value, bool):
        raise ValueError('expected true or false')
    return value


def _str(value) -> str:
    return str(value)


@dataclass(frozen=True)
class InputConfig:
    chart: str = _key(None, _str, 'Historical chart CSV (timestamp,s0,s1,s2).')
    timestamps: str = _key('minutes', _str, 'Timestamp format.', ('minutes', 'iso'))
    test_chart: str = _key(None, _str, 'Held-out chart for matching.')


@dataclass(frozen=True)
class GridConfig:
    delta: int = _key(3, int, 'Sampling step in minutes.')
    steps_per_window: int = _key(130, int, 'Window length in steps (M_T).')


@dataclass(frozen=True)
class ModelConfig:
    name: str = _key('B', _str, 'Escape model.', ('A', 'B'))
    delta0: float = _key(None, float, 'Model A absolute threshold on x1.')
    delta1: float = _key(None, float, 'Model A relative threshold on x2.')
    deltaB: float = _key(0.011, float, 'Model B relative threshold.')


@dataclass(frozen=True)
class DiscretizationConfig:
    dhat1: float = _key(0.01, float, 'Grid step of asset 1.')
    dhat2: float = _key(0.01, float, 'Grid step of asset 2.')


@dataclass(frozen=True)
class DubinConfig:
    enabled: bool = _key(False, _bool, 'Prune on cone-crossing counts.')
    alpha: float = _key(None, float, 'Lower cone slope.')
    beta: float = _key(None, float, 'Upper cone slope.')
    threshold: float = _key(None, float, 'Stop once (alpha/beta)**count falls below this.')


@dataclass(frozen=True)
class GraphConfig:
    n_max: int = _key(3, int, 'Maximum rebalance index N(X).')
    hull_shrink: float = _key(0.0, float, 'Displacement shrink factor in [0, 1).')
    merge: bool = _key(True, _bool, 'Merge equal nodes; false builds a tree.')
    vertices_only: bool = _key(False, _bool, 'Use hull vertex increments only.')
    constraints: tuple = _key((1, 2, 3, 4, 5, 6, 7), _ints, 'Pruning constraints to enforce.')
    dubin: DubinConfig = _section(DubinConfig, 'Cone-crossing pruning.')


@dataclass(frozen=True)
class PricingConfig:
    target: str = _key('asset2', _str, 'Payoff: terminal price of this asset.', ('asset1', 'asset2'))
    trade: str = _key('asset1', _str, 'Traded asset.', ('asset1', 'asset2'))

    @property
    def target_asset(self) -> int:
        return int(self.target[-1])

    @property
    def trade_asset(self) -> int:
        return int(self.trade[-1])


@dataclass(frozen=True)
class SimulateConfig:
    mu1: float = _key(0.0, float, 'Per-step drift of asset 1.')
    sigma1: float = _key(0.01, float, 'Per-step volatility of asset 1.')
    mu2: float = _key(0.0, float, 'Per-step drift of asset 2.')
    sigma2: float = _key(0.02, float, 'Per-step volatility of asset 2.')
    s0: tuple = _key((1.0, 100.0, 100.0), _floats, 'Initial (numeraire, asset 1, asset 2) prices.')
    days: int = _key(10, int, 'Trading days to simulate.')
    seed: int = _key(0, int, 'Random seed.')


@dataclass(frozen=True)
class PnLConfig:
    samples: int = _key(1000, int, 'Trajectories per capital.')
    seed: int = _key(0, int, 'Master seed.')
    epsilon: float = _key(1e-6, float, 'Credit added to each profit.')
    capital: tuple = _key((-0.1, 0.0, 0.1), _floats, 'Initial capitals.')
    capital_mode: str = _key('offset', _str, 'Capitals are offsets from X2_0, or absolute.', ('offset', 'absolute'))
    strategy: str = _key('super', _str, 'Hedges followed.', ('super', 'under'))


@dataclass(frozen=True)
class CalibrationConfig:
    model: str = _key('B', _str, 'Escape model swept.', ('A', 'B'))
    deltas: tuple = _key((), _floats, 'Model B thresholds, or Model A delta0 values.')
    deltas1: tuple = _key((), _floats, 'Model A delta1 values.')


@dataclass(frozen=True)
class RunConfig:
    """The complete run configuration."""

    input: InputConfig = _section(InputConfig, 'Input files.')
    numeraire: int = _key(0, int, 'Numeraire asset index.', (0, 1, 2))
    grid: GridConfig = _section(GridConfig, 'Time grid.')
    model: ModelConfig = _section(ModelConfig, 'Escape thresholds.')
    discretization: DiscretizationConfig = _section(DiscretizationConfig, 'Price grid.')
    graph: GraphConfig = _section(GraphConfig, 'Graph construction.')
    pricing: PricingConfig = _section(PricingConfig, 'Pricing roles.')
    simulate: SimulateConfig = _section(SimulateConfig, 'GBM simulation.')
    pnl: PnLConfig = _section(PnLConfig, 'P&L experiment.')
    calibration: CalibrationConfig = _section(CalibrationConfig, 'Calibration sweep.')
    workers: int = _key(1, int, 'Sampling threads.')
    output: str = _key('./out', _str, 'Output directory.')

    def capitals(self, x2_0: float) -> list:
        """Initial capitals of the P&L experiment."""
        if self.pnl.capital_mode == 'absolute':
            return list(self.pnl.capital)
        return [x2_0 + c for c in self.pnl.capital]

    def digest(self) -> str:
        """MD5 hex digest of the canonical JSON form."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.md5(text.encode()).hexdigest()

    def disc(self) -> DiscretizationParams:
        return DiscretizationParams(self.discretization.dhat1, self.discretization.dhat2)

    def escape_params(self) -> EscapeParams:
        m = self.model
        return EscapeParams(m.name, delta0=m.delta0, delta1=m.delta1, deltaB=m.deltaB)

    def provenance(self) -> str:
        """The provenance line written above every CSV header."""
        return f'trajhedge {__version__} config={self.digest()}'

    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.grid.delta, self.grid.steps_per_window)

    def to_dict(self) -> dict:
        """Plain dictionary form (tuples as lists)."""
        return json.loads(json.dumps(dataclasses.asdict(self)))


def from_dict(data: dict) -> RunConfig:
    """Build and validate a configuration from a dictionary.

    Raises:
        ConfigError: On the first unknown key, bad value or violated
            rule, naming its dotted key path.

    """
    cfg = _build(RunConfig, data or {}, '')
    _validate(cfg)
    return cfg


def load(path: str) -> RunConfig:
    """Load a YAML configuration file.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigError: If the file is invalid.

    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f'Configuration file not found: {path}')
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as err:
            raise ConfigError('<file>', f'invalid YAML: {err}') from err
    return from_dict(data)


def schema() -> str:
    """The documented key schema as YAML, with defaults."""
    return '\n'.join(_schema_lines(RunConfig, 0)) + '\n'


#%% Helpers

def _build(cls, data, prefix: str):
    """Recursively map a dictionary onto a dataclass."""
    if not isinstance(data, dict):
        raise ConfigError(prefix.rstrip('.') or '<root>', 'expected a mapping')
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for k in data:
        if k not in fields:
            raise ConfigError(f'{prefix}{k}', 'unknown key')
    kwargs = {}
    for name, value in data.items():
        f = fields[name]
        key = f'{prefix}{name}'
        if 'section' in f.metadata:
            kwargs[name] = _build(f.metadata['section'], value or {}, f'{key}.')
            continue
        if value is None:
            if f.default is not None:
                raise ConfigError(key, 'must not be null')
            kwargs[name] = None
            continue
        try:
            value = f.metadata['cast'](value)
        except (TypeError, ValueError) as err:
            raise ConfigError(key, f'invalid value {value!r} ({err})') from err
        choices = f.metadata['choices']
        if choices and value not in choices:
            raise ConfigError(key, f'expected one of {", ".join(map(str, choices))}')
        kwargs[name] = value
    return cls(**kwargs)


def _rules(cfg: RunConfig) -> list:
    """``(key, holds, message)`` validation rules, in reporting order."""
    m, g, d, s, p = cfg.model, cfg.graph, cfg.graph.dubin, cfg.simulate, cfg.pnl
    rules = [('grid.delta', cfg.grid.delta > 0, 'must be positive'),
             ('grid.steps_per_window', cfg.grid.steps_per_window > 0, 'must be positive')]
    if m.name == 'A':
        rules += [('model.delta0', (m.delta0 or 0) > 0, 'Model A requires a positive delta0'),
                  ('model.delta1', (m.delta1 or 0) > 0, 'Model A requires a positive delta1')]
    else:
        rules.append(('model.deltaB', (m.deltaB or 0) > 0, 'Model B requires a positive deltaB'))
    rules += [('discretization.dhat1', cfg.discretization.dhat1 > 0, 'must be positive'),
              ('discretization.dhat2', cfg.discretization.dhat2 > 0, 'must be positive'),
              ('graph.n_max', g.n_max >= 0, 'must be non-negative'),
              ('graph.hull_shrink', 0 <= g.hull_shrink < 1, 'must lie in [0, 1)'),
              ('graph.constraints', set(g.constraints) <= set(range(1, 8)), 'constraints are numbered 1 to 7')]
    if d.enabled:
        rules += [('graph.dubin.alpha', d.alpha is not None and d.alpha >= 0, 'must be non-negative'),
                  ('graph.dubin.beta', d.beta is not None and (d.alpha or 0) < d.beta, 'must exceed alpha'),
                  ('graph.dubin.threshold', d.threshold is not None and 0 < d.threshold <= 1,
                   'must lie in (0, 1]')]
    rules += [('simulate.sigma1', s.sigma1 >= 0, 'must be non-negative'),
              ('simulate.sigma2', s.sigma2 >= 0, 'must be non-negative'),
              ('simulate.s0', len(s.s0) == 3 and min(s.s0) > 0, 'expected three positive prices'),
              ('simulate.days', s.days >= 1, 'must be at least 1'),
              ('pnl.samples', p.samples >= 1, 'must be at least 1'),
              ('pnl.capital', len(p.capital) > 0, 'must not be empty'),
              ('workers', cfg.workers >= 1, 'must be at least 1')]
    return rules


def _schema_lines(cls, depth: int) -> list:
    pad = '  ' * depth
    lines = []
    for f in dataclasses.fields(cls):
        doc = f.metadata.get('doc', '')
        if 'section' in f.metadata:
            lines.append(f'{pad}{f.name}:  # {doc}')
            lines.extend(_schema_lines(f.metadata['section'], depth + 1))
            continue
        default = f.default
        text = yaml.safe_dump(list(default) if isinstance(default, tuple) else default,
                              default_flow_style=True).strip()
        text = text[:-4].strip() if text.endswith('...') else text
        choices = f.metadata.get('choices')
        if choices:
            doc = f'{doc} One of: {", ".join(map(str, choices))}.'
        lines.append(f'{pad}{f.name}: {text}  # {doc}')
    return lines


def _validate(cfg: RunConfig):
    for key, holds, msg in _rules(cfg):
        if not holds:
            raise ConfigError(key, msg)
