#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Superhedging and underhedging bounds on trajectory graphs.

            Bounds are computed by backward dynamic programming over
            one-step markets: at each node the least capital dominating
            the children's continuation values with a single holding of
            the traded asset is the least concave majorant of the
            ``(price, value)`` points, evaluated at the node's price.
            Children whose value is infinite form null sets and are
            skipped; the parent is re-checked on the survivors.

            A linear programming formulation over all paths of a tree
            (solved with :func:`scipy.optimize.linprog`) serves as an
            independent check of the recursion.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

:Note:      Infinite bounds are held as :class:`Infinity` members
            within the recursion, never as floating point infinities.
            They are converted to floats only for reporting.

"""
# pylint: disable=invalid-name

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
import pandas as pd
from scipy.optimize import linprog

from .exceptions import DegenerateError, GraphError, PayoffError
from .geometry import NodeClass, classify_moves
from .graph import TrajectoryGraph

logger = logging.getLogger(__name__)

SUPER = 'super'
UNDER = 'under'


class Infinity(Enum):
    """Infinite bound sentinels."""

    MINUS = '-inf'
    PLUS = '+inf'

    def __float__(self):
        return -math.inf if self is Infinity.MINUS else math.inf

    def __neg__(self):
        return Infinity.PLUS if self is Infinity.MINUS else Infinity.MINUS


@dataclass(frozen=True)
class OneStepMarket:
    """A one-step market seen from a node.

    Args:
        s (float): Price of the traded asset at the node.
        children (tuple): ``(s_j, y_j)`` pairs: the traded price at each
            child and its continuation value.

    """

    s: float
    children: tuple


@dataclass(frozen=True)
class Payoff:
    """A payoff on terminal nodes, or on full paths in tree mode.

    Args:
        func (Callable): ``func(graph, node_id)``, or
            ``func(graph, path)`` when ``path_dependent`` is True.
        path_dependent (bool): True if the payoff needs the full path.
        name (str): Label used in reports.

    """

    func: Callable
    path_dependent: bool = False
    name: str = 'custom'

    def __call__(self, graph: TrajectoryGraph, nid: int, path: list=None) -> float:
        if self.path_dependent:
            value = self.func(graph, path if path is not None else _path_to(graph, nid))
        else:
            value = self.func(graph, nid)
        value = float(value)
        if not math.isfinite(value):
            raise PayoffError(f"Payoff '{self.name}' is not finite at node {nid}.")
        return value

    @classmethod
    def asset(cls, asset: int) -> Payoff:
        """The terminal price of asset 1 or 2."""
        if asset not in (1, 2):
            raise ValueError(f'Invalid asset: {asset}')
        return cls(func=lambda g, nid: g.price(nid, asset), name=f'asset{asset}')

    def negated(self) -> Payoff:
        """The payoff ``-F``."""
        return Payoff(func=lambda g, x: -self.func(g, x),
                      path_dependent=self.path_dependent,
                      name=f'-{self.name}')


@dataclass(frozen=True)
class PricingResult:
    """Per-node bounds and hedge ratios for one direction.

    Args:
        values (tuple): Per node, a float in numeraire units or an
            :class:`Infinity` member.
        hedges (tuple): Per node, units of the traded asset held, or
            None where the value is infinite. Terminal nodes hold 0.
        traded (int): Traded asset, 1 or 2.
        direction (str): ``'super'`` or ``'under'``.
        graph (TrajectoryGraph): The priced graph.
        payoff (Payoff): The priced payoff ``F``.

    """

    values: tuple
    hedges: tuple
    traded: int
    direction: str
    graph: TrajectoryGraph = field(repr=False, compare=False)
    payoff: Payoff = field(repr=False, compare=False)

    @property
    def degenerate(self) -> bool:
        """True if the root bound is infinite."""
        return not self.finite(0)

    @property
    def root(self) -> float:
        """The root bound as a float (possibly infinite)."""
        return self.bound(0)

    def bound(self, nid: int) -> float:
        """Bound at node ``nid`` as a float (possibly infinite)."""
        return float(self.values[nid])

    def finite(self, nid: int) -> bool:
        """True if the bound at node ``nid`` is finite."""
        return not isinstance(self.values[nid], Infinity)


@dataclass(frozen=True)
class PortfolioTrace:
    """A self-financing portfolio followed along one trajectory.

    Args:
        capital (float): Initial capital ``V``.
        path (tuple): Node ids, root to terminal.
        hedges (tuple): Traded asset holding ``H_i`` after rebalancing
            at each node; 0 at the terminal node.
        cash (tuple): Numeraire holding ``H0_i`` after rebalancing.
        values (tuple): Portfolio value ``Pi_i`` at each node.
        payoff (float): ``F`` at the terminal node.
        null (bool): True if the path passes through a node with an
            infinite bound.

    """

    capital: float
    path: tuple
    hedges: tuple
    cash: tuple
    values: tuple
    payoff: float
    null: bool

    @property
    def profit(self) -> float:
        """Final profit ``Pi_N - F``."""
        return self.values[-1] - self.payoff


def one_step_super(market: OneStepMarket):
    """Superhedge a one-step market.

    The value is ``inf_h max_j [y_j - h (s_j - s)]``, i.e. the least
    concave majorant of the ``(s_j, y_j)`` points evaluated at ``s``;
    the hedge is a supporting slope there (the mean of the two adjacent
    slopes at a vertex, the single slope at an end of the range).

    Args:
        market (OneStepMarket): The market; children with equal prices
            are consolidated by their maximum value.

    Raises:
        ValueError: If the market has no children.

    Returns:
        tuple | Infinity: ``(value, hedge)``, or ``Infinity.MINUS`` if
        ``s`` lies outside the range of the children's prices.

    """
    if not market.children:
        raise ValueError('A one-step market needs at least one child.')
    best = {}
    for sj, yj in market.children:
        best[sj] = max(yj, best.get(sj, -math.inf))
    pts = sorted(best.items())
    s = market.s
    if s < pts[0][0] or s > pts[-1][0]:
        return Infinity.MINUS
    if len(pts) == 1:
        return (pts[0][1], 0.0)
    hull = []
    for p in pts:
        while len(hull) >= 2 and _turn(hull[-2], hull[-1], p) >= 0:
            hull.pop()
        hull.append(p)
    for n, (xv, yv) in enumerate(hull):
        if xv == s:
            slopes = []
            if n > 0:
                slopes.append(_slope(hull[n - 1], hull[n]))
            if n + 1 < len(hull):
                slopes.append(_slope(hull[n], hull[n + 1]))
            return (yv, sum(slopes) / len(slopes))
        if xv > s:
            a, b = hull[n - 1], hull[n]
            h = _slope(a, b)
            return (a[1] + h * (s - a[0]), h)
    raise AssertionError('Unreachable: s lies within the hull range.')  # pragma: nocover


def one_step_under(market: OneStepMarket):
    """Underhedge a one-step market (greatest convex minorant at ``s``).

    Returns:
        tuple | Infinity: ``(value, hedge)``, or ``Infinity.PLUS`` if
        ``s`` lies outside the range of the children's prices.

    """
    res = one_step_super(OneStepMarket(market.s, tuple((sj, -yj) for sj, yj in market.children)))
    if isinstance(res, Infinity):
        return -res
    return (-res[0], -res[1])


def price(graph: TrajectoryGraph,
          payoff: Payoff,
          traded: int=1,
          direction: str=SUPER,
          skip_labelled: bool=False) -> PricingResult:
    """Price a payoff on a graph by backward recursion.

    Args:
        graph (TrajectoryGraph): The graph.
        payoff (Payoff): Payoff ``F``.
        traded (int, optional): Traded asset, 1 or 2. Defaults to 1.
        direction (str, optional): ``'super'`` or ``'under'``.
        skip_labelled (bool, optional): Also skip children classified
            type II at construction (two-dimensional test). Defaults
            to False.

    :Recursion:

        - Terminal nodes take the payoff value.
        - Children with an infinite value are dropped.
        - If no child survives, or the node price lies outside the
          survivors' price range, the node's value is infinite.
        - Otherwise the one-step market of the survivors is solved.

    The underhedging bounds are obtained as ``-super(-F)``, node by node.

    Raises:
        ValueError: For a path-dependent payoff on a merged graph.
        PayoffError: If the payoff is not finite at a terminal node.

    Returns:
        PricingResult: Per-node values and hedges.

    """
    if direction not in (SUPER, UNDER):
        raise ValueError(f"Invalid direction '{direction}'.")
    if traded not in (1, 2):
        raise ValueError(f'Invalid traded asset: {traded}')
    if payoff.path_dependent and graph.merge:
        raise ValueError('Path-dependent payoffs require a tree mode graph.')
    target = payoff if direction == SUPER else payoff.negated()
    d = float(graph.disc.step(traded))
    nodes = graph.nodes
    k = [n.k1 if traded == 1 else n.k2 for n in nodes]
    values = [None] * len(nodes)
    hedges = [None] * len(nodes)
    for level in reversed(graph.levels()):
        for nid in level:
            cs = graph.children(nid)
            if not cs:
                values[nid], hedges[nid] = target(graph, nid), 0.0
                continue
            surv = tuple((k[c], values[c]) for c in cs
                         if not isinstance(values[c], Infinity)
                         and not (skip_labelled and nodes[c].node_class is NodeClass.TYPE_II))
            res = one_step_super(OneStepMarket(k[nid], surv)) if surv else Infinity.MINUS
            if isinstance(res, Infinity):
                values[nid] = res
            else:
                values[nid], hedges[nid] = res[0], res[1] / d
    if direction == UNDER:
        values = [-v for v in values]
        hedges = [None if h is None else -h for h in hedges]
    result = PricingResult(values=tuple(values), hedges=tuple(hedges), traded=traded,
                           direction=direction, graph=graph, payoff=payoff)
    if result.degenerate:
        logger.warning('The %s bound at the root is degenerate (%s).', direction, result.values[0].value)
    else:
        logger.info('%s bound at the root: %.10g', direction.capitalize(), result.root)
    return result


def brute_force_price(tree: TrajectoryGraph, payoff: Payoff, traded: int=1, direction: str=SUPER) -> float:
    """Price a payoff on a tree by linear programming over all paths.

    Minimizes ``V`` such that some hedge per internal node satisfies
    ``V + sum_k H_k dX_k >= F`` on every path outside the null set.
    Paths moving at a node whose traded moves do not straddle zero are
    null and excluded.

    Args:
        tree (TrajectoryGraph): A graph in which every node has at most
            one parent.
        payoff (Payoff): Payoff ``F``.
        traded (int, optional): Traded asset. Defaults to 1.
        direction (str, optional): ``'super'`` or ``'under'``.

    Raises:
        ValueError: If the graph is not a tree.
        DegenerateError: If the solver fails.

    Returns:
        float: The bound; ``-inf`` (super) or ``+inf`` (under) when the
        program is unbounded.

    """
    if direction == UNDER:
        return -brute_force_price(tree, payoff.negated(), traded, SUPER)
    if any(len(tree.parents(n)) > 1 for n in range(len(tree))):
        raise ValueError('Brute force pricing requires a tree.')
    internal = [n for n in range(len(tree)) if tree.children(n)]
    col = {n: j + 1 for j, n in enumerate(internal)}
    moving_null = set()
    for n in internal:
        moves = [tree.price(c, traded) - tree.price(n, traded) for c in tree.children(n)]
        if classify_moves(moves).is_arbitrage:
            moving_null.update(c for c, m in zip(tree.children(n), moves) if m != 0)
    rows, rhs = [], []
    for path in _paths(tree):
        if any(c in moving_null for c in path[1:]):
            continue
        row = np.zeros(len(internal) + 1)
        row[0] = -1.0
        for a, b in zip(path, path[1:]):
            row[col[a]] -= tree.price(b, traded) - tree.price(a, traded)
        rows.append(row)
        rhs.append(-payoff(tree, path[-1], path))
    if not rows:
        return -math.inf
    c = np.zeros(len(internal) + 1)
    c[0] = 1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=[(None, None)] * len(c),
                  method='highs-ds',
                  options={'primal_feasibility_tolerance': 1e-10,
                           'dual_feasibility_tolerance': 1e-10})
    logger.debug('Brute force LP: %d paths, %d variables, status %d.', len(rows), len(c), res.status)
    if res.status in (2, 3):
        # A large enough V with zero hedges is always feasible.
        return -math.inf
    if res.status != 0:
        raise DegenerateError(f'Brute force LP failed: {res.message}')
    return float(res.x[0])


def hedge_trace(result: PricingResult, trajectory: list, V: float) -> PortfolioTrace:
    """Follow the hedges of a pricing result along a trajectory.

    Args:
        result (PricingResult): Pricing result supplying the hedges.
        trajectory (list): Node ids from the root to a terminal node.
        V (float): Initial capital.

    :Accounting:

        - ``Pi_0 = V``; ``Pi_{i+1} = Pi_i + H_i (X_{i+1} - X_i)`` in
          the traded asset.
        - ``H0_i = Pi_i - H_i X_i`` so every rebalance is
          self-financing.
        - Nodes without a finite hedge hold nothing and flag the trace
          as null.

    Raises:
        GraphError: If the trajectory leaves the graph.

    Returns:
        PortfolioTrace: Holdings and values along the trajectory.

    """
    graph = result.graph
    if not trajectory or trajectory[0] != 0:
        raise GraphError('A trajectory must start at the root.')
    for a, b in zip(trajectory, trajectory[1:]):
        if b not in graph.children(a):
            raise GraphError(f'Trajectory leaves the graph at edge {a} -> {b}.')
    if graph.children(trajectory[-1]):
        raise GraphError('A trajectory must end at a terminal node.')
    null = not all(result.finite(n) for n in trajectory)
    hedges = [result.hedges[n] or 0.0 for n in trajectory[:-1]] + [0.0]
    x = [graph.price(n, result.traded) for n in trajectory]
    values = [float(V)]
    for h, x0, x1 in zip(hedges, x, x[1:]):
        values.append(values[-1] + h * (x1 - x0))
    cash = [v - h * xi for v, h, xi in zip(values, hedges, x)]
    return PortfolioTrace(capital=float(V),
                          path=tuple(trajectory),
                          hedges=tuple(hedges),
                          cash=tuple(cash),
                          values=tuple(values),
                          payoff=result.payoff(graph, trajectory[-1], list(trajectory)),
                          null=null)


def pricing_frame(sup: PricingResult, und: PricingResult) -> pd.DataFrame:
    """Pricing dump with columns
    ``node_id,value_super,value_under,hedge_super,hedge_under,degenerate_flag``.
    """
    rows = []
    for n in range(len(sup.values)):
        rows.append((n, sup.bound(n), und.bound(n),
                     np.nan if sup.hedges[n] is None else sup.hedges[n],
                     np.nan if und.hedges[n] is None else und.hedges[n],
                     int(not (sup.finite(n) and und.finite(n)))))
    return pd.DataFrame(rows, columns=['node_id', 'value_super', 'value_under',
                                       'hedge_super', 'hedge_under', 'degenerate_flag'])


def results_from_frame(df: pd.DataFrame, graph: TrajectoryGraph, payoff: Payoff, traded: int) -> tuple:
    """Rebuild ``(super, under)`` results from a pricing dump."""
    out = []
    for direction, sentinel in ((SUPER, Infinity.MINUS), (UNDER, Infinity.PLUS)):
        vals = tuple(v if math.isfinite(v) else sentinel for v in df[f'value_{direction}'])
        hedges = tuple(None if np.isnan(h) else float(h) for h in df[f'hedge_{direction}'])
        out.append(PricingResult(values=vals, hedges=hedges, traded=traded,
                                 direction=direction, graph=graph, payoff=payoff))
    return tuple(out)


#%% Helpers

def _path_to(graph: TrajectoryGraph, nid: int) -> list:
    """Root-to-node path in a tree."""
    path = [nid]
    while path[-1]:
        parents = graph.parents(path[-1])
        if len(parents) != 1:
            raise GraphError(f'Node {path[-1]} has no unique parent.')
        path.append(parents[0])
    return path[::-1]


def _paths(tree: TrajectoryGraph) -> list:
    """All root-to-terminal paths of a tree."""
    out, stack = [], [[0]]
    while stack:
        path = stack.pop()
        cs = tree.children(path[-1])
        if not cs:
            out.append(path)
        stack.extend(path + [c] for c in cs)
    return out


def _slope(a: tuple, b: tuple) -> float:
    return (b[1] - a[1]) / (b[0] - a[0])


def _turn(o: tuple, a: tuple, b: tuple) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
