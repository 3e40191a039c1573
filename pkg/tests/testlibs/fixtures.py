#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
:Purpose:   Hand-built and randomised fixtures shared by the test suite.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

:Comments:  Trees are built directly from ``(k1, k2)`` levels so the
            pricing tests do not depend on graph construction.

"""
# pylint: disable=wrong-import-order

import numpy as np

from trajhedge.escapes import EmpiricalIncrement, EmpiricalSet, escape_times, window_increments
from trajhedge.geometry import NodeClass
from trajhedge.graph import GraphNode, TrajectoryGraph
from trajhedge.marketdata import DiscretizationParams, TimeGrid, discount, simulate_gbm, windows


def make_tree(levels: list, children: list, dhat=1) -> TrajectoryGraph:
    """Build a tree mode graph from node levels and child lists.

    Args:
        levels (list): ``(k1, k2)`` per node; node 0 is the root.
        children (list): Child id list per node.
        dhat (int | float, optional): Grid step of both assets.

    """
    depth = {0: 0}
    for p, cs in enumerate(children):
        for c in cs:
            depth[c] = depth[p] + 1
    nodes = []
    for nid, (k1, k2) in enumerate(levels):
        leaf = not children[nid]
        nodes.append(GraphNode(k1, k2, depth[nid], depth[nid], 0,
                               node_class=NodeClass.TERMINAL if leaf else NodeClass.ARBITRAGE_FREE,
                               terminal=leaf,
                               id=nid))
    n_max = max(depth.values())
    return TrajectoryGraph(nodes, children, DiscretizationParams(dhat, dhat), n_max, merge=False)


def null_subtree_tree(excise: bool=False) -> TrajectoryGraph:
    """The eight node tree with a null subtree below node 1.

    Node 5 has a single child which moves asset 1, so node 5 (and then
    node 1) carry no finite bound. With ``excise`` the subtree below
    the root's first child is removed entirely.

    """
    levels = [(0, 0),                            # 0: root
              (1, 0), (0, 2), (1, -2), (-1, -2), # 1 .. 4
              (0, 5), (2, 7),                    # 5, 6: children of 1
              (1, 9)]                            # 7: only child of 5
    children = [[1, 2, 3, 4], [5, 6], [], [], [], [7], [], []]
    if excise:
        levels = [levels[0]] + levels[2:5]
        children = [[1, 2, 3], [], [], []]
    return make_tree(levels, children)


def random_tree(rng: np.random.Generator,
                max_depth: int=4,
                max_fanout: int=5,
                root: tuple=(0, 0),
                straddle2: bool=False) -> TrajectoryGraph:
    """A random tree with integer moves in ``[-3, 3]``.

    Args:
        rng (np.random.Generator): Random generator.
        max_depth (int, optional): Maximum depth.
        max_fanout (int, optional): Maximum number of children.
        root (tuple, optional): Root levels.
        straddle2 (bool, optional): Force the asset 2 moves at every
            internal node to straddle zero, and give every leaf the
            full depth.

    """
    levels, children = [tuple(root)], [[]]
    stack = [(0, 0)]
    while stack:
        nid, depth = stack.pop()
        if depth == max_depth or (not straddle2 and depth and rng.random() < 0.3):
            continue
        n = int(rng.integers(2 if straddle2 else 1, max_fanout + 1))
        m1 = rng.integers(-3, 4, size=n)
        m2 = rng.integers(-3, 4, size=n)
        if straddle2:
            m2[0], m2[1] = -int(rng.integers(1, 4)), int(rng.integers(1, 4))
        k1, k2 = levels[nid]
        for a, b in zip(m1, m2):
            levels.append((k1 + int(a), k2 + int(b)))
            children.append([])
            children[nid].append(len(levels) - 1)
            stack.append((len(levels) - 1, depth + 1))
    return make_tree(levels, children)


def gbm_windows(seed: int, days: int=10, steps: int=20, sigma1: float=0.01, sigma2: float=0.01,
                dhat: float=0.01) -> tuple:
    """Windows of a simulated chart.

    Returns:
        tuple: ``(chart, grid, disc, windows)``.

    """
    grid = TimeGrid(3, steps)
    disc = DiscretizationParams(dhat, dhat)
    chart = discount(simulate_gbm(0.0, sigma1, 0.0, sigma2, (1.0, 1.0, 1.0), days, grid, seed))
    return chart, grid, disc, windows(chart, grid, disc)


def lattice_set(rng: np.random.Generator, n_extra: int=4, unit: int=20) -> EmpiricalSet:
    """An empirical set of multiples of ``unit`` around the origin."""
    pts = {(unit, unit), (-unit, -unit), (unit, -unit), (-unit, unit)}
    while len(pts) < 4 + n_extra:
        pts.add((unit * int(rng.integers(-3, 4)), unit * int(rng.integers(-3, 4))))
    return EmpiricalSet.from_increments([[EmpiricalIncrement(a, b, 1, abs(a) + abs(b)) for a, b in pts]])


def window_path(window, params) -> list:
    """Increments of a window's escapes, for replay."""
    return window_increments(window, escape_times(window, params))
