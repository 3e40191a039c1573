#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Construction, sampling and export of trajectory graphs.

            Starting from the most recent chart levels, every node is
            extended by each empirical increment; candidates failing the
            pruning tables are discarded. Nodes are built breadth first
            by rebalance index, classified against the hull of their
            displacements, and trajectories passing through an
            arbitrage node are terminated at its children.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

:Note:      Nodes sharing the tuple ``(k1, k2, i, t, w)`` are merged,
            unless the graph is built in tree mode. A tuple reached
            both through an arbitrage parent (where it is terminal) and
            through a regular parent (where it is expanded) is held
            twice, once per terminal state, as the two have different
            futures.

"""
# pylint: disable=invalid-name

from __future__ import annotations

import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import pandas as pd

from .artifacts import read_csv, read_json, write_csv, write_json
from .escapes import EmpiricalSet
from .exceptions import GraphError
from .geometry import NodeClass, classify_points
from .marketdata import DiscretizationParams, round_half_away
from .pruning import ALL_CONSTRAINTS, PruningTables, admissible

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class GraphNode:
    """A node ``(X1, X2, i, T, W)`` of a trajectory graph.

    Args:
        k1 (int): Grid level of asset 1.
        k2 (int): Grid level of asset 2.
        i (int): Rebalance index.
        t_steps (int): Elapsed time in grid steps.
        w (int): Accumulated variation.
        node_class (NodeClass): Classification, set once the node's
            children are final.
        terminal (bool): True if the node is not expanded.
        id (int): Position of the node in its graph.

    """

    k1: int
    k2: int
    i: int
    t_steps: int
    w: int
    node_class: NodeClass = None
    terminal: bool = False
    id: int = -1

    @property
    def tuple(self) -> tuple:
        """The identity tuple ``(k1, k2, i, t_steps, w)``."""
        return (self.k1, self.k2, self.i, self.t_steps, self.w)


@dataclass(frozen=True)
class BuildOptions:
    """Graph construction options.

    Args:
        hull_shrink (float): Shrink factor ``eps`` applied to candidate
            displacements. Defaults to 0.
        merge (bool): Merge equal tuples (DAG); False builds a tree.
        constraints (tuple): Pruning constraints to enforce.
        horizon (int): Horizon in grid steps, used when no pruning
            tables are given. Defaults to None (unbounded).
        dubin (object): Optional cone-crossing pruning hook providing
            ``start``, ``advance`` and ``exhausted``.

    """

    hull_shrink: float = 0.0
    merge: bool = True
    constraints: tuple = ALL_CONSTRAINTS
    horizon: int = None
    dubin: object = field(default=None, compare=False)


class TrajectoryGraph:
    """A finished, read-only trajectory graph.

    Args:
        nodes (list): :class:`GraphNode` objects; node 0 is the root.
        children (list): Child id lists, aligned with ``nodes``.
        disc (DiscretizationParams): Grid steps.
        n_max (int): Maximum rebalance index used for the build.
        merge (bool): False for tree mode graphs.
        degenerate (bool): True if the root had no admissible child.

    """

    def __init__(self,
                 nodes: list,
                 children: list,
                 disc: DiscretizationParams,
                 n_max: int,
                 merge: bool=True,
                 degenerate: bool=False):
        """Trajectory graph class initialiser."""
        self._nodes = nodes
        self._children = [tuple(c) for c in children]
        self._parents = None
        self._disc = disc
        self._d = (float(disc.dhat1), float(disc.dhat2))
        self._n_max = n_max
        self._merge = merge
        self._degenerate = degenerate

    def __len__(self):
        return len(self._nodes)

    @property
    def degenerate(self) -> bool:
        """True if the root had no admissible child."""
        return self._degenerate

    @property
    def disc(self) -> DiscretizationParams:
        """Grid steps of the graph."""
        return self._disc

    @property
    def merge(self) -> bool:
        """False if the graph was built in tree mode."""
        return self._merge

    @property
    def n_edges(self) -> int:
        """Number of edges."""
        return sum(map(len, self._children))

    @property
    def n_max(self) -> int:
        """Maximum rebalance index."""
        return self._n_max

    @property
    def nodes(self) -> list:
        """All nodes, indexed by id."""
        return self._nodes

    @property
    def root(self) -> GraphNode:
        """The initial node."""
        return self._nodes[0]

    def children(self, nid: int) -> tuple:
        """Child ids of node ``nid``."""
        return self._children[nid]

    def parents(self, nid: int) -> tuple:
        """Parent ids of node ``nid``."""
        if self._parents is None:
            parents = [[] for _ in self._nodes]
            for p, cs in enumerate(self._children):
                for c in cs:
                    parents[c].append(p)
            self._parents = [tuple(p) for p in parents]
        return self._parents[nid]

    def edges(self):
        """Iterate over ``(parent_id, child_id)`` pairs."""
        for p, cs in enumerate(self._children):
            for c in cs:
                yield p, c

    def levels(self) -> list:
        """Node ids grouped by rebalance index."""
        out = [[] for _ in range(max(n.i for n in self._nodes) + 1)]
        for n in self._nodes:
            out[n.i].append(n.id)
        return out

    def price(self, nid: int, asset: int) -> float:
        """Price of asset 1 or 2 at node ``nid``, in numeraire units."""
        n = self._nodes[nid]
        return n.k1 * self._d[0] if asset == 1 else n.k2 * self._d[1]

    def summary(self) -> dict:
        """Node, edge and class counts for reporting."""
        return {'nodes': len(self),
                'edges': self.n_edges,
                'nodes_per_level': [len(l) for l in self.levels()],
                'classes': dict(Counter(n.node_class.value for n in self._nodes)),
                'terminal': sum(n.terminal for n in self._nodes),
                'degenerate': self._degenerate,
                'merge': self._merge,
                'n_max': self._n_max}


def generate_children(node: GraphNode,
                      ne: EmpiricalSet,
                      tables: PruningTables,
                      n_max: int,
                      hull_shrink: float=0.0,
                      root: GraphNode=None,
                      constraints: tuple=ALL_CONSTRAINTS,
                      horizon: int=None) -> list:
    """Generate the admissible children of a node.

    One candidate is produced per empirical increment. The zero-escape
    sentinel (``q = 0``) yields no candidate.

    Args:
        node (GraphNode): Node to be extended.
        ne (EmpiricalSet): Empirical increments.
        tables (PruningTables): Pruning tables, or None to disable
            pruning (the horizon is still enforced).
        n_max (int): Maximum rebalance index.
        hull_shrink (float, optional): Shrink factor ``eps``; each
            displacement is scaled by ``1 - eps`` and re-snapped to
            the grid. Defaults to 0.
        root (GraphNode, optional): Root of the graph, for the relative
            normed change constraint. Defaults to ``node``.
        constraints (tuple, optional): Pruning constraints to enforce.
        horizon (int, optional): Horizon in grid steps when ``tables``
            is None.

    Returns:
        list: Unattached candidate :class:`GraphNode` objects, with
        duplicates removed, in increment order.

    """
    if node.terminal or node.i >= n_max:
        raise ValueError('Cannot extend a terminal node.')
    root = root or node
    scale = 1 - Fraction(hull_shrink).limit_denominator(10**9)
    out, seen = [], set()
    for inc in ne:
        if inc.q == 0:
            continue
        m1, m2 = inc.m1, inc.m2
        if hull_shrink:
            m1, m2 = round_half_away(scale * m1), round_half_away(scale * m2)
        cand = GraphNode(node.k1 + m1, node.k2 + m2, node.i + 1, node.t_steps + inc.q, node.w + inc.eta)
        if cand.tuple in seen:
            continue
        if tables is not None:
            if not admissible(node, cand, tables, root, enabled=constraints):
                continue
        elif horizon is not None and cand.t_steps > horizon:
            continue
        seen.add(cand.tuple)
        out.append(cand)
    return out


def classify(node: GraphNode, children: list) -> NodeClass:
    """Classify a node against the hull of its children's displacements.

    Raises:
        ValueError: If ``children`` is empty; such a node is terminal.

    """
    return classify_points((c.k1 - node.k1, c.k2 - node.k2) for c in children)


def build(root_levels: tuple,
          ne: EmpiricalSet,
          tables: PruningTables,
          n_max: int,
          options: BuildOptions=None,
          disc: DiscretizationParams=None) -> TrajectoryGraph:
    """Build a trajectory graph breadth first.

    Args:
        root_levels (tuple): Grid levels ``(k1, k2)`` of the root.
        ne (EmpiricalSet): Empirical increments.
        tables (PruningTables): Pruning tables, or None.
        n_max (int): Maximum rebalance index.
        options (BuildOptions, optional): Construction options.
        disc (DiscretizationParams, optional): Grid steps. Defaults to
            the steps held by ``tables``.

    :Rules:

        - A node with no admissible child becomes terminal.
        - Once its children are final a node is classified; the
          children of a type I or type II node are terminal.
        - Nodes at index ``n_max`` are terminal.
        - With a cone-crossing hook, a node whose every incoming path
          has exhausted the crossing bound is terminal.

    Returns:
        TrajectoryGraph: The graph. A root without admissible children
        gives a single-node graph flagged degenerate.

    """
    opts = options or BuildOptions()
    if disc is None:
        if tables is None:
            raise ValueError('Grid steps are required when no pruning tables are given.')
        disc = tables.disc
    if n_max < 0:
        raise ValueError('n_max must be non-negative.')
    d1, d2 = float(disc.dhat1), float(disc.dhat2)
    hook = opts.dubin
    root = GraphNode(int(root_levels[0]), int(root_levels[1]), 0, 0, 0, terminal=n_max == 0, id=0)
    nodes, children = [root], [[]]
    states = {0: {hook.start(root.k1 * d1, root.k2 * d2)}} if hook else {}
    frontier = [0]
    degenerate = False
    for level in range(n_max):
        index, nxt = {}, []
        for pid in frontier:
            parent = nodes[pid]
            if parent.terminal:
                continue
            cands = generate_children(parent, ne, tables, n_max,
                                      hull_shrink=opts.hull_shrink,
                                      root=root,
                                      constraints=opts.constraints,
                                      horizon=opts.horizon)
            if not cands:
                parent.terminal = True
                degenerate = degenerate or pid == 0
                continue
            parent.node_class = classify(parent, cands)
            stopped = parent.node_class.is_arbitrage or level + 1 == n_max
            for cand in cands:
                key = (*cand.tuple, stopped) if opts.merge else len(nodes)
                cid = index.get(key)
                if cid is None:
                    cid = cand.id = len(nodes)
                    cand.terminal = stopped
                    index[key] = cid
                    nodes.append(cand)
                    children.append([])
                    nxt.append(cid)
                children[pid].append(cid)
                if hook and not stopped:
                    c = nodes[cid]
                    states.setdefault(cid, set()).update(
                        hook.advance(s, c.k1 * d1, c.k2 * d2) for s in states[pid])
        if hook:
            for cid in nxt:
                if not nodes[cid].terminal and all(map(hook.exhausted, states[cid])):
                    nodes[cid].terminal = True
        logger.debug('Level %d: %d nodes, %d parents.', level + 1, len(nxt), len(frontier))
        frontier = nxt
    for n in nodes:
        if not children[n.id]:
            n.terminal = True
            n.node_class = NodeClass.TERMINAL
    graph = TrajectoryGraph(nodes, children, disc, n_max, merge=opts.merge, degenerate=degenerate)
    if degenerate:
        logger.warning('The root has no admissible children; the graph is degenerate.')
    logger.info('Graph built: %d nodes, %d edges.', len(graph), graph.n_edges)
    return graph


def sample_trajectory(graph: TrajectoryGraph, rng) -> list:
    """Sample a root-to-terminal path, choosing children uniformly.

    Args:
        graph (TrajectoryGraph): The graph.
        rng (np.random.Generator | int): Generator, or a seed.

    Raises:
        GraphError: If the graph is degenerate.

    Returns:
        list: Node ids from the root to a terminal node.

    """
    if graph.degenerate:
        raise GraphError('Cannot sample from a degenerate graph.')
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    path = [0]
    cs = graph.children(0)
    while cs:
        path.append(cs[int(rng.integers(len(cs)))])
        cs = graph.children(path[-1])
    return path


def nodes_frame(graph: TrajectoryGraph) -> pd.DataFrame:
    """Node table with columns ``id,k1,k2,i,t,w,class,terminal``."""
    return pd.DataFrame([(n.id, n.k1, n.k2, n.i, n.t_steps, n.w, n.node_class.value, int(n.terminal))
                         for n in graph.nodes],
                        columns=['id', 'k1', 'k2', 'i', 't', 'w', 'class', 'terminal'])


def edges_frame(graph: TrajectoryGraph) -> pd.DataFrame:
    """Edge list with columns ``parent_id,child_id``."""
    return pd.DataFrame(list(graph.edges()), columns=['parent_id', 'child_id'], dtype='int64')


def plot_edges(graph: TrajectoryGraph) -> pd.DataFrame:
    """Edge list with parent and child coordinates in price units."""
    rows = []
    for p, c in graph.edges():
        np_, nc = graph.nodes[p], graph.nodes[c]
        rows.append((p, c,
                     graph.price(p, 1), graph.price(p, 2), np_.i, np_.t_steps,
                     graph.price(c, 1), graph.price(c, 2), nc.i, nc.t_steps))
    return pd.DataFrame(rows, columns=['parent_id', 'child_id',
                                       'p_x1', 'p_x2', 'p_i', 'p_t',
                                       'c_x1', 'c_x2', 'c_i', 'c_t'])


def trajectory_fan(graph: TrajectoryGraph, n: int, seed: int) -> pd.DataFrame:
    """Sample ``n`` trajectories for plotting.

    Returns:
        pd.DataFrame: Columns ``sample,step,node_id,x1,x2,t,w``.

    """
    rng = np.random.default_rng(seed)
    rows = []
    for s in range(n):
        for step, nid in enumerate(sample_trajectory(graph, rng)):
            node = graph.nodes[nid]
            rows.append((s, step, nid, graph.price(nid, 1), graph.price(nid, 2), node.t_steps, node.w))
    return pd.DataFrame(rows, columns=['sample', 'step', 'node_id', 'x1', 'x2', 't', 'w'])


def export(graph: TrajectoryGraph, directory: str, provenance: str=None) -> list:
    """Write a graph as ``nodes.csv``, ``edges.csv`` and ``graph.json``.

    Args:
        graph (TrajectoryGraph): Graph to be exported.
        directory (str): Output directory.
        provenance (str, optional): CSV provenance line.

    Returns:
        list: Paths written.

    """
    adjacency = {str(nid): list(graph.children(nid)) for nid in range(len(graph))}
    meta = {'dhat1': str(graph.disc.dhat1),
            'dhat2': str(graph.disc.dhat2),
            'n_max': graph.n_max,
            'merge': graph.merge,
            'degenerate': graph.degenerate,
            'adjacency': adjacency}
    return [write_csv(nodes_frame(graph), os.path.join(directory, 'nodes.csv'), provenance),
            write_csv(edges_frame(graph), os.path.join(directory, 'edges.csv'), provenance),
            write_json(meta, os.path.join(directory, 'graph.json'))]


def load(directory: str) -> TrajectoryGraph:
    """Import a graph written by :func:`export`.

    Raises:
        GraphError: If the node ids are not ``0 .. n-1`` in order, or
            the edge list and adjacency disagree.

    """
    ndf = read_csv(os.path.join(directory, 'nodes.csv'))
    edf = read_csv(os.path.join(directory, 'edges.csv'))
    meta = read_json(os.path.join(directory, 'graph.json'))
    if list(ndf['id']) != list(range(len(ndf))):
        raise GraphError(f'Node ids are not contiguous in {directory}.')
    cols = (ndf[c] for c in ('id', 'k1', 'k2', 'i', 't', 'w', 'class', 'terminal'))
    nodes = [GraphNode(int(k1), int(k2), int(i), int(t), int(w),
                       node_class=NodeClass(cls),
                       terminal=bool(term),
                       id=int(nid))
             for nid, k1, k2, i, t, w, cls, term in zip(*cols)]
    children = [[] for _ in nodes]
    for p, c in zip(edf['parent_id'], edf['child_id']):
        children[int(p)].append(int(c))
    adjacency = {int(k): v for k, v in meta['adjacency'].items()}
    if any(children[k] != v for k, v in adjacency.items()):
        raise GraphError(f'Edge list and adjacency disagree in {directory}.')
    return TrajectoryGraph(nodes, children,
                           DiscretizationParams(meta['dhat1'], meta['dhat2']),
                           n_max=int(meta['n_max']),
                           merge=bool(meta['merge']),
                           degenerate=bool(meta['degenerate']))
