#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
:App:       trajhedge
:Purpose:   Exact planar geometry on integer grid displacements.

            Provides the convex hull of an integer point set and the
            classification of the origin against the hull of a node's
            one-step displacements (arbitrage-free, type I, type II).
            All tests use integer cross products; there is no
            floating point tolerance.

:Platform:  Linux/Windows | Python 3.9+
:Developer: The trajhedge developers

"""

from enum import Enum


class NodeClass(Enum):
    """Classification of a node by the hull of its displacements."""

    ARBITRAGE_FREE = 'ArbitrageFree'
    TYPE_I = 'TypeI'
    TYPE_II = 'TypeII'
    TERMINAL = 'Terminal-only'

    @property
    def is_arbitrage(self) -> bool:
        """True for type I and type II nodes."""
        return self in (NodeClass.TYPE_I, NodeClass.TYPE_II)


def cross(o: tuple, a: tuple, b: tuple) -> int:
    """Z-component of ``(a - o) x (b - o)``."""
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> list:
    """Convex hull of a planar point set (monotone chain).

    Args:
        points (iterable): ``(x, y)`` pairs.

    Returns:
        list: Hull vertices, counter-clockwise, starting from the
        lowest-leftmost point. Collinear boundary points are excluded.
        A single point or a segment is returned as-is.

    """
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts
    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def classify_points(displacements) -> NodeClass:
    """Classify the origin against the hull of integer displacements.

    Args:
        displacements (iterable): ``(dk1, dk2)`` integer pairs of the
            node's children.

    :Rules:

        - Origin in the relative interior of the hull: arbitrage-free.
          This covers a hull which is the single point ``(0, 0)`` and
          a segment with the origin strictly between its ends.
        - Origin on the boundary of the hull (relative boundary for
          degenerate hulls): type I.
        - Origin outside the hull: type II.

    Raises:
        ValueError: If no displacements are given.

    Returns:
        NodeClass: The classification.

    """
    hull = convex_hull(displacements)
    if not hull:
        raise ValueError('Cannot classify a node without children.')
    o = (0, 0)
    if len(hull) == 1:
        return NodeClass.ARBITRAGE_FREE if hull[0] == o else NodeClass.TYPE_II
    if len(hull) == 2:
        a, b = hull
        if cross(a, b, o):
            return NodeClass.TYPE_II
        # Position of the origin along a->b, scaled by |b - a|^2.
        pos = (o[0] - a[0]) * (b[0] - a[0]) + (o[1] - a[1]) * (b[1] - a[1])
        length = (b[0] - a[0])**2 + (b[1] - a[1])**2
        if 0 < pos < length:
            return NodeClass.ARBITRAGE_FREE
        if pos in (0, length):
            return NodeClass.TYPE_I
        return NodeClass.TYPE_II
    sides = [cross(hull[n], hull[(n + 1) % len(hull)], o) for n in range(len(hull))]
    if min(sides) > 0:
        return NodeClass.ARBITRAGE_FREE
    if min(sides) < 0:
        return NodeClass.TYPE_II
    return NodeClass.TYPE_I


def classify_moves(moves) -> NodeClass:
    """One-dimensional counterpart of :func:`classify_points`.

    Args:
        moves (iterable): Price moves of the traded asset.

    Returns:
        NodeClass: Arbitrage-free if all moves vanish or they straddle
        zero; type I if zero is an end of the move range; otherwise
        type II.

    """
    moves = list(moves)
    if not moves:
        raise ValueError('Cannot classify a node without children.')
    lo, hi = min(moves), max(moves)
    if lo == hi == 0 or lo < 0 < hi:
        return NodeClass.ARBITRAGE_FREE
    if lo == 0 or hi == 0:
        return NodeClass.TYPE_I
    return NodeClass.TYPE_II
