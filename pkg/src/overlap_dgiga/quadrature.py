"""Gauss-Legendre rules on [0, 1] and their tensorization over knot spans."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class QuadRule:
    """Quadrature rule on the unit interval; weights sum to one."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return self.nodes.size


def _legendre(n, x):
    """Legendre polynomial P_n and its derivative at ``x`` (three-term recurrence)."""
    p0, p1 = np.ones_like(x), x
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@lru_cache(maxsize=None)
def _gauss_legendre(n):
    k = np.arange(1, n + 1)
    # Chebyshev-like initial guesses, descending in (-1, 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p, dp = _legendre(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x = x[::-1]
    w = w[::-1]
    # enforce exact symmetry about the midpoint
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_rule(n):
    """``n``-point Gauss-Legendre rule mapped to [0, 1] (exact to degree 2n-1)."""
    if int(n) != n or n < 1:
        raise ConfigError("number of Gauss points must be a positive integer, got %r" % (n,))
    n = int(n)
    if n == 1:
        return QuadRule(np.array([0.5]), np.array([1.0]))
    nodes, weights = _gauss_legendre(n)
    return QuadRule(nodes, weights)


def span_rule(breakpoints, rule):
    """Quadrature points and weights for every interval of a 1D mesh.

    Returns arrays of shape ``(num_intervals, rule.size)``; empty intervals
    contribute no points.
    """
    bp = np.asarray(breakpoints, dtype=float)
    a, b = bp[:-1], bp[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    pts = a[:, None] + (b - a)[:, None] * rule.nodes[None, :]
    wts = (b - a)[:, None] * rule.weights[None, :]
    return pts, wts


def tensor_points(rules_1d):
    """Tensorize per-direction ``(points, weights)`` lists of shape ``(E_k, Q_k)``.

    Returns ``(points, weights)`` with shapes ``(E, Q, d)`` and ``(E, Q)``;
    both elements and points are ordered with the first direction fastest.
    """
    pts = np.zeros((1, 1, 0))
    wts = np.ones((1, 1))
    for p1, w1 in rules_1d:
        e1, q1 = p1.shape
        e0, q0 = wts.shape
        new_p = np.empty((e1, e0, q1, q0, pts.shape[2] + 1))
        new_p[..., :-1] = pts[None, :, None, :, :]
        new_p[..., -1] = p1[:, None, :, None]
        pts = new_p.reshape(e1 * e0, q1 * q0, -1)
        wts = (w1[:, None, :, None] * wts[None, :, None, :]).reshape(e1 * e0, q1 * q0)
    return pts, wts


def element_quadrature(space, element, rule):
    """Gauss points inside one knot-span box of ``space``.

    Args:
        space: a :class:`TensorSpace`.
        element: multi-index of the element in the span grid.
        rule: the 1D rule used in every direction.

    Returns:
        ``(points, weights)`` of shapes ``(Q, d)`` and ``(Q,)``; weights are
        scaled by the box volume.  Empty spans yield zero points.
    """
    per_dir = []
    for k, kv in enumerate(space.kvs):
        bp = kv.breakpoints
        e = element[k]
        if not 0 <= e < bp.size - 1:
            raise ConfigError("element index %r outside span grid" % (element,))
        per_dir.append(span_rule(bp[e : e + 2], rule))
    pts, wts = tensor_points(per_dir)
    return pts.reshape(-1, space.dim), wts.reshape(-1)


def all_element_quadrature(space, rule):
    """Gauss points of every element, shapes ``(E, Q, d)`` and ``(E, Q)``."""
    return tensor_points([span_rule(kv.breakpoints, rule) for kv in space.kvs])


def face_quadrature(space, face_dir, element, rule):
    """Gauss points on one element of a face of the unit cube.

    The face is orthogonal to parametric direction ``face_dir``; ``element``
    indexes the spans of the remaining (tangential) directions in increasing
    order.  Returns face-parametric points ``(Q, d-1)`` and weights scaled by
    the face-element area.
    """
    tangential = [kv for k, kv in enumerate(space.kvs) if k != face_dir]
    per_dir = []
    for m, kv in enumerate(tangential):
        bp = kv.breakpoints
        e = element[m]
        if not 0 <= e < bp.size - 1:
            raise ConfigError("face element index %r outside span grid" % (element,))
        per_dir.append(span_rule(bp[e : e + 2], rule))
    pts, wts = tensor_points(per_dir)
    return pts.reshape(-1, space.dim - 1), wts.reshape(-1)


def grid_quadrature(breakpoints_per_dir, rule):
    """Flattened Gauss points over the tensor grid given by per-direction breakpoints."""
    pts, wts = tensor_points([span_rule(bp, rule) for bp in breakpoints_per_dir])
    return pts.reshape(-1, len(breakpoints_per_dir)), wts.reshape(-1)
