"""Univariate and tensor-product B-spline bases on the unit interval/cube.

Basis functions are evaluated with the triangular Cox-de Boor scheme,
vectorized over arrays of evaluation points.  Tensor-product functions are
numbered lexicographically with the first parametric direction running
fastest, i.e. ``flat = j1 + n1 * (j2 + n2 * j3)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from .errors import DegreeError, KnotDomainError

_EPS = 1e-14


class KnotVector:
    """An open knot vector on [0, 1] together with a spline degree.

    Args:
        knots: nondecreasing sequence of knots starting with ``p+1`` zeros
            and ending with ``p+1`` ones.
        degree: the spline degree ``p``.

    Raises:
        ValueError: if the knot vector is not open, not sorted, has interior
            multiplicities above ``p`` or yields fewer than ``p+1`` functions.
    """

    __slots__ = ("knots", "degree", "__dict__")

    def __init__(self, knots, degree):
        kv = np.array(knots, dtype=float)
        kv.setflags(write=False)
        p = int(degree)
        if p < 0:
            raise ValueError("degree must be nonnegative")
        if kv.ndim != 1 or kv.size < 2 * p + 2:
            raise ValueError("knot vector too short for degree %d" % p)
        if np.any(np.diff(kv) < 0):
            raise ValueError("knots must be nondecreasing")
        if not (np.all(kv[: p + 1] == 0.0) and np.all(kv[-p - 1 :] == 1.0)):
            raise ValueError("knot vector must be open on [0, 1]")
        if kv[p + 1] == 0.0 or kv[-p - 2] == 1.0:
            raise ValueError("end knots must have multiplicity exactly p+1")
        _, counts = np.unique(kv, return_counts=True)
        if np.any(counts[1:-1] > p):
            raise ValueError("interior knot multiplicity exceeds degree")
        self.knots = kv
        self.degree = p

    def __repr__(self):
        return "KnotVector(%r, %d)" % (self.knots.tolist(), self.degree)

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.knots, other.knots)

    def __hash__(self):
        return hash((self.degree, self.knots.tobytes()))

    @property
    def size(self):
        """Number of basis functions ``n = len(knots) - p - 1``."""
        return self.knots.size - self.degree - 1

    @cached_property
    def breakpoints(self):
        """Distinct knot values (the mesh of the interval)."""
        return np.unique(self.knots)

    @property
    def num_spans(self):
        return self.breakpoints.size - 1

    @cached_property
    def span_indices(self):
        """Knot index ``i`` of every nonempty span ``[knots[i], knots[i+1])``."""
        p = self.degree
        idx = np.nonzero(np.diff(self.knots) > 0)[0]
        return idx[(idx >= p) & (idx < self.size)]

    @property
    def mesh_size(self):
        return float(np.max(np.diff(self.breakpoints)))

    def greville(self):
        """Greville abscissae (knot averages), one per basis function."""
        p = self.degree
        if p == 0:
            return 0.5 * (self.knots[:-1] + self.knots[1:])
        windows = np.lib.stride_tricks.sliding_window_view(self.knots[1:-1], p)
        return windows.mean(axis=1)


def uniform_knots(num_spans, degree):
    """Open knot vector with ``num_spans`` equal spans and simple interior knots."""
    inner = np.linspace(0.0, 1.0, num_spans + 1)
    kv = np.concatenate([np.zeros(degree), inner, np.ones(degree)])
    return KnotVector(kv, degree)


def _check_domain(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise KnotDomainError("parameter value outside [0, 1]")
    return x


def find_spans(kv, x):
    """Vectorized :func:`find_span`."""
    x = _check_domain(x)
    spans = np.searchsorted(kv.knots, x, side="right") - 1
    return np.clip(spans, kv.degree, kv.size - 1)


def find_span(kv, x):
    """Index ``i`` with ``knots[i] <= x < knots[i+1]``.

    The right endpoint ``x = 1`` belongs to the last nonempty span.
    """
    return int(find_spans(kv, np.array([x]))[0])


def _ders_table(kv, spans, x, order):
    """Basis values and derivatives up to ``order`` at points ``x``.

    Returns an array of shape ``(len(x), order + 1, p + 1)``.
    """
    p = kv.degree
    t = kv.knots
    npts = x.size
    ndu = np.zeros((npts, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((npts, p + 1))
    right = np.zeros((npts, p + 1))
    for j in range(1, p + 1):
        left[:, j] = x - t[spans + 1 - j]
        right[:, j] = t[spans + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            # lower triangle stores knot differences; they contain the
            # current (nonempty) span so they never vanish
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved

    ders = np.zeros((npts, order + 1, p + 1))
    ders[:, 0, :] = ndu[:, :, p]
    if order == 0:
        return ders
    a = np.zeros((npts, 2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[:] = 0.0
        a[:, 0, 0] = 1.0
        for k in range(1, order + 1):
            d = np.zeros(npts)
            rk, pk = r - k, p - k
            if r >= k:
                a[:, s2, 0] = a[:, s1, 0] / ndu[:, pk + 1, rk]
                d += a[:, s2, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[:, s2, j] = (a[:, s1, j] - a[:, s1, j - 1]) / ndu[:, pk + 1, rk + j]
                d += a[:, s2, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[:, s2, k] = -a[:, s1, k - 1] / ndu[:, pk + 1, r]
                d += a[:, s2, k] * ndu[:, r, pk]
            ders[:, k, r] = d
            s1, s2 = s2, s1
    factor = p
    for k in range(1, order + 1):
        ders[:, k, :] *= factor
        factor *= p - k
    return ders


def eval_basis_derivs_many(kv, x, order=1):
    """Vectorized basis evaluation.

    Args:
        kv: the knot vector.
        x: array of points in [0, 1].
        order: highest derivative order, at most the degree.

    Returns:
        ``(first, table)`` where ``first`` holds the index of the first
        possibly nonzero function per point and ``table`` has shape
        ``(len(x), order + 1, p + 1)``.
    """
    if order < 0 or order > kv.degree:
        raise DegreeError("derivative order %d exceeds degree %d" % (order, kv.degree))
    x = np.atleast_1d(_check_domain(x)).ravel()
    spans = find_spans(kv, x)
    return spans - kv.degree, _ders_table(kv, spans, x, order)


def eval_basis(kv, x):
    """The ``p+1`` possibly nonzero basis values at ``x``.

    Returns:
        ``(first, values)`` with ``values[a] = B_{first+a,p}(x)``.
    """
    first, table = eval_basis_derivs_many(kv, np.array([x]), 0)
    return int(first[0]), table[0, 0]


def eval_basis_derivs(kv, x, order):
    """Values and derivatives up to ``order`` at a single point.

    Returns ``(first, table)`` with ``table`` of shape ``(order+1, p+1)``;
    row ``r`` holds the ``r``-th derivatives.
    """
    first, table = eval_basis_derivs_many(kv, np.array([x]), order)
    return int(first[0]), table[0]


def collocation_matrix(kv, x):
    """Dense matrix ``M[m, j] = B_j(x_m)``."""
    first, table = eval_basis_derivs_many(kv, x, 0)
    out = np.zeros((first.size, kv.size))
    rows = np.arange(first.size)[:, None]
    out[rows, first[:, None] + np.arange(kv.degree + 1)] = table[:, 0, :]
    return out


def refine_uniform(kv):
    """Insert the midpoint of every nonempty span once."""
    bp = kv.breakpoints
    mids = 0.5 * (bp[:-1] + bp[1:])
    return KnotVector(np.sort(np.concatenate([kv.knots, mids])), kv.degree)


def insert_knot_matrix(kv, u):
    """Boehm insertion of a single knot ``u``.

    Returns the refined knot vector and the ``(n+1) x n`` matrix mapping
    coarse coefficients to fine coefficients.
    """
    p, t = kv.degree, kv.knots
    k = find_span(kv, u)
    n = kv.size
    mat = np.zeros((n + 1, n))
    for i in range(n + 1):
        if i <= k - p:
            mat[i, i] = 1.0
        elif i >= k + 1:
            mat[i, i - 1] = 1.0
        else:
            alpha = (u - t[i]) / (t[i + p] - t[i])
            mat[i, i] = alpha
            mat[i, i - 1] = 1.0 - alpha
    new = KnotVector(np.sort(np.append(t, u)), p)
    return new, mat


def prolongation(coarse, fine):
    """Matrix ``P`` with ``fine_coeffs = P @ coarse_coeffs`` for nested spaces.

    ``fine`` must contain every knot of ``coarse`` (with at least the same
    multiplicity) and have the same degree.
    """
    if coarse.degree != fine.degree:
        raise ValueError("degrees differ")
    remaining = list(fine.knots)
    for u in coarse.knots:
        for i, v in enumerate(remaining):
            if v == u:
                del remaining[i]
                break
        else:
            raise ValueError("fine knot vector does not contain the coarse one")
    current = coarse
    mat = np.eye(coarse.size)
    for u in sorted(remaining):
        current, step = insert_knot_matrix(current, u)
        mat = step @ mat
    return mat


@dataclass(frozen=True)
class LocalBasis:
    """Nonzero tensor-product basis functions at a set of points.

    Attributes:
        indices: ``(N, L)`` flat indices of the local functions.
        values: ``(N, L)`` basis values.
        grads: ``(N, L, d)`` parametric gradients (``None`` if not requested).
    """

    indices: np.ndarray
    values: np.ndarray
    grads: np.ndarray | None


class TensorSpace:
    """Tensor product of univariate B-spline spaces on ``[0, 1]^d``."""

    def __init__(self, knot_vectors):
        kvs = tuple(knot_vectors)
        if not 1 <= len(kvs) <= 3:
            raise ValueError("only 1, 2 or 3 parametric directions are supported")
        self.kvs = kvs

    def __repr__(self):
        return "TensorSpace(%r)" % (self.kvs,)

    def __eq__(self, other):
        return isinstance(other, TensorSpace) and self.kvs == other.kvs

    def __hash__(self):
        return hash(self.kvs)

    @property
    def dim(self):
        return len(self.kvs)

    @property
    def degrees(self):
        return tuple(kv.degree for kv in self.kvs)

    @property
    def shape(self):
        """Number of basis functions per direction."""
        return tuple(kv.size for kv in self.kvs)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def local_size(self):
        return int(np.prod([p + 1 for p in self.degrees]))

    @property
    def num_elements(self):
        return tuple(kv.num_spans for kv in self.kvs)

    def flat_index(self, multi):
        """Flat index of a multi-index (first direction fastest)."""
        multi = np.asarray(multi)
        return np.ravel_multi_index(tuple(multi[..., k] for k in range(self.dim)),
                                    self.shape, order="F")

    def multi_index(self, flat):
        """Inverse of :meth:`flat_index`."""
        return np.stack(np.unravel_index(flat, self.shape, order="F"), axis=-1)

    def refine(self):
        return TensorSpace(refine_uniform(kv) for kv in self.kvs)

    def greville(self):
        """Greville points of all tensor-product functions, shape ``(n, d)``."""
        grids = np.meshgrid(*[kv.greville() for kv in self.kvs], indexing="ij")
        return np.stack([g.ravel(order="F") for g in grids], axis=-1)

    def tabulate(self, points, deriv=True):
        """Evaluate all nonzero basis functions at ``points`` of shape ``(N, d)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError("points must have %d coordinates" % self.dim)
        order = 1 if deriv else 0
        firsts, tables = [], []
        for k, kv in enumerate(self.kvs):
            if deriv and kv.degree == 0:
                raise DegreeError("gradients of degree-0 splines are not supported")
            f, tab = eval_basis_derivs_many(kv, pts[:, k], order)
            firsts.append(f)
            tables.append(tab)

        npts = pts.shape[0]
        values = np.ones((npts, 1))
        indices = np.zeros((npts, 1), dtype=np.int64)
        grads = [np.ones((npts, 1)) for _ in range(self.dim)] if deriv else None
        stride = 1
        for k, kv in enumerate(self.kvs):
            q = kv.degree + 1
            loc = firsts[k][:, None] + np.arange(q)
            # new direction varies slowest among those already combined
            indices = (indices[:, None, :] + stride * loc[:, :, None]).reshape(npts, -1)
            if deriv:
                for m in range(self.dim):
                    row = 1 if m == k else 0
                    grads[m] = (grads[m][:, None, :] * tables[k][:, row, :, None]).reshape(npts, -1)
            values = (values[:, None, :] * tables[k][:, 0, :, None]).reshape(npts, -1)
            stride *= kv.size
        g = np.stack(grads, axis=-1) if deriv else None
        return LocalBasis(indices, values, g)


def tensor_eval(space, xhat, order=1):
    """Nonzero tensor-product basis values (and gradients) at one point.

    Returns:
        ``(indices, values, grads)`` with ``(p+1)^d`` entries each; ``grads``
        is ``None`` when ``order == 0``.
    """
    loc = space.tabulate(np.asarray(xhat, dtype=float)[None, :], deriv=order >= 1)
    grads = None if loc.grads is None else loc.grads[0]
    return loc.indices[0], loc.values[0], grads


def element_grid(space):
    """All element multi-indices of the space, first direction fastest."""
    ranges = [range(n) for n in space.num_elements]
    return [tuple(reversed(m)) for m in product(*reversed(ranges))]
