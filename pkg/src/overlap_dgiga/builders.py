"""Constructors for affine patches and block-structured multipatch boxes."""

from __future__ import annotations

from itertools import product

import numpy as np

from .bspline import TensorSpace, uniform_knots
from .geometry import SIDES, FaceId, InterfacePair, MultiPatch, Patch


def affine_patch(origin, axes, elements, degree):
    """Patch ``x = origin + sum_k xhat_k axes[k]`` on a uniform open knot mesh.

    Control points sit at the images of the Greville abscissae, so the
    parametrization is exactly affine.

    Args:
        origin: physical image of the parametric origin.
        axes: ``d`` edge vectors, one per parametric direction.
        elements: knot spans per direction (int or sequence).
        degree: spline degree (int or sequence).
    """
    axes = np.asarray(axes, dtype=float)
    d = axes.shape[0]
    elements = np.broadcast_to(elements, (d,))
    degree = np.broadcast_to(degree, (d,))
    space = TensorSpace([uniform_knots(int(e), int(p)) for e, p in zip(elements, degree)])
    cp = np.asarray(origin, dtype=float) + space.greville() @ axes
    return Patch(space, cp)


def box_patch(lo, hi, elements, degree):
    """Axis-aligned affine patch over the box ``[lo, hi]``."""
    lo = np.asarray(lo, dtype=float)
    return affine_patch(lo, np.diag(np.asarray(hi, dtype=float) - lo), elements, degree)


def block_multipatch(cuts, elements, degree, refine=None):
    """Box split into a tensor grid of axis-aligned patches.

    ``cuts[k]`` lists the patch boundaries along axis ``k``.  Patches are
    numbered with the first axis fastest.  Neighbours along axis ``k`` are
    coupled by a matching pair whose side ``a`` is the lower patch (its
    ``hi`` face) and side ``b`` the upper patch (its ``lo`` face); all outer
    faces are Dirichlet.

    Args:
        cuts: per-axis increasing coordinate lists.
        elements: knot spans per patch and direction.
        degree: spline degree.
        refine: optional ``{patch index: extra uniform refinements}``.
    """
    cuts = [np.asarray(c, dtype=float) for c in cuts]
    d = len(cuts)
    counts = [c.size - 1 for c in cuts]
    blocks = [tuple(reversed(m)) for m in product(*[range(n) for n in reversed(counts)])]
    number = {b: i for i, b in enumerate(blocks)}
    patches = []
    for b in blocks:
        lo = [cuts[k][b[k]] for k in range(d)]
        hi = [cuts[k][b[k] + 1] for k in range(d)]
        patch = box_patch(lo, hi, elements, degree)
        for _ in range((refine or {}).get(number[b], 0)):
            patch = patch.refine()
        patches.append(patch)
    interfaces, dirichlet = [], []
    ident = tuple(range(d - 1))
    for b in blocks:
        i = number[b]
        for k in range(d):
            up = list(b)
            up[k] += 1
            if up[k] < counts[k]:
                interfaces.append(InterfacePair(FaceId(i, k, "hi"), FaceId(number[tuple(up)], k, "lo"),
                                                (False,) * (d - 1), ident))
            else:
                dirichlet.append(FaceId(i, k, "hi"))
            if b[k] == 0:
                dirichlet.append(FaceId(i, k, "lo"))
    return MultiPatch(patches, interfaces, dirichlet)


def find_pair(mp, face_a, face_b):
    """Index of the interface pair joining two faces (in either order)."""
    for k, pair in enumerate(mp.interfaces):
        if {pair.a, pair.b} == {face_a, face_b}:
            return k
    raise KeyError("no interface between %r and %r" % (face_a, face_b))


__all__ = ["affine_patch", "box_patch", "block_multipatch", "find_pair", "SIDES"]
