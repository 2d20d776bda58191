"""Built-in manufactured-solution problems for convergence studies.

Each case bundles a geometry builder, the interface pairs that are turned
into overlaps, and a :class:`ProblemSpec` with closed-form ``u``, ``grad u``
and ``f = -div(rho grad u)``.  Piecewise solutions use the patch index to
pick their smooth branch, which is then also used inside the overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .assembly import ProblemSpec
from .builders import affine_patch, block_multipatch, find_pair
from .errors import ConfigError
from .geometry import FaceId, InterfacePair, MultiPatch, all_faces

PI = math.pi


@dataclass(frozen=True)
class ExampleCase:
    """A named test problem.

    Attributes:
        name: CLI name of the case.
        build: ``build(degree, elements, non_matching) -> MultiPatch`` on the
            coarsest level.
        overlap_pairs: indices of interface pairs displaced into overlaps,
            in the order they are applied.
        spec: problem data with exact solution.
        title: one-line description.
    """

    name: str
    build: Callable
    overlap_pairs: tuple
    spec: ProblemSpec
    title: str = ""

    @property
    def rho(self):
        return self.spec.rho


def _stack(*cols):
    return np.stack(cols, axis=1)


def example_smooth_homogeneous():
    """``u = sin(pi(x+0.4)/6) sin(pi(y+0.3)/3) + x + y`` with ``rho = 1``.

    The square ``[1.6, 3.6] x [1.7, 3.7]`` is split into 2x2 patches and the
    horizontal interface chain ``y = 2.7`` becomes the overlap.
    """
    a, b = PI / 6, PI / 3

    def u(x, i):
        return np.sin(a * (x[:, 0] + 0.4)) * np.sin(b * (x[:, 1] + 0.3)) + x[:, 0] + x[:, 1]

    def grad(x, i):
        sx, cx = np.sin(a * (x[:, 0] + 0.4)), np.cos(a * (x[:, 0] + 0.4))
        sy, cy = np.sin(b * (x[:, 1] + 0.3)), np.cos(b * (x[:, 1] + 0.3))
        return _stack(a * cx * sy + 1.0, b * sx * cy + 1.0)

    def f(x, i):
        return (a * a + b * b) * np.sin(a * (x[:, 0] + 0.4)) * np.sin(b * (x[:, 1] + 0.3))

    def build(degree=2, elements=4, non_matching=False):
        return block_multipatch([[1.6, 2.6, 3.6], [1.7, 2.7, 3.7]], elements, degree,
                                refine={0: 1} if non_matching else None)

    mp = build()
    pairs = (find_pair(mp, FaceId(0, 1, "hi"), FaceId(2, 1, "lo")),
             find_pair(mp, FaceId(1, 1, "hi"), FaceId(3, 1, "lo")))
    return ExampleCase("smooth", build, pairs, ProblemSpec((1.0,) * 4, f, u, u, grad),
                       "smooth solution, rho = 1, overlap along y = 2.7")


def example_discontinuous_rho():
    """Coefficient jump at ``x = 0`` on ``[-1, 1] x [0, 1]``.

    ``u = sin(pi(2x + y))`` with ``rho = 3 pi / 2`` for ``x < 0`` and
    ``u = sin(pi(3 pi x / 2 + y))`` with ``rho = 2`` otherwise; both the
    trace and the normal flux match at ``x = 0``.  The vertical chain at
    ``x = 0`` becomes the overlap; the right patches grow into the left ones.
    """
    k = (2.0 * PI, 1.5 * PI * PI)
    rho = (1.5 * PI, 2.0)

    def side(i):
        return i % 2

    def u(x, i):
        return np.sin(k[side(i)] * x[:, 0] + PI * x[:, 1])

    def grad(x, i):
        c = np.cos(k[side(i)] * x[:, 0] + PI * x[:, 1])
        return _stack(k[side(i)] * c, PI * c)

    def f(x, i):
        s = side(i)
        return rho[s] * (k[s] ** 2 + PI ** 2) * np.sin(k[s] * x[:, 0] + PI * x[:, 1])

    def build(degree=2, elements=4, non_matching=False):
        return block_multipatch([[-1.0, 0.0, 1.0], [0.0, 0.5, 1.0]], elements, degree,
                                refine={0: 1} if non_matching else None)

    mp = build()
    pairs = (find_pair(mp, FaceId(0, 0, "hi"), FaceId(1, 0, "lo")),
             find_pair(mp, FaceId(2, 0, "hi"), FaceId(3, 0, "lo")))
    spec = ProblemSpec(tuple(rho[i % 2] for i in range(4)), f, u, u, grad)
    return ExampleCase("jump-rho", build, pairs, spec,
                       "rho = 3 pi/2 | 2 across x = 0, overlap along the jump")


def example_multiface_overlap():
    """``u = sin(pi(x+0.4)) sin(2 pi(y+0.3)) + x + y`` on the unit square.

    Four patches meet at a central cross and all four interfaces overlap:
    the right patches grow left and the top patches grow down, so the
    overlap region is bounded by several faces, each paired with the
    diametrically opposite one.
    """

    def u(x, i):
        return np.sin(PI * (x[:, 0] + 0.4)) * np.sin(2 * PI * (x[:, 1] + 0.3)) + x[:, 0] + x[:, 1]

    def grad(x, i):
        ax, ay = PI * (x[:, 0] + 0.4), 2 * PI * (x[:, 1] + 0.3)
        return _stack(PI * np.cos(ax) * np.sin(ay) + 1.0, 2 * PI * np.sin(ax) * np.cos(ay) + 1.0)

    def f(x, i):
        return 5 * PI * PI * np.sin(PI * (x[:, 0] + 0.4)) * np.sin(2 * PI * (x[:, 1] + 0.3))

    def build(degree=2, elements=4, non_matching=False):
        return block_multipatch([[0.0, 0.5, 1.0], [0.0, 0.5, 1.0]], elements, degree,
                                refine={0: 1} if non_matching else None)

    mp = build()
    pairs = tuple(find_pair(mp, FaceId(a, d, "hi"), FaceId(b, d, "lo"))
                  for a, b, d in ((0, 1, 0), (2, 3, 0), (0, 2, 1), (1, 3, 1)))
    return ExampleCase("multiface", build, pairs, ProblemSpec((1.0,) * 4, f, u, u, grad),
                       "four overlapping interfaces around a central cross")


def example_3d():
    """Two boxes meeting at the plane ``x + y = 0`` (``-1 <= x <= 0``), ``z`` in [0, 1].

    ``u = sin(pi (x+y) / 2)`` with ``rho = 1`` for ``x + y < 0`` and
    ``u = exp(sin(x+y)) - 1`` with ``rho = pi/2`` otherwise.  The ``-1``
    shift makes the traces agree on the interface; the fluxes agree as well.
    The second box grows into the first.
    """
    rho = (1.0, PI / 2)

    def w(x):
        return x[:, 0] + x[:, 1]

    def u(x, i):
        s = w(x)
        return np.sin(0.5 * PI * s) if i == 0 else np.exp(np.sin(s)) - 1.0

    def grad(x, i):
        s = w(x)
        d = 0.5 * PI * np.cos(0.5 * PI * s) if i == 0 else np.exp(np.sin(s)) * np.cos(s)
        return _stack(d, d, np.zeros_like(d))

    def f(x, i):
        s = w(x)
        if i == 0:
            return 0.5 * PI * PI * np.sin(0.5 * PI * s)
        return -2.0 * rho[1] * np.exp(np.sin(s)) * (np.cos(s) ** 2 - np.sin(s))

    def build(degree=2, elements=4, non_matching=False):
        n2 = elements * 2 if non_matching else elements
        # both parametrizations put the interface on a "lo" face with the
        # tangential coordinates (along the interface, z) in the same order
        p1 = affine_patch([0, 0, 0], [[-1, 1, 0], [-1, -1, 0], [0, 0, 1]], elements, degree)
        p2 = affine_patch([0, 0, 0], [[1, 1, 0], [-1, 1, 0], [0, 0, 1]], n2, degree)
        pair = InterfacePair(FaceId(0, 1, "lo"), FaceId(1, 0, "lo"), (False, False), (0, 1))
        outer = [f for f in all_faces(3, 0) + all_faces(3, 1) if f not in (pair.a, pair.b)]
        return MultiPatch([p1, p2], [pair], outer)

    return ExampleCase("box3d", build, (0,), ProblemSpec(rho, f, u, u, grad),
                       "3D boxes across x + y = 0, rho = 1 | pi/2")


EXAMPLES = {
    "smooth": example_smooth_homogeneous,
    "jump-rho": example_discontinuous_rho,
    "multiface": example_multiface_overlap,
    "box3d": example_3d,
}


def get_example(name):
    try:
        return EXAMPLES[name]()
    except KeyError:
        raise ConfigError("unknown example %r (choose from %s)"
                          % (name, ", ".join(sorted(EXAMPLES)))) from None
