"""Patch parametrizations, multipatch topology and overlap construction.

A face of the unit cube is identified by the parametric direction it is
orthogonal to (0-based) and a side, ``"lo"`` (coordinate 0) or ``"hi"``
(coordinate 1).  Face-parametric coordinates are the remaining parametric
coordinates in increasing direction order.

Points on the two faces of an interface are paired through the face
parametric coordinate: the orientation map of the pair sends a point of
face ``a`` to face ``b`` by an axis permutation followed by optional
reversals.  No inverse of a volume map is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .bspline import TensorSpace, prolongation, refine_uniform
from .errors import GeometryError, SingularGeometryError, TopologyError
from .quadrature import all_element_quadrature, gauss_rule

SIDES = ("lo", "hi")
DET_TOL = 1e-12


@dataclass(frozen=True)
class FaceId:
    """A face of one patch: ``dir`` is 0-based, ``side`` is ``"lo"`` or ``"hi"``."""

    patch: int
    dir: int
    side: str

    def __post_init__(self):
        if self.side not in SIDES:
            raise TopologyError("face side must be 'lo' or 'hi', got %r" % (self.side,))
        if self.dir < 0 or self.patch < 0:
            raise TopologyError("negative patch or direction index in %r" % (self,))

    @property
    def coord(self):
        """Value of the fixed parametric coordinate on this face."""
        return 0.0 if self.side == "lo" else 1.0

    @property
    def sign(self):
        return -1.0 if self.side == "lo" else 1.0

    def tangential_dirs(self, dim):
        return [k for k in range(dim) if k != self.dir]


@dataclass(frozen=True)
class InterfacePair:
    """Two patch faces coupled by DG fluxes.

    Face ``b``'s parametric coordinates are obtained from face ``a``'s by
    ``t_b[m] = t_a[perm[m]]``, reversed (``1 - .``) where ``flip[m]``.
    ``width`` is the nominal overlap width set by :func:`make_overlap`.
    """

    a: FaceId
    b: FaceId
    flip: tuple = ()
    perm: tuple = ()
    kind: str = "matching"
    width: float = 0.0

    def __post_init__(self):
        if self.kind not in ("matching", "overlap"):
            raise TopologyError("interface kind must be 'matching' or 'overlap'")
        object.__setattr__(self, "flip", tuple(bool(f) for f in self.flip))
        object.__setattr__(self, "perm", tuple(int(q) for q in self.perm))

    def side(self, which):
        return self.a if which == 0 else self.b


def check_orientation(pair, dim):
    m = dim - 1
    if len(pair.flip) != m or len(pair.perm) != m or sorted(pair.perm) != list(range(m)):
        raise TopologyError("invalid orientation data flip=%r perm=%r for dimension %d"
                            % (pair.flip, pair.perm, dim))
    if pair.a.dir >= dim or pair.b.dir >= dim:
        raise TopologyError("face direction out of range in %r" % (pair,))


def orient(pair, t, from_side):
    """Map face-parametric points ``t`` (``(N, d-1)``) to the other face of ``pair``."""
    t = np.atleast_2d(np.asarray(t, dtype=float))
    flip = np.array(pair.flip, dtype=bool)
    perm = np.array(pair.perm, dtype=int)
    if from_side == 0:
        out = t[:, perm]
        out[:, flip] = 1.0 - out[:, flip]
        return out
    s = t.copy()
    s[:, flip] = 1.0 - s[:, flip]
    out = np.empty_like(s)
    out[:, perm] = s
    return out


def embed_face_points(dim, face, t):
    """Lift face-parametric points ``(N, d-1)`` onto the face of ``[0,1]^d``."""
    t = np.asarray(t, dtype=float).reshape(-1, dim - 1)
    xhat = np.empty((t.shape[0], dim))
    xhat[:, face.dir] = face.coord
    xhat[:, face.tangential_dirs(dim)] = t
    return xhat


@dataclass(frozen=True)
class PointGeometry:
    """Geometry map and basis data at a batch of parametric points."""

    basis: object
    x: np.ndarray
    jac: np.ndarray
    det: np.ndarray
    jinv: np.ndarray

    def physical_grads(self):
        """Basis gradients w.r.t. physical coordinates, shape ``(N, L, d)``."""
        return np.einsum("nlb,nba->nla", self.basis.grads, self.jinv)


class Patch:
    """A B-spline patch ``x = sum_j C_j B_j(xhat)``.

    Args:
        space: the :class:`TensorSpace` of the patch.
        control_points: array ``(n, d)`` in lexicographic order (first
            parametric direction fastest).
    """

    def __init__(self, space, control_points):
        cp = np.array(control_points, dtype=float)
        if cp.ndim != 2 or cp.shape[0] != space.size:
            raise GeometryError("expected %d control points, got %s"
                                % (space.size, cp.shape[0] if cp.ndim == 2 else cp.shape))
        if cp.shape[1] != space.dim:
            raise GeometryError("control points must have %d coordinates" % space.dim)
        cp.setflags(write=False)
        self.space = space
        self.control_points = cp

    def __repr__(self):
        return "Patch(%r, <%d control points>)" % (self.space, self.space.size)

    @property
    def dim(self):
        return self.space.dim

    def evaluate(self, xhat, index=None, check=True):
        """Map, Jacobian and basis at parametric points ``(N, d)``.

        Raises:
            SingularGeometryError: if ``check`` and ``|det J| < 1e-12`` anywhere.
        """
        basis = self.space.tabulate(xhat, deriv=True)
        cp = self.control_points[basis.indices]  # (N, L, d)
        x = np.einsum("nl,nla->na", basis.values, cp)
        jac = np.einsum("nla,nlb->nab", cp, basis.grads)
        det = np.linalg.det(jac)
        bad = np.abs(det) < DET_TOL
        if check and np.any(bad):
            i = int(np.argmax(bad))
            raise SingularGeometryError(
                "singular Jacobian (det=%.3e) on patch %s at xhat=%s"
                % (det[i], index, np.atleast_2d(xhat)[i].tolist()),
                patch=index, point=np.atleast_2d(xhat)[i])
        with np.errstate(divide="ignore", invalid="ignore"):
            jinv = np.linalg.inv(np.where(bad[:, None, None], np.eye(self.dim), jac))
        return PointGeometry(basis, x, jac, det, jinv)

    def map_points(self, xhat):
        basis = self.space.tabulate(xhat, deriv=False)
        return np.einsum("nl,nla->na", basis.values, self.control_points[basis.indices])

    def corner_grid(self):
        """Images of all mesh vertices, shape ``(V_1, ..., V_d, d)`` (direction-major)."""
        bps = [kv.breakpoints for kv in self.space.kvs]
        grids = np.meshgrid(*bps, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        return self.map_points(pts).reshape(*[b.size for b in bps], self.dim)

    def element_diameters(self):
        """Diameter of every physical element, measured between vertex images."""
        verts = self.corner_grid()
        d = self.dim
        corners = []
        for offs in product((0, 1), repeat=d):
            sl = tuple(slice(o, o + n - 1) for o, n in zip(offs, verts.shape[:d]))
            corners.append(verts[sl])
        best = None
        for i in range(len(corners)):
            for j in range(i + 1, len(corners)):
                dist = np.linalg.norm(corners[i] - corners[j], axis=-1)
                best = dist if best is None else np.maximum(best, dist)
        return best

    def mesh_size(self):
        return float(np.max(self.element_diameters()))

    def min_jacobian(self, quad_points=None):
        """Smallest ``det J`` over the Gauss points of all elements."""
        n = quad_points or (max(self.space.degrees) + 1)
        pts, _ = all_element_quadrature(self.space, gauss_rule(n))
        geo = self.evaluate(pts.reshape(-1, self.dim), check=False)
        return float(np.min(geo.det))

    def refine(self):
        """Uniformly refined patch describing the same geometry."""
        fine = [refine_uniform(kv) for kv in self.space.kvs]
        cp = self.control_points.reshape(*reversed(self.space.shape), self.dim)
        for k, (kc, kf) in enumerate(zip(self.space.kvs, fine)):
            mat = prolongation(kc, kf)
            axis = self.dim - 1 - k
            cp = np.moveaxis(np.tensordot(mat, cp, axes=([1], [axis])), 0, axis)
        return Patch(TensorSpace(fine), cp.reshape(-1, self.dim))


def map_point(patch, xhat):
    """Physical image of a single parametric point."""
    return patch.map_points(np.asarray(xhat, dtype=float)[None, :])[0]


def jacobian(patch, xhat, index=None):
    """Jacobian matrix ``J[a, b] = dx_a / dxhat_b``, its determinant and inverse."""
    geo = patch.evaluate(np.asarray(xhat, dtype=float)[None, :], index=index)
    return geo.jac[0], float(geo.det[0]), geo.jinv[0]


@dataclass(frozen=True)
class FaceGeometry:
    """Physical data at points of a patch face."""

    geo: PointGeometry
    normal: np.ndarray
    measure: np.ndarray


def face_geometry(patch, face, t, index=None):
    """Physical points, unit outward normals and surface measure factors on a face.

    The surface measure equals ``|det J| * |J^{-T} e_k|`` which is the column
    norm (2D) or cross-product norm (3D) of the face-restricted Jacobian.
    """
    xhat = embed_face_points(patch.dim, face, t)
    geo = patch.evaluate(xhat, index=index)
    grad_k = geo.jinv[:, face.dir, :]  # row k of J^{-1} = J^{-T} e_k
    norm = np.linalg.norm(grad_k, axis=1)
    normal = face.sign * np.sign(geo.det)[:, None] * grad_k / norm[:, None]
    measure = np.abs(geo.det) * norm
    return FaceGeometry(geo, normal, measure)


def face_quad_geometry(patch, face, t):
    """Single-point :func:`face_geometry`: ``(x, normal, measure)``."""
    fg = face_geometry(patch, face, np.atleast_1d(np.asarray(t, dtype=float))[None, :])
    return fg.geo.x[0], fg.normal[0], float(fg.measure[0])


def all_faces(dim, patch):
    return [FaceId(patch, k, s) for k in range(dim) for s in SIDES]


@dataclass(frozen=True)
class MultiPatch:
    """Patches, interface pairs and outer Dirichlet faces."""

    patches: tuple
    interfaces: tuple = ()
    dirichlet: tuple = ()
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        object.__setattr__(self, "interfaces", tuple(self.interfaces))
        object.__setattr__(self, "dirichlet", tuple(self.dirichlet))
        if self.validate:
            self.check_topology()

    @property
    def dim(self):
        return self.patches[0].dim

    def check_topology(self):
        """Every face must be on exactly one interface or on the outer boundary."""
        if not self.patches:
            raise TopologyError("multipatch without patches")
        d = self.dim
        if any(p.dim != d for p in self.patches):
            raise TopologyError("patches of mixed dimension")
        seen = {}
        faces = [(f, "dirichlet") for f in self.dirichlet]
        for i, pair in enumerate(self.interfaces):
            check_orientation(pair, d)
            faces += [(pair.a, "interface %d" % i), (pair.b, "interface %d" % i)]
        for f, where in faces:
            if f.patch >= len(self.patches) or f.dir >= d:
                raise TopologyError("%r refers to a nonexistent patch or direction" % (f,))
            if f in seen:
                raise TopologyError("%r used twice (%s and %s)" % (f, seen[f], where))
            seen[f] = where
        for i in range(len(self.patches)):
            for f in all_faces(d, i):
                if f not in seen:
                    raise TopologyError("%r is neither an interface nor a Dirichlet face" % (f,))

    @property
    def num_dofs(self):
        return sum(p.space.size for p in self.patches)

    def offsets(self):
        sizes = [p.space.size for p in self.patches]
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(sizes)]))

    def mesh_size(self):
        """Maximum physical element diameter over all patches."""
        return max(p.mesh_size() for p in self.patches)

    def refine(self):
        return replace(self, patches=tuple(p.refine() for p in self.patches))

    def replace_patch(self, index, patch):
        patches = list(self.patches)
        patches[index] = patch
        return replace(self, patches=tuple(patches))


def partner_point(mp, pair, side, t):
    """Partner of face-parametric points ``t`` across interface ``pair``.

    Args:
        mp: the multipatch.
        pair: an :class:`InterfacePair` or its index in ``mp.interfaces``.
        side: 0 if ``t`` lies on face ``a``, 1 if on face ``b``.
        t: face-parametric points, shape ``(N, d-1)`` or ``(d-1,)``.

    Returns:
        ``(partner_patch_index, xhat)`` where ``xhat`` are the parametric
        points of the partner patch (same leading shape as ``t``).
    """
    if not isinstance(pair, InterfacePair):
        pair = mp.interfaces[pair]
    d = mp.dim
    check_orientation(pair, d)
    if side not in (0, 1):
        raise TopologyError("side must be 0 or 1")
    t_arr = np.asarray(t, dtype=float)
    single = t_arr.ndim == 1
    tt = orient(pair, t_arr.reshape(-1, d - 1), side)
    other = pair.side(1 - side)
    xhat = embed_face_points(d, other, tt)
    return other.patch, (xhat[0] if single else xhat)


def partner_face_coords(pair, side, t):
    """Face-parametric coordinates of the partner points on the other face."""
    return orient(pair, t, side)


def _layer_indices(space, face):
    """Flat indices of the control points on ``face``, ordered by tangential multi-index."""
    shape = space.shape
    ranges = [range(n) for n in shape]
    ranges[face.dir] = [0 if face.side == "lo" else shape[face.dir] - 1]
    multi = np.array([tuple(reversed(m)) for m in product(*reversed(ranges))])
    return space.flat_index(multi)


def make_overlap(mp, pair_index, d_o, check=True):
    """Displace side ``b``'s interface control points by ``d_o`` into side ``a``.

    Each control point of face ``b``'s layer moves along the interface normal
    evaluated at its Greville abscissa, averaged between ``n_b`` and the
    reversed partner normal ``-n_a``.  Only this single layer moves, so the
    patch ``b`` grows into patch ``a`` and the far boundary is unchanged.

    Returns a new multipatch whose pair has ``kind="overlap"`` and nominal
    ``width=d_o``; ``d_o == 0`` returns ``mp`` itself.

    Raises:
        GeometryError: if ``d_o < 0`` or the displaced patch folds over.
    """
    if d_o < 0:
        raise GeometryError("overlap width must be nonnegative")
    if d_o == 0:
        return mp
    pair = mp.interfaces[pair_index]
    fb = pair.b
    pb = mp.patches[fb.patch]
    pa = mp.patches[pair.a.patch]
    d = mp.dim
    space = pb.space
    idx = _layer_indices(space, fb)
    tang = fb.tangential_dirs(d)
    grev = space.greville()[idx][:, tang]
    nb = face_geometry(pb, fb, grev, index=fb.patch).normal
    _, xa = partner_point(mp, pair, 1, grev)
    ta = xa[:, pair.a.tangential_dirs(d)]
    na = face_geometry(pa, pair.a, ta, index=pair.a.patch).normal
    direction = nb - na
    direction /= np.linalg.norm(direction, axis=1)[:, None]
    cp = pb.control_points.copy()
    cp[idx] += d_o * direction
    new_patch = Patch(space, cp)
    if check and new_patch.min_jacobian() <= DET_TOL:
        raise GeometryError("overlap width %.3g folds patch %d (det J <= 0)" % (d_o, fb.patch))
    interfaces = list(mp.interfaces)
    interfaces[pair_index] = replace(pair, kind="overlap", width=float(pair.width + d_o))
    return replace(mp.replace_patch(fb.patch, new_patch), interfaces=tuple(interfaces))


def sample_face(dim, samples):
    """Uniform sample grid (including end points) on a face, shape ``(S^(d-1), d-1)``."""
    g = np.linspace(0.0, 1.0, samples)
    grids = np.meshgrid(*([g] * (dim - 1)), indexing="ij")
    return np.stack([x.ravel() for x in grids], axis=-1)


def pair_distances(mp, pair_index, t):
    """Distances between points of face ``a`` at ``t`` and their partners."""
    pair = mp.interfaces[pair_index]
    pa = mp.patches[pair.a.patch]
    xa = pa.map_points(embed_face_points(mp.dim, pair.a, t))
    ib, xhb = partner_point(mp, pair, 0, t)
    xb = mp.patches[ib].map_points(xhb)
    return np.linalg.norm(xa - xb, axis=1)


def overlap_width(mp, pair_index, samples=100):
    """Sampled overlap width: max distance between paired face points.

    This is a lower bound of the supremum over the face; it converges
    as ``samples`` grows.
    """
    return float(np.max(pair_distances(mp, pair_index, sample_face(mp.dim, samples))))


def face_normal_alignment(mp, pair_index, samples=20):
    """Minimum of ``-n_a . n_b`` over paired sample points (1 = anti-parallel)."""
    pair = mp.interfaces[pair_index]
    t = sample_face(mp.dim, samples)
    na = face_geometry(mp.patches[pair.a.patch], pair.a, t).normal
    tb = orient(pair, t, 0)
    nb = face_geometry(mp.patches[pair.b.patch], pair.b, tb).normal
    return float(np.min(-np.sum(na * nb, axis=1)))


def detect_orientation(mp, face_a, face_b, tol=1e-8):
    """Find ``(flip, perm)`` making the two faces coincide at sample points.

    Convenience validator for matching interfaces; returns ``None`` if no
    orientation fits.
    """
    from itertools import permutations

    d = mp.dim
    t = sample_face(d, 5)
    xa = mp.patches[face_a.patch].map_points(embed_face_points(d, face_a, t))
    for perm in permutations(range(d - 1)):
        for flip in product((False, True), repeat=d - 1):
            pair = InterfacePair(face_a, face_b, flip, perm)
            tb = orient(pair, t, 0)
            xb = mp.patches[face_b.patch].map_points(embed_face_points(d, face_b, tb))
            if np.max(np.linalg.norm(xa - xb, axis=1)) < tol:
                return flip, perm
    return None
