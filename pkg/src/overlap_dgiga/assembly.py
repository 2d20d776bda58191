"""Assembly of the DG-IGA stiffness matrix and load vector.

The discrete bilinear form is split into four sparse parts

* ``V``: patch-wise diffusion ``sum_i rho_i (grad u, grad v)``,
* ``N``: symmetric Nitsche terms on outer Dirichlet faces,
* ``C``: interface consistency fluxes ``-(avg flux . n_self) v_self``,
  integrated separately over each face of every interface pair,
* ``P``: interface penalties ``eta {rho} / h (u_self - u_partner) v_self``.

The symmetric variant uses ``V + N + C + C^T + (P + P^T) / 2``; for matching
interfaces this is exactly the classical SIPG form.  When the two faces of a
pair do not coincide (an overlap) ``C^T`` and the symmetrized penalty keep the
matrix symmetric.  The one-sided variant uses ``V + N + C + P`` with the flux
taken from the own side only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .geometry import embed_face_points, face_geometry, orient
from .quadrature import all_element_quadrature, gauss_rule, grid_quadrature

VARIANTS = ("symmetric", "one_sided")


@dataclass(frozen=True)
class ProblemSpec:
    """Diffusion problem data.

    All callables take physical points ``x`` of shape ``(N, d)`` and the
    patch index, so that each patch can carry its own smooth branch of a
    piecewise-defined solution.

    Attributes:
        rho: constant diffusion coefficient per patch.
        source: ``f(x, patch) -> (N,)``.
        dirichlet: ``u_D(x, patch) -> (N,)``.
        exact: optional exact solution ``u(x, patch) -> (N,)``.
        exact_grad: optional gradient ``grad u(x, patch) -> (N, d)``.
    """

    rho: tuple
    source: Callable
    dirichlet: Callable
    exact: Optional[Callable] = None
    exact_grad: Optional[Callable] = None

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        if not rho or any(not (r > 0) for r in rho):
            raise ConfigError("diffusion coefficients must be positive, got %r" % (rho,))
        object.__setattr__(self, "rho", rho)


@dataclass(frozen=True)
class AssemblyConfig:
    """Penalty, flux variant and Gauss points per direction.

    ``penalty`` and ``quad_points`` default to ``4 (p+1)^2`` and ``p+1`` for
    the largest degree ``p`` of the multipatch.
    """

    penalty: Optional[float] = None
    variant: str = "symmetric"
    quad_points: Optional[int] = None

    def __post_init__(self):
        if self.penalty is not None and not self.penalty > 0:
            raise ConfigError("penalty must be positive")
        if self.variant not in VARIANTS:
            raise ConfigError("unknown flux variant %r" % (self.variant,))
        if self.quad_points is not None and self.quad_points < 1:
            raise ConfigError("quad_points must be >= 1")

    def resolved(self, degree):
        eta = self.penalty if self.penalty is not None else 4.0 * (degree + 1) ** 2
        nq = self.quad_points if self.quad_points is not None else degree + 1
        return eta, nq


@dataclass(frozen=True)
class LinearSystem:
    """Assembled system over the concatenated per-patch coefficients."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    offsets: tuple
    multipatch: object = None
    symmetric: bool = True

    @property
    def num_dofs(self):
        return self.rhs.size


def _max_degree(mp):
    return max(max(p.space.degrees) for p in mp.patches)


def _union_breakpoints(values, tol=1e-13):
    v = np.unique(np.concatenate(values))
    keep = np.concatenate([[True], np.diff(v) > tol])
    return v[keep]


def interface_breakpoints(mp, pair, side):
    """Union of both faces' knot lines, in face coordinates of ``side``.

    Gauss points on the union cells lie strictly inside a knot span of both
    faces, so the paired integrands are smooth on every cell.
    """
    d = mp.dim
    own = pair.side(side)
    other = pair.side(1 - side)
    own_kvs = [mp.patches[own.patch].space.kvs[k] for k in own.tangential_dirs(d)]
    other_kvs = [mp.patches[other.patch].space.kvs[k] for k in other.tangential_dirs(d)]
    out = []
    for m in range(d - 1):
        if side == 0:
            # own direction m corresponds to partner direction j with perm[j] == m
            j = pair.perm.index(m)
            bp = other_kvs[j].breakpoints
            bp = 1.0 - bp if pair.flip[j] else bp
        else:
            j = pair.perm[m]
            bp = other_kvs[j].breakpoints
            bp = 1.0 - bp if pair.flip[m] else bp
        out.append(_union_breakpoints([own_kvs[m].breakpoints, bp]))
    return out


class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, rows, cols, vals):
        self.rows.append(np.ravel(rows))
        self.cols.append(np.ravel(cols))
        self.vals.append(np.ravel(vals))

    def matrix(self, n):
        if not self.rows:
            return sp.csr_matrix((n, n))
        coo = sp.coo_matrix((np.concatenate(self.vals),
                             (np.concatenate(self.rows), np.concatenate(self.cols))),
                            shape=(n, n))
        return coo.tocsr()


def _pair_blocks(rows, cols):
    r = np.broadcast_to(rows[:, :, None], rows.shape + (cols.shape[1],))
    c = np.broadcast_to(cols[:, None, :], (cols.shape[0], rows.shape[1], cols.shape[1]))
    return r, c


class Assembler:
    """Accumulates the parts of the DG-IGA system for one multipatch."""

    def __init__(self, mp, spec, cfg=None):
        cfg = cfg or AssemblyConfig()
        if len(spec.rho) != len(mp.patches):
            raise ConfigError("need one diffusion coefficient per patch (%d), got %d"
                              % (len(mp.patches), len(spec.rho)))
        self.mp = mp
        self.spec = spec
        self.cfg = cfg
        self.penalty, nq = cfg.resolved(_max_degree(mp))
        self.rule = gauss_rule(nq)
        self.offsets = mp.offsets()
        self.n = self.offsets[-1]
        self.h = [p.mesh_size() for p in mp.patches]
        self.rhs = np.zeros(self.n)
        self.parts = {k: _Triplets() for k in ("volume", "boundary", "consistency", "penalty")}

    def assemble_volume(self, i):
        """``rho_i (grad phi_b, grad phi_a)`` and ``(f, phi_a)`` on patch ``i``."""
        patch = self.mp.patches[i]
        d = patch.dim
        pts, wts = all_element_quadrature(patch.space, self.rule)
        ne, nq = wts.shape
        geo = patch.evaluate(pts.reshape(-1, d), index=i)
        grads = geo.physical_grads()
        nl = grads.shape[1]
        w = (wts.reshape(-1) * np.abs(geo.det)).reshape(ne, nq)
        g = grads.reshape(ne, nq, nl, d).transpose(0, 2, 1, 3).reshape(ne, nl, nq * d)
        gw = (grads.reshape(ne, nq, nl, d) * w[:, :, None, None]).transpose(0, 2, 1, 3)
        kel = self.spec.rho[i] * np.matmul(gw.reshape(ne, nl, nq * d), g.transpose(0, 2, 1))
        idx = geo.basis.indices.reshape(ne, nq, nl)[:, 0, :] + self.offsets[i]
        r, c = _pair_blocks(idx, idx)
        self.parts["volume"].add(r, c, kel)

        f = np.asarray(self.spec.source(geo.x, i), dtype=float).reshape(ne, nq)
        fel = np.einsum("eq,eql->el", w * f, geo.basis.values.reshape(ne, nq, nl))
        np.add.at(self.rhs, idx.ravel(), fel.ravel())

    def assemble_dirichlet_nitsche(self, face):
        """Symmetric Nitsche terms and data on an outer Dirichlet face."""
        i = face.patch
        patch = self.mp.patches[i]
        d = patch.dim
        bps = [patch.space.kvs[k].breakpoints for k in face.tangential_dirs(d)]
        t, w = grid_quadrature(bps, self.rule)
        fg = face_geometry(patch, face, t, index=i)
        geo = fg.geo
        wq = w * fg.measure
        rho = self.spec.rho[i]
        pen = self.penalty * rho / self.h[i]
        phi = geo.basis.values
        dn = np.einsum("nla,na->nl", geo.physical_grads(), fg.normal)
        idx = geo.basis.indices + self.offsets[i]
        vals = wq[:, None, None] * (-rho * phi[:, :, None] * dn[:, None, :]
                                    - rho * dn[:, :, None] * phi[:, None, :]
                                    + pen * phi[:, :, None] * phi[:, None, :])
        r, c = _pair_blocks(idx, idx)
        self.parts["boundary"].add(r, c, vals)

        ud = np.asarray(self.spec.dirichlet(geo.x, i), dtype=float)
        load = wq[:, None] * ud[:, None] * (-rho * dn + pen * phi)
        np.add.at(self.rhs, idx.ravel(), load.ravel())

    def assemble_interface_flux(self, k):
        """Cross-interface fluxes of pair ``k``, visiting both of its faces."""
        pair = self.mp.interfaces[k]
        for side in (0, 1):
            self._interface_side(pair, side)

    def _interface_side(self, pair, side):
        mp = self.mp
        d = mp.dim
        own, other = pair.side(side), pair.side(1 - side)
        ps, po = mp.patches[own.patch], mp.patches[other.patch]
        t, w = grid_quadrature(interface_breakpoints(mp, pair, side), self.rule)
        fg = face_geometry(ps, own, t, index=own.patch)
        t_other = orient(pair, t, side)
        geo_o = po.evaluate(embed_face_points(d, other, t_other), index=other.patch)
        geo_s = fg.geo
        n = fg.normal
        wq = w * fg.measure
        rho_s, rho_o = self.spec.rho[own.patch], self.spec.rho[other.patch]
        pen = self.penalty * 0.5 * (rho_s + rho_o) / min(self.h[own.patch], self.h[other.patch])

        phi_s, phi_o = geo_s.basis.values, geo_o.basis.values
        dn_s = np.einsum("nla,na->nl", geo_s.physical_grads(), n)
        dn_o = np.einsum("nla,na->nl", geo_o.physical_grads(), n)
        idx_s = geo_s.basis.indices + self.offsets[own.patch]
        idx_o = geo_o.basis.indices + self.offsets[other.patch]
        wt = wq[:, None, None]

        if self.cfg.variant == "symmetric":
            c_ss = wt * (-0.5 * rho_s) * phi_s[:, :, None] * dn_s[:, None, :]
            c_so = wt * (-0.5 * rho_o) * phi_s[:, :, None] * dn_o[:, None, :]
            r, c = _pair_blocks(idx_s, idx_o)
            self.parts["consistency"].add(r, c, c_so)
        else:
            c_ss = wt * (-rho_s) * phi_s[:, :, None] * dn_s[:, None, :]
        r, c = _pair_blocks(idx_s, idx_s)
        self.parts["consistency"].add(r, c, c_ss)

        self.parts["penalty"].add(r, c, wt * pen * phi_s[:, :, None] * phi_s[:, None, :])
        r, c = _pair_blocks(idx_s, idx_o)
        self.parts["penalty"].add(r, c, -wt * pen * phi_s[:, :, None] * phi_o[:, None, :])

    def part(self, name):
        return self.parts[name].matrix(self.n)

    def finalize(self):
        n = self.n
        vol, bnd = self.part("volume"), self.part("boundary")
        con, pen = self.part("consistency"), self.part("penalty")
        if self.cfg.variant == "symmetric":
            mat = vol + bnd + con + con.T + 0.5 * (pen + pen.T)
            mat = 0.5 * (mat + mat.T)
        else:
            mat = vol + bnd + con + pen
        mat = sp.csr_matrix(mat)
        mat.sum_duplicates()
        mat.sort_indices()
        return LinearSystem(mat, self.rhs.copy(), self.offsets, self.mp,
                            symmetric=self.cfg.variant == "symmetric")


def assemble_volume(asm, patch):
    asm.assemble_volume(patch)


def assemble_dirichlet_nitsche(asm, face):
    asm.assemble_dirichlet_nitsche(face)


def assemble_interface_flux(asm, pair):
    asm.assemble_interface_flux(pair)


def assemble(mp, spec, cfg=None):
    """Assemble the complete DG-IGA system ``A_h u = F_h``."""
    asm = Assembler(mp, spec, cfg)
    for i in range(len(mp.patches)):
        asm.assemble_volume(i)
    for face in mp.dirichlet:
        asm.assemble_dirichlet_nitsche(face)
    for k in range(len(mp.interfaces)):
        asm.assemble_interface_flux(k)
    return asm.finalize()


def write_coo(system, path):
    """Dump the matrix as ``row col value`` lines (0-based, 17 significant digits)."""
    coo = system.matrix.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write("%d %d %.17g\n" % (r, c, v))


def read_coo(path, n):
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((n, n))
    return sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                         shape=(n, n)).tocsr()
