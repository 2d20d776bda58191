"""DG-norm errors against exact solutions and convergence rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import face_geometry, overlap_width
from .quadrature import all_element_quadrature, gauss_rule, grid_quadrature
from .solver import evaluate_on


@dataclass(frozen=True)
class ErrorReport:
    """Error of one discrete solution.

    ``components`` holds the (volume-gradient, outer-boundary, interface)
    parts; ``dg_error`` is the root of the sum of their squares.
    """

    h: float
    dg_error: float
    components: tuple
    l2_error: float
    d_o: float = 0.0
    dofs: int = 0


def dg_error(sol, spec, h=None, quad_points=None):
    """``||u - u_h||_DG`` with volume, Dirichlet-boundary and interface terms.

    Args:
        sol: the :class:`DiscreteSolution`.
        spec: problem with ``exact`` and ``exact_grad``.
        h: mesh size in the norm weights; defaults to the multipatch mesh size.
        quad_points: Gauss points per direction, default ``p + 2``.

    Raises:
        ConfigError: if the problem carries no exact solution.
    """
    if spec.exact is None or spec.exact_grad is None:
        raise ConfigError("error evaluation needs the exact solution and its gradient")
    mp = sol.multipatch
    h = mp.mesh_size() if h is None else float(h)
    p = max(max(pt.space.degrees) for pt in mp.patches)
    rule = gauss_rule(quad_points or p + 2)
    vol = bnd = ifc = l2 = 0.0

    for i, patch in enumerate(mp.patches):
        pts, wts = all_element_quadrature(patch.space, rule)
        geo = patch.evaluate(pts.reshape(-1, patch.dim), index=i)
        w = wts.reshape(-1) * np.abs(geo.det)
        uh, guh = evaluate_on(geo, sol.coefficients[i])
        e = np.asarray(spec.exact(geo.x, i)) - uh
        ge = np.asarray(spec.exact_grad(geo.x, i)) - guh
        vol += spec.rho[i] * np.sum(w * np.sum(ge * ge, axis=1))
        l2 += np.sum(w * e * e)

    def face_sq(face):
        patch = mp.patches[face.patch]
        bps = [patch.space.kvs[k].breakpoints for k in face.tangential_dirs(mp.dim)]
        t, w = grid_quadrature(bps, rule)
        fg = face_geometry(patch, face, t, index=face.patch)
        uh, _ = evaluate_on(fg.geo, sol.coefficients[face.patch])
        e = np.asarray(spec.exact(fg.geo.x, face.patch)) - uh
        return float(np.sum(w * fg.measure * e * e))

    for face in mp.dirichlet:
        bnd += spec.rho[face.patch] / h * face_sq(face)
    for pair in mp.interfaces:
        avg = 0.5 * (spec.rho[pair.a.patch] + spec.rho[pair.b.patch])
        ifc += avg / h * (face_sq(pair.a) + face_sq(pair.b))

    comps = (math.sqrt(vol), math.sqrt(bnd), math.sqrt(ifc))
    d_o = max((overlap_width(mp, k) for k, pr in enumerate(mp.interfaces)
               if pr.kind == "overlap"), default=0.0)
    return ErrorReport(h=h, dg_error=math.sqrt(vol + bnd + ifc), components=comps,
                       l2_error=math.sqrt(l2), d_o=d_o, dofs=mp.num_dofs)


def rate(errors, hs):
    """Rates ``ln(e_i/e_{i+1}) / ln(h_i/h_{i+1})``; NaN where an error vanishes."""
    errors = [float(e) for e in errors]
    hs = [float(h) for h in hs]
    if len(errors) != len(hs) or len(errors) < 2:
        raise ValueError("need at least two levels with matching error and h lists")
    out = []
    for (e0, e1), (h0, h1) in zip(zip(errors, errors[1:]), zip(hs, hs[1:])):
        if e0 <= 0 or e1 <= 0 or h0 == h1:
            out.append(math.nan)
        else:
            out.append(math.log(e0 / e1) / math.log(h0 / h1))
    return out


@dataclass
class ConvergenceTable:
    """Error reports of a refinement sequence (coarse to fine)."""

    reports: list = field(default_factory=list)
    lam: float = math.inf
    label: str = ""

    @property
    def rates(self):
        if len(self.reports) < 2:
            return []
        return rate([r.dg_error for r in self.reports], [r.h for r in self.reports])

    def mean_last_rates(self, count=2):
        """Mean of the last ``count`` level-to-level rates."""
        rs = self.rates[-count:]
        return float(np.mean(rs)) if rs else math.nan
