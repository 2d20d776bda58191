"""Invariant self-test suite run by ``overlap-dgiga check``.

Every check is small (well under a second on one core) and compares
against an independent computation where one exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .analysis import dg_error
from .assembly import Assembler, AssemblyConfig, assemble
from .bspline import KnotVector, TensorSpace, eval_basis_derivs_many, uniform_knots
from .cases import EXAMPLES, get_example
from .geometry import (Patch, embed_face_points, face_geometry, make_overlap, partner_point,
                       sample_face)
from .quadrature import gauss_rule, grid_quadrature
from .solver import DiscreteSolution, solve


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self):
        return "%s %s: %s" % ("PASS" if self.ok else "FAIL", self.name, self.detail)


def check_partition_of_unity():
    rng = np.random.default_rng(1)
    worst = 0.0
    for p in (1, 2, 3, 4):
        inner = np.sort(rng.uniform(0, 1, 6))
        kv = KnotVector(np.r_[[0.0] * (p + 1), inner, [1.0] * (p + 1)], p)
        x = np.r_[rng.uniform(0, 1, 200), inner, 0.0, 1.0]
        _, tab = eval_basis_derivs_many(kv, x, 0)
        worst = max(worst, float(np.max(np.abs(tab[:, 0].sum(axis=1) - 1.0))))
    return CheckResult("partition-of-unity", worst <= 1e-13, "max |sum B - 1| = %.2e" % worst)


def check_derivatives():
    kv = KnotVector([0, 0, 0, 0, 0.2, 0.45, 0.7, 1, 1, 1, 1], 3)
    x = np.linspace(0.01, 0.99, 57)
    x = x[np.min(np.abs(x[:, None] - np.array([0.2, 0.45, 0.7])[None, :]), axis=1) > 1e-3]
    step = 1e-6
    f0, d = eval_basis_derivs_many(kv, x, 1)
    fp, vp = eval_basis_derivs_many(kv, x + step, 0)
    fm, vm = eval_basis_derivs_many(kv, x - step, 0)
    assert np.array_equal(f0, fp) and np.array_equal(f0, fm)
    fd = (vp[:, 0] - vm[:, 0]) / (2 * step)
    worst = float(np.max(np.abs(fd - d[:, 1])))
    return CheckResult("derivative-vs-finite-difference", worst <= 1e-6,
                       "max deviation %.2e" % worst)


def check_quadrature_exactness():
    worst = 0.0
    for n in range(1, 9):
        rule = gauss_rule(n)
        for k in range(2 * n):
            worst = max(worst, abs(float(rule.weights @ rule.nodes ** k) - 1.0 / (k + 1)))
    return CheckResult("quadrature-exactness", worst <= 1e-14,
                       "max error on x^k, k <= 2n-1: %.2e" % worst)


def _overlap_instance(name, lam=1.0, degree=2, elements=2):
    case = get_example(name)
    mp = case.build(degree, elements, False)
    h = mp.mesh_size()
    for k in case.overlap_pairs:
        mp = make_overlap(mp, k, h ** lam)
    return case, mp


def check_jacobian_positivity():
    worst = math.inf
    for name in EXAMPLES:
        for lam in (math.inf, 1.0):
            case = get_example(name)
            mp = case.build(2, 2, False)
            if not math.isinf(lam):
                _, mp = _overlap_instance(name, lam)
            worst = min(worst, min(p.min_jacobian() for p in mp.patches))
    return CheckResult("jacobian-positivity", worst > 0,
                       "min det J over shipped geometries (d_o in {0, h}) = %.3e" % worst)


def check_symmetry():
    worst = 0.0
    for name in ("smooth", "multiface"):
        case, mp = _overlap_instance(name)
        a = assemble(mp, case.spec).matrix
        worst = max(worst, abs(a - a.T).max() / abs(a).max())
    return CheckResult("matrix-symmetry", worst <= 1e-12, "max |A - A^T| / max |A| = %.2e" % worst)


def check_spd():
    details = []
    ok = True
    for name in ("smooth", "jump-rho", "multiface"):
        case, mp = _overlap_instance(name)
        a = assemble(mp, case.spec, AssemblyConfig(penalty=4.0 * 3 ** 2)).matrix.toarray()
        try:
            scipy.linalg.cholesky(0.5 * (a + a.T))
            details.append("%s ok" % name)
        except np.linalg.LinAlgError:
            ok = False
            details.append("%s not SPD" % name)
    return CheckResult("spd-factorization", ok, "Cholesky at eta = 4(p+1)^2: " + ", ".join(details))


def check_partner_involution():
    worst = 0.0
    for name in EXAMPLES:
        mp = get_example(name).build(2, 2, False)
        t = sample_face(mp.dim, 7)
        for k, pair in enumerate(mp.interfaces):
            for side in (0, 1):
                _, xh = partner_point(mp, k, side, t)
                other = pair.side(1 - side)
                back_patch, back = partner_point(mp, k, 1 - side, xh[:, other.tangential_dirs(mp.dim)])
                own = pair.side(side)
                worst = max(worst, float(np.max(np.abs(back - embed_face_points(mp.dim, own, t)))))
                assert back_patch == own.patch
    return CheckResult("partner-involution", worst <= 1e-14, "max deviation %.2e" % worst)


def reference_sipg_matrix(mp, spec, cfg=None):
    """Classical SIPG assembled once per matching interface (independent path).

    Volume and Dirichlet parts come from :class:`Assembler`; the interface
    terms ``-{rho dn u}[v] - {rho dn v}[u] + eta {rho}/h [u][v]`` are
    integrated on face ``a`` only, with ``n = n_a``.
    """
    asm = Assembler(mp, spec, cfg)
    for i in range(len(mp.patches)):
        asm.assemble_volume(i)
    for face in mp.dirichlet:
        asm.assemble_dirichlet_nitsche(face)
    mat = (asm.part("volume") + asm.part("boundary")).tolil()
    d = mp.dim
    off = asm.offsets
    for pair in mp.interfaces:
        fa, fb = pair.a, pair.b
        pa, pb = mp.patches[fa.patch], mp.patches[fb.patch]
        bps = [pa.space.kvs[k].breakpoints for k in fa.tangential_dirs(d)]
        t, w = grid_quadrature(bps, asm.rule)
        ga = face_geometry(pa, fa, t, index=fa.patch)
        _, xb = partner_point(mp, pair, 0, t)
        gb = pb.evaluate(xb, index=fb.patch)
        ra, rb = spec.rho[fa.patch], spec.rho[fb.patch]
        pen = asm.penalty * 0.5 * (ra + rb) / min(asm.h[fa.patch], asm.h[fb.patch])
        n = ga.normal
        dna = np.einsum("qla,qa->ql", ga.geo.physical_grads(), n)
        dnb = np.einsum("qla,qa->ql", gb.physical_grads(), n)
        for q in range(t.shape[0]):
            idx = np.r_[ga.geo.basis.indices[q] + off[fa.patch], gb.basis.indices[q] + off[fb.patch]]
            jump = np.r_[ga.geo.basis.values[q], -gb.basis.values[q]]
            avg = 0.5 * np.r_[ra * dna[q], rb * dnb[q]]
            local = (-np.outer(jump, avg) - np.outer(avg, jump) + pen * np.outer(jump, jump))
            wq = w[q] * ga.measure[q]
            for r_, row in enumerate(idx):
                for c_, col in enumerate(idx):
                    mat[row, col] += wq * local[r_, c_]
    return sp.csr_matrix(mat)


def check_matching_equality():
    worst = 0.0
    for name in ("smooth", "jump-rho"):
        case = get_example(name)
        mp = case.build(2, 2, False)
        same = mp
        for k in case.overlap_pairs:
            same = make_overlap(same, k, 0.0)
        a = assemble(same, case.spec).matrix
        ref = reference_sipg_matrix(mp, case.spec)
        worst = max(worst, abs(a - ref).max() / abs(ref).max())
    return CheckResult("matching-equality", worst <= 1e-12,
                       "d_o = 0 vs classical SIPG: rel. max diff %.2e" % worst)


def symbolic_branches():
    """Per-case list of ``(patch indices, u expression, rho)`` built with sympy."""
    import sympy as sy

    x, y, z = sy.symbols("x y z", real=True)
    pi = sy.pi
    u1 = sy.sin(pi * (x + sy.Rational(2, 5)) / 6) * sy.sin(pi * (y + sy.Rational(3, 10)) / 3) + x + y
    u3 = sy.sin(pi * (x + sy.Rational(2, 5))) * sy.sin(2 * pi * (y + sy.Rational(3, 10))) + x + y
    return (x, y, z), {
        "smooth": [((0, 1, 2, 3), u1, 1)],
        "jump-rho": [((0, 2), sy.sin(pi * (2 * x + y)), 3 * pi / 2),
                     ((1, 3), sy.sin(pi * (3 * pi / 2 * x + y)), 2)],
        "multiface": [((0, 1, 2, 3), u3, 1)],
        "box3d": [((0,), sy.sin(pi / 2 * (x + y)), 1),
                  ((1,), sy.exp(sy.sin(x + y)) - 1, pi / 2)],
    }


def check_manufactured(samples=100):
    import sympy as sy

    syms, table = symbolic_branches()
    rng = np.random.default_rng(7)
    worst = 0.0
    for name, branches in table.items():
        case = get_example(name)
        d = case.build(2, 1, False).dim
        vs = syms[:d]
        for patches, u, rho in branches:
            grad = [sy.diff(u, v) for v in vs]
            f = -rho * sum(sy.diff(u, v, 2) for v in vs)
            fu = sy.lambdify(vs, u, "numpy")
            ff = sy.lambdify(vs, f, "numpy")
            fg = [sy.lambdify(vs, g, "numpy") for g in grad]
            pts = rng.uniform(-1.0, 1.0, (samples, d)) + (2.5 if name == "smooth" else 0.0)
            cols = [pts[:, k] for k in range(d)]
            for i in patches:
                scale = max(1.0, float(np.max(np.abs(ff(*cols)))))
                worst = max(worst,
                            float(np.max(np.abs(case.spec.source(pts, i) - ff(*cols)))) / scale,
                            float(np.max(np.abs(case.spec.exact(pts, i) - fu(*cols)))),
                            max(float(np.max(np.abs(case.spec.exact_grad(pts, i)[:, k]
                                                    - np.broadcast_to(fg[k](*cols), (samples,)))))
                                for k in range(d)))
    return CheckResult("manufactured-residual", worst <= 1e-8,
                       "max |f - (-div rho grad u)| (scaled) over cases = %.2e" % worst)


def check_interface_conditions(samples=100):
    """Trace and flux continuity of the piecewise exact solutions."""
    rng = np.random.default_rng(3)
    worst = 0.0
    case = get_example("jump-rho")
    pts = np.c_[np.zeros(samples), rng.uniform(0, 1, samples)]
    rho = case.spec.rho
    worst = max(worst, float(np.max(np.abs(case.spec.exact(pts, 0) - case.spec.exact(pts, 1)))),
                float(np.max(np.abs(rho[0] * case.spec.exact_grad(pts, 0)[:, 0]
                                    - rho[1] * case.spec.exact_grad(pts, 1)[:, 0]))))
    case = get_example("box3d")
    s = rng.uniform(0, 1, samples)
    pts = np.c_[-s, s, rng.uniform(0, 1, samples)]
    n = np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0)
    rho = case.spec.rho
    worst = max(worst, float(np.max(np.abs(case.spec.exact(pts, 0) - case.spec.exact(pts, 1)))),
                float(np.max(np.abs(rho[0] * case.spec.exact_grad(pts, 0) @ n
                                    - rho[1] * case.spec.exact_grad(pts, 1) @ n))))
    return CheckResult("interface-conditions", worst <= 1e-10,
                       "max trace/flux jump of piecewise exact solutions = %.2e" % worst)


def check_error_accounting():
    case, mp = _overlap_instance("multiface")
    sol = solve(assemble(mp, case.spec))
    rng = np.random.default_rng(5)
    sol = DiscreteSolution(mp, tuple(c + 1e-3 * rng.standard_normal(c.shape) for c in sol.coefficients))
    rep = dg_error(sol, case.spec)
    total = math.sqrt(sum(c * c for c in rep.components))
    rel = abs(total - rep.dg_error) / rep.dg_error
    return CheckResult("error-accounting", rel <= 1e-12,
                       "|sqrt(sum c^2) - e| / e = %.2e" % rel)


def check_identity_geometry():
    space = TensorSpace([uniform_knots(3, 2), uniform_knots(2, 3)])
    patch = Patch(space, space.greville())
    rng = np.random.default_rng(11)
    xh = rng.uniform(0, 1, (50, 2))
    geo = patch.evaluate(xh)
    err = max(float(np.max(np.abs(geo.x - xh))), float(np.max(np.abs(geo.jac - np.eye(2)))))
    return CheckResult("identity-geometry", err <= 1e-12, "max |Phi - id|, |J - I| = %.2e" % err)


CHECKS = (
    check_partition_of_unity,
    check_derivatives,
    check_quadrature_exactness,
    check_identity_geometry,
    check_jacobian_positivity,
    check_symmetry,
    check_spd,
    check_partner_involution,
    check_matching_equality,
    check_manufactured,
    check_interface_conditions,
    check_error_accounting,
)


def run_checks():
    """Run every check; exceptions count as failures."""
    out = []
    for fn in CHECKS:
        name = fn.__name__.replace("check_", "").replace("_", "-")
        try:
            out.append(fn())
        except Exception as exc:  # noqa: BLE001 - reported as a failed check
            out.append(CheckResult(name, False, "raised %s: %s" % (type(exc).__name__, exc)))
    return out


__all__ = ["CheckResult", "run_checks", "reference_sipg_matrix", "CHECKS"]
