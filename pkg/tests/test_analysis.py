import math

import numpy as np
import pytest

from overlap_dgiga.analysis import ConvergenceTable, ErrorReport, dg_error, rate
from overlap_dgiga.assembly import ProblemSpec, assemble
from overlap_dgiga.bspline import collocation_matrix
from overlap_dgiga.builders import block_multipatch
from overlap_dgiga.errors import ConfigError
from overlap_dgiga.geometry import face_geometry, make_overlap
from overlap_dgiga.quadrature import gauss_rule, grid_quadrature
from overlap_dgiga.solver import DiscreteSolution, evaluate_on, solve

from problems import sine_problem


def quadratic_problem(rho):
    def u(x, i):
        return x[:, 0] ** 2 + x[:, 0] * x[:, 1] - 0.5 * x[:, 1] ** 2

    def grad(x, i):
        return np.c_[2 * x[:, 0] + x[:, 1], x[:, 0] - x[:, 1]]

    def f(x, i):
        return np.full(x.shape[0], -rho[i] * 1.0)

    return ProblemSpec(rho, f, u, u, grad)


def interpolant(mp, spec):
    """Spline interpolant at Greville points; exact for functions in the space."""
    coeffs = []
    for i, patch in enumerate(mp.patches):
        k1, k2 = patch.space.kvs
        m = np.kron(collocation_matrix(k2, k2.greville()), collocation_matrix(k1, k1.greville()))
        x = patch.map_points(patch.space.greville())
        coeffs.append(np.linalg.solve(m, spec.exact(x, i)))
    return DiscreteSolution(mp, tuple(coeffs))


def brute_force_dg(sol, spec, h, n=8):
    """Squared DG-norm parts by plain loops over elements and faces."""
    mp = sol.multipatch
    rule = gauss_rule(n)

    def face_sq(face):
        patch = mp.patches[face.patch]
        bps = [patch.space.kvs[k].breakpoints for k in face.tangential_dirs(2)]
        total = 0.0
        for t, w in zip(*grid_quadrature(bps, rule)):
            fg = face_geometry(patch, face, t[None, :])
            uh, _ = evaluate_on(fg.geo, sol.coefficients[face.patch])
            e = spec.exact(fg.geo.x, face.patch)[0] - uh[0]
            total += w * fg.measure[0] * e * e
        return total

    vol = 0.0
    for i, patch in enumerate(mp.patches):
        bps = [kv.breakpoints for kv in patch.space.kvs]
        for xh, w in zip(*grid_quadrature(bps, rule)):
            geo = patch.evaluate(xh[None, :])
            _, g = evaluate_on(geo, sol.coefficients[i])
            ge = spec.exact_grad(geo.x, i)[0] - g[0]
            vol += spec.rho[i] * w * abs(geo.det[0]) * (ge @ ge)
    bnd = sum(spec.rho[f.patch] / h * face_sq(f) for f in mp.dirichlet)
    ifc = sum(0.5 * (spec.rho[q.a.patch] + spec.rho[q.b.patch]) / h
              * (face_sq(q.a) + face_sq(q.b)) for q in mp.interfaces)
    return vol, bnd, ifc


class TestRate:
    def test_quadratic_decay(self):
        assert rate([1, 0.25], [1, 0.5]) == [pytest.approx(2.0, abs=1e-15)]

    def test_no_decay(self):
        assert rate([1, 1], [0.3, 0.1]) == [0.0]

    def test_synthetic_sequence(self):
        hs = [0.5 ** k for k in range(5)]
        for r in rate([h ** 1.5 for h in hs], hs):
            assert abs(r - 1.5) <= 1e-12

    def test_zero_error_is_nan(self):
        assert math.isnan(rate([0.0, 1e-3], [1, 0.5])[0])

    def test_too_short(self):
        with pytest.raises(ValueError):
            rate([1.0], [1.0])

    def test_table_mean_of_last_two(self):
        hs = [1, 0.5, 0.25, 0.125]
        es = [1, 0.25, 0.125, 0.125 / 8]
        table = ConvergenceTable([ErrorReport(h, e, (e, 0, 0), 0.0) for h, e in zip(hs, es)])
        np.testing.assert_allclose(table.rates, [2, 1, 3])
        assert table.mean_last_rates() == pytest.approx(2.0)

    def test_table_single_level(self):
        table = ConvergenceTable([ErrorReport(1.0, 1.0, (1, 0, 0), 0.0)])
        assert table.rates == [] and math.isnan(table.mean_last_rates())


class TestDGError:
    def test_representable_solution(self):
        mp = block_multipatch([[0, 0.5, 1], [0, 1]], 3, 2)
        spec = quadratic_problem((1.0, 2.0))
        rep = dg_error(interpolant(mp, spec), spec)
        assert rep.dg_error <= 1e-12
        assert rep.l2_error <= 1e-12

    @pytest.mark.parametrize("c", [1.0, 0.3])
    def test_constant_error(self, c):
        mp = block_multipatch([[0, 1], [0, 1]], 2, 2)
        spec = ProblemSpec((1.0,), lambda x, i: np.zeros(x.shape[0]),
                           lambda x, i: np.full(x.shape[0], c), lambda x, i: np.full(x.shape[0], c),
                           lambda x, i: np.zeros((x.shape[0], 2)))
        sol = DiscreteSolution(mp, (np.zeros(mp.num_dofs),))
        h = 0.25
        rep = dg_error(sol, spec, h=h)
        assert rep.components[0] == 0.0
        assert rep.components[1] ** 2 == pytest.approx(c * c / h * 4.0, rel=1e-13)
        assert rep.components[2] == 0.0

    def test_perturbed_coefficients_match_overkill(self):
        mp = block_multipatch([[0, 0.5, 1], [0, 1]], 3, 2, refine={1: 1})
        spec = quadratic_problem((1.0, 2.0))
        exact = interpolant(mp, spec)
        rng = np.random.default_rng(0)
        sol = DiscreteSolution(mp, tuple(c + 1e-2 * rng.standard_normal(c.shape)
                                         for c in exact.coefficients))
        h = mp.mesh_size()
        rep = dg_error(sol, spec, h=h)
        parts = brute_force_dg(sol, spec, h)
        np.testing.assert_allclose(np.square(rep.components), parts, rtol=1e-9)
        assert rep.dg_error == pytest.approx(math.sqrt(sum(parts)), rel=1e-9)

    def test_component_accounting(self):
        mp = make_overlap(block_multipatch([[0, 0.5, 1], [0, 1]], 3, 2), 0, 0.05)
        spec = sine_problem(2)
        rep = dg_error(solve(assemble(mp, spec)), spec)
        total = math.sqrt(sum(c * c for c in rep.components))
        assert abs(total - rep.dg_error) <= 1e-12 * rep.dg_error
        assert rep.d_o == pytest.approx(0.05, abs=1e-10)
        assert rep.dofs == mp.num_dofs

    def test_default_h_is_mesh_size(self):
        mp = block_multipatch([[0, 0.5, 1], [0, 1]], 2, 2)
        spec = sine_problem(2)
        sol = solve(assemble(mp, spec))
        assert dg_error(sol, spec).h == pytest.approx(math.hypot(0.25, 0.5))

    def test_needs_exact_solution(self):
        mp = block_multipatch([[0, 1], [0, 1]], 1, 1)
        spec = ProblemSpec((1.0,), lambda x, i: 0 * x[:, 0], lambda x, i: 0 * x[:, 0])
        with pytest.raises(ConfigError):
            dg_error(DiscreteSolution(mp, (np.zeros(mp.num_dofs),)), spec)

