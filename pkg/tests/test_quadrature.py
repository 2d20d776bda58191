import numpy as np
import pytest
from numpy.polynomial import polynomial as P

from overlap_dgiga.bspline import KnotVector, TensorSpace, uniform_knots
from overlap_dgiga.errors import ConfigError
from overlap_dgiga.quadrature import (all_element_quadrature, element_quadrature,
                                      face_quadrature, gauss_rule, grid_quadrature)


class TestGaussRule:
    def test_midpoint(self):
        rule = gauss_rule(1)
        np.testing.assert_allclose(rule.nodes, [0.5])
        np.testing.assert_allclose(rule.weights, [1.0])

    def test_two_points(self):
        rule = gauss_rule(2)
        s = 1 / (2 * np.sqrt(3))
        np.testing.assert_allclose(rule.nodes, [0.5 - s, 0.5 + s], atol=1e-15)
        np.testing.assert_allclose(rule.weights, [0.5, 0.5], atol=1e-15)

    def test_x9_with_five_points(self):
        rule = gauss_rule(5)
        assert abs(rule.weights @ rule.nodes ** 9 - 0.1) <= 1e-14

    @pytest.mark.parametrize("n", range(1, 11))
    def test_exact_to_degree_2n_minus_1(self, n):
        rule = gauss_rule(n)
        for k in range(2 * n):
            assert rule.weights @ rule.nodes ** k == pytest.approx(1 / (k + 1), abs=1e-14)

    @pytest.mark.parametrize("n", [2, 5, 9])
    def test_matches_numpy_leggauss(self, n):
        x, w = np.polynomial.legendre.leggauss(n)
        rule = gauss_rule(n)
        np.testing.assert_allclose(rule.nodes, 0.5 * (x + 1), atol=1e-14)
        np.testing.assert_allclose(rule.weights, 0.5 * w, atol=1e-14)

    @pytest.mark.parametrize("n", [0, -1, 2.5])
    def test_invalid(self, n):
        with pytest.raises(ConfigError):
            gauss_rule(n)


class TestElementQuadrature:
    def test_single_span_one_point(self):
        space = TensorSpace([uniform_knots(1, 2)] * 2)
        pts, wts = element_quadrature(space, (0, 0), gauss_rule(1))
        np.testing.assert_allclose(pts, [[0.5, 0.5]])
        np.testing.assert_allclose(wts, [1.0])

    def test_weights_sum_to_volume(self):
        space = TensorSpace([KnotVector([0, 0, 0.3, 1, 1], 1),
                             KnotVector([0, 0, 0, 0.25, 1, 1, 1], 2)])
        pts, wts = element_quadrature(space, (1, 0), gauss_rule(3))
        assert wts.sum() == pytest.approx(0.7 * 0.25, abs=1e-14)
        assert np.all((pts[:, 0] >= 0.3) & (pts[:, 1] <= 0.25))

    def test_random_polynomial_over_all_elements(self):
        rng = np.random.default_rng(2)
        n = 3
        cx, cy = rng.standard_normal(2 * n), rng.standard_normal(2 * n)
        space = TensorSpace([uniform_knots(4, 2), KnotVector([0, 0, 0.2, 0.9, 1, 1], 1)])
        pts, wts = all_element_quadrature(space, gauss_rule(n))
        vals = P.polyval(pts[..., 0], cx) * P.polyval(pts[..., 1], cy)
        exact = P.polyval(1.0, P.polyint(cx)) * P.polyval(1.0, P.polyint(cy))
        assert np.sum(wts * vals) == pytest.approx(exact, rel=1e-13)

    def test_bad_element(self):
        with pytest.raises(ConfigError):
            element_quadrature(TensorSpace([uniform_knots(2, 1)] * 2), (2, 0), gauss_rule(2))


class TestFaceQuadrature:
    def test_single_span_edge_midpoint(self):
        space = TensorSpace([uniform_knots(1, 2)] * 2)
        t, w = face_quadrature(space, 0, (0,), gauss_rule(1))
        np.testing.assert_allclose(t, [[0.5]])
        np.testing.assert_allclose(w, [1.0])

    def test_face_weights_sum_to_one(self):
        space = TensorSpace([uniform_knots(3, 2), uniform_knots(2, 1), uniform_knots(4, 2)])
        total = 0.0
        for e0 in range(3):
            for e2 in range(4):
                _, w = face_quadrature(space, 1, (e0, e2), gauss_rule(2))
                total += w.sum()
        assert total == pytest.approx(1.0, abs=1e-14)

    def test_tangential_polynomial(self):
        space = TensorSpace([uniform_knots(3, 2)] * 3)
        bps = [space.kvs[k].breakpoints for k in (0, 2)]
        t, w = grid_quadrature(bps, gauss_rule(3))
        # int_0^1 int_0^1 s^5 t^2 = 1/18
        assert np.sum(w * t[:, 0] ** 5 * t[:, 1] ** 2) == pytest.approx(1 / 18, abs=1e-14)
