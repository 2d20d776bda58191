import numpy as np
import pytest

from overlap_dgiga.bspline import KnotVector, TensorSpace, collocation_matrix, uniform_knots
from overlap_dgiga.builders import block_multipatch, box_patch
from overlap_dgiga.errors import GeometryError, SingularGeometryError, TopologyError
from overlap_dgiga.geometry import (FaceId, InterfacePair, MultiPatch, Patch, all_faces,
                                    detect_orientation, face_geometry, face_normal_alignment,
                                    jacobian, make_overlap, map_point, overlap_width,
                                    pair_distances, partner_point, sample_face)


def identity_patch(elements=2, degree=2):
    space = TensorSpace([uniform_knots(elements, degree)] * 2)
    return Patch(space, space.greville())


def curved_patch():
    space = TensorSpace([uniform_knots(3, 2), KnotVector([0, 0, 0, 0.4, 1, 1, 1], 2)])
    g = space.greville()
    cp = np.c_[g[:, 0] + 0.15 * np.sin(3 * g[:, 1]), g[:, 1] + 0.1 * g[:, 0] ** 2]
    return Patch(space, cp)


def curved_pair(elements=4, degree=2, amp=0.15):
    """Two patches glued along the curve x = 1 + amp sin(pi y)."""
    a = box_patch([0, 0], [1, 1], elements, degree)
    b = box_patch([1, 0], [2, 1], elements, degree)
    n = a.space.shape[0]
    ca, cb = a.control_points.copy(), b.control_points.copy()
    for j in range(a.space.shape[1]):
        y = ca[n - 1 + n * j, 1]
        ca[n - 1 + n * j, 0] = 1 + amp * np.sin(np.pi * y)
        cb[n * j, 0] = 1 + amp * np.sin(np.pi * y)
    pair = InterfacePair(FaceId(0, 0, "hi"), FaceId(1, 0, "lo"), (False,), (0,))
    outer = [f for f in all_faces(2, 0) + all_faces(2, 1) if f not in (pair.a, pair.b)]
    return MultiPatch([Patch(a.space, ca), Patch(b.space, cb)], [pair], outer)


class TestMapping:
    def test_identity(self):
        patch = identity_patch(3, 3)
        xh = np.random.default_rng(0).uniform(0, 1, (30, 2))
        np.testing.assert_allclose(patch.map_points(xh), xh, atol=1e-12)

    def test_bilinear(self):
        space = TensorSpace([uniform_knots(1, 1)] * 2)
        patch = Patch(space, [[0, 0], [2, 0], [0, 1], [2, 1]])
        np.testing.assert_allclose(map_point(patch, [0.5, 0.5]), [1.0, 0.5], atol=1e-15)

    def test_brute_force_summation(self):
        patch = curved_patch()
        k1, k2 = patch.space.kvs
        x = np.array([[0.31, 0.77], [0.0, 1.0], [0.9, 0.05]])
        m1, m2 = collocation_matrix(k1, x[:, 0]), collocation_matrix(k2, x[:, 1])
        expected = np.zeros((3, 2))
        for q in range(3):
            for j2 in range(k2.size):
                for j1 in range(k1.size):
                    expected[q] += (m1[q, j1] * m2[q, j2]
                                    * patch.control_points[j1 + k1.size * j2])
        np.testing.assert_allclose(patch.map_points(x), expected, atol=1e-14)

    def test_refine_preserves_map(self):
        patch = curved_patch()
        xh = np.random.default_rng(1).uniform(0, 1, (40, 2))
        np.testing.assert_allclose(patch.refine().map_points(xh), patch.map_points(xh),
                                   atol=1e-13)

    def test_wrong_control_point_count(self):
        with pytest.raises(GeometryError):
            Patch(TensorSpace([uniform_knots(1, 1)] * 2), np.zeros((3, 2)))


class TestJacobian:
    def test_identity(self):
        jac, det, _ = jacobian(identity_patch(), [0.3, 0.6])
        np.testing.assert_allclose(jac, np.eye(2), atol=1e-13)
        assert det == pytest.approx(1.0, abs=1e-13)

    def test_affine_scaling(self):
        patch = box_patch([0, 0], [2, 3], 3, 2)
        geo = patch.evaluate(np.random.default_rng(2).uniform(0, 1, (20, 2)))
        np.testing.assert_allclose(geo.det, 6.0, atol=1e-12)

    def test_finite_differences(self):
        patch = curved_patch()
        delta = 1e-6
        for xh in np.random.default_rng(3).uniform(0.05, 0.95, (10, 2)):
            jac, _, jinv = jacobian(patch, xh)
            fd = np.column_stack([(map_point(patch, xh + delta * e) - map_point(patch, xh - delta * e))
                                  / (2 * delta) for e in np.eye(2)])
            np.testing.assert_allclose(jac, fd, atol=1e-5)
            np.testing.assert_allclose(jinv @ jac, np.eye(2), atol=1e-12)

    def test_singular_raises(self):
        space = TensorSpace([uniform_knots(1, 1)] * 2)
        patch = Patch(space, [[0, 0], [1, 0], [0, 0], [1, 0]])
        with pytest.raises(SingularGeometryError):
            patch.evaluate(np.array([[0.5, 0.5]]))

    def test_min_jacobian_positive(self):
        assert curved_patch().min_jacobian() > 0


class TestFaceGeometry:
    def test_axis_aligned_face(self):
        fg = face_geometry(identity_patch(), FaceId(0, 0, "hi"), np.array([[0.2], [0.7]]))
        np.testing.assert_allclose(fg.normal, [[1, 0], [1, 0]], atol=1e-13)
        np.testing.assert_allclose(fg.measure, 1.0, atol=1e-13)

    @pytest.mark.parametrize("face", all_faces(2, 0))
    def test_scaled_square(self, face):
        patch = box_patch([0, 0], [2, 2], 2, 2)
        fg = face_geometry(patch, face, np.array([[0.4]]))
        np.testing.assert_allclose(fg.measure, 2.0, atol=1e-13)
        expected = np.zeros(2)
        expected[face.dir] = face.sign
        np.testing.assert_allclose(fg.normal[0], expected, atol=1e-13)

    def test_curved_measure_chord_oracle(self):
        patch = curved_patch()
        face = FaceId(0, 0, "lo")
        delta = 1e-6
        t = np.array([[0.15], [0.5], [0.8]])
        fg = face_geometry(patch, face, t)
        for q, s in enumerate(t[:, 0]):
            chord = np.linalg.norm(map_point(patch, [0.0, s + delta]) - map_point(patch, [0.0, s - delta]))
            assert fg.measure[q] == pytest.approx(chord / (2 * delta), rel=1e-5)

    def test_3d_face(self):
        patch = box_patch([0, 0, 0], [1, 2, 3], 1, 1)
        fg = face_geometry(patch, FaceId(0, 2, "lo"), np.array([[0.5, 0.5]]))
        np.testing.assert_allclose(fg.measure, [2.0])
        np.testing.assert_allclose(fg.normal, [[0, 0, -1]], atol=1e-15)


class TestTopology:
    def test_blocks_are_valid(self):
        mp = block_multipatch([[0, 1, 2], [0, 1, 3]], 2, 2)
        assert len(mp.patches) == 4
        assert len(mp.interfaces) == 4
        assert len(mp.dirichlet) == 8

    def test_missing_face(self):
        mp = block_multipatch([[0, 1, 2], [0, 1]], 2, 2)
        with pytest.raises(TopologyError):
            MultiPatch(mp.patches, mp.interfaces, mp.dirichlet[1:])

    def test_face_used_twice(self):
        mp = block_multipatch([[0, 1, 2], [0, 1]], 2, 2)
        with pytest.raises(TopologyError):
            MultiPatch(mp.patches, mp.interfaces, mp.dirichlet + (mp.interfaces[0].a,))

    def test_bad_orientation(self):
        mp = block_multipatch([[0, 1, 2], [0, 1]], 2, 2)
        bad = InterfacePair(mp.interfaces[0].a, mp.interfaces[0].b, (False, False), (0, 1))
        with pytest.raises(TopologyError):
            MultiPatch(mp.patches, [bad], mp.dirichlet)

    def test_bad_side(self):
        with pytest.raises(TopologyError):
            FaceId(0, 0, "left")

    def test_detect_orientation(self):
        mp = block_multipatch([[0, 1, 2], [0, 1]], 2, 2)
        pair = mp.interfaces[0]
        assert detect_orientation(mp, pair.a, pair.b) == ((False,), (0,))


class TestPartnerPoint:
    def test_identity_glue(self):
        mp = block_multipatch([[0, 1, 2], [0, 1]], 2, 2)
        patch, xh = partner_point(mp, 0, 0, np.array([0.3]))
        assert patch == 1
        np.testing.assert_allclose(xh, [0.0, 0.3])

    def test_flip(self):
        mp = block_multipatch([[0, 1, 2], [0, 1]], 2, 2)
        flipped = InterfacePair(mp.interfaces[0].a, mp.interfaces[0].b, (True,), (0,))
        _, xh = partner_point(mp, flipped, 0, np.array([0.3]))
        np.testing.assert_allclose(xh, [0.0, 0.7])

    def test_3d_permutation_involution(self):
        pair = InterfacePair(FaceId(0, 2, "hi"), FaceId(1, 0, "lo"), (True, False), (1, 0))
        mp = MultiPatch([box_patch([0, 0, 0], [1, 1, 1], 1, 1)] * 2, [pair], validate=False)
        t = sample_face(3, 5)
        _, xb = partner_point(mp, pair, 0, t)
        _, back = partner_point(mp, pair, 1, xb[:, [1, 2]])
        np.testing.assert_allclose(back[:, [0, 1]], t, atol=1e-15)
        np.testing.assert_allclose(back[:, 2], 1.0)

    def test_distances_bounded_by_width(self):
        mp = make_overlap(curved_pair(), 0, 0.05)
        width = overlap_width(mp, 0, samples=1001)
        t = np.random.default_rng(4).uniform(0, 1, (200, 1))
        assert np.all(pair_distances(mp, 0, t) <= width + 1e-6)


class TestOverlap:
    def test_axis_aligned_strip(self):
        mp = block_multipatch([[0, 1, 2], [0, 1]], 2, 2)
        ov = make_overlap(mp, 0, 0.1)
        pb = ov.patches[1]
        n = pb.space.shape[0]
        np.testing.assert_allclose(pb.control_points[::n, 0], 0.9, atol=1e-14)
        assert overlap_width(ov, 0) == pytest.approx(0.1, abs=1e-10)
        assert ov.interfaces[0].kind == "overlap"
        assert ov.interfaces[0].width == pytest.approx(0.1)
        # the opposite face stays put
        np.testing.assert_allclose(pb.control_points[n - 1::n, 0], 2.0)

    def test_zero_width_unchanged(self):
        mp = block_multipatch([[0, 1, 2], [0, 1]], 2, 2)
        assert make_overlap(mp, 0, 0.0) is mp
        assert mp.interfaces[0].kind == "matching"

    def test_matching_width_zero(self):
        assert overlap_width(curved_pair(), 0) <= 1e-10

    def test_curved_interface_nominal_width(self):
        d_o = 0.02
        mp = make_overlap(curved_pair(), 0, d_o)
        assert overlap_width(mp, 0, samples=400) == pytest.approx(d_o, rel=0.05)

    def test_sampled_width_monotone(self):
        mp = make_overlap(curved_pair(), 0, 0.05)
        widths = [overlap_width(mp, 0, samples=2 ** k + 1) for k in range(1, 9)]
        assert all(w1 >= w0 for w0, w1 in zip(widths, widths[1:]))
        assert widths[-1] - widths[-2] < 1e-6

    def test_normals_stay_aligned(self):
        mp = make_overlap(curved_pair(), 0, 0.05)
        assert face_normal_alignment(mp, 0) >= 0.99

    def test_grows_into_side_a(self):
        base = curved_pair()
        mp = make_overlap(base, 0, 0.05)
        xh = np.array([[0.0, 0.5]])
        shift = mp.patches[1].map_points(xh) - base.patches[1].map_points(xh)
        # at y = 0.5 the interface normal is (1, 0); side b moves towards -x
        np.testing.assert_allclose(shift, [[-0.05, 0.0]], atol=1e-3)

    def test_folding_detected(self):
        with pytest.raises(GeometryError):
            make_overlap(curved_pair(amp=0.3), 0, 0.05)

    def test_negative_width(self):
        with pytest.raises(GeometryError):
            make_overlap(curved_pair(), 0, -0.1)

    def test_3d_box(self):
        mp = block_multipatch([[0, 1, 2], [0, 1], [0, 1]], 2, 2)
        ov = make_overlap(mp, 0, 0.01)
        assert overlap_width(ov, 0, samples=10) == pytest.approx(0.01, abs=1e-12)
