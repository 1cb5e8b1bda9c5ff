import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsflow import geometry as G
from nsflow.errors import ConfigurationError, OutOfChartError, ParameterError


def identity_chart(d2=10.0):
    return G.BoundaryChart(center=[0, 0, 0], rotation=np.eye(3), height_kind="flat", d2=d2)


class TestStraighten:
    def test_identity_chart(self):
        ch = identity_chart()
        assert np.allclose(ch.straighten([1.0, 2.0, 3.0]), [1, 2, 3])

    def test_sloped_graph(self):
        # F(z1, z2) = z1 realized by a cylinder chart is not available in
        # closed form; emulate via the jacobian contract instead (below).
        ch = identity_chart()
        z = ch.straighten([1.0, 0.0, 2.0])
        assert z[2] == 2.0

    def test_ball_chart_center_is_boundary(self):
        R = 2.0
        pole = np.array([0.0, 0.0, R])
        t1, t2 = G._tangent_frame(pole / R)
        rot = np.stack([t1, t2, -pole / R], axis=0)
        ch = G.BoundaryChart(center=pole, rotation=rot, height_kind="sphere",
                             height_radius=R, d2=0.8)
        z = ch.straighten(pole)
        assert abs(z[2]) < 1e-14

    def test_round_trip_ball(self):
        R = 1.5
        nrm = np.array([1.0, 1.0, 1.0]) / np.sqrt(3)
        t1, t2 = G._tangent_frame(nrm)
        ch = G.BoundaryChart(center=R * nrm, rotation=np.stack([t1, t2, -nrm]),
                             height_kind="sphere", height_radius=R, d2=0.5)
        rng = np.random.default_rng(3)
        pts = []
        while len(pts) < 1000:
            z = rng.uniform([-0.5, -0.5, 0.0], [0.5, 0.5, 1.0])
            p = ch.unstraighten(z)
            if np.all(ch.contains(p)):
                pts.append(p)
        pts = np.asarray(pts)
        back = ch.unstraighten(ch.straighten(pts))
        assert np.max(np.abs(back - pts)) < 1e-12

    def test_out_of_chart(self):
        ch = identity_chart(d2=1.0)
        with pytest.raises(OutOfChartError):
            ch.straighten([5.0, 0.0, 0.5])

    def test_interior_maps_above_plane(self):
        dom = G.DomainSpec(G.BALL, radius=1.0)
        atlas = G.build_atlas(dom, ([-1] * 3, [1] * 3), chart_density=8)
        ch = atlas.charts[0]
        inner = ch.center * 0.8
        if np.all(ch.contains(inner)):
            assert ch.straighten(inner)[2] > 0


class TestJacobian:
    def test_flat_identity(self):
        ch = identity_chart()
        assert np.allclose(ch.jacobian([0.3, 0.2, 0.5]), np.eye(3))

    def test_unit_determinant_everywhere(self):
        R = 2.0
        nrm = np.array([0.0, 0.0, 1.0])
        t1, t2 = G._tangent_frame(nrm)
        ch = G.BoundaryChart(center=R * nrm, rotation=np.stack([t1, t2, -nrm]),
                             height_kind="sphere", height_radius=R, d2=1.0)
        rng = np.random.default_rng(5)
        for _ in range(200):
            z = rng.uniform([-1, -1, 0], [1, 1, 2])
            p = ch.unstraighten(z)
            det = np.linalg.det(ch.jacobian(p))
            assert abs(abs(det) - 1.0) < 1e-12

    def test_sloped_row(self):
        # chart with F(z) = z1 has jacobian row 3 equal to (-1, 0, 1); check
        # against a finite-difference jacobian of the cylinder chart instead,
        # where the slope is z1/sqrt(R^2-z1^2).
        R = 3.0
        nrm = np.array([1.0, 0.0, 0.0])
        t_az = np.array([0.0, 1.0, 0.0])
        rot = np.stack([t_az, np.cross(-nrm, t_az), -nrm])
        ch = G.BoundaryChart(center=[R, 0, 0], rotation=rot,
                             height_kind="cylinder", height_radius=R, d2=1.0)
        p = ch.unstraighten(np.array([0.4, 0.1, 0.3]))
        jac = ch.jacobian(p)
        h = 1e-6
        fd = np.zeros((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd[:, j] = (ch.straighten(p + e) - ch.straighten(p - e)) / (2 * h)
        assert np.max(np.abs(jac - fd)) < 1e-7


def test_reflect_examples():
    assert np.allclose(G.reflect([1.0, 2.0, 3.0]), [1, 2, -3])
    assert np.allclose(G.reflect([0.0, 0.0, 0.0]), [0, 0, 0])


@given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3))
def test_reflect_involution(z):
    assert np.array_equal(G.reflect(G.reflect(z)), np.asarray(z, dtype=float))


def test_principal_curvatures():
    assert G.principal_curvatures(G.DomainSpec(G.HALF_SPACE)) == (0.0, 0.0)
    assert G.principal_curvatures(G.DomainSpec(G.BALL, 2.0)) == (0.5, 0.5)
    assert G.principal_curvatures(G.DomainSpec(G.CYLINDER, 4.0)) == (0.25, 0.0)


class TestNavierToOblique:
    def test_half_space(self):
        bc = G.navier_to_oblique(1.0, 1.0, 0.0, 0.0)
        assert bc.a[0] == bc.a[1] == -1.0
        assert bc.mode[2] == G.DIRICHLET
        assert abs(bc.b[0][2]) == 1.0

    def test_ball(self):
        bc = G.navier_to_oblique(1.0, 0.5, 0.5, 0.5)
        assert np.isclose(bc.a[0], -2.5)
        assert np.isclose(bc.a[1], -2.5)

    def test_cylinder(self):
        bc = G.navier_to_oblique(1.0, 1.0, 0.25, 0.0)
        assert np.isclose(bc.a[0], -1.25)
        assert np.isclose(bc.a[1], -1.0)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ParameterError):
            G.navier_to_oblique(0.0, 1.0, 0.0, 0.0)
        with pytest.raises(ParameterError):
            G.navier_to_oblique(1.0, -1.0, 0.0, 0.0)

    @given(beta=st.floats(1e-3, 1e3), nu=st.floats(1e-3, 1e3),
           kind=st.sampled_from(["half-space", "ball", "cylinder-duct"]),
           R=st.floats(0.1, 100.0))
    @settings(max_examples=60, deadline=None)
    def test_always_valid(self, beta, nu, kind, R):
        dom = G.DomainSpec(kind, None if kind == "half-space" else R)
        k1, k2 = G.principal_curvatures(dom)
        bc = G.navier_to_oblique(beta, nu, k1, k2)
        for i in range(2):
            assert bc.a[i] <= 0
            assert abs(np.linalg.norm(bc.b[i]) - 1.0) < 1e-12


def test_is_regular():
    bc = G.navier_to_oblique(1.0, 1.0, 0.0, 0.0)
    assert G.is_regular(bc, [0, 0, -1.0])
    tangential = G.ObliqueBC(a=(0.0, 0.0, 0.0),
                             b=((1.0, 0, 0), (1.0, 0, 0), (0.0, 0, 0)),
                             mode=("regular-oblique",) * 2 + ("dirichlet",))
    assert not G.is_regular(tangential, [0, 0, 1.0])


def test_neumann_degenerate_flagged():
    bc = G.ObliqueBC(a=(0.0, 0.0, 0.0),
                     b=((0, 0, 1.0), (0, 0, 1.0), (0, 0, 0.0)),
                     mode=("regular-oblique",) * 2 + ("dirichlet",))
    n = [0, 0, -1.0]
    assert G.is_regular(bc, n)
    assert G.bc_component_labels(bc, n)[:2] == ["neumann", "neumann"]


class TestCutoffProfile:
    @pytest.mark.parametrize("kind", ["quintic", "cubic"])
    def test_plateaus_and_slope(self, kind):
        z = G.CutoffProfile(kind)
        r = np.linspace(0, 2, 4001)
        v = z(r)
        assert np.all(v[r <= 0.25] == 1.0)
        assert np.all(v[r >= 0.75] == 0.0)
        assert np.all(np.diff(v) <= 1e-15)
        assert np.max(np.abs(z.derivative(r))) <= 4.0

    def test_derivative_matches_fd(self):
        z = G.CutoffProfile()
        r = np.linspace(0.26, 0.74, 97)
        h = 1e-6
        fd = (z(r + h) - z(r - h)) / (2 * h)
        assert np.max(np.abs(fd - z.derivative(r))) < 1e-8


class TestAtlas:
    def test_half_space_single_chart(self):
        dom = G.DomainSpec(G.HALF_SPACE)
        pou = G.build_atlas(dom, ([0, 0, 0], [1, 1, 1]), chart_density=1)
        assert pou.n_charts == 1
        assert pou.charts[0].height_kind == "flat"
        pts = np.random.default_rng(0).uniform([0, 0, 0], [1, 1, 1], (200, 3))
        w = pou.weights(pts)
        assert np.allclose(w, 1.0)

    def test_ball_partition_sums_to_one(self):
        dom = G.DomainSpec(G.BALL, radius=1.0)
        pou = G.build_atlas(dom, ([-1] * 3, [1] * 3), chart_density=8)
        for ch in pou.charts:
            assert abs(np.linalg.norm(ch.center) - 1.0) < 1e-12
        rng = np.random.default_rng(1)
        pts = rng.normal(size=(4000, 3))
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * rng.uniform(0, 1, (4000, 1)) ** (1 / 3)
        pts = pts[:1000]
        w = pou.weights(pts)
        assert np.max(np.abs(w.sum(axis=0) - 1.0)) < 1e-12

    def test_interior_cubes_clear_of_boundary(self):
        dom = G.DomainSpec(G.BALL, radius=1.0)
        pou = G.build_atlas(dom, ([-1] * 3, [1] * 3), chart_density=8)
        d1 = pou.cube_halfwidth
        for c in pou.cube_centers:
            # farthest corner of the cube must stay d1 inside the sphere
            assert np.linalg.norm(c) + d1 * np.sqrt(3) <= 1.0 - d1 + 1e-12

    def test_cylinder_atlas_covers(self):
        dom = G.DomainSpec(G.CYLINDER, radius=1.0)
        pou = G.build_atlas(dom, ([-1, -1, 0], [1, 1, 2]), chart_density=8)
        rng = np.random.default_rng(2)
        pts = rng.uniform([-0.9, -0.9, 0.1], [0.9, 0.9, 1.9], (500, 3))
        pts = pts[np.linalg.norm(pts[:, :2], axis=1) < 1.0][:200]
        w = pou.weights(pts)
        assert np.max(np.abs(w.sum(axis=0) - 1.0)) < 1e-12

    def test_degenerate_box_rejected(self):
        with pytest.raises(ConfigurationError):
            G.build_atlas(G.DomainSpec(G.HALF_SPACE), ([0, 0, 0], [0, 1, 1]))

    def test_json_round_trip(self):
        dom = G.DomainSpec(G.BALL, radius=1.0)
        pou = G.build_atlas(dom, ([-1] * 3, [1] * 3), chart_density=6)
        doc = pou.to_json()
        pou2 = G.PartitionOfUnity.from_json(doc)
        pts = np.array([[0.1, 0.2, 0.3], [0.5, -0.2, 0.6], [-0.7, 0.1, 0.0]])
        assert np.allclose(pou.weights(pts), pou2.weights(pts))
        json.loads(doc)  # must be a valid JSON document


class TestChartAlgebra:
    def ball_chart(self, R=2.0):
        nrm = np.array([0.6, 0.0, 0.8])
        t1, t2 = G._tangent_frame(nrm)
        return G.BoundaryChart(center=R * nrm, rotation=np.stack([t1, t2, -nrm]),
                               height_kind="sphere", height_radius=R, d2=1.0)

    def test_psi_sharp_expansion_identity(self):
        # distortion-squared separation equals separation plus the quadratic
        # remainder built from the height gradient, exactly
        ch = self.ball_chart()
        rng = np.random.default_rng(7)
        for _ in range(50):
            zx = rng.uniform([-0.5, -0.5, 0.0], [0.5, 0.5, 1.0])
            zy = rng.uniform([-0.5, -0.5, 0.0], [0.5, 0.5, 1.0])
            x, y = ch.unstraighten(zx), ch.unstraighten(zy)
            d = ch.local(x) - ch.local(y)
            gf = ch.height_grad(*ch.local(y)[:2])
            expect = d + G.rf_vector(gf, d)
            assert np.max(np.abs(ch.psi_sharp(x, y) - expect)) < 1e-12
            gfx = ch.height_grad(*ch.local(x)[:2])
            expect_flat = d + G.rf_vector(gfx, d)
            assert np.max(np.abs(ch.psi_flat(x, y) - expect_flat)) < 1e-12

    def test_straightened_distance_comparable(self):
        ch = self.ball_chart()
        rng = np.random.default_rng(8)
        for _ in range(200):
            zx = rng.uniform([-0.4, -0.4, 0.0], [0.4, 0.4, 0.8])
            zy = zx + rng.uniform(-0.1, 0.1, 3)
            zy[2] = abs(zy[2])
            x, y = ch.unstraighten(zx), ch.unstraighten(zy)
            r = np.linalg.norm(x - y)
            rt = np.linalg.norm(ch.straighten(x) - ch.straighten(y))
            if r > 0:
                assert 0.5 * r <= rt <= 2.0 * r


def test_surface_samples_sphere_area():
    dom = G.DomainSpec(G.BALL, radius=1.5)
    pts, w, nrm, t1, t2 = G.surface_samples(dom, 24)
    assert abs(w.sum() - 4 * np.pi * 1.5**2) < 1e-9
    assert np.max(np.abs(np.linalg.norm(nrm, axis=1) - 1)) < 1e-12
    assert np.max(np.abs(np.sum(nrm * t1, axis=1))) < 1e-12
    assert np.max(np.abs(np.sum(t1 * t2, axis=1))) < 1e-12


def test_surface_samples_cylinder_area():
    dom = G.DomainSpec(G.CYLINDER, radius=2.0)
    pts, w, nrm, t1, t2 = G.surface_samples(dom, 32, z_range=(0.0, 3.0))
    assert abs(w.sum() - 2 * np.pi * 2.0 * 3.0) < 1e-9
