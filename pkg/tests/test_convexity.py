"""Moment clouds, convex hulls, the rasterized convexity certificate and
level connectivity."""

import numpy as np
import pytest

from gcverify import actions, catalog, convexity

HAMILTONIAN = ("sphere_rotation", "product_spheres_T2", "sphere_bshift",
               "twisted_sphere_torus")


def cloud_of(name):
    ex = catalog.load(name)
    return ex, convexity.sample_moment_image(ex.moment, ex.manifold)


class TestConvexHull:
    def test_triangle_with_interior_point(self):
        poly = convexity.convex_hull(np.array(
            [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.2, 0.2]]))
        assert sorted(map(tuple, poly.vertices)) == \
            [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]
        assert not poly.degenerate

    def test_permutation_invariance_and_containment(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((200, 2))
        poly1 = convexity.convex_hull(pts)
        poly2 = convexity.convex_hull(pts[rng.permutation(200)])
        assert np.allclose(poly1.vertices, poly2.vertices)
        assert convexity.hull_outside_distance(poly1, pts).max() <= 1e-9

    def test_interval_hull(self):
        poly = convexity.convex_hull(np.array([[0.3], [-1.2], [0.9]]))
        assert poly.vertices.tolist() == [[-1.2], [0.9]]

    def test_collinear_cloud_flagged_degenerate(self):
        t = np.linspace(0, 1, 17)[:, None]
        poly = convexity.convex_hull(np.hstack([t, 2 * t]))
        assert poly.degenerate
        assert len(poly.vertices) == 2

    def test_3d_cube(self):
        corners = np.array(np.meshgrid([0, 1], [0, 1], [0, 1]),
                           dtype=float).reshape(3, -1).T
        rng = np.random.default_rng(0)
        inner = 0.2 + 0.6 * rng.random((50, 3))
        poly = convexity.convex_hull(np.vstack([corners, inner]))
        assert sorted(map(tuple, poly.vertices)) == sorted(map(tuple, corners))
        assert convexity.hull_outside_distance(poly, inner).max() <= 1e-9

    def test_unsupported_dimension(self):
        with pytest.raises(ValueError, match="three"):
            convexity.convex_hull(np.zeros((4, 5)))

    @pytest.mark.parametrize("name,expected", [
        ("sphere_rotation", ((-1.0,), (1.0,))),
        ("twisted_sphere_torus", ((-1.0,), (1.0,))),
        ("product_spheres_T2",
         ((-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0))),
    ])
    def test_catalog_hulls(self, name, expected):
        _, cloud = cloud_of(name)
        poly = convexity.convex_hull(cloud)
        got = tuple(sorted(tuple(np.round(v, 9)) for v in poly.vertices))
        assert got == expected


class TestDeficiency:
    def test_sphere_cloud_fills_interval(self):
        ex, cloud = cloud_of("sphere_rotation")
        eps = convexity.default_level_eps(cloud, ex.manifold)
        raster = int((cloud.bounds[1] - cloud.bounds[0]).min() / eps)
        assert convexity.convexity_deficiency(cloud, raster) < 0.01

    def test_product_cloud_fills_square(self):
        ex, cloud = cloud_of("product_spheres_T2")
        eps = convexity.default_level_eps(cloud, ex.manifold)
        raster = int((cloud.bounds[1] - cloud.bounds[0]).min() / eps)
        assert convexity.convexity_deficiency(cloud, raster) < 0.02

    def test_annulus_control_scores_high(self):
        rng = np.random.default_rng(7)
        ang = rng.uniform(0, 2 * np.pi, 20000)
        rad = rng.uniform(0.7, 1.0, 20000)
        ring = convexity.MomentCloud(np.stack(
            [rad * np.cos(ang), rad * np.sin(ang)], axis=1))
        assert convexity.convexity_deficiency(ring, 100) > 0.2

    def test_1d_gap_detected(self):
        vals = np.concatenate([np.linspace(0, 0.3, 200),
                               np.linspace(0.8, 1.0, 200)])[:, None]
        assert convexity.convexity_deficiency(
            convexity.MomentCloud(vals), 50) > 0.2

    def test_single_point_cloud(self):
        cloud = convexity.MomentCloud(np.zeros((10, 1)))
        assert convexity.convexity_deficiency(cloud, 10) == 0.0

    def test_empty_cloud_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            convexity.convexity_deficiency(
                convexity.MomentCloud(np.zeros((0, 1))), 10)


class TestHullMatchesFixedImages:
    @pytest.mark.parametrize("name", HAMILTONIAN)
    def test_catalog(self, name):
        ex, cloud = cloud_of(name)
        poly = convexity.convex_hull(cloud)
        comps = actions.fixed_point_components(ex.action, ex.moment,
                                               ex.manifold)
        tol = convexity.hull_tolerance(ex.manifold, cloud)
        match = convexity.hull_matches_fixed_images(
            poly, cloud, np.array([c.moment_value for c in comps]), tol)
        assert match.matched

    def test_mismatch_detected(self):
        ex, cloud = cloud_of("sphere_rotation")
        poly = convexity.convex_hull(cloud)
        match = convexity.hull_matches_fixed_images(
            poly, cloud, np.array([[-0.5], [0.5]]), tol=0.05)
        assert not match.matched


class TestLevels:
    def test_sphere_equator(self):
        ex, cloud = cloud_of("sphere_rotation")
        assert convexity.level_connectivity(ex.moment, ex.manifold, (0.0,),
                                            cloud=cloud) == 1

    def test_product_center(self):
        ex, cloud = cloud_of("product_spheres_T2")
        assert convexity.level_connectivity(ex.moment, ex.manifold,
                                            (0.0, 0.0), cloud=cloud) == 1

    def test_non_moment_control_two_circles(self):
        ex = catalog.load("sphere_rotation")
        zsq = actions.MomentData(
            m=1,
            moment=lambda c, uv: catalog.sphere_height(c, uv)[:, None] ** 2,
            one_forms=lambda c, uv: np.zeros((len(uv), 1, 2)))
        assert convexity.level_connectivity(zsq, ex.manifold, (0.5,)) == 2

    def test_empty_band(self):
        ex, cloud = cloud_of("sphere_rotation")
        assert convexity.level_connectivity(ex.moment, ex.manifold, (5.0,),
                                            eps=0.01, cloud=cloud) == 0

    def test_interior_grid_shape(self):
        _, cloud = cloud_of("product_spheres_T2")
        grid = convexity.interior_level_grid(cloud, 5)
        assert grid.shape == (25, 2)
        lo, hi = cloud.bounds
        assert (grid > lo).all() and (grid < hi).all()

    def test_moment_cloud_validates(self):
        ex = catalog.load("sphere_rotation")
        bad = actions.MomentData(
            m=1,
            moment=lambda c, uv: np.where(
                uv[:, :1] > 0.5, np.nan, 0.0),
            one_forms=lambda c, uv: np.zeros((len(uv), 1, 2)))
        with pytest.raises(Exception, match="failed"):
            convexity.sample_moment_image(bad, ex.manifold)
