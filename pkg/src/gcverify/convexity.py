"""Moment-image analysis: sampled clouds, convex hulls in up to three
dimensions, a rasterized convexity certificate and level connectivity."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .actions import MomentData, eval_samples
from .fields import EvaluationError
from .manifold import SampledManifold

_DEGENERATE_REL = 1e-9


@dataclass
class MomentCloud:
    values: np.ndarray  # (N, m)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def bounds(self) -> np.ndarray:
        return np.stack([self.values.min(axis=0), self.values.max(axis=0)])


@dataclass
class Polytope:
    dim: int
    vertices: np.ndarray       # (V, m), CCW cycle for planar hulls
    facets: Optional[np.ndarray] = None  # triangle indices for 3d hulls
    degenerate: bool = False


def sample_moment_image(md: MomentData, m: SampledManifold) -> MomentCloud:
    values = np.atleast_2d(eval_samples(m, md.moment))
    if not np.all(np.isfinite(values)):
        bad = np.flatnonzero(~np.isfinite(values).all(axis=1))
        raise EvaluationError(
            f"moment evaluator failed at samples {bad[:5].tolist()}"
            + ("..." if len(bad) > 5 else ""))
    return MomentCloud(values=values)


def _monotone_chain(points: np.ndarray) -> np.ndarray:
    """Planar convex hull, counterclockwise vertex cycle."""
    pts = np.unique(points, axis=0)  # lexicographic sort + dedupe
    if len(pts) <= 2:
        return pts

    def half(iterable):
        out = []
        for p in iterable:
            while len(out) > 1:
                o, a = out[-2], out[-1]
                if ((a[0] - o[0]) * (p[1] - o[1])
                        - (a[1] - o[1]) * (p[0] - o[0])) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def convex_hull(cloud) -> Polytope:
    """Hull of a moment cloud: interval, monotone-chain polygon, or an
    incremental 3d hull; lower-dimensional clouds are flagged degenerate."""
    values = cloud.values if isinstance(cloud, MomentCloud) else \
        np.atleast_2d(np.asarray(cloud, dtype=float))
    m = values.shape[1]
    if m not in (1, 2, 3):
        raise ValueError("hulls supported for one to three moment components")
    if len(values) == 0:
        raise ValueError("empty cloud")
    span = values.max(axis=0) - values.min(axis=0)
    scale = max(float(span.max()), 1e-300)

    if m == 1:
        lo, hi = float(values.min()), float(values.max())
        return Polytope(dim=1, vertices=np.array([[lo], [hi]]),
                        degenerate=hi - lo <= _DEGENERATE_REL * max(1.0, abs(hi)))

    # detect affine rank to flag collinear / coplanar clouds
    centered = values - values.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    rank = int(np.sum(sv > _DEGENERATE_REL * max(sv[0], 1e-300)))
    if rank < m:
        basis = np.linalg.svd(centered, full_matrices=False)[2][:rank]
        flat = Polytope(dim=m, degenerate=True, vertices=np.zeros((0, m)))
        if rank == 0:
            flat.vertices = values.mean(axis=0)[None, :]
        else:
            sub = convex_hull(centered @ basis.T)
            flat.vertices = sub.vertices @ basis + values.mean(axis=0)
        return flat

    if m == 2:
        return Polytope(dim=2, vertices=_monotone_chain(values))

    from scipy.spatial import ConvexHull
    hull = ConvexHull(values)
    return Polytope(dim=3, vertices=values[hull.vertices],
                    facets=hull.simplices)


def hull_outside_distance(poly: Polytope, points: np.ndarray) -> np.ndarray:
    """How far outside the hull each point lies (0 inside)."""
    points = np.atleast_2d(points)
    v = np.atleast_2d(poly.vertices)
    if poly.degenerate or poly.dim == 1 or len(v) <= 2:
        # distance to the affine hull segment/point/box in each coordinate
        lo, hi = v.min(axis=0), v.max(axis=0)
        over = np.maximum(points - hi, 0.0)
        under = np.maximum(lo - points, 0.0)
        return np.maximum(over, under).max(axis=1)
    if poly.dim == 2:
        out = np.zeros(len(points))
        nv = len(v)
        for k in range(nv):
            a, b = v[k], v[(k + 1) % nv]
            edge = b - a
            normal = np.array([edge[1], -edge[0]])  # outward for CCW cycles
            normal /= np.linalg.norm(normal)
            out = np.maximum(out, (points - a) @ normal)
        return out
    from scipy.spatial import ConvexHull
    hull = ConvexHull(v)
    eq = hull.equations
    return np.maximum((points @ eq[:, :-1].T + eq[:, -1]).max(axis=1), 0.0)


def convexity_deficiency(cloud: MomentCloud, resolution: int = 100) -> float:
    """Fraction of hull-interior raster cells with no cloud point.

    Near zero certifies convexity of the sampled image at raster scale;
    clouds with holes score high.
    """
    values = cloud.values
    m = values.shape[1]
    if m not in (1, 2):
        raise ValueError("deficiency raster supports one or two components")
    if len(values) == 0:
        raise ValueError("empty cloud")
    poly = convex_hull(cloud)
    lo = poly.vertices.min(axis=0)
    hi = poly.vertices.max(axis=0)
    if poly.degenerate or np.any(hi - lo <= 0):
        return 0.0
    widths = (hi - lo) / resolution
    if m == 1:
        counts = np.histogram(values[:, 0], bins=resolution,
                              range=(lo[0], hi[0]))[0]
        return float(np.mean(counts == 0))
    counts = np.histogram2d(values[:, 0], values[:, 1],
                            bins=resolution,
                            range=((lo[0], hi[0]), (lo[1], hi[1])))[0]
    centers_x = lo[0] + (np.arange(resolution) + 0.5) * widths[0]
    centers_y = lo[1] + (np.arange(resolution) + 0.5) * widths[1]
    cx, cy = np.meshgrid(centers_x, centers_y, indexing="ij")
    centers = np.stack([cx.ravel(), cy.ravel()], axis=1)
    # interior cells: center at least half a cell diagonal inside the hull
    margin = 0.5 * float(np.linalg.norm(widths))
    interior = _shrink_margin(poly, centers, margin)
    if not interior.any():
        return 0.0
    empty = (counts.ravel() == 0) & interior
    return float(empty.sum() / interior.sum())


def _shrink_margin(poly: Polytope, points: np.ndarray,
                   margin: float) -> np.ndarray:
    """True where a point is at least margin inside every hull edge."""
    v = np.atleast_2d(poly.vertices)
    ok = np.ones(len(points), dtype=bool)
    nv = len(v)
    for k in range(nv):
        a, b = v[k], v[(k + 1) % nv]
        edge = b - a
        normal = np.array([edge[1], -edge[0]])
        normal /= np.linalg.norm(normal)
        ok &= (points - a) @ normal <= -margin
    return ok


@dataclass
class HullMatchReport:
    matched: bool
    max_vertex_distance: float
    max_cloud_excess: float


def hull_matches_fixed_images(poly: Polytope, cloud: MomentCloud,
                              fixed_values: np.ndarray,
                              tol: float) -> HullMatchReport:
    """Hull vertices must coincide with fixed-component moment values, and
    the hull of those values must contain the whole cloud."""
    fixed_values = np.atleast_2d(np.asarray(fixed_values, dtype=float))
    verts = np.atleast_2d(poly.vertices)
    dists = np.linalg.norm(verts[:, None, :] - fixed_values[None, :, :],
                           axis=2).min(axis=1)
    fixed_poly = convex_hull(fixed_values)
    excess = hull_outside_distance(fixed_poly, cloud.values)
    report = HullMatchReport(
        matched=bool(dists.max() <= tol and excess.max() <= tol),
        max_vertex_distance=float(dists.max()),
        max_cloud_excess=float(excess.max()))
    return report


def hull_tolerance(m: SampledManifold, cloud: MomentCloud) -> float:
    """2 h_geom scaled by the largest local Lipschitz constant of mu."""
    d_mu = np.linalg.norm(cloud.values[m.edges[:, 0]]
                          - cloud.values[m.edges[:, 1]], axis=1)
    d_x = np.linalg.norm(m.embed[m.edges[:, 0]] - m.embed[m.edges[:, 1]],
                         axis=1)
    lipschitz = float((d_mu / np.maximum(d_x, 1e-300)).max())
    return 2.0 * m.h_geom * max(lipschitz, 1e-12)


def default_level_eps(cloud: MomentCloud, m: SampledManifold) -> float:
    """2x the largest per-edge moment variation (sup norm)."""
    var = np.abs(cloud.values[m.edges[:, 0]]
                 - cloud.values[m.edges[:, 1]]).max()
    return 2.0 * float(var)


def level_connectivity(md: MomentData, m: SampledManifold, a,
                       eps: Optional[float] = None,
                       cloud: Optional[MomentCloud] = None) -> int:
    """Number of connected components of the sampled level band
    {|mu - a|_inf <= eps}; 0 if the band is empty."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if cloud is None:
        cloud = sample_moment_image(md, m)
    if eps is None:
        eps = default_level_eps(cloud, m)
    mask = np.abs(cloud.values - a).max(axis=1) <= eps
    return m.n_components(mask)


def interior_level_grid(cloud: MomentCloud, per_axis: int = 5) -> np.ndarray:
    """A per_axis^m grid of strictly interior level values of the image."""
    lo, hi = cloud.bounds
    axes = [np.linspace(lo[k], hi[k], per_axis + 2)[1:-1]
            for k in range(cloud.m)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)
