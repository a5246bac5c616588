"""Quasi-uniform sample clouds of compact manifolds with chart coordinates
and a neighbor graph.

Charts are kept singularity-free: the sphere is covered by an equatorial
(theta, z) band plus two polar (x, y) caps, so finite differencing of
analytic field evaluators never hits a coordinate degeneracy.  Periodic
identifications are realized as wraparound edges of the neighbor graph
(samples are never duplicated across a seam).
"""

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

BAND_Z = 0.8     # half-height of the equatorial band chart
CAP_R = 0.7      # chart radius of the polar caps (overlaps the band)


@dataclass
class SampledManifold:
    """Sample points of a compact d-manifold.

    coords hold chart-local coordinates; embed holds coordinates of an
    embedding used only for distances (edge lengths, PCA cross-checks).
    """

    dim: int
    chart_names: list
    chart_index: np.ndarray      # (N,) index into chart_names
    coords: np.ndarray           # (N, dim)
    embed: np.ndarray            # (N, De)
    edges: np.ndarray            # (E, 2) undirected, u < v
    seam_edges: np.ndarray       # subset of edges crossing periodic seams
    _adj: sp.csr_matrix = field(default=None, repr=False, compare=False)

    @property
    def n_samples(self) -> int:
        return self.coords.shape[0]

    @property
    def h_geom(self) -> float:
        """Characteristic length: max neighbor distance in the embedding."""
        d = self.embed[self.edges[:, 0]] - self.embed[self.edges[:, 1]]
        return float(np.sqrt((d ** 2).sum(axis=1)).max())

    def chart_samples(self, name: str) -> np.ndarray:
        return np.flatnonzero(self.chart_index == self.chart_names.index(name))

    def adjacency(self) -> sp.csr_matrix:
        if self._adj is None:
            n = self.n_samples
            u, v = self.edges[:, 0], self.edges[:, 1]
            data = np.ones(2 * len(self.edges), dtype=np.int8)
            self._adj = sp.csr_matrix(
                (data, (np.concatenate([u, v]), np.concatenate([v, u]))),
                shape=(n, n))
        return self._adj

    def neighbors(self, i: int) -> np.ndarray:
        adj = self.adjacency()
        return adj.indices[adj.indptr[i]:adj.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency().sum(axis=1)).ravel()

    def component_labels(self, mask: np.ndarray = None) -> np.ndarray:
        """Connected-component label per sample (-1 outside the mask)."""
        if mask is None:
            return connected_components(self.adjacency(), directed=False)[1]
        idx = np.flatnonzero(mask)
        labels = np.full(self.n_samples, -1, dtype=int)
        if len(idx) == 0:
            return labels
        # induced subgraph straight from the edge list
        renumber = np.cumsum(mask) - 1
        keep = mask[self.edges[:, 0]] & mask[self.edges[:, 1]]
        u = renumber[self.edges[keep, 0]]
        v = renumber[self.edges[keep, 1]]
        n_sub = len(idx)
        sub = sp.csr_matrix(
            (np.ones(2 * len(u), dtype=np.int8),
             (np.concatenate([u, v]), np.concatenate([v, u]))),
            shape=(n_sub, n_sub))
        labels[idx] = connected_components(sub, directed=False)[1]
        return labels

    def n_components(self, mask: np.ndarray = None) -> int:
        labels = self.component_labels(mask)
        labels = labels[labels >= 0]
        return int(labels.max()) + 1 if len(labels) else 0

    def is_connected(self) -> bool:
        return self.n_components() == 1

    def to_csv(self, path) -> None:
        """Export the cloud: id, chart, chart coords, embedding, neighbors."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["id", "chart"]
                + [f"u{k}" for k in range(self.dim)]
                + [f"e{k}" for k in range(self.embed.shape[1])]
                + ["neighbors"])
            for i in range(self.n_samples):
                writer.writerow(
                    [i, self.chart_names[self.chart_index[i]]]
                    + [f"{x:.12g}" for x in self.coords[i]]
                    + [f"{x:.12g}" for x in self.embed[i]]
                    + [";".join(str(j) for j in self.neighbors(i))])


def _dedupe(edges: np.ndarray) -> np.ndarray:
    if len(edges) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    edges = np.sort(np.asarray(edges, dtype=np.int64), axis=1)
    return np.unique(edges, axis=0)


def _grid_edges(shape, wrap_axes=()):
    """4-adjacency edges of an nd index grid; wrapped axes add seam edges."""
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    plain, seam = [], []
    for ax in range(len(shape)):
        a = np.moveaxis(idx, ax, 0)
        plain.append(np.stack([a[:-1].ravel(), a[1:].ravel()], axis=1))
        if ax in wrap_axes and shape[ax] > 2:
            seam.append(np.stack([a[-1].ravel(), a[0].ravel()], axis=1))
    plain = np.concatenate(plain) if plain else np.zeros((0, 2), dtype=int)
    seam = np.concatenate(seam) if seam else np.zeros((0, 2), dtype=int)
    return plain, seam


def _disk_grid(step: float, radius: float):
    """Square lattice (including the origin) clipped to a disk, with
    8-adjacency edges."""
    k = int(np.floor(radius / step))
    ii, jj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1),
                         indexing="ij")
    keep = (ii ** 2 + jj ** 2) * step ** 2 <= radius ** 2 + 1e-12
    index = -np.ones(ii.shape, dtype=int)
    index[keep] = np.arange(keep.sum())
    pts = np.stack([ii[keep] * step, jj[keep] * step], axis=1)
    s0, s1 = index.shape
    edges = []
    for di, dj in ((0, 1), (1, 0), (1, 1), (1, -1)):
        i0, i1 = max(0, -di), min(s0, s0 - di)
        j0, j1 = max(0, -dj), min(s1, s1 - dj)
        a = index[i0:i1, j0:j1]
        b = index[i0 + di:i1 + di, j0 + dj:j1 + dj]
        ok = (a >= 0) & (b >= 0)
        edges.append(np.stack([a[ok], b[ok]], axis=1))
    return pts, np.concatenate(edges)


def sphere_embed(chart: str, uv: np.ndarray) -> np.ndarray:
    """Embedding R^3 coordinates of sphere chart points."""
    uv = np.atleast_2d(uv)
    if chart == "band":
        theta, z = uv[:, 0], uv[:, 1]
        rho = np.sqrt(1.0 - z ** 2)
        return np.stack([rho * np.cos(theta), rho * np.sin(theta), z], axis=1)
    sign = 1.0 if chart == "cap_north" else -1.0
    x, y = uv[:, 0], uv[:, 1]
    return np.stack([x, y, sign * np.sqrt(1.0 - x ** 2 - y ** 2)], axis=1)


def sphere_manifold(resolution: int) -> SampledManifold:
    """Unit sphere: equatorial band plus two polar caps.

    resolution n sets the grid step 1.5/n, giving about 6 n^2 samples.
    """
    if resolution < 4:
        raise ValueError("resolution must be at least 4")
    h = 1.5 / resolution
    n_theta = max(8, int(round(2 * np.pi / h)))
    n_z = max(5, int(round(2 * BAND_Z / h))) + 1
    thetas = 2 * np.pi * np.arange(n_theta) / n_theta
    zs = np.linspace(-BAND_Z, BAND_Z, n_z)
    tt, zz = np.meshgrid(thetas, zs, indexing="ij")
    band = np.stack([tt.ravel(), zz.ravel()], axis=1)
    band_edges, band_seam = _grid_edges((n_theta, n_z), wrap_axes=(0,))

    cap_pts, cap_edges = _disk_grid(h, CAP_R)

    charts = ["band", "cap_north", "cap_south"]
    blocks = [band, cap_pts, cap_pts.copy()]
    offsets = np.cumsum([0] + [len(b) for b in blocks])
    coords = np.concatenate(blocks)
    chart_index = np.concatenate(
        [np.full(len(b), k, dtype=np.int16) for k, b in enumerate(blocks)])
    embed = np.concatenate(
        [sphere_embed(c, b) for c, b in zip(charts, blocks)])

    edges = [band_edges, band_seam,
             cap_edges + offsets[1], cap_edges + offsets[2]]

    # cross-link the charts throughout the overlap annulus of cap and band
    from scipy.spatial import cKDTree
    cap_r = np.sqrt((cap_pts ** 2).sum(axis=1))
    overlap = cap_r >= np.sqrt(1.0 - BAND_Z ** 2) - 2.05 * h
    z_edge = np.sqrt(1.0 - CAP_R ** 2)
    for cap_id, zsign in ((1, 1.0), (2, -1.0)):
        cap_glob = offsets[cap_id] + np.flatnonzero(overlap)
        band_glob = np.flatnonzero(
            (chart_index == 0) & (zsign * coords[:, 1] >= z_edge - 2.05 * h))
        tree = cKDTree(embed[band_glob])
        pairs = tree.query_ball_point(embed[cap_glob], r=1.7 * h)
        flat = [(cap_glob[i], band_glob[j])
                for i, js in enumerate(pairs) for j in js]
        if flat:
            edges.append(np.array(flat, dtype=np.int64))

    return SampledManifold(
        dim=2, chart_names=charts, chart_index=chart_index, coords=coords,
        embed=embed, edges=_dedupe(np.concatenate(edges)),
        seam_edges=_dedupe(band_seam))


def torus_manifold(n_per_axis: int) -> SampledManifold:
    """Flat 2-torus with angle coordinates in [0, 2pi)^2."""
    if n_per_axis < 3:
        raise ValueError("need at least 3 points per axis")
    t = 2 * np.pi * np.arange(n_per_axis) / n_per_axis
    aa, bb = np.meshgrid(t, t, indexing="ij")
    coords = np.stack([aa.ravel(), bb.ravel()], axis=1)
    plain, seam = _grid_edges((n_per_axis, n_per_axis), wrap_axes=(0, 1))
    embed = np.stack([np.cos(coords[:, 0]), np.sin(coords[:, 0]),
                      np.cos(coords[:, 1]), np.sin(coords[:, 1])], axis=1)
    return SampledManifold(
        dim=2, chart_names=["torus"],
        chart_index=np.zeros(len(coords), dtype=np.int16), coords=coords,
        embed=embed, edges=_dedupe(np.concatenate([plain, seam])),
        seam_edges=_dedupe(seam))


def box_manifold(n_per_axis: int, dim: int = 4) -> SampledManifold:
    """A plain [0, 1]^dim grid chart (open control examples, no seams)."""
    axes = [np.linspace(0.0, 1.0, n_per_axis)] * dim
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    plain, _ = _grid_edges((n_per_axis,) * dim)
    return SampledManifold(
        dim=dim, chart_names=["box"],
        chart_index=np.zeros(len(coords), dtype=np.int16), coords=coords,
        embed=coords.copy(), edges=_dedupe(plain),
        seam_edges=np.zeros((0, 2), dtype=np.int64))


def product_manifold(a: SampledManifold, b: SampledManifold) -> SampledManifold:
    """Cartesian product cloud with the product neighbor graph."""
    na, nb = a.n_samples, b.n_samples
    ia = np.repeat(np.arange(na), nb)
    ib = np.tile(np.arange(nb), na)
    coords = np.concatenate([a.coords[ia], b.coords[ib]], axis=1)
    embed = np.concatenate([a.embed[ia], b.embed[ib]], axis=1)

    chart_names = [f"{ca}|{cb}" for ca in a.chart_names for cb in b.chart_names]
    chart_index = (a.chart_index[ia].astype(np.int32) * len(b.chart_names)
                   + b.chart_index[ib]).astype(np.int16)

    def lift_a(e):
        if len(e) == 0:
            return np.zeros((0, 2), dtype=np.int64)
        base = np.arange(nb)
        return np.stack([
            (e[:, 0][:, None] * nb + base[None, :]).ravel(),
            (e[:, 1][:, None] * nb + base[None, :]).ravel()], axis=1)

    def lift_b(e):
        if len(e) == 0:
            return np.zeros((0, 2), dtype=np.int64)
        base = np.arange(na) * nb
        return np.stack([
            (base[:, None] + e[:, 0][None, :]).ravel(),
            (base[:, None] + e[:, 1][None, :]).ravel()], axis=1)

    # lifted edges of deduplicated factor edges are already unique and sorted
    edges = np.concatenate([lift_a(a.edges), lift_b(b.edges)])
    seam = np.concatenate([lift_a(a.seam_edges), lift_b(b.seam_edges)])
    return SampledManifold(
        dim=a.dim + b.dim, chart_names=chart_names, chart_index=chart_index,
        coords=coords, embed=embed, edges=edges, seam_edges=seam)


def local_dimension(m: SampledManifold, members: np.ndarray,
                    eig_cutoff: float = 1e-3) -> int:
    """Dimension estimate of a submanifold given by member sample ids.

    Local PCA of chart-coordinate offsets to member neighbors, skipping
    points whose member neighbors live in a different chart; the component
    dimension is the largest local rank (0 for isolated points).
    """
    members = np.asarray(members)
    member_set = np.zeros(m.n_samples, dtype=bool)
    member_set[members] = True
    best = 0
    for i in members:
        nbrs = m.neighbors(i)
        nbrs = nbrs[member_set[nbrs] & (m.chart_index[nbrs] == m.chart_index[i])]
        if len(nbrs) == 0:
            continue
        diff = m.coords[nbrs] - m.coords[i]
        lam = np.linalg.svd(diff, compute_uv=False) ** 2
        best = max(best, int(np.sum(lam > eig_cutoff * lam[0])))
    return best
