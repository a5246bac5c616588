"""Critical-set analysis of moment components: coordinate Hessians at
critical points, Crit = Fix comparison, structural identities of the
induced vector field, and Bott-Morse checks on regular slices."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import fiber, fields
from .actions import ActionSpec, MomentData, eval_samples, moment_gradients
from .manifold import SampledManifold

HESSIAN_STEP = 1e-3


class NotCriticalError(ValueError):
    """Hessian requested at a sample that is not a critical point."""


class NonRegularSliceError(ValueError):
    """The partial moment map drops rank on the requested slice."""


def mu_xi(md: MomentData, xi) -> Callable:
    """Scalar evaluator of the moment component mu^xi."""
    xi = np.asarray(xi, dtype=float)

    def f(chart, uv):
        return np.asarray(md.moment(chart, uv)) @ xi
    return f


def xi_field(action: ActionSpec, xi) -> Callable:
    """Vector-field evaluator of the induced field of xi."""
    xi = np.asarray(xi, dtype=float)

    def f(chart, uv):
        return np.einsum("k,nkd->nd", xi, np.asarray(
            action.generators(chart, uv)))
    return f


def coordinate_hessian(f: Callable, chart: str, uv: np.ndarray,
                       step: float = HESSIAN_STEP) -> np.ndarray:
    """Central second differences of a scalar evaluator, (N, d, d).

    The mixed 4-point stencil is symmetric in the two directions, so the
    output is symmetric by construction.
    """
    uv = np.atleast_2d(np.asarray(uv, dtype=float))
    n, d = uv.shape
    out = np.empty((n, d, d))
    f0 = np.asarray(f(chart, uv))
    basis = np.eye(d) * step
    for a in range(d):
        ea = basis[a]
        out[:, a, a] = (np.asarray(f(chart, uv + ea)) - 2.0 * f0
                        + np.asarray(f(chart, uv - ea))) / step ** 2
        for b in range(a + 1, d):
            eb = basis[b]
            val = (np.asarray(f(chart, uv + ea + eb))
                   - np.asarray(f(chart, uv + ea - eb))
                   - np.asarray(f(chart, uv - ea + eb))
                   + np.asarray(f(chart, uv - ea - eb))) / (4.0 * step ** 2)
            out[:, a, b] = val
            out[:, b, a] = val
    return out


def index_counts(hessians: np.ndarray, rel_tol: float = 1e-6):
    """(index, coindex, nullity, eigenvalues) of batched symmetric matrices.

    Eigenvalues within rel_tol of the largest magnitude count as nullity.
    """
    eigs = np.linalg.eigvalsh(hessians)
    scale = np.abs(eigs).max(axis=1, keepdims=True)
    cut = rel_tol * np.where(scale > 0, scale, 1.0)
    index = (eigs < -cut).sum(axis=1)
    coindex = (eigs > cut).sum(axis=1)
    nullity = hessians.shape[-1] - index - coindex
    return index, coindex, nullity, eigs


def hessian_at_critical(action: ActionSpec, md: MomentData, chart: str,
                        uv: np.ndarray, xi, step: float = HESSIAN_STEP,
                        speed_tol: float = 1e-6,
                        speed_scale: float = 1.0) -> np.ndarray:
    """Coordinate Hessian of mu^xi, only defined where the induced field
    vanishes (there it is frame independent)."""
    uv = np.atleast_2d(uv)
    speeds = np.sqrt((np.asarray(xi_field(action, xi)(chart, uv)) ** 2)
                     .sum(axis=1))
    bad = speeds > speed_tol * speed_scale
    if bad.any():
        raise NotCriticalError(
            f"{int(bad.sum())} samples are not critical "
            f"(max speed {speeds.max():.3e})")
    return coordinate_hessian(mu_xi(md, xi), chart, uv, step)


@dataclass
class CriticalSample:
    sample: int
    index: int
    coindex: int
    nullity: int
    eigenvalues: np.ndarray


@dataclass
class CriticalComponent:
    members: np.ndarray
    index: int
    coindex: int
    nullity: int
    moment_value: float
    uniform: bool


@dataclass
class MorseReport:
    xi: tuple
    samples: list
    components: list
    parity_ok: bool

    def component_signature(self) -> tuple:
        return tuple(sorted((c.index, c.coindex, c.nullity)
                            for c in self.components))


def critical_mask(action: ActionSpec, m: SampledManifold, xi,
                  tol: float = 1e-6) -> np.ndarray:
    """Samples where the induced field of xi vanishes (relative to the
    median speed)."""
    speeds = np.sqrt((eval_samples(m, xi_field(action, xi)) ** 2).sum(axis=1))
    scale = float(np.median(speeds))
    if scale == 0.0:
        return np.ones(m.n_samples, dtype=bool)
    return speeds < tol * scale


def analyze_direction(action: ActionSpec, md: MomentData,
                      m: SampledManifold, xi, step: float = HESSIAN_STEP,
                      tol: float = 1e-6,
                      index_tol: float = 1e-6) -> MorseReport:
    """Cluster the critical set of mu^xi and compute Hessian data on it."""
    mask = critical_mask(action, m, xi, tol)
    labels = m.component_labels(mask)
    crit = np.flatnonzero(mask)
    hess = eval_samples(m, lambda c, uv: coordinate_hessian(
        mu_xi(md, xi), c, uv, step), subset=crit) if len(crit) else \
        np.zeros((0, m.dim, m.dim))
    index, coindex, nullity, eigs = index_counts(hess, index_tol) if len(crit) \
        else (np.zeros(0, int),) * 3 + (np.zeros((0, m.dim)),)
    samples = [CriticalSample(sample=int(s), index=int(i), coindex=int(c),
                              nullity=int(nu), eigenvalues=ev)
               for s, i, c, nu, ev in zip(crit, index, coindex, nullity, eigs)]
    mu_vals = eval_samples(m, mu_xi(md, xi), subset=crit) if len(crit) else \
        np.zeros(0)
    components = []
    for lab in range(labels.max() + 1 if mask.any() else 0):
        sel = np.flatnonzero(labels[crit] == lab)
        trip = {(int(index[i]), int(coindex[i]), int(nullity[i])) for i in sel}
        first = sorted(trip)[0]
        components.append(CriticalComponent(
            members=crit[sel], index=first[0], coindex=first[1],
            nullity=first[2], moment_value=float(mu_vals[sel].mean()),
            uniform=len(trip) == 1))
    components.sort(key=lambda c: c.moment_value)
    parity = all(c.index % 2 == 0 and c.coindex % 2 == 0 and c.uniform
                 for c in components)
    return MorseReport(xi=tuple(np.atleast_1d(xi)), samples=samples,
                       components=components, parity_ok=parity)


@dataclass
class CritFixReport:
    critical_only: np.ndarray
    fixed_only: np.ndarray
    n_both: int

    @property
    def coincide(self) -> bool:
        return len(self.critical_only) == 0 and len(self.fixed_only) == 0


def crit_equals_fixed_check(action: ActionSpec, md: MomentData,
                            m: SampledManifold, xi, tol: float = 1e-6,
                            step: float = fields.DEFAULT_STEP,
                            analytic: bool = False) -> CritFixReport:
    """Symmetric difference between {d mu^xi = 0} and {xi_M = 0} as sample
    sets, at matched relative thresholds."""
    xi = np.asarray(xi, dtype=float)
    dmu = eval_samples(m, lambda c, uv: np.einsum(
        "k,nkd->nd", xi, moment_gradients(md, c, uv, step, analytic)))
    grad_norm = np.sqrt((dmu ** 2).sum(axis=1))
    grad_scale = float(np.median(grad_norm))
    crit = grad_norm < tol * max(grad_scale, 1e-300)
    fixed = critical_mask(action, m, xi, tol)
    return CritFixReport(
        critical_only=np.flatnonzero(crit & ~fixed),
        fixed_only=np.flatnonzero(fixed & ~crit),
        n_both=int(np.sum(crit & fixed)))


# ---------------------------------------------------------------------------
# structural identities from the bihermitian split of (J, J')


def _bihermitian_at(structure: Callable, metric: Callable, chart: str,
                    uv: np.ndarray) -> fiber.BihermitianData:
    j = np.asarray(structure(chart, uv))
    g = np.asarray(metric(chart, uv))
    jprime = fiber.compatible_structure(j, g)
    return fiber.bihermitian_decompose(j, jprime)


def induced_field_identity_residual(structure: Callable, metric: Callable,
                                    action: ActionSpec, md: MomentData,
                                    chart: str, uv: np.ndarray, xi,
                                    step: float = fields.DEFAULT_STEP,
                                    analytic: bool = False) -> np.ndarray:
    """| xi_M - (w+^-1 - w-^-1)(d mu^xi)/2 | per sample, from the split of
    the structure against its compatible companion."""
    uv = np.atleast_2d(uv)
    xi = np.asarray(xi, dtype=float)
    parts = _bihermitian_at(structure, metric, chart, uv)
    dmu = np.einsum("k,nkd->nd", xi,
                    moment_gradients(md, chart, uv, step, analytic))
    xp = np.linalg.solve(parts.omega_plus, dmu[..., None])[..., 0]
    xm = np.linalg.solve(parts.omega_minus, dmu[..., None])[..., 0]
    xim = np.asarray(xi_field(action, xi)(chart, uv))
    return np.abs(xim - 0.5 * (xp - xm)).max(axis=1)


def lxi_identity_residual(structure: Callable, metric: Callable,
                          action: ActionSpec, md: MomentData, chart: str,
                          uv: np.ndarray, xi,
                          step: float = HESSIAN_STEP) -> np.ndarray:
    """| D xi_M + (J+ - J-) g^-1 Hess(mu^xi) / 2 | at critical samples.

    The linearization of the induced field is the finite-difference
    Jacobian; both sides are frame independent only where xi_M vanishes.
    """
    uv = np.atleast_2d(uv)
    xi = np.asarray(xi, dtype=float)
    parts = _bihermitian_at(structure, metric, chart, uv)
    hess = coordinate_hessian(mu_xi(md, xi), chart, uv, step)
    hess_op = np.linalg.solve(parts.g, hess)
    partials = fields.partial_derivatives(xi_field(action, xi), chart, uv,
                                          step)
    d_xi = np.swapaxes(partials, 1, 2)  # D[i, j] = d_j xi^i
    lhs = d_xi + 0.5 * (parts.jplus - parts.jminus) @ hess_op
    return np.abs(lhs).max(axis=(1, 2))


# ---------------------------------------------------------------------------
# Bott-Morse analysis of a moment component restricted to a slice


@dataclass
class SliceComponent:
    members: np.ndarray
    index: int
    coindex: int
    nullity: int
    moment_value: float
    uniform: bool


@dataclass
class SliceReport:
    a_partial: tuple
    eps: float
    n_slice_samples: int
    components: list
    parity_ok: bool

    def component_signature(self) -> tuple:
        return tuple(sorted((c.index, c.coindex, c.nullity)
                            for c in self.components))


def slice_morse_check(action: ActionSpec, md: MomentData,
                      m: SampledManifold, a_partial,
                      tol: float = 1e-6, step: float = fields.DEFAULT_STEP,
                      hessian_step: float = HESSIAN_STEP,
                      analytic: bool = False,
                      regular_tol: float = 1e-6) -> SliceReport:
    """Restrict the last moment component to the slice of the first m-1 and
    verify the Bott-Morse parity of its critical set there.

    Rejects non-regular slice values (rank drop of the partial moment map
    on the thickened slice).
    """
    a_partial = np.atleast_1d(np.asarray(a_partial, dtype=float))
    n_partial = len(a_partial)
    if n_partial != md.m - 1:
        raise ValueError(f"expected {md.m - 1} slice values")
    mu = eval_samples(m, md.moment)
    dmu = eval_samples(
        m, lambda c, uv: moment_gradients(md, c, uv, step, analytic))

    if n_partial:
        edge_var = np.abs(mu[m.edges[:, 0], :n_partial]
                          - mu[m.edges[:, 1], :n_partial]).max()
        eps = 2.0 * float(edge_var)
        mask = np.abs(mu[:, :n_partial] - a_partial).max(axis=1) <= eps
    else:
        eps = 0.0
        mask = np.ones(m.n_samples, dtype=bool)
    slice_ids = np.flatnonzero(mask)
    if len(slice_ids) == 0:
        return SliceReport(a_partial=tuple(a_partial), eps=eps,
                           n_slice_samples=0, components=[], parity_ok=True)

    if n_partial:
        rows = dmu[slice_ids, :n_partial, :]
        smin = np.linalg.svd(rows, compute_uv=False)[:, -1]
        scale = float(np.median(
            np.linalg.norm(dmu[:, :n_partial, :], axis=(1, 2))))
        drop = smin < regular_tol * max(scale, 1e-300)
        if drop.any():
            raise NonRegularSliceError(
                f"rank drop of the partial moment map at "
                f"{int(drop.sum())} slice samples "
                f"(worst singular value {smin.min():.3e})")

    # projected gradient of the last component along the slice tangent
    grad_m = dmu[slice_ids, -1, :]
    if n_partial:
        rows = dmu[slice_ids, :n_partial, :]
        gram = rows @ np.swapaxes(rows, 1, 2)
        coef = np.linalg.solve(gram, rows @ grad_m[..., None])
        proj = grad_m - (np.swapaxes(rows, 1, 2) @ coef)[..., 0]
    else:
        proj = grad_m
    norms = np.linalg.norm(proj, axis=1)
    scale = float(np.median(norms))
    crit_local = norms < tol * max(scale, 1e-300)
    crit_ids = slice_ids[crit_local]

    crit_mask = np.zeros(m.n_samples, dtype=bool)
    crit_mask[crit_ids] = True
    labels = m.component_labels(crit_mask)

    components = []
    if len(crit_ids):
        # at a critical point of the restriction, d mu_m + sum c_i d mu_i = 0
        # for some c, and the restricted Hessian equals the Hessian of the
        # combined component mu^xi with xi = (c, 1) on the slice tangent
        rows = dmu[crit_ids, :n_partial, :]
        grad = dmu[crit_ids, -1, :]
        triples = np.empty((len(crit_ids), 3), dtype=int)
        for row, sid in enumerate(crit_ids):
            if n_partial:
                c, *_ = np.linalg.lstsq(rows[row].T, -grad[row], rcond=None)
                xi = np.concatenate([c, [1.0]])
                null = np.linalg.svd(rows[row])[2][n_partial:].T  # (d, d-k)
            else:
                xi = np.ones(1)
                null = np.eye(m.dim)
            chart = m.chart_names[m.chart_index[sid]]
            hess = coordinate_hessian(mu_xi(md, xi), chart,
                                      m.coords[sid][None], hessian_step)[0]
            restricted = null.T @ hess @ null
            idx, coidx, nul, _ = index_counts(restricted[None])
            triples[row] = (idx[0], coidx[0], nul[0])
        for lab in range(labels.max() + 1):
            sel = np.flatnonzero(labels[crit_ids] == lab)
            trip = {tuple(map(int, triples[i])) for i in sel}
            first = sorted(trip)[0]
            components.append(SliceComponent(
                members=crit_ids[sel], index=first[0], coindex=first[1],
                nullity=first[2],
                moment_value=float(mu[crit_ids[sel], -1].mean()),
                uniform=len(trip) == 1))
    components.sort(key=lambda c: c.moment_value)
    parity = all(c.index % 2 == 0 and c.coindex % 2 == 0 and c.uniform
                 for c in components)
    return SliceReport(a_partial=tuple(a_partial), eps=eps,
                       n_slice_samples=len(slice_ids),
                       components=components, parity_ok=parity)
