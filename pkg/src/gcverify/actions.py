"""Torus actions with generalized moment data: pointwise verification of
the two Hamiltonian conditions, subtorus restriction, effectiveness rank
and fixed-point component detection."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import fields
from .manifold import SampledManifold, local_dimension


@dataclass
class ActionSpec:
    """A torus action on a sampled manifold.

    generators(chart, uv) returns the induced vector fields of the Lie
    algebra basis, shape (N, m, d), scaled so that the moment identities
    hold.  act(theta, chart, uv) moves points inside their chart; theta
    lives in R^m with unit period.  act_jacobian gives the tangent map of
    act(theta, .) as (N, d, d).
    """

    m: int
    generators: Callable
    act: Callable
    act_jacobian: Callable


@dataclass
class MomentData:
    """Generalized moment map, moment one-forms and the (closed) twist."""

    m: int
    moment: Callable                    # (chart, uv) -> (N, m)
    one_forms: Callable                 # (chart, uv) -> (N, m, d)
    twist: Optional[Callable] = None    # (chart, uv) -> (N, d, d, d)
    d_moment: Optional[Callable] = None  # analytic (chart, uv) -> (N, m, d)


def eval_samples(m: SampledManifold, fn: Callable,
                 subset: np.ndarray = None) -> np.ndarray:
    """Evaluate a chart-local field over samples, assembled in sample order."""
    idx = np.arange(m.n_samples) if subset is None else np.asarray(subset)
    out = None
    for k, name in enumerate(m.chart_names):
        where = np.flatnonzero(m.chart_index[idx] == k)
        if len(where) == 0:
            continue
        vals = np.asarray(fn(name, m.coords[idx[where]]))
        if out is None:
            out = np.empty((len(idx),) + vals.shape[1:], dtype=vals.dtype)
        out[where] = vals
    if out is None:
        out = np.zeros((0,))
    return out


def moment_gradients(md: MomentData, chart: str, uv: np.ndarray,
                     step: float = fields.DEFAULT_STEP,
                     analytic: bool = False) -> np.ndarray:
    """d mu as (N, m, d), by analytic evaluator or central differences."""
    if analytic:
        if md.d_moment is None:
            raise ValueError("no analytic moment derivative available")
        return np.asarray(md.d_moment(chart, uv))
    grad = fields.partial_derivatives(md.moment, chart, uv, step)  # (N, a, m)
    return np.swapaxes(grad, 1, 2)


def moment_element(action: ActionSpec, md: MomentData, chart: str,
                   uv: np.ndarray, xi: np.ndarray,
                   step: float = fields.DEFAULT_STEP,
                   analytic: bool = False) -> np.ndarray:
    """The complex section xi_M + alpha^xi - i d mu^xi as stacked (N, 2d)."""
    xi = np.asarray(xi, dtype=float)
    gens = np.asarray(action.generators(chart, uv))
    alphas = np.asarray(md.one_forms(chart, uv))
    dmu = moment_gradients(md, chart, uv, step, analytic)
    vec = np.einsum("k,nkd->nd", xi, gens)
    cov = np.einsum("k,nkd->nd", xi, alphas) - 1j * np.einsum(
        "k,nkd->nd", xi, dmu)
    return np.concatenate([vec.astype(complex), cov], axis=1)


def moment_condition_residual(action: ActionSpec, md: MomentData,
                              structure: Callable, chart: str,
                              uv: np.ndarray, xi: np.ndarray,
                              step: float = fields.DEFAULT_STEP,
                              analytic: bool = False) -> np.ndarray:
    """|J v - i v| per sample; zero iff the moment element lies in the
    +i eigenspace."""
    v = moment_element(action, md, chart, uv, xi, step, analytic)
    j = np.asarray(structure(chart, uv))
    return np.abs(np.einsum("nab,nb->na", j.astype(complex), v)
                  - 1j * v).max(axis=1)


def twist_condition_residual(action: ActionSpec, md: MomentData, chart: str,
                             uv: np.ndarray, xi: np.ndarray,
                             step: float = fields.DEFAULT_STEP) -> np.ndarray:
    """|i_{xi_M} H - d alpha^xi| per sample (max over 2-form components)."""
    xi = np.asarray(xi, dtype=float)
    uv = np.atleast_2d(uv)
    gens = np.asarray(action.generators(chart, uv))
    xi_m = np.einsum("k,nkd->nd", xi, gens)

    def alpha_xi(c, pts):
        return np.einsum("k,nkd->nd", xi, np.asarray(md.one_forms(c, pts)))

    dalpha = fields.exterior_derivative(alpha_xi, 1, chart, uv, step)
    if md.twist is None:
        contraction = np.zeros_like(dalpha)
    else:
        contraction = fields.contract(np.asarray(md.twist(chart, uv)), xi_m)
    return np.abs(contraction - dalpha).max(axis=(1, 2))


def hamiltonian_residuals(action: ActionSpec, md: MomentData,
                          structure: Callable, m: SampledManifold,
                          step: float = fields.DEFAULT_STEP,
                          analytic: bool = False) -> dict:
    """Max of both Hamiltonian-condition residuals per sample over the Lie
    algebra basis."""
    moment = np.zeros(m.n_samples)
    twist = np.zeros(m.n_samples)
    for k in range(action.m):
        xi = np.zeros(action.m)
        xi[k] = 1.0
        moment = np.maximum(moment, eval_samples(
            m, lambda c, uv: moment_condition_residual(
                action, md, structure, c, uv, xi, step, analytic)))
        twist = np.maximum(twist, eval_samples(
            m, lambda c, uv: twist_condition_residual(
                action, md, c, uv, xi, step)))
    return {"moment": moment, "twist": twist}


def subtorus_restrict(action: ActionSpec, md: MomentData,
                      a_matrix: np.ndarray) -> tuple:
    """Restrict to the subtorus generated by the columns of an integer
    matrix of maximal rank: generators A xi, moment A^t mu, one-forms
    alpha^{A xi}."""
    a_matrix = np.asarray(a_matrix, dtype=float)
    if a_matrix.ndim != 2 or a_matrix.shape[0] != action.m:
        raise ValueError(f"expected a {action.m} x k matrix")
    sv = np.linalg.svd(a_matrix, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise ValueError("restriction matrix is rank deficient")
    new_m = a_matrix.shape[1]

    def generators(chart, uv):
        gens = np.asarray(action.generators(chart, uv))
        return np.einsum("kj,nkd->njd", a_matrix, gens)

    def act(theta, chart, uv):
        return action.act(a_matrix @ np.asarray(theta), chart, uv)

    def act_jacobian(theta, chart, uv):
        return action.act_jacobian(a_matrix @ np.asarray(theta), chart, uv)

    def moment(chart, uv):
        return np.asarray(md.moment(chart, uv)) @ a_matrix

    def one_forms(chart, uv):
        alphas = np.asarray(md.one_forms(chart, uv))
        return np.einsum("kj,nkd->njd", a_matrix, alphas)

    d_moment = None
    if md.d_moment is not None:
        def d_moment(chart, uv):
            dmu = np.asarray(md.d_moment(chart, uv))
            return np.einsum("kj,nkd->njd", a_matrix, dmu)

    new_action = ActionSpec(m=new_m, generators=generators, act=act,
                            act_jacobian=act_jacobian)
    new_md = MomentData(m=new_m, moment=moment, one_forms=one_forms,
                        twist=md.twist, d_moment=d_moment)
    return new_action, new_md


def effectiveness_rank(md: MomentData, m: SampledManifold,
                       step: float = fields.DEFAULT_STEP,
                       rel_tol: float = 1e-8,
                       analytic: bool = False) -> int:
    """Numerical rank of the stacked d mu_k rows over all samples."""
    dmu = eval_samples(
        m, lambda c, uv: moment_gradients(md, c, uv, step, analytic))
    rows = np.swapaxes(dmu, 0, 1).reshape(md.m, -1)
    sv = np.linalg.svd(rows, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


def generator_speeds(action: ActionSpec, m: SampledManifold) -> np.ndarray:
    """Per sample: max over generators of |xi_M| in chart coordinates."""
    gens = eval_samples(m, action.generators)
    return np.sqrt((gens ** 2).sum(axis=2)).max(axis=1)


@dataclass
class FixedComponent:
    members: np.ndarray
    dim: int
    moment_value: np.ndarray
    moment_spread: float


def fixed_point_components(action: ActionSpec, md: MomentData,
                           m: SampledManifold,
                           tol: float = 1e-6) -> list:
    """Samples where every generator vanishes, clustered by graph
    connectivity, with a PCA dimension estimate and the moment value."""
    speeds = generator_speeds(action, m)
    scale = float(np.median(speeds))
    if scale == 0.0:
        mask = np.ones(m.n_samples, dtype=bool)
    else:
        mask = speeds < tol * scale
    labels = m.component_labels(mask)
    mu = eval_samples(m, md.moment)
    comps = []
    for lab in range(labels.max() + 1 if mask.any() else 0):
        members = np.flatnonzero(labels == lab)
        values = mu[members]
        center = values.mean(axis=0)
        spread = float(np.abs(values - center).max()) if len(values) else 0.0
        comps.append(FixedComponent(
            members=members, dim=local_dimension(m, members),
            moment_value=center, moment_spread=spread))
    comps.sort(key=lambda c: tuple(c.moment_value))
    return comps


# ---------------------------------------------------------------------------
# invariance diagnostics of the action data itself


def equivariance_residual(action: ActionSpec, md: MomentData,
                          m: SampledManifold, n_draws: int = 10,
                          seed: int = 0) -> float:
    """max |mu(theta . p) - mu(p)| over random group elements."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    mu0 = eval_samples(m, md.moment)
    for _ in range(n_draws):
        theta = rng.random(action.m)
        mu1 = eval_samples(
            m, lambda c, uv: md.moment(c, action.act(theta, c, uv)))
        worst = max(worst, float(np.abs(mu1 - mu0).max()))
    return worst


def structure_invariance_residual(action: ActionSpec, structure: Callable,
                                  m: SampledManifold, theta: np.ndarray) -> float:
    """max |Phi^-1 J(theta . p) Phi - J(p)| with Phi the tangent-map block."""
    theta = np.asarray(theta, dtype=float)

    def residual(chart, uv):
        j0 = np.asarray(structure(chart, uv))
        d = j0.shape[-1] // 2
        moved = action.act(theta, chart, uv)
        j1 = np.asarray(structure(chart, moved))
        dphi = np.asarray(action.act_jacobian(theta, chart, uv))
        dphi_it = np.swapaxes(np.linalg.inv(dphi), -2, -1)
        phi = np.zeros_like(j0)
        phi[..., :d, :d] = dphi
        phi[..., d:, d:] = dphi_it
        pulled = np.linalg.solve(phi, j1 @ phi)
        return np.abs(pulled - j0).max(axis=(1, 2))

    return float(eval_samples(m, residual).max())


def metric_invariance_residual(action: ActionSpec, metric: Callable,
                               m: SampledManifold, theta: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=float)

    def residual(chart, uv):
        g0 = np.asarray(metric(chart, uv))
        moved = action.act(theta, chart, uv)
        g1 = np.asarray(metric(chart, moved))
        dphi = np.asarray(action.act_jacobian(theta, chart, uv))
        pulled = np.einsum("nai,nab,nbj->nij", dphi, g1, dphi)
        return np.abs(pulled - g0).max(axis=(1, 2))

    return float(eval_samples(m, residual).max())


def twist_invariance_residual(action: ActionSpec, twist: Optional[Callable],
                              m: SampledManifold, theta: np.ndarray) -> float:
    if twist is None:
        return 0.0
    theta = np.asarray(theta, dtype=float)

    def residual(chart, uv):
        h0 = np.asarray(twist(chart, uv))
        moved = action.act(theta, chart, uv)
        h1 = np.asarray(twist(chart, moved))
        dphi = np.asarray(action.act_jacobian(theta, chart, uv))
        pulled = np.einsum("nabc,nai->nibc", h1, dphi)
        pulled = np.einsum("nibc,nbj->nijc", pulled, dphi)
        pulled = np.einsum("nijc,nck->nijk", pulled, dphi)
        return np.abs(pulled - h0).max(axis=(1, 2, 3))

    return float(eval_samples(m, residual).max())


def commuting_residual(action: ActionSpec, m: SampledManifold,
                       step: float = fields.DEFAULT_STEP,
                       subsample: int = 500, seed: int = 0) -> float:
    """max |[xi_j, xi_k]| over generator pairs on a deterministic subsample."""
    rng = np.random.default_rng(seed)
    idx = (np.arange(m.n_samples) if m.n_samples <= subsample
           else rng.choice(m.n_samples, subsample, replace=False))
    worst = 0.0
    for j in range(action.m):
        for k in range(j + 1, action.m):
            def gen(which):
                return lambda c, uv: np.asarray(
                    action.generators(c, uv))[:, which, :]
            br = eval_samples(
                m, lambda c, uv: fields.lie_bracket(
                    gen(j), gen(k), c, uv, step), subset=idx)
            worst = max(worst, float(np.abs(br).max()))
    return worst
