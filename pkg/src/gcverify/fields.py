"""Finite-difference exterior calculus and the twisted Courant bracket on
chart-local analytic field evaluators.

Evaluator convention: a k-form field is a callable f(chart, uv) taking an
(N, d) block of chart coordinates and returning the full antisymmetric
component array of shape (N, d, ..., d) (k trailing axes); 0-forms return
(N,).  Vector fields return (N, d).  Sections of T + T* return (N, 2d)
with the tangent part first.  All derivatives are central differences in
chart coordinates, so evaluators must be defined in a step-neighborhood of
the requested points.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

DEFAULT_STEP = 1e-4


class EvaluationError(ValueError):
    """An evaluator produced non-finite values (outside its chart domain)."""


def _check_finite(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values)
    if not np.all(np.isfinite(values)):
        bad = int(np.sum(~np.isfinite(values)))
        raise EvaluationError(f"{what} produced {bad} non-finite entries")
    return values


def partial_derivatives(fn: Callable, chart: str, uv: np.ndarray,
                        step: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference partials: out[n, a, ...] = d_a fn[...] at uv[n].

    Error is O(step^2) for smooth evaluators.
    """
    uv = np.atleast_2d(np.asarray(uv, dtype=float))
    d = uv.shape[1]
    cols = []
    for a in range(d):
        shift = np.zeros(d)
        shift[a] = step
        hi = _check_finite(fn(chart, uv + shift), "evaluator")
        lo = _check_finite(fn(chart, uv - shift), "evaluator")
        cols.append((hi - lo) / (2.0 * step))
    return np.stack(cols, axis=1)


def exterior_derivative(form: Callable, k: int, chart: str, uv: np.ndarray,
                        step: float = DEFAULT_STEP) -> np.ndarray:
    """d of a k-form evaluator: antisymmetrized central differences.

    Returns the (k+1)-form component array (N, d, ..., d).
    """
    p = partial_derivatives(form, chart, uv, step)  # (N, a, i1..ik)
    out = np.zeros_like(p)
    for m in range(k + 1):
        term = np.moveaxis(p, 1, 1 + m)
        out = out + ((-1.0) ** m) * term
    return out


def contract(form: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Interior product i_X of a batched form: contracts the first form axis."""
    # form (N, d, ...), vec (N, d)
    return np.einsum("na...,na->n...", form, vec)


def form_to_map(two_form: np.ndarray) -> np.ndarray:
    """Interior-product map matrix of a 2-form: X -> i_X omega.

    With components M[i, j] = omega(e_i, e_j) the covector of i_X omega is
    M^t X = -M X.
    """
    return -np.asarray(two_form)


def lie_bracket(x: Callable, y: Callable, chart: str, uv: np.ndarray,
                step: float = DEFAULT_STEP) -> np.ndarray:
    """Finite-difference Lie bracket of two vector-field evaluators."""
    xv = np.asarray(x(chart, uv))
    yv = np.asarray(y(chart, uv))
    dx = partial_derivatives(x, chart, uv, step)
    dy = partial_derivatives(y, chart, uv, step)
    return (np.einsum("na,naj->nj", xv, dy)
            - np.einsum("na,naj->nj", yv, dx))


def _bracket_terms(va, vb, da, db, hval):
    """Twisted Courant bracket from section values and partials.

    va, vb: (N, 2d); da, db: (N, d, 2d) with da[n, a, :] = d_a section;
    hval: (N, d, d, d) or None.
    """
    d = va.shape[1] // 2
    x, xi = va[:, :d], va[:, d:]
    y, eta = vb[:, :d], vb[:, d:]
    dxv, dxi = da[:, :, :d], da[:, :, d:]
    dyv, deta = db[:, :, :d], db[:, :, d:]

    vec = (np.einsum("na,naj->nj", x, dyv)
           - np.einsum("na,naj->nj", y, dxv))
    lie_x_eta = (np.einsum("na,naj->nj", x, deta)
                 + np.einsum("na,nja->nj", eta, dxv))
    lie_y_xi = (np.einsum("na,naj->nj", y, dxi)
                + np.einsum("na,nja->nj", xi, dyv))
    # d(eta(X) - xi(Y)) by the product rule from the same partials
    d_eta_x = (np.einsum("nja,na->nj", deta, x)
               + np.einsum("na,nja->nj", eta, dxv))
    d_xi_y = (np.einsum("nja,na->nj", dxi, y)
              + np.einsum("na,nja->nj", xi, dyv))
    cov = lie_x_eta - lie_y_xi - 0.5 * (d_eta_x - d_xi_y)
    if hval is not None:
        # i_Y i_X H: contract X innermost, then Y
        cov = cov + np.einsum("na,nb,nabj->nj", x, y, hval)
    return np.concatenate([vec, cov], axis=1)


def courant_bracket(a: Callable, b: Callable, twist: Optional[Callable],
                    chart: str, uv: np.ndarray,
                    step: float = DEFAULT_STEP) -> np.ndarray:
    """Twisted Courant bracket [a, b]_H of two section evaluators at uv.

    Returns stacked section values (N, 2d); complex sections are allowed.
    """
    uv = np.atleast_2d(np.asarray(uv, dtype=float))
    va = np.asarray(a(chart, uv))
    vb = np.asarray(b(chart, uv))
    da = partial_derivatives(a, chart, uv, step)
    db = partial_derivatives(b, chart, uv, step)
    hval = None if twist is None else _check_finite(twist(chart, uv), "twist")
    return _bracket_terms(va, vb, da, db, hval)


@dataclass
class IntegrabilityResult:
    residuals: np.ndarray   # (N,), NaN where skipped
    skipped: np.ndarray     # ids (into the uv block) where the gauge failed

    @property
    def max_residual(self) -> float:
        vals = self.residuals[np.isfinite(self.residuals)]
        return float(vals.max()) if len(vals) else float("nan")


def integrability_residual(structure: Callable, twist: Optional[Callable],
                           chart: str, uv: np.ndarray,
                           step: float = DEFAULT_STEP) -> IntegrabilityResult:
    """Involutivity defect of the +i eigenbundle under the twisted bracket.

    A local frame of the eigenbundle is produced by applying the spectral
    projector (I - iJ(q))/2 to the eigenbasis at each base point, which is a
    smooth gauge; all pairwise brackets are then projected onto the
    conjugate eigenspace, whose coefficients vanish exactly for integrable
    structures.  Points where the projected frame degenerates are skipped
    and reported.
    """
    uv = np.atleast_2d(np.asarray(uv, dtype=float))
    n, d = uv.shape
    j0 = _check_finite(structure(chart, uv), "structure")
    two_d = j0.shape[-1]
    eye = np.eye(two_d)
    p0 = 0.5 * (eye - 1j * j0)
    u, _, _ = np.linalg.svd(p0)
    basis = u[:, :, :d]                       # (N, 2d, d)

    def frame_at(points):
        jq = _check_finite(structure(chart, points), "structure")
        pq = 0.5 * (eye - 1j * jq)
        return np.einsum("nab,nbk->nak", pq, basis)

    # partials of the frame sections along each chart direction
    deriv = np.empty((n, d, two_d, d), dtype=complex)
    min_norm = np.full(n, np.inf)
    for a in range(d):
        shift = np.zeros(d)
        shift[a] = step
        hi = frame_at(uv + shift)
        lo = frame_at(uv - shift)
        deriv[:, a] = (hi - lo) / (2.0 * step)
        for block in (hi, lo):
            norms = np.linalg.norm(block, axis=1).min(axis=1)
            min_norm = np.minimum(min_norm, norms)

    hval = None if twist is None else _check_finite(twist(chart, uv), "twist")
    mixed = np.concatenate([basis, basis.conj()], axis=2)  # (N, 2d, 2d)
    ok = min_norm > 0.5
    residual = np.full(n, np.nan)
    if ok.any():
        sel = np.flatnonzero(ok)
        worst = np.zeros(len(sel))
        for jcol in range(d):
            for kcol in range(jcol + 1, d):
                br = _bracket_terms(
                    basis[sel, :, jcol], basis[sel, :, kcol],
                    deriv[sel, :, :, jcol], deriv[sel, :, :, kcol],
                    None if hval is None else hval[sel])
                coeff = np.linalg.solve(mixed[sel], br[..., None])[..., 0]
                worst = np.maximum(worst, np.abs(coeff[:, d:]).max(axis=1))
        residual[sel] = worst
    return IntegrabilityResult(residuals=residual,
                               skipped=np.flatnonzero(~ok))
