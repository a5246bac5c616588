"""Linear algebra of generalized complex structures on a single fiber V + V*.

Everything is expressed in the stacked basis: tangent coordinates first,
then cotangent coordinates, so a fiber element is a 2d-vector (X, xi).
The natural split-signature pairing has matrix Q = [[0, I], [I, 0]] / 2.

Matrix-valued inputs may carry leading batch axes; all routines use the
stacked variants of numpy.linalg, which makes per-sample sweeps over a
manifold cheap.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SplitElement",
    "pairing",
    "pairing_matrix",
    "StructureCheck",
    "structure_residuals",
    "is_generalized_structure",
    "from_complex_structure",
    "from_symplectic",
    "shear",
    "b_shift",
    "eigenspace_basis",
    "subspace_residual",
    "type_of",
    "compatible_structure",
    "BihermitianData",
    "bihermitian_decompose",
    "reconstruct_pair",
    "random_spd",
    "random_antisymmetric",
    "random_complex_structure",
    "random_structure",
]

_ATOL = 1e-10


@dataclass(frozen=True)
class SplitElement:
    """An element X + xi of a fiber of T + T*: vector part and covector part."""

    vec: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vec)
        cov = np.asarray(self.cov)
        if vec.shape != cov.shape or vec.ndim != 1:
            raise ValueError(
                f"vector and covector parts must be equal-length 1d arrays, "
                f"got shapes {vec.shape} and {cov.shape}"
            )
        object.__setattr__(self, "vec", vec)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.vec.shape[0]

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.vec, self.cov])


def pairing(a: SplitElement, b: SplitElement) -> float:
    """Natural pairing <X+xi, Y+eta> = (eta(X) + xi(Y)) / 2."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return 0.5 * (np.dot(b.cov, a.vec) + np.dot(a.cov, b.vec))


def pairing_matrix(d: int) -> np.ndarray:
    """Matrix of the split-signature pairing in the stacked basis."""
    q = np.zeros((2 * d, 2 * d))
    q[:d, d:] = 0.5 * np.eye(d)
    q[d:, :d] = 0.5 * np.eye(d)
    return q


def _check_even_side(j: np.ndarray) -> int:
    j = np.asarray(j, dtype=float)
    n = j.shape[-1]
    if j.shape[-2] != n:
        raise ValueError(f"expected square matrices, got shape {j.shape}")
    if n % 2:
        raise ValueError(f"matrix side must be even, got {n}")
    return n // 2


def structure_residuals(j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Max-norm residuals (|J^2 + I|, |J^t Q J - Q|) for stacked matrices."""
    j = np.asarray(j, dtype=float)
    d = _check_even_side(j)
    q = pairing_matrix(d)
    r_sq = np.abs(j @ j + np.eye(2 * d)).max(axis=(-2, -1))
    r_pair = np.abs(np.swapaxes(j, -2, -1) @ q @ j - q).max(axis=(-2, -1))
    return r_sq, r_pair


@dataclass(frozen=True)
class StructureCheck:
    ok: bool
    square_residual: float
    pairing_residual: float


def is_generalized_structure(j: np.ndarray, tol: float = _ATOL) -> StructureCheck:
    """Check the two axioms of a generalized almost complex structure.

    Passes iff J^2 = -I and J preserves the natural pairing, both in
    max-norm up to tol.
    """
    r_sq, r_pair = structure_residuals(j)
    r_sq = float(np.max(r_sq))
    r_pair = float(np.max(r_pair))
    return StructureCheck(r_sq <= tol and r_pair <= tol, r_sq, r_pair)


def from_complex_structure(jsmall: np.ndarray) -> np.ndarray:
    """Diagonal structure [[J, 0], [0, -J^t]] built from an almost complex J."""
    jsmall = np.asarray(jsmall, dtype=float)
    d = jsmall.shape[-1]
    if np.abs(jsmall @ jsmall + np.eye(d)).max() > 1e-8:
        raise ValueError("input does not square to -I")
    out = np.zeros(jsmall.shape[:-2] + (2 * d, 2 * d))
    out[..., :d, :d] = jsmall
    out[..., d:, d:] = -np.swapaxes(jsmall, -2, -1)
    return out


def from_symplectic(w: np.ndarray) -> np.ndarray:
    """Off-diagonal structure [[0, -w^-1], [w, 0]] from an invertible
    antisymmetric w (the interior-product map X -> i_X omega)."""
    w = np.asarray(w, dtype=float)
    scale = max(np.abs(w).max(), 1e-300)
    if np.abs(w + np.swapaxes(w, -2, -1)).max() > 1e-9 * scale:
        raise ValueError("w is not antisymmetric")
    d = w.shape[-1]
    try:
        w_inv = np.linalg.inv(w)
    except np.linalg.LinAlgError as exc:
        raise ValueError("w is singular") from exc
    out = np.zeros(w.shape[:-2] + (2 * d, 2 * d))
    out[..., :d, d:] = -w_inv
    out[..., d:, :d] = w
    return out


def shear(b: np.ndarray) -> np.ndarray:
    """Lower block shear e^b = [[I, 0], [b, I]] acting X+xi -> X+xi+i_X b."""
    b = np.asarray(b, dtype=float)
    d = b.shape[-1]
    out = np.zeros(b.shape[:-2] + (2 * d, 2 * d))
    idx = np.arange(2 * d)
    out[..., idx, idx] = 1.0
    out[..., d:, :d] = b
    return out


def b_shift(j: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Conjugate a structure by the shear of an antisymmetric 2-form map b."""
    b = np.asarray(b, dtype=float)
    scale = np.abs(b).max()
    if scale > 0 and np.abs(b + np.swapaxes(b, -2, -1)).max() > 1e-9 * scale:
        raise ValueError("b is not antisymmetric")
    return shear(b) @ np.asarray(j, dtype=float) @ shear(-b)


def eigenspace_basis(j: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the +i eigenspace of J.

    Uses the spectral projector P = (I - iJ)/2, whose range is the
    eigenspace; an SVD extracts the top-d left singular vectors.
    """
    j = np.asarray(j, dtype=float)
    d = _check_even_side(j)
    p = 0.5 * (np.eye(2 * d) - 1j * j)
    u, s, _ = np.linalg.svd(p)
    return u[..., :, :d]


def subspace_residual(a: np.ndarray, b: np.ndarray) -> float:
    """How far the column spans of a and b are from being equal (0 = equal)."""
    qa, _ = np.linalg.qr(np.asarray(a, dtype=complex))
    qb, _ = np.linalg.qr(np.asarray(b, dtype=complex))
    # residual of projecting each basis onto the other span
    ra = qa - qb @ (qb.conj().T @ qa)
    rb = qb - qa @ (qa.conj().T @ qb)
    return float(max(np.abs(ra).max(), np.abs(rb).max()))


def type_of(j: np.ndarray, tol: float = 1e-8) -> int:
    """Codimension of the tangent projection of the +i eigenspace.

    0 for symplectic-type structures, d/2 for those induced by an almost
    complex structure. tol is relative to the largest singular value of the
    projected basis.
    """
    check = is_generalized_structure(j)
    if not check.ok:
        raise ValueError(
            f"not a generalized structure (residuals {check.square_residual:.2e}, "
            f"{check.pairing_residual:.2e})"
        )
    d = _check_even_side(j)
    basis = eigenspace_basis(j)
    s = np.linalg.svd(basis[..., :d, :], compute_uv=False)
    rank = int(np.sum(s > tol * s.max()))
    return d - rank


def _spd_sqrt(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(g^1/2, g^-1/2) via symmetric eigendecomposition; rejects non-SPD g."""
    g = np.asarray(g, dtype=float)
    if np.abs(g - np.swapaxes(g, -2, -1)).max() > 1e-9 * max(np.abs(g).max(), 1e-300):
        raise ValueError("metric is not symmetric")
    w, v = np.linalg.eigh(g)
    if w.min() <= 0:
        raise ValueError("metric is not positive definite")
    root = (v * np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -2, -1)
    iroot = (v / np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -2, -1)
    return root, iroot


def compatible_structure(j: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Companion structure J' commuting with J such that -JJ' is a
    positive definite metric on the fiber.

    Built from the polar decomposition of A = G~ J, where
    G~ = [[0, g^-1], [g, 0]]: conjugating by the square root of the metric
    form turns the G~-adjoint into a plain transpose, so A A* can be handled
    with one symmetric eigendecomposition.
    """
    j = np.asarray(j, dtype=float)
    d = _check_even_side(j)
    root, iroot = _spd_sqrt(g)

    s = np.zeros_like(j)  # sqrt of the metric form (1/2) diag(g, g^-1)
    s[..., :d, :d] = root
    s[..., d:, d:] = iroot
    s_inv = np.zeros_like(j)
    s_inv[..., :d, :d] = iroot
    s_inv[..., d:, d:] = root
    # the overall 1/sqrt(2) factors cancel in S (...) S^-1

    j_hat = s @ j @ s_inv
    # S G~ S^-1 is the plain block swap, so A^ = swap(J^)
    a_hat = np.concatenate([j_hat[..., d:, :], j_hat[..., :d, :]], axis=-2)
    m = a_hat @ np.swapaxes(a_hat, -2, -1)
    m = 0.5 * (m + np.swapaxes(m, -2, -1))
    w, v = np.linalg.eigh(m)
    if w.min() < 1e-14 * w.max():
        raise ValueError("degenerate polar factor: input structure or metric "
                         "is numerically singular")
    m_isqrt = (v / np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -2, -1)
    jp_hat = m_isqrt @ a_hat
    # two Newton steps restore orthogonality of the polar factor to machine
    # precision even when the eigendecomposition of m was ill conditioned
    for _ in range(2):
        jp_hat = 0.5 * (jp_hat + np.swapaxes(np.linalg.inv(jp_hat), -2, -1))
    return s_inv @ jp_hat @ s


@dataclass(frozen=True)
class BihermitianData:
    """Riemannian metric, 2-form map and two almost complex structures
    extracted from a commuting positive pair of generalized structures."""

    g: np.ndarray
    b: np.ndarray
    jplus: np.ndarray
    jminus: np.ndarray

    @property
    def omega_plus(self) -> np.ndarray:
        return self.g @ self.jplus

    @property
    def omega_minus(self) -> np.ndarray:
        return self.g @ self.jminus


def bihermitian_decompose(j1: np.ndarray, j2: np.ndarray,
                          tol: float = 1e-8) -> BihermitianData:
    """Split a commuting pair with positive metric G = -J1 J2 into
    (g, b, J+, J-).

    The +-1 eigenbundles of G are graphs of b + g and b - g over the tangent
    space; transporting J1 along those graphs yields J+ and J-.
    reconstruct_pair inverts this map.
    """
    j1 = np.asarray(j1, dtype=float)
    j2 = np.asarray(j2, dtype=float)
    d = _check_even_side(j1)
    scale = max(np.abs(j1).max(), np.abs(j2).max())
    if np.abs(j1 @ j2 - j2 @ j1).max() > tol * scale:
        raise ValueError("structures do not commute")
    gg = -j1 @ j2
    q = pairing_matrix(d)
    metric_form = np.swapaxes(gg, -2, -1) @ q
    eigs = np.linalg.eigvalsh(0.5 * (metric_form + np.swapaxes(metric_form, -2, -1)))
    if eigs.min() <= 0:
        raise ValueError("G = -J1 J2 is not positive definite")

    try:
        g = np.linalg.inv(gg[..., :d, d:])
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate metric block") from exc
    g = 0.5 * (g + np.swapaxes(g, -2, -1))
    b = -g @ gg[..., :d, :d]
    b = 0.5 * (b - np.swapaxes(b, -2, -1))

    jp = j1[..., :d, :d] + j1[..., :d, d:] @ (b + g)
    jm = j1[..., :d, :d] + j1[..., :d, d:] @ (b - g)
    return BihermitianData(g=g, b=b, jplus=jp, jminus=jm)


def reconstruct_pair(parts: BihermitianData) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild the commuting pair (J1, J2) from bihermitian data."""
    g, b = parts.g, parts.b
    jp, jm = parts.jplus, parts.jminus
    wp, wm = parts.omega_plus, parts.omega_minus
    wp_inv = np.linalg.inv(wp)
    wm_inv = np.linalg.inv(wm)
    d = g.shape[-1]

    def assemble(sign: float) -> np.ndarray:
        core = np.zeros(g.shape[:-2] + (2 * d, 2 * d))
        core[..., :d, :d] = jp + sign * jm
        core[..., :d, d:] = -(wp_inv - sign * wm_inv)
        core[..., d:, :d] = wp - sign * wm
        core[..., d:, d:] = -np.swapaxes(jp + sign * jm, -2, -1)
        return 0.5 * (shear(b) @ core @ shear(-b))

    return assemble(1.0), assemble(-1.0)


# ---------------------------------------------------------------------------
# random generators for property sweeps


def random_spd(d: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((d, d)) * spread
    return a @ a.T / d + 0.5 * np.eye(d)


def random_antisymmetric(d: int, rng: np.random.Generator,
                         scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((d, d)) * scale
    return a - a.T


def _balanced_antisymmetric(d: int, rng: np.random.Generator) -> np.ndarray:
    """Antisymmetric, invertible, with singular values balanced around 1 so
    that w and w^-1 stay O(1)."""
    while True:
        w = random_antisymmetric(d, rng)
        s = np.linalg.svd(w, compute_uv=False)
        if s[-1] > s[0] / 20:
            return w / np.exp(np.mean(np.log(s)))


def random_complex_structure(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random conjugate of the block rotation; d must be even."""
    if d % 2:
        raise ValueError("almost complex structures need even dimension")
    j0 = np.kron(np.eye(d // 2), np.array([[0.0, -1.0], [1.0, 0.0]]))
    while True:
        s = np.eye(d) + 0.4 * rng.standard_normal((d, d))
        if np.linalg.cond(s) < 20:
            return s @ j0 @ np.linalg.inv(s)


def random_structure(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random generalized complex structure: sheared symplectic or diagonal type."""
    if rng.random() < 0.5:
        j = from_symplectic(_balanced_antisymmetric(d, rng))
    else:
        j = from_complex_structure(random_complex_structure(d, rng))
    return b_shift(j, random_antisymmetric(d, rng, scale=0.4))
