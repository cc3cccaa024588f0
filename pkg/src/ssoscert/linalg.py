"""Dense linear-algebra substrate.

Deterministic symmetric eigendecomposition and SVD with descending values,
Moore-Penrose pseudoinverse, orthonormal null-space bases, and the
isometric vectorization of symmetric matrices used by every operator
matrix in the package.
"""

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES, ToleranceConfig

SQRT2 = np.sqrt(2.0)


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def check_symmetric(a, tol=1e-12, name="matrix"):
    a = _as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    gap = np.max(np.abs(a - a.T)) if a.size else 0.0
    if gap > tol:
        raise ValueError(f"{name} is not symmetric (max asymmetry {gap:.3e})")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class EigenFrame:
    """Spectral decomposition A = P diag(values) P^T, values descending."""

    basis: np.ndarray
    values: np.ndarray

    @property
    def dim(self):
        return self.values.size


@dataclass(frozen=True)
class SvdFrame:
    """Full SVD A = R [diag(values) 0] S^T with R (p x p), S (q x q)."""

    left: np.ndarray
    right: np.ndarray
    values: np.ndarray

    @property
    def shape(self):
        return (self.left.shape[0], self.right.shape[0])


def eig_sym(a):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Downstream results must not depend on how ties between equal
    eigenvalues are ordered; only the values and the span matter.
    """
    scale = 1.0 + float(np.max(np.abs(a))) if np.asarray(a).size else 1.0
    a = check_symmetric(a, tol=1e-8 * scale)
    try:
        values, basis = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh rarely fails
        raise ValueError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(values)[::-1]
    return EigenFrame(basis=np.ascontiguousarray(basis[:, order]),
                      values=np.ascontiguousarray(values[order]))


def svd_full(a):
    """Full SVD of a p x q matrix with p <= q, singular values descending."""
    a = _as_matrix(a)
    p, q = a.shape
    if p > q:
        raise ValueError(f"expected p <= q, got shape {a.shape}; pass the transposed problem")
    left, values, right_t = np.linalg.svd(a, full_matrices=True)
    return SvdFrame(left=left, right=np.ascontiguousarray(right_t.T), values=values)


def pinv(a, tol_class=None):
    """Moore-Penrose pseudoinverse with a scale-invariant rank cut.

    Singular values <= tol_class * max(1, s_max) are treated as zero.
    """
    a = _as_matrix(a)
    if tol_class is None:
        tol_class = DEFAULT_TOLERANCES.tol_class
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    cut = tol_class * max(1.0, s[0] if s.size else 0.0)
    inv = np.where(s > cut, 1.0 / np.where(s > cut, s, 1.0), 0.0)
    return (vt.T * inv) @ u.T


def null_space_basis(a, tol=None):
    """Orthonormal basis of ker(a) under the scale-invariant rank cut.

    Returns an (n x k) array; k may be zero.
    """
    a = _as_matrix(a)
    if tol is None:
        tol = DEFAULT_TOLERANCES.tol_class
    if a.shape[0] == 0:
        return np.eye(a.shape[1])
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    cut = tol * max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > cut))
    return np.ascontiguousarray(vt[rank:].T)


def svec_size(m):
    return m * (m + 1) // 2


def _svec_indices(m):
    rows, cols = zip(*[(i, j) for i in range(m) for j in range(i, m)]) if m else ((), ())
    return np.asarray(rows, dtype=int), np.asarray(cols, dtype=int)


def svec(a):
    """Isometric vectorization of a symmetric matrix.

    Row-major over the upper triangle, off-diagonal entries scaled by
    sqrt(2) so that <A, B>_F = <svec A, svec B>.
    """
    a = check_symmetric(a)
    m = a.shape[0]
    rows, cols = _svec_indices(m)
    out = a[rows, cols].copy()
    out[rows != cols] *= SQRT2
    return out


def sunvec(v):
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float).ravel()
    m = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    if svec_size(m) != v.size:
        raise ValueError(f"length {v.size} is not a triangular number m(m+1)/2")
    rows, cols = _svec_indices(m)
    vals = v.copy()
    vals[rows != cols] /= SQRT2
    a = np.zeros((m, m))
    a[rows, cols] = vals
    a[cols, rows] = vals
    return a


def frame_residuals(frame, a):
    """(orthogonality, reconstruction) residuals of a decomposition of a."""
    a = np.asarray(a, dtype=float)
    if isinstance(frame, EigenFrame):
        p = frame.basis
        orth = np.linalg.norm(p.T @ p - np.eye(p.shape[0]))
        recon = np.linalg.norm(p @ np.diag(frame.values) @ p.T - a)
    else:
        r, s = frame.left, frame.right
        orth = max(np.linalg.norm(r.T @ r - np.eye(r.shape[0])),
                   np.linalg.norm(s.T @ s - np.eye(s.shape[0])))
        sigma = np.zeros(a.shape)
        np.fill_diagonal(sigma, frame.values)
        recon = np.linalg.norm(r @ sigma @ s.T - a)
    return orth, recon / (1.0 + np.linalg.norm(a))


def validate_frame(frame, a, tol: ToleranceConfig = DEFAULT_TOLERANCES):
    orth, recon = frame_residuals(frame, a)
    if orth > tol.tol_orth:
        raise ValueError(f"decomposition basis not orthogonal (residual {orth:.3e})")
    if recon > tol.tol_recon:
        raise ValueError(f"decomposition does not reconstruct input (residual {recon:.3e})")
