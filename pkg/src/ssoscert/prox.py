"""Structured convex functions and their proximal calculus.

Two function kinds are supported: the indicator of the positive
semidefinite cone on S^m, and the nuclear norm on R^(p x q) with p <= q.
Both have spectral proximal mappings (eigenvalue clipping, singular value
soft-thresholding), which is what everything downstream exploits.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .linalg import check_symmetric, eig_sym, svd_full


@dataclass(frozen=True)
class PsdIndicator:
    """Indicator of the cone of m x m positive semidefinite matrices."""

    m: int

    kind = "psd_indicator"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")

    @property
    def shape(self):
        return (self.m, self.m)

    # eigenvalues are classified against 0
    threshold = 0.0


@dataclass(frozen=True)
class NuclearNorm:
    """Nuclear norm (sum of singular values) on p x q matrices, p <= q."""

    p: int
    q: int

    kind = "nuclear_norm"

    def __post_init__(self):
        if not 1 <= self.p <= self.q:
            raise ValueError("need 1 <= p <= q")

    @property
    def shape(self):
        return (self.p, self.q)

    # singular values are classified against the soft-threshold kink
    threshold = 1.0


StructuredConvexFunction = PsdIndicator | NuclearNorm


def _check_shape(func, w):
    w = np.asarray(w, dtype=float)
    if w.shape != func.shape:
        raise ValueError(f"expected shape {func.shape} for {func.kind}, got {w.shape}")
    return w


def func_value(func, w):
    """Value of the function at w (0 or +inf for the indicator)."""
    w = _check_shape(func, w)
    if isinstance(func, PsdIndicator):
        vals = eig_sym(w).values
        return 0.0 if vals.size == 0 or vals[-1] >= -1e-12 * (1 + abs(vals[0])) else np.inf
    return float(np.sum(svd_full(w).values))


def prox_apply(func, sigma, w):
    """Proximal mapping: argmin_u func(u)*... + ||u - w||^2 / (2*sigma).

    PSD indicator: metric projection, independent of sigma.
    Nuclear norm: singular value shrinkage by sigma.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    w = _check_shape(func, w)
    if isinstance(func, PsdIndicator):
        frame = eig_sym(w)
        clipped = np.maximum(frame.values, 0.0)
        out = (frame.basis * clipped) @ frame.basis.T
        return 0.5 * (out + out.T)
    frame = svd_full(w)
    shrunk = np.maximum(frame.values - sigma, 0.0)
    sig = np.zeros(func.shape)
    np.fill_diagonal(sig, shrunk)
    return frame.left @ sig @ frame.right.T


def prox_conjugate_apply(func, sigma, w):
    """Proximal mapping of sigma * conjugate(func) at w, via the Moreau
    identity Prox_{s g*}(w) = w - s * Prox_{g/s}(w/s).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    w = _check_shape(func, w)
    return w - sigma * prox_apply(func, 1.0 / sigma, w / sigma)


def moreau_envelope_value(func, sigma, w):
    """Value of the Moreau envelope at w."""
    p = prox_apply(func, sigma, w)
    return func_value(func, p) + np.sum((p - w) ** 2) / (2.0 * sigma)


def moreau_envelope_grad(func, sigma, w):
    """Gradient of the Moreau envelope: (w - Prox(w)) / sigma."""
    w = _check_shape(func, w)
    return (w - prox_apply(func, sigma, w)) / sigma


@dataclass(frozen=True)
class SubgradientPair:
    """Fixed-point test of u in the subdifferential at x: Prox(x+u) == x."""

    x: np.ndarray
    u: np.ndarray
    residual: float
    tol: float

    @property
    def valid(self):
        return self.residual <= self.tol


def subgradient_check(func, x, u, tol: ToleranceConfig = DEFAULT_TOLERANCES):
    x = _check_shape(func, x)
    u = _check_shape(func, u)
    residual = float(np.linalg.norm(prox_apply(func, 1.0, x + u) - x))
    bound = tol.tol_range * (1.0 + np.linalg.norm(x))
    return SubgradientPair(x=x, u=u, residual=residual, tol=bound)


@dataclass(frozen=True)
class SpectralFrame:
    """Decomposition of a point A together with its index partition.

    PSD: A = left diag(values) left^T, indices split by eigenvalue sign.
    Nuclear: A = left [diag(values) 0] right^T, indices split by singular
    value against 1.  idx_above / idx_at / idx_below hold the positions
    (0-based, descending value order) strictly above, inside, and strictly
    below the tol_class band around the kink threshold.
    """

    func: StructuredConvexFunction
    point: np.ndarray
    left: np.ndarray
    right: np.ndarray
    values: np.ndarray
    idx_above: np.ndarray
    idx_at: np.ndarray
    idx_below: np.ndarray
    tolerances: ToleranceConfig = field(default=DEFAULT_TOLERANCES, repr=False)

    @property
    def is_psd(self):
        return isinstance(self.func, PsdIndicator)

    @property
    def boundary_active(self):
        """True when the tol_class band decided at least one index."""
        return self.idx_at.size > 0

    @property
    def operator_dim(self):
        """Dimension of the vectorized space operators act on."""
        if self.is_psd:
            m = self.func.m
            return m * (m + 1) // 2
        return self.func.p * self.func.q


def frame_from_point(func, a, tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Build the spectral frame of an arbitrary point a in the g-space."""
    a = _check_shape(func, a)
    if isinstance(func, PsdIndicator):
        a = check_symmetric(a, tol=1e-8 * (1.0 + np.max(np.abs(a))), name="point")
        eig = eig_sym(a)
        left = eig.basis
        right = eig.basis
        values = eig.values
    else:
        frame = svd_full(a)
        left, right, values = frame.left, frame.right, frame.values
    t = func.threshold
    band = tol.tol_class
    idx = np.arange(values.size)
    above = idx[values > t + band]
    at = idx[np.abs(values - t) <= band]
    below = idx[values < t - band]
    return SpectralFrame(func=func, point=a, left=left, right=right, values=values,
                         idx_above=above, idx_at=at, idx_below=below, tolerances=tol)


class InvalidSubgradientError(ValueError):
    """Raised when (x, u) fails the prox fixed-point test."""

    def __init__(self, residual, tol):
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"u is not a subgradient at x: prox fixed-point residual "
            f"{residual:.3e} exceeds {tol:.3e}")


def make_frame(func, x, u, tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Frame of A = x + u for a valid subgradient pair (x, u)."""
    pair = subgradient_check(func, x, u, tol)
    if not pair.valid:
        raise InvalidSubgradientError(pair.residual, pair.tol)
    return frame_from_point(func, pair.x + pair.u, tol)
