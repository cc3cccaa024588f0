"""Elements of the generalized Jacobian of the proximal mappings.

Every element acts spectrally: conjugate the direction into the frame of
the decomposed point, scale cell-by-cell, conjugate back.  Operators are
materialized as explicit symmetric matrices on svec coordinates (PSD,
dimension m(m+1)/2) or row-major vec coordinates (nuclear, dimension pq)
so that pseudoinverses and range projectors are available downstream.
"""

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .linalg import pinv, sunvec, svec, svec_size
from .prox import SpectralFrame, frame_from_point

# materialized operators are dense; keep them desk-sized
OPERATOR_DIM_CAP = 4096


@dataclass(frozen=True, eq=False)
class ZBlockChoice:
    """Choice of an element of the projection Jacobian on the boundary
    block: indices kept as identity, indices dropped to zero, and a
    multiplier pattern tau in [0,1] on the kept x dropped rectangle.
    Indices are local positions within the frame's idx_at block.
    """

    keep: tuple
    drop: tuple
    tau: np.ndarray


@dataclass(frozen=True, eq=False)
class OmegaChoice:
    """Symmetric [0,1]-valued multipliers on the boundary x boundary block
    of the singular-value soft-threshold Jacobian (limiting elements use
    {0,1} values)."""

    omega: np.ndarray


JacobianChoice = ZBlockChoice | OmegaChoice


def canonical_choice(frame: SpectralFrame):
    """The choice generating the canonical element: identity on the whole
    boundary block (all-ones multipliers)."""
    k = frame.idx_at.size
    if frame.is_psd:
        return ZBlockChoice(keep=tuple(range(k)), drop=(), tau=np.zeros((k, 0)))
    return OmegaChoice(omega=np.ones((k, k)))


def _check_choice(frame, choice):
    k = frame.idx_at.size
    if frame.is_psd:
        if not isinstance(choice, ZBlockChoice):
            raise ValueError("PSD frame requires a ZBlockChoice")
        if sorted(choice.keep + choice.drop) != list(range(k)):
            raise ValueError("keep/drop must partition the boundary block")
        if choice.tau.shape != (len(choice.keep), len(choice.drop)):
            raise ValueError("tau shape must be |keep| x |drop|")
        if choice.tau.size and (choice.tau.min() < 0 or choice.tau.max() > 1):
            raise ValueError("tau entries must lie in [0, 1]")
    else:
        if not isinstance(choice, OmegaChoice):
            raise ValueError("nuclear frame requires an OmegaChoice")
        if choice.omega.shape != (k, k):
            raise ValueError(f"omega must be {k} x {k}")
        if choice.omega.size:
            if np.max(np.abs(choice.omega - choice.omega.T)) > 0:
                raise ValueError("omega must be symmetric")
            if choice.omega.min() < 0 or choice.omega.max() > 1:
                raise ValueError("omega entries must lie in [0, 1]")


def _psd_cell_matrix(frame, choice):
    """Per-cell coefficients c with V = P (c o P^T D P) P^T.

    1 on above x (above u at), the eigenvalue ratio on above x below,
    the Z-block pattern on at x at, 0 on the rest.  The 0/0 convention is
    moot: quotients are only formed on above x below cells.
    """
    vals = frame.values
    a, b, g = frame.idx_above, frame.idx_at, frame.idx_below
    c = np.zeros((vals.size, vals.size))
    c[np.ix_(a, a)] = 1.0
    c[np.ix_(a, b)] = 1.0
    c[np.ix_(b, a)] = 1.0
    if a.size and g.size:
        num = np.maximum(vals[a], 0.0)[:, None] + np.maximum(vals[g], 0.0)[None, :]
        den = np.abs(vals[a])[:, None] + np.abs(vals[g])[None, :]
        ratio = num / den
        c[np.ix_(a, g)] = ratio
        c[np.ix_(g, a)] = ratio.T
    keep = b[np.asarray(choice.keep, dtype=int)] if choice.keep else np.array([], dtype=int)
    drop = b[np.asarray(choice.drop, dtype=int)] if choice.drop else np.array([], dtype=int)
    c[np.ix_(keep, keep)] = 1.0
    if keep.size and drop.size:
        c[np.ix_(keep, drop)] = choice.tau
        c[np.ix_(drop, keep)] = choice.tau.T
    return c


def _nuclear_coeff_mats(frame, choice):
    """Multiplier matrices (symmetric part, antisymmetric part, rectangular
    tail) of the singular-value soft-threshold Jacobian."""
    vals = frame.values
    p, q = frame.func.shape
    a1, a2, a3 = frame.idx_above, frame.idx_at, frame.idx_below
    h = np.maximum(vals - 1.0, 0.0)

    omega_s = np.zeros((p, p))
    omega_s[np.ix_(a1, a1)] = 1.0
    omega_s[np.ix_(a1, a2)] = 1.0
    omega_s[np.ix_(a2, a1)] = 1.0
    if a1.size and a3.size:
        ratio = (vals[a1] - 1.0)[:, None] / (vals[a1][:, None] - vals[a3][None, :])
        omega_s[np.ix_(a1, a3)] = ratio
        omega_s[np.ix_(a3, a1)] = ratio.T
    if a2.size:
        omega_s[np.ix_(a2, a2)] = choice.omega

    omega_a = np.zeros((p, p))
    if a1.size:
        full = np.arange(p)
        ratio = (h[a1][:, None] + h[full][None, :]) / (vals[a1][:, None] + vals[full][None, :])
        omega_a[np.ix_(a1, full)] = ratio
        omega_a[np.ix_(full, a1)] = ratio.T

    omega_rect = np.zeros((p, q - p))
    if a1.size and q > p:
        omega_rect[a1, :] = ((vals[a1] - 1.0) / vals[a1])[:, None]
    return omega_s, omega_a, omega_rect


def jacobian_apply(frame: SpectralFrame, choice, d):
    """Apply the Jacobian element selected by `choice` to a direction d."""
    d = np.asarray(d, dtype=float)
    if d.shape != frame.func.shape:
        raise ValueError(f"direction shape {d.shape} does not match {frame.func.shape}")
    _check_choice(frame, choice)
    if frame.is_psd:
        c = _psd_cell_matrix(frame, choice)
        dt = frame.left.T @ d @ frame.left
        dt = 0.5 * (dt + dt.T)
        v = frame.left @ (c * dt) @ frame.left.T
        return 0.5 * (v + v.T)
    omega_s, omega_a, omega_rect = _nuclear_coeff_mats(frame, choice)
    p = frame.func.p
    dt = frame.left.T @ d @ frame.right
    d1, d2 = dt[:, :p], dt[:, p:]
    d1s = 0.5 * (d1 + d1.T)
    d1a = 0.5 * (d1 - d1.T)
    vt = np.hstack([omega_s * d1s + omega_a * d1a, omega_rect * d2])
    return frame.left @ vt @ frame.right.T


@dataclass(frozen=True, eq=False)
class ProxOperator:
    """A materialized Jacobian element on vectorized coordinates."""

    frame: SpectralFrame
    choice: object
    matrix: np.ndarray

    @property
    def dim(self):
        return self.matrix.shape[0]


def _congruence_matrix(frame):
    """Orthogonal matrix T with vec(tilde D) = T vec(D) for the frame's
    conjugation (svec coordinates for PSD, row-major vec for nuclear)."""
    if frame.is_psd:
        m = frame.func.m
        dim = svec_size(m)
        t = np.empty((dim, dim))
        eye = np.eye(dim)
        for k in range(dim):
            e = sunvec(eye[k])
            t[:, k] = svec(frame.left.T @ e @ frame.left)
        return t
    p, q = frame.func.shape
    dim = p * q
    t = np.empty((dim, dim))
    for k in range(dim):
        i, j = divmod(k, q)
        t[:, k] = np.outer(frame.left[i, :], frame.right[j, :]).ravel()
    return t


def _psd_operator_matrix(frame, c):
    m = frame.func.m
    rows, cols = np.triu_indices(m)
    coeff = c[rows, cols]
    t = _congruence_matrix(frame)
    return t.T @ (coeff[:, None] * t)


def _nuclear_operator_matrix(frame, omega_s, omega_a, omega_rect):
    p, q = frame.func.shape
    dim = p * q
    k = np.zeros((dim, dim))
    idx = lambda i, j: i * q + j
    for i in range(p):
        k[idx(i, i), idx(i, i)] = omega_s[i, i]
        for j in range(i + 1, p):
            s, a = omega_s[i, j], omega_a[i, j]
            k[idx(i, j), idx(i, j)] = k[idx(j, i), idx(j, i)] = 0.5 * (s + a)
            k[idx(i, j), idx(j, i)] = k[idx(j, i), idx(i, j)] = 0.5 * (s - a)
        for j in range(p, q):
            k[idx(i, j), idx(i, j)] = omega_rect[i, j - p]
    t = _congruence_matrix(frame)
    return t.T @ k @ t


def materialize(frame: SpectralFrame, choice):
    """Materialize the selected element as an explicit symmetric matrix."""
    if frame.operator_dim > OPERATOR_DIM_CAP:
        raise ValueError(
            f"operator dimension {frame.operator_dim} exceeds cap {OPERATOR_DIM_CAP}")
    _check_choice(frame, choice)
    if frame.is_psd:
        w = _psd_operator_matrix(frame, _psd_cell_matrix(frame, choice))
    else:
        w = _nuclear_operator_matrix(frame, *_nuclear_coeff_mats(frame, choice))
    return ProxOperator(frame=frame, choice=choice, matrix=0.5 * (w + w.T))


def canonical_element(frame: SpectralFrame):
    """The element whose range equals the union of all element ranges."""
    return materialize(frame, canonical_choice(frame))


def range_projector(frame: SpectralFrame, tol=DEFAULT_TOLERANCES):
    """Orthogonal projector onto the range of the canonical element,
    computed through the pseudoinverse of its materialized matrix."""
    w = canonical_element(frame).matrix
    proj = w @ pinv(w, tol.tol_class)
    return 0.5 * (proj + proj.T)


def range_projector_pattern(frame: SpectralFrame):
    """Same projector built structurally: binarize the canonical per-cell
    coefficients instead of inverting.  Exact, no rank-cut involved."""
    if frame.is_psd:
        c = _psd_cell_matrix(frame, canonical_choice(frame))
        return _psd_operator_matrix(frame, (c > 0.0).astype(float))
    omega_s, omega_a, omega_rect = _nuclear_coeff_mats(frame, canonical_choice(frame))
    return _nuclear_operator_matrix(frame,
                                    (omega_s > 0.0).astype(float),
                                    (omega_a > 0.0).astype(float),
                                    (omega_rect > 0.0).astype(float))


class ElementList(list):
    """List of ProxOperator carrying whether the enumeration was complete."""

    def __init__(self, items=(), exhaustive=True):
        super().__init__(items)
        self.exhaustive = exhaustive


def limiting_element_count(frame: SpectralFrame):
    """Size of the sampled generator family before deduplication."""
    k = frame.idx_at.size
    if frame.is_psd:
        return sum(2 ** (bits * (k - bits)) * _binom(k, bits) for bits in range(k + 1))
    return 2 ** (k * (k + 1) // 2)


def _binom(n, r):
    from math import comb

    return comb(n, r)


def _psd_choice_from_mask(k, keep_mask, tau_bits):
    keep = tuple(i for i in range(k) if keep_mask >> i & 1)
    drop = tuple(i for i in range(k) if not keep_mask >> i & 1)
    tau = np.zeros((len(keep), len(drop)))
    for pos in range(tau.size):
        tau.flat[pos] = float(tau_bits >> pos & 1)
    return ZBlockChoice(keep=keep, drop=drop, tau=tau)


def _nuclear_choice_from_mask(k, bits):
    omega = np.zeros((k, k))
    pos = 0
    for i in range(k):
        for j in range(i, k):
            omega[i, j] = omega[j, i] = float(bits >> pos & 1)
            pos += 1
    return OmegaChoice(omega=omega)


def _iter_psd_choices(k):
    full = (1 << k) - 1
    yield _psd_choice_from_mask(k, full, 0)  # canonical first
    for keep_mask in range(full, -1, -1):
        n_tau = bin(keep_mask).count("1") * (k - bin(keep_mask).count("1"))
        for tau_bits in range(1 << n_tau):
            if keep_mask == full and tau_bits == 0:
                continue
            yield _psd_choice_from_mask(k, keep_mask, tau_bits)


def _iter_nuclear_choices(k):
    n_bits = k * (k + 1) // 2
    full = (1 << n_bits) - 1
    yield _nuclear_choice_from_mask(k, full)  # canonical first
    for bits in range(full - 1, -1, -1):
        yield _nuclear_choice_from_mask(k, bits)


def _choice_key(frame, choice):
    if frame.is_psd:
        sig = _psd_cell_matrix(frame, choice)
    else:
        sig = np.concatenate([m.ravel() for m in _nuclear_coeff_mats(frame, choice)])
    return np.round(sig, 12).tobytes()


def sample_limiting_elements(frame: SpectralFrame, budget, rng=None):
    """Limiting Jacobian elements: the canonical one plus the boundary-block
    choice patterns, enumerated exhaustively when small, otherwise sampled.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    k = frame.idx_at.size
    enumerable = k <= 4 if frame.is_psd else k * (k + 1) // 2 <= 12
    seen = {}
    truncated = False
    if enumerable:
        iterator = _iter_psd_choices(k) if frame.is_psd else _iter_nuclear_choices(k)
        for choice in iterator:
            key = _choice_key(frame, choice)
            if key in seen:
                continue
            if len(seen) >= budget:
                truncated = True
                break
            seen[key] = choice
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        canonical = canonical_choice(frame)
        seen[_choice_key(frame, canonical)] = canonical
        attempts = 0
        while len(seen) < budget and attempts < 50 * budget:
            attempts += 1
            if frame.is_psd:
                keep_mask = int(rng.integers(0, 1 << k))
                bits = bin(keep_mask).count("1") * (k - bin(keep_mask).count("1"))
                tau_bits = int(rng.integers(0, 1 << bits)) if bits else 0
                choice = _psd_choice_from_mask(k, keep_mask, tau_bits)
            else:
                n_bits = k * (k + 1) // 2
                choice = _nuclear_choice_from_mask(k, int(rng.integers(0, 1 << n_bits)))
            seen.setdefault(_choice_key(frame, choice), choice)
        truncated = True
    elements = [materialize(frame, choice) for choice in seen.values()]
    return ElementList(elements, exhaustive=not truncated)


def conjugate_jacobian_elements(func, sigma, w, budget, tol=DEFAULT_TOLERANCES, rng=None):
    """Jacobian elements of the conjugate proximal mapping at w.

    Through the Moreau identity these are I - W with W a Jacobian element
    of the primal proximal mapping; the multiplier coefficients are
    invariant under the joint scaling (point, kink threshold) -> (point/s,
    threshold/s), so the frame is built directly at w.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    frame = frame_from_point(func, w, tol)
    base = sample_limiting_elements(frame, budget, rng)
    eye = np.eye(frame.operator_dim)
    out = [ProxOperator(frame=frame, choice=e.choice, matrix=eye - e.matrix)
           for e in base]
    return ElementList(out, exhaustive=base.exhaustive)
