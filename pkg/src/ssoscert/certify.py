"""SSOSC verdicts and the positive-definiteness sweep they are equivalent to.

The second-order value of the structured term enters either through its
closed form (`gamma_closed_form`) or through the quadratic form of the
pseudoinverse of the canonical Jacobian element (`upsilon`); both agree on
the canonical range.  The SSOSC reduces to an eigenvalue problem on the
subspace of directions mapped into that range, and the sweep checks
positive-definiteness of Q + sigma F'^T U F' over sampled conjugate
Jacobian elements U on an ascending sigma grid.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .jacobian import (ProxOperator, canonical_element, conjugate_jacobian_elements,
                       range_projector, range_projector_pattern)
from .linalg import check_symmetric, null_space_basis, pinv, svec
from .prox import (NuclearNorm, PsdIndicator, SpectralFrame, StructuredConvexFunction,
                   make_frame, subgradient_check)

DEFAULT_SIGMA_GRID = (1.0, 10.0, 100.0, 1000.0, 10000.0)


@dataclass(frozen=True)
class CompositeProblem:
    """min 0.5 x^T Q x + c^T x + const + g(A0 + sum_i x_i A_i)."""

    quad: np.ndarray
    lin: np.ndarray
    const: float
    offset: np.ndarray
    maps: np.ndarray
    func: StructuredConvexFunction

    def __post_init__(self):
        q = check_symmetric(self.quad, tol=1e-12, name="Q")
        object.__setattr__(self, "quad", q)
        n = q.shape[0]
        if self.lin.shape != (n,):
            raise ValueError(f"c must have length {n}")
        if self.offset.shape != self.func.shape:
            raise ValueError(f"A0 shape {self.offset.shape} does not match g")
        if self.maps.shape != (n,) + self.func.shape:
            raise ValueError("A_i shapes must match g and n")

    @property
    def n(self):
        return self.quad.shape[0]

    def map_value(self, x):
        return self.offset + np.tensordot(np.asarray(x, dtype=float), self.maps, axes=1)

    def map_adjoint(self, u):
        return np.tensordot(self.maps, np.asarray(u, dtype=float), axes=2)

    def grad_smooth(self, x):
        return self.quad @ np.asarray(x, dtype=float) + self.lin

    def vectorize(self, y):
        """Coordinates of a g-space matrix on the operator coordinates."""
        if isinstance(self.func, PsdIndicator):
            return svec(y)
        return np.asarray(y, dtype=float).ravel()

    def map_matrix(self):
        """Operator-coordinate matrix of the linear part of the map:
        columns are the vectorized A_i."""
        cols = [self.vectorize(self.maps[i]) for i in range(self.n)]
        if not cols:
            dim = (self.func.m * (self.func.m + 1) // 2
                   if isinstance(self.func, PsdIndicator) else self.func.p * self.func.q)
            return np.zeros((dim, 0))
        return np.stack(cols, axis=1)

    @property
    def pd_scale(self):
        """Unit scaling applied to positive-definiteness thresholds."""
        return 1.0 + float(np.linalg.norm(self.quad))


@dataclass(frozen=True)
class KktCandidate:
    """Candidate (x, u) with its KKT residuals."""

    x: np.ndarray
    u: np.ndarray
    stationarity_residual: float
    subgradient_residual: float
    tol: float

    @property
    def valid(self):
        return (self.stationarity_residual <= self.tol
                and self.subgradient_residual <= self.tol)


def kkt_candidate(problem: CompositeProblem, x, u,
                  tol: ToleranceConfig = DEFAULT_TOLERANCES):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (problem.n,):
        raise ValueError(f"x must have length {problem.n}")
    if u.shape != problem.func.shape:
        raise ValueError(f"u shape {u.shape} does not match g")
    stat = float(np.linalg.norm(problem.grad_smooth(x) + problem.map_adjoint(u)))
    sub = subgradient_check(problem.func, problem.map_value(x), u, tol)
    bound = tol.tol_range * (1.0 + np.linalg.norm(x) + np.linalg.norm(u))
    return KktCandidate(x=x, u=u, stationarity_residual=stat,
                        subgradient_residual=sub.residual, tol=bound)


def gamma_closed_form(frame: SpectralFrame, y, tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Second-order variational value of the structured term at direction y.

    +inf off the canonical range; on it, the explicit sums over the index
    partition of the frame.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != frame.func.shape:
        raise ValueError(f"direction shape {y.shape} does not match {frame.func.shape}")
    if frame.is_psd:
        yv = svec(check_symmetric(y, tol=1e-8 * (1.0 + np.max(np.abs(y))), name="Y"))
    else:
        yv = y.ravel()
    proj = range_projector_pattern(frame)
    if np.linalg.norm(yv - proj @ yv) > tol.tol_range * (1.0 + np.linalg.norm(yv)):
        return np.inf
    vals = frame.values
    if frame.is_psd:
        a, g = frame.idx_above, frame.idx_below
        if a.size == 0 or g.size == 0:
            return 0.0
        yt = frame.left.T @ y @ frame.left
        block = yt[np.ix_(a, g)]
        ratio = vals[g][None, :] / vals[a][:, None]
        return float(-2.0 * np.sum(ratio * block ** 2))
    p = frame.func.p
    a1, a2, a3 = frame.idx_above, frame.idx_at, frame.idx_below
    if a1.size == 0:
        return 0.0
    yt = frame.left.T @ y @ frame.right
    y1 = yt[:, :p]
    h = np.maximum(vals - 1.0, 0.0)
    total = 0.0
    for i in a1:
        for j in np.concatenate([a1, a2]):
            if j <= i:
                continue
            anti = 0.5 * (y1[i, j] - y1[j, i])
            total += 2.0 * ((vals[i] + vals[j]) / (h[i] + h[j]) - 1.0) * anti ** 2
        for j in a3:
            sym = 0.5 * (y1[i, j] + y1[j, i])
            anti = 0.5 * (y1[i, j] - y1[j, i])
            total += 2.0 * ((1.0 - vals[j]) / (vals[i] - 1.0) * sym ** 2
                            + (1.0 + vals[j]) / (vals[i] - 1.0) * anti ** 2)
        if frame.func.q > p:
            total += np.sum(yt[i, p:] ** 2) / (vals[i] - 1.0)
    return float(total)


def upsilon(frame: SpectralFrame, v, tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Quadratic form <v, (pinv(Wbar) - I) v> on the canonical range.

    Raises ValueError when v leaves the range: the caller owns membership.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != frame.func.shape:
        raise ValueError(f"direction shape {v.shape} does not match {frame.func.shape}")
    wbar = canonical_element(frame).matrix
    vv = svec(v) if frame.is_psd else v.ravel()
    wdag = pinv(wbar, tol.tol_class)
    resid = np.linalg.norm(vv - wbar @ (wdag @ vv))
    if resid > tol.tol_range * (1.0 + np.linalg.norm(vv)):
        raise ValueError(
            f"direction outside the canonical range (residual {resid:.3e})")
    return float(vv @ (wdag @ vv) - vv @ vv)


@dataclass(frozen=True)
class SsoscResult:
    margin: float
    holds: bool
    subspace_dim: int
    scale: float


@dataclass(frozen=True)
class SweepEntry:
    sigma: float
    min_eig: float
    pd: bool
    elements_tested: int
    exhaustive: bool


@dataclass(frozen=True)
class Certificate:
    ssosc: SsoscResult
    sweep: tuple
    equivalence_verdict: str
    sampling_completeness: bool
    frame: SpectralFrame = field(repr=False, default=None)


def _require_valid(kkt: KktCandidate):
    if not kkt.valid:
        raise ValueError(
            "candidate fails the KKT residual test "
            f"(stationarity {kkt.stationarity_residual:.3e}, "
            f"subgradient {kkt.subgradient_residual:.3e}, bound {kkt.tol:.3e})")


def ssosc_margin(problem: CompositeProblem, kkt: KktCandidate,
                 tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Minimum eigenvalue of the second-order form on the reduced subspace.

    Directions whose image leaves the canonical range satisfy the
    condition automatically, so the form Q + F'^T (pinv(Wbar) - I) F' is
    restricted to the kernel of (I - Wbar Wbar^dag) F'; an empty kernel
    certifies the condition vacuously with margin +inf.
    """
    _require_valid(kkt)
    frame = make_frame(problem.func, problem.map_value(kkt.x), kkt.u, tol)
    fmat = problem.map_matrix()
    wbar = canonical_element(frame).matrix
    proj = range_projector(frame, tol)
    constraint = fmat - proj @ fmat
    basis = null_space_basis(constraint, tol.tol_class)
    if basis.shape[1] == 0:
        return SsoscResult(margin=np.inf, holds=True, subspace_dim=0,
                           scale=problem.pd_scale), frame
    reduced_map = fmat @ basis
    h = basis.T @ problem.quad @ basis + reduced_map.T @ pinv(wbar, tol.tol_class) @ reduced_map \
        - reduced_map.T @ reduced_map
    h = 0.5 * (h + h.T)
    margin = float(np.linalg.eigvalsh(h)[0])
    holds = margin > tol.tol_pd * problem.pd_scale
    return SsoscResult(margin=margin, holds=holds, subspace_dim=basis.shape[1],
                       scale=problem.pd_scale), frame


def aug_hessian(problem: CompositeProblem, kkt: KktCandidate, sigma,
                element: ProxOperator):
    """Q + sigma F'^T U F' for one conjugate Jacobian element U."""
    fmat = problem.map_matrix()
    if element.matrix.shape[0] != fmat.shape[0]:
        raise ValueError("element dimension does not match the problem's map")
    h = problem.quad + sigma * fmat.T @ element.matrix @ fmat
    return 0.5 * (h + h.T)


def _sweep_entry(problem, kkt, sigma, budget, tol, seed):
    rng = np.random.default_rng(seed)
    w = kkt.u + sigma * problem.map_value(kkt.x)
    elements = conjugate_jacobian_elements(problem.func, sigma, w, budget, tol, rng)
    min_eig = np.inf
    for element in elements:
        eig = float(np.linalg.eigvalsh(aug_hessian(problem, kkt, sigma, element))[0])
        min_eig = min(min_eig, eig)
    return SweepEntry(sigma=float(sigma), min_eig=min_eig,
                      pd=min_eig > tol.tol_pd * problem.pd_scale,
                      elements_tested=len(elements), exhaustive=elements.exhaustive)


def hessian_pd_sweep(problem: CompositeProblem, kkt: KktCandidate, sigma_grid,
                     budget, tol: ToleranceConfig = DEFAULT_TOLERANCES,
                     workers=1, seed=0):
    """Per-sigma minimum eigenvalue over all sampled generalized-Hessian
    matrices.  Deterministic for fixed inputs regardless of worker count:
    each grid point is an independent task and results are merged in grid
    order."""
    _require_valid(kkt)
    grid = [float(s) for s in sigma_grid]
    if not grid:
        raise ValueError("sigma grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] <= 0:
        raise ValueError("sigma grid must be positive and strictly ascending")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(
                lambda s: _sweep_entry(problem, kkt, s, budget, tol, seed), grid))
    else:
        entries = [_sweep_entry(problem, kkt, s, budget, tol, seed) for s in grid]
    return entries


def certify(problem: CompositeProblem, kkt: KktCandidate,
            sigma_grid=DEFAULT_SIGMA_GRID, budget=64,
            tol: ToleranceConfig = DEFAULT_TOLERANCES, workers=1, seed=0):
    """Cross-verify the SSOSC verdict against the sigma sweep.

    consistent   both sides agree (the sweep found a PD sigma iff the
                 SSOSC holds)
    inconclusive SSOSC holds but no grid sigma passed; the equivalence
                 only guarantees existence of a sufficiently large sigma
    inconsistent SSOSC fails yet some sigma passed
    """
    ssosc, frame = ssosc_margin(problem, kkt, tol)
    sweep = hessian_pd_sweep(problem, kkt, sigma_grid, budget, tol, workers, seed)
    any_pd = any(e.pd for e in sweep)
    if ssosc.holds:
        verdict = "consistent" if any_pd else "inconclusive"
    else:
        verdict = "consistent" if not any_pd else "inconsistent"
    return Certificate(ssosc=ssosc, sweep=tuple(sweep), equivalence_verdict=verdict,
                       sampling_completeness=all(e.exhaustive for e in sweep),
                       frame=frame)
