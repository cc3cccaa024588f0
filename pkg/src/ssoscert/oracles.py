"""Independent oracles for the closed forms used across the package.

Finite differences validate the Jacobian block formulas, second-order
difference quotients validate the closed-form second-order values, and a
brute-force minimum over sampled Jacobian elements validates that the
canonical element attains it.  Everything here is deliberately slow and
kept off the certification hot path; `run_selftest` drives the suites.
"""

from dataclasses import dataclass

import numpy as np

from .certify import gamma_closed_form
from .config import DEFAULT_TOLERANCES, ToleranceConfig
from .jacobian import (canonical_choice, jacobian_apply, range_projector,
                       range_projector_pattern, sample_limiting_elements)
from .linalg import pinv, sunvec, svec
from .prox import (NuclearNorm, PsdIndicator, frame_from_point, make_frame,
                   prox_apply)

FD_T_GRID = (1e-4, 1e-5, 1e-6)
DELTA2_T_GRID = (1e-2, 1e-3, 1e-4)
DECAY_SIGMAS = tuple(10.0 ** k for k in range(1, 7))


@dataclass(frozen=True)
class OracleReport:
    name: str
    closed_value: float
    oracle_value: float
    abs_gap: float
    rel_gap: float
    tol: float
    passed: bool
    skipped: bool = False
    note: str = ""


def _report(name, closed, oracle, tol):
    abs_gap = abs(oracle - closed)
    rel_gap = abs_gap / (1.0 + abs(closed))
    return OracleReport(name=name, closed_value=float(closed),
                        oracle_value=float(oracle), abs_gap=float(abs_gap),
                        rel_gap=float(rel_gap), tol=float(tol),
                        passed=bool(rel_gap <= tol))


def fd_prox_jacobian(func, w, d, t_grid=FD_T_GRID,
                     tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Central finite differences of the proximal mapping against the
    Jacobian block formula, at a differentiable point (empty boundary
    block).  Non-differentiable points are flagged, not failed."""
    frame = frame_from_point(func, w, tol)
    if frame.idx_at.size:
        return OracleReport(name="fd_prox_jacobian", closed_value=np.nan,
                            oracle_value=np.nan, abs_gap=np.nan, rel_gap=np.nan,
                            tol=1e-5, passed=True, skipped=True,
                            note="non-differentiable point (boundary block active)")
    d = np.asarray(d, dtype=float)
    jac = jacobian_apply(frame, canonical_choice(frame), d)
    scale = 1.0 + np.linalg.norm(jac)
    best = np.inf
    for t in t_grid:
        fd = (prox_apply(func, 1.0, w + t * d) - prox_apply(func, 1.0, w - t * d)) / (2 * t)
        best = min(best, np.linalg.norm(fd - jac) / scale)
    return OracleReport(name="fd_prox_jacobian", closed_value=0.0,
                        oracle_value=float(best), abs_gap=float(best),
                        rel_gap=float(best), tol=1e-5, passed=bool(best <= 1e-5))


def delta2_quotient(func, x, u, d, t_grid=DELTA2_T_GRID,
                    tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Second-order difference quotient of the nuclear norm along d,
    Richardson-extrapolated and compared to the closed-form value.

    Indicator-type functions are rejected: their fixed-direction quotient
    can be +inf without the compensating parabolic shift.
    """
    if isinstance(func, PsdIndicator):
        raise ValueError("indicator-type functions have no finite fixed-direction quotient")
    frame = make_frame(func, x, u, tol)
    if frame.idx_at.size:
        raise ValueError("quotient oracle requires a differentiable frame")
    d = np.asarray(d, dtype=float)
    closed = gamma_closed_form(frame, d, tol)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    base = float(np.sum(np.linalg.svd(x, compute_uv=False)))
    slope = float(np.sum(u * d))
    quotients = []
    for t in sorted(t_grid, reverse=True):
        val = float(np.sum(np.linalg.svd(x + t * d, compute_uv=False)))
        quotients.append((val - base - t * slope) / (0.5 * t * t))
    # two-point Richardson for a linearly convergent quotient
    t1, t2 = sorted(t_grid, reverse=True)[-2:]
    q1, q2 = quotients[-2], quotients[-1]
    extrapolated = (t1 * q2 - t2 * q1) / (t1 - t2)
    return _report("delta2_quotient", closed, extrapolated, 1e-2)


def _vectorize(frame, y):
    return svec(y) if frame.is_psd else np.asarray(y, dtype=float).ravel()


def _element_matrices(frame, budget, seed):
    """Sampled limiting elements plus random convex combinations, capped
    at `budget` matrices in total."""
    elements = sample_limiting_elements(frame, budget)
    mats = [e.matrix for e in elements]
    rng = np.random.default_rng(seed)
    while len(mats) < budget and len(elements) > 1:
        size = int(rng.integers(2, min(4, len(elements)) + 1))
        picks = rng.choice(len(elements), size=size, replace=False)
        weights = rng.dirichlet(np.ones(size))
        weights = 0.1 / size + 0.9 * weights
        mats.append(sum(w * elements[i].matrix for w, i in zip(weights, picks)))
    return mats, elements.exhaustive


def gamma_bruteforce_many(frame, ys, budget, seed=0,
                          tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Brute-force second-order values for a batch of directions: minimum
    of <y, pinv(W) y - y> over sampled elements W admitting y."""
    if frame.operator_dim > 36:
        raise ValueError("brute-force oracle is restricted to small instances")
    mats, _ = _element_matrices(frame, budget, seed)
    cols = np.stack([_vectorize(frame, y) for y in ys], axis=1)
    norms = np.linalg.norm(cols, axis=0)
    best = np.full(cols.shape[1], np.inf)
    for w in mats:
        wdag = pinv(w, tol.tol_class)
        proj = w @ wdag
        resid = np.linalg.norm(cols - proj @ cols, axis=0)
        admissible = resid <= tol.tol_range * (1.0 + norms)
        if not np.any(admissible):
            continue
        vals = np.sum(cols * (wdag @ cols), axis=0) - norms ** 2
        best = np.where(admissible, np.minimum(best, vals), best)
    return best


def gamma_bruteforce(frame, y, budget, seed=0,
                     tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Single-direction wrapper over :func:`gamma_bruteforce_many`."""
    return float(gamma_bruteforce_many(frame, [y], budget, seed, tol)[0])


def coderivative_chain_check(frame, sigma_list, trials, seed=0, budget=16,
                             tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Norm chain for conjugate-coderivative elements.

    For sampled U and random d: z = (I + (sigma-1)U)^{-1} (I - U) d must
    dominate the kernel components ||(I - U U^dag) d|| and
    ||(I - Wbar Wbar^dag) d||, and sigma (I+(sigma-1)U)^{-1} U d must
    decay to U U^dag d as sigma grows.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    mats, _ = _element_matrices(frame, budget, seed)
    proj_bar = range_projector(frame, tol)
    dim = frame.operator_dim
    eye = np.eye(dim)
    worst = np.inf
    for trial in range(trials):
        d = rng.standard_normal(dim)
        u = mats[trial % len(mats)]
        udag = pinv(u, tol.tol_class)
        uu = u @ udag
        kernel_u = np.linalg.norm(d - uu @ d) ** 2
        kernel_bar = np.linalg.norm(d - proj_bar @ d) ** 2
        for sigma in sigma_list:
            z = np.linalg.solve(eye + (sigma - 1.0) * u, d - u @ d)
            slack = np.linalg.norm(z) ** 2 - kernel_u
            worst = min(worst, slack, kernel_u - kernel_bar + 1e-10)
        decay = [np.linalg.norm(
            sigma * np.linalg.solve(eye + (sigma - 1.0) * u, u @ d) - uu @ d)
            for sigma in DECAY_SIGMAS]
        for a, b in zip(decay, decay[1:]):
            worst = min(worst, a - b + 1e-12 * (1.0 + decay[0]))
        worst = min(worst, 1e-4 * np.linalg.norm(d) - decay[-1])
    passed = worst >= -1e-10
    return OracleReport(name="coderivative_chain_check", closed_value=0.0,
                        oracle_value=float(worst), abs_gap=float(max(0.0, -worst)),
                        rel_gap=float(max(0.0, -worst)), tol=1e-10, passed=bool(passed))


# ---------------------------------------------------------------------------
# deterministic random instances


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _partition_counts(rng, total, differentiable, allow_empty_above=True):
    while True:
        above = int(rng.integers(0 if allow_empty_above else 1, total + 1))
        at = 0 if differentiable else int(rng.integers(0, total - above + 1))
        below = total - above - at
        if above + at + below == total:
            return above, at, below


def random_psd_frame(rng, m, counts=None, differentiable=False,
                     tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Frame of a random symmetric point with prescribed or random numbers
    of positive / zero / negative eigenvalues, magnitudes in [0.5, 3]."""
    if counts is None:
        counts = _partition_counts(rng, m, differentiable)
    above, at, below = counts
    vals = np.concatenate([
        np.sort(rng.uniform(0.5, 3.0, above))[::-1],
        np.zeros(at),
        -np.sort(rng.uniform(0.5, 3.0, below)),
    ])
    basis = random_orthogonal(rng, m)
    point = (basis * vals) @ basis.T
    return frame_from_point(PsdIndicator(m), 0.5 * (point + point.T), tol)


def random_nuclear_frame(rng, p, q, counts=None, differentiable=False,
                         tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Frame of a random p x q point with prescribed or random numbers of
    singular values above / at / below the kink."""
    if counts is None:
        counts = _partition_counts(rng, p, differentiable)
    above, at, below = counts
    vals = np.concatenate([
        np.sort(rng.uniform(1.5, 3.0, above))[::-1],
        np.ones(at),
        np.sort(rng.uniform(0.1, 0.8, below))[::-1],
    ])
    left = random_orthogonal(rng, p)
    right = random_orthogonal(rng, q)
    sigma = np.zeros((p, q))
    np.fill_diagonal(sigma, vals)
    return frame_from_point(NuclearNorm(p, q), left @ sigma @ right.T, tol)


def frame_to_pair(frame):
    """Split the frame's point A into the valid subgradient pair
    (x, u) = (Prox(A), A - Prox(A))."""
    x = prox_apply(frame.func, 1.0, frame.point)
    return x, frame.point - x


def random_inrange_direction(frame, rng):
    """Random direction inside the canonical range, unit Frobenius norm;
    None when the range is trivial."""
    if np.trace(range_projector_pattern(frame)) < 0.5:
        return None
    for _ in range(32):
        d = rng.standard_normal(frame.func.shape)
        if frame.is_psd:
            d = 0.5 * (d + d.T)
        y = jacobian_apply(frame, canonical_choice(frame), d)
        norm = np.linalg.norm(y)
        if norm > 1e-8:
            return y / norm
    raise RuntimeError("canonical element annihilated 32 random directions")


def random_outofrange_direction(frame, rng):
    """Random direction with a unit component outside the canonical range,
    or None when the range is the whole space."""
    proj = range_projector_pattern(frame)
    for _ in range(32):
        g = rng.standard_normal(frame.func.shape)
        if frame.is_psd:
            g = 0.5 * (g + g.T)
        gv = _vectorize(frame, g)
        out = gv - proj @ gv
        norm = np.linalg.norm(out)
        if norm > 1e-8:
            out = out / norm + 0.5 * (proj @ gv)
            return sunvec(out) if frame.is_psd else out.reshape(frame.func.shape)
    return None


# ---------------------------------------------------------------------------
# selftest suites


def _suite(name, reports):
    active = [r for r in reports if not r.skipped]
    skipped = len(reports) - len(active)
    worst = max((r.rel_gap for r in active), default=0.0)
    return {"name": name, "total": len(reports), "passed": sum(r.passed for r in active),
            "skipped": skipped, "worst_gap": float(worst),
            "ok": all(r.passed for r in active)}


def run_selftest(trials=1000, seed=0, budget=64,
                 tol: ToleranceConfig = DEFAULT_TOLERANCES):
    """Run every oracle suite; returns a summary dictionary."""
    rng = np.random.default_rng(seed)
    suites = []

    reports = []
    for _ in range(100):
        frame = random_psd_frame(rng, int(rng.integers(2, 6)), differentiable=True)
        d = rng.standard_normal(frame.func.shape)
        reports.append(fd_prox_jacobian(frame.func, frame.point, 0.5 * (d + d.T), tol=tol))
    suites.append(_suite("fd_jacobian_psd", reports))

    reports = []
    for _ in range(100):
        p = int(rng.integers(2, 4))
        q = int(rng.integers(p, 5))
        frame = random_nuclear_frame(rng, p, q, differentiable=True)
        reports.append(fd_prox_jacobian(frame.func, frame.point,
                                        rng.standard_normal((p, q)), tol=tol))
    suites.append(_suite("fd_jacobian_nuclear", reports))

    func = NuclearNorm(2, 2)
    fixture = delta2_quotient(func, np.diag([2.0, 0.0]), np.diag([1.0, 0.5]),
                              np.array([[0.0, 1.0], [0.0, 0.0]]), tol=tol)
    reports = [fixture]
    for _ in range(20):
        p = int(rng.integers(2, 4))
        q = int(rng.integers(p, 5))
        frame = random_nuclear_frame(rng, p, q, differentiable=True)
        x, u = frame_to_pair(frame)
        reports.append(delta2_quotient(frame.func, x, u,
                                       random_inrange_direction(frame, rng), tol=tol))
    suites.append(_suite("delta2_quotient", reports))

    chain_trials = max(1, trials // 25)
    reports = []
    for _ in range(25):
        frame = random_psd_frame(rng, int(rng.integers(2, 6)))
        reports.append(coderivative_chain_check(frame, (2.0, 10.0, 100.0),
                                                chain_trials, seed=int(rng.integers(2 ** 31)),
                                                tol=tol))
    suites.append(_suite("chain_psd", reports))

    reports = []
    for _ in range(25):
        p = int(rng.integers(2, 4))
        frame = random_nuclear_frame(rng, p, int(rng.integers(p, 5)))
        reports.append(coderivative_chain_check(frame, (2.0, 10.0, 100.0),
                                                chain_trials, seed=int(rng.integers(2 ** 31)),
                                                tol=tol))
    suites.append(_suite("chain_nuclear", reports))

    reports = []
    for kind in ("psd", "nuclear"):
        for _ in range(10):
            if kind == "psd":
                frame = random_psd_frame(rng, int(rng.integers(2, 5)))
            else:
                p = int(rng.integers(2, 4))
                frame = random_nuclear_frame(rng, p, int(rng.integers(p, 4)))
            ys = [random_inrange_direction(frame, rng) for _ in range(10)]
            closed = np.array([gamma_closed_form(frame, y, tol) for y in ys])
            brute = gamma_bruteforce_many(frame, ys, budget, seed=seed, tol=tol)
            for c, b in zip(closed, brute):
                reports.append(_report(f"gamma_{kind}", c, b, 1e-6))
    suites.append(_suite("gamma_bruteforce", reports))

    return {"trials": int(trials), "seed": int(seed),
            "suites": suites, "all_pass": all(s["ok"] for s in suites)}
