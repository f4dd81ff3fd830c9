"""The L^p + L^q norm on lattice fields, its two-sided estimate, and the dual norm.

Splittings are collinear, ``xi_1 = t xi`` and ``xi_2 = (1 - t) xi`` with
``t`` in [0, 1] per site, so only pointwise magnitudes ``a`` matter.  At an
optimum with both parts nonzero the stationarity condition reads

    t^(p-1) / (1 - t)^(q-1) = kappa * a^(q-p),   kappa = N_1^(p-1) / N_2^(q-1)

so the whole minimizer is fixed by the scalar ``kappa``.  ``norm_exact``
searches over ``log(kappa)`` (log scan then bounded Brent), compares with
the two one-part splittings, and certifies the value with the dual pairing
``<a, eta> / max(||eta||_p', ||eta||_q')``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .fields import OneForm, ScalarField


@dataclass(frozen=True)
class OrliczPair:
    p: float = 3.0
    q: float = 6.0

    def __post_init__(self):
        if not 2 < self.p < self.q:
            raise ValueError(f"need 2 < p < q, got p={self.p}, q={self.q}")

    @property
    def p_dual(self) -> float:
        return self.p / (self.p - 1)

    @property
    def q_dual(self) -> float:
        return self.q / (self.q - 1)

    @property
    def r(self) -> float:
        return self.p * self.q / (self.q - self.p)


@dataclass
class SplitDecomposition:
    t: np.ndarray
    source: np.ndarray  # pointwise magnitudes of the split field

    def parts(self) -> tuple[np.ndarray, np.ndarray]:
        return self.t * self.source, (1 - self.t) * self.source


@dataclass
class NormResult:
    value: float
    split: SplitDecomposition
    lower: float  # dual certificate
    converged: bool
    evaluations: int
    trace: list = field(default_factory=list)  # (iteration, objective, log_kappa)
    log_kappa: float = float("nan")

    @property
    def gap(self) -> float:
        return self.value - self.lower


def magnitudes(field_or_values, weight: float | None = None) -> tuple[np.ndarray, float]:
    """Flat pointwise magnitudes and the quadrature weight h^n."""
    if isinstance(field_or_values, OneForm):
        a = np.sqrt(field_or_values.sq_magnitude())
        return a.ravel(), field_or_values.grid.cell_volume
    if isinstance(field_or_values, ScalarField):
        return np.abs(field_or_values.values).ravel(), field_or_values.grid.cell_volume
    a = np.abs(np.asarray(field_or_values, dtype=float)).ravel()
    return a, 1.0 if weight is None else float(weight)


def lebesgue_norm(a: np.ndarray, w: float, r: float) -> float:
    if a.size == 0:
        return 0.0
    top = float(np.max(a))
    if top == 0.0:
        return 0.0
    return top * float(w * np.sum((a / top) ** r)) ** (1.0 / r)


def omega_set(field_or_values, threshold: float = 1.0) -> np.ndarray:
    """Mask of sites where the pointwise magnitude exceeds ``threshold``."""
    if isinstance(field_or_values, OneForm):
        return np.sqrt(field_or_values.sq_magnitude()) > threshold
    if isinstance(field_or_values, ScalarField):
        return np.abs(field_or_values.values) > threshold
    return np.abs(np.asarray(field_or_values)) > threshold


def norm_bounds(field_or_values, pair: OrliczPair = OrliczPair(), weight: float | None = None):
    """(lower, upper) from the Omega-split estimate; lower is clamped at 0."""
    a, w = magnitudes(field_or_values, weight)
    om = a > 1
    lq_out = lebesgue_norm(a[~om], w, pair.q)
    lp_in = lebesgue_norm(a[om], w, pair.p)
    meas = om.sum() * w
    lower = max(lq_out - 1.0, lp_in / (1.0 + meas ** (1.0 / pair.r)), 0.0)
    upper = max(lq_out, lp_in)
    return lower, upper


def omega_split_value(field_or_values, pair: OrliczPair = OrliczPair(), weight: float | None = None) -> float:
    """||xi||_{L^p(Omega)} + ||xi||_{L^q(Omega^c)}, the cost of the splitting xi_1 = xi 1_Omega."""
    a, w = magnitudes(field_or_values, weight)
    om = a > 1
    return lebesgue_norm(a[om], w, pair.p) + lebesgue_norm(a[~om], w, pair.q)


def dual_norm(field_or_values, pair: OrliczPair = OrliczPair(), weight: float | None = None) -> float:
    a, w = magnitudes(field_or_values, weight)
    return lebesgue_norm(a, w, pair.p_dual) + lebesgue_norm(a, w, pair.q_dual)


def _split_for(log_kappa: float, a: np.ndarray, p: float, q: float, iters: int = 60) -> np.ndarray:
    """Per-site root of (p-1) log t - (q-1) log(1-t) = log kappa + (q-p) log a.

    In the logit s = log(t / (1-t)) the left side is
    F(s) = (p-1) s - (q-p) log(1 - sigma(s)), convex, increasing and >= (p-1) s,
    so Newton from s = rhs / (p-1) decreases monotonically onto the root.
    """
    rhs = log_kappa + (q - p) * np.log(a)
    s = rhs / (p - 1)
    for _ in range(iters):
        sig = 0.5 * (1.0 + np.tanh(0.5 * s))
        F = (p - 1) * s + (q - p) * np.logaddexp(0.0, s) - rhs
        step = F / ((p - 1) + (q - p) * sig)
        s = s - step
        if np.max(np.abs(step)) <= 1e-15 * (1.0 + np.max(np.abs(s))):
            break
    return 0.5 * (1.0 + np.tanh(0.5 * s))


def _objective(t: np.ndarray, a: np.ndarray, w: float, pair: OrliczPair) -> float:
    return lebesgue_norm(t * a, w, pair.p) + lebesgue_norm((1 - t) * a, w, pair.q)


def dual_certificate(t: np.ndarray, a: np.ndarray, w: float, pair: OrliczPair) -> float:
    """Best lower bound <a, eta> / max(||eta||_p', ||eta||_q') over the candidates
    eta_1 (gradient of the p-part), eta_2 (q-part), and eta_1 on t > 0 with eta_2 elsewhere."""
    p, q = pair.p, pair.q
    cands = []
    n1 = lebesgue_norm(t * a, w, p)
    n2 = lebesgue_norm((1 - t) * a, w, q)
    e1 = (t * a / n1) ** (p - 1) if n1 > 0 else None
    e2 = ((1 - t) * a / n2) ** (q - 1) if n2 > 0 else None
    if e1 is not None:
        cands.append(e1)
    if e2 is not None:
        cands.append(e2)
    if e1 is not None and e2 is not None:
        cands.append(np.where(t > 0, e1, e2))
    # the plain one-part splittings give their own dual vectors
    for r in (p, q):
        nr = lebesgue_norm(a, w, r)
        if nr > 0:
            cands.append((a / nr) ** (r - 1))
    best = 0.0
    for eta in cands:
        den = max(lebesgue_norm(eta, w, pair.p_dual), lebesgue_norm(eta, w, pair.q_dual))
        if den > 0:
            best = max(best, float(w * np.dot(a, eta)) / den)
    return best


def _kkt_root(a: np.ndarray, w: float, pair: OrliczPair, lo: float, hi: float) -> float | None:
    p, q = pair.p, pair.q

    def resid(lk: float) -> float:
        t = _split_for(lk, a, p, q)
        n1, n2 = lebesgue_norm(t * a, w, p), lebesgue_norm((1 - t) * a, w, q)
        if n1 == 0.0 or n2 == 0.0:
            return math.nan
        return lk - (p - 1) * math.log(n1) + (q - 1) * math.log(n2)

    r_lo, r_hi = resid(lo), resid(hi)
    if not (np.isfinite(r_lo) and np.isfinite(r_hi)) or r_lo * r_hi > 0:
        return None
    return optimize.brentq(resid, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def norm_exact(field_or_values, pair: OrliczPair = OrliczPair(), tol: float = 1e-9,
               weight: float | None = None, scan: int = 241, keep_trace: bool = False,
               log_kappa_hint: float | None = None) -> NormResult:
    """Infimum of ||t a||_p + ||(1-t) a||_q over t in [0, 1]^N.

    ``log_kappa_hint`` (e.g. from a nearby field) replaces the global scan by
    a local one; the global scan is used anyway if the local minimum sits on
    the edge of the local window.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a_all, w = magnitudes(field_or_values, weight)
    t_all = np.zeros_like(a_all)
    active = a_all > 0
    if not np.any(active):
        return NormResult(0.0, SplitDecomposition(t_all, a_all), 0.0, True, 0)
    a = a_all[active]
    p, q = pair.p, pair.q
    trace = []
    evals = 0

    def obj(lk: float) -> float:
        nonlocal evals
        evals += 1
        val = _objective(_split_for(lk, a, p, q), a, w, pair)
        if keep_trace:
            trace.append((evals, val, lk))
        return val

    # a one-part splitting is optimal iff its own dual vector lies in the dual ball
    for r, t_one, lk_one in ((q, 0.0, -np.inf), (p, 1.0, np.inf)):
        t_try = np.full_like(a, t_one)
        val = lebesgue_norm(a, w, r)
        lower = dual_certificate(t_try, a, w, pair)
        if val - lower <= 1e-13 * val:
            t_all[active] = t_try
            return NormResult(val, SplitDecomposition(t_all, a_all), lower, True, evals, trace, lk_one)

    # kappa range wide enough that the extreme splits reach the one-part limits
    amax, amin = float(a.max()), float(a.min())
    span = 40.0 + (q - p) * (abs(math.log(amax)) + abs(math.log(amin)))
    grid = None
    if log_kappa_hint is not None and np.isfinite(log_kappa_hint):
        grid = log_kappa_hint + np.linspace(-2.0, 2.0, 9)
        vals = np.array([obj(lk) for lk in grid])
        k = int(np.argmin(vals))
        if k in (0, len(grid) - 1):
            grid = None
    if grid is None:
        grid = np.linspace(-span, span, scan)
        vals = np.array([obj(lk) for lk in grid])
        k = int(np.argmin(vals))
    scan = len(grid)
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, scan - 1)]
    res = optimize.minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-13, "maxiter": 500})
    # the minimizer is also the root of log kappa = (p-1) log n1 - (q-1) log n2,
    # which pins log kappa to machine precision where Brent on a flat minimum cannot
    cands = []
    root = _kkt_root(a, w, pair, lo, hi)
    if root is not None:
        evals += 1
        t_root = _split_for(root, a, p, q)
        cands.append((_objective(t_root, a, w, pair), t_root, root))
    cands += [(float(vals[k]), _split_for(grid[k], a, p, q), grid[k]),
              (float(res.fun), _split_for(res.x, a, p, q), res.x),
              (lebesgue_norm(a, w, p), np.ones_like(a), np.inf),
              (lebesgue_norm(a, w, q), np.zeros_like(a), -np.inf)]
    value, t, lk = min(cands, key=lambda c: c[0])
    t_all[active] = t
    # every candidate split yields a valid dual bound
    lower = max(dual_certificate(c[1], a, w, pair) for c in cands)
    converged = value - lower <= tol * max(1.0, value)
    return NormResult(value, SplitDecomposition(t_all, a_all), lower, bool(converged), evals, trace,
                      float(lk))


def brute_force_norm(values, pair: OrliczPair = OrliczPair(), levels: int = 51,
                     weight: float = 1.0) -> float:
    """Exhaustive search over t in {0, 1/(levels-1), ..., 1}^N; only for a handful of sites."""
    a = np.abs(np.asarray(values, dtype=float)).ravel()
    if a.size > 5:
        raise ValueError("brute force is limited to at most 5 sites")
    t = np.linspace(0.0, 1.0, levels)
    sp = np.zeros((1,))
    sq = np.zeros((1,))
    for ai in a:
        # accumulate the p- and q-power sums over the product grid
        sp = (sp[..., None] + (t * ai) ** pair.p).reshape(-1)
        sq = (sq[..., None] + ((1 - t) * ai) ** pair.q).reshape(-1)
    vals = (weight * sp) ** (1 / pair.p) + (weight * sq) ** (1 / pair.q)
    return float(vals.min())
