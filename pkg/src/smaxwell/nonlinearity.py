"""Two-branch power nonlinearity and numerical certificates for it.

In the squared form the argument is ``s = <A, A>``::

    f(s) = a s^(p/2) + b    s > 1
           c s^(q/2)        s <= 1

with ``a = c q / p`` and ``b = c - a`` so that f is C^1 at the knot.  The
un-squared form ``g(x) = f(x**2)`` (``a x^p + b`` / ``c x^q``) is what the
scalar inequalities are stated for; both are exposed.

The certificates measure constants by sampling.  Gaps are evaluated in
``np.longdouble`` because they are small differences of large numbers.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

LD = np.longdouble


def solve_coefficients(p: float, q: float, c: float = 1.0) -> tuple[float, float]:
    """Branch coefficients making f continuous and C^1 at s = 1."""
    if not p < q:
        raise ValueError(f"need p < q, got p={p}, q={q}")
    if c <= 0:
        raise ValueError(f"need c > 0, got c={c}")
    a = c * q / p
    return a, c - a


def critical_exponent(n: int) -> float:
    return np.inf if n == 2 else 2.0 * n / (n - 2)


@dataclass(frozen=True)
class NonlinearityParams:
    n: int = 4
    p: float = 3.0
    q: float = 6.0
    c: float = 1.0
    alpha: float = 3.0
    R: float = 0.1
    a: float = float("nan")
    b: float = float("nan")

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError(f"dimension must be even and >= 2, got {self.n}")
        if not 2 < self.p < self.q:
            raise ValueError(f"need 2 < p < q, got p={self.p}, q={self.q}")
        crit = critical_exponent(self.n)
        if not self.p < crit < self.q:
            raise ValueError(f"need p < 2n/(n-2) = {crit} < q")
        a, b = solve_coefficients(self.p, self.q, self.c)
        if np.isnan(self.a):
            object.__setattr__(self, "a", a)
        if np.isnan(self.b):
            object.__setattr__(self, "b", b)
        if abs(self.a + self.b - self.c) > 1e-12 or abs(self.a * self.p - self.c * self.q) > 1e-12:
            raise ValueError("coefficients violate a + b = c, a p = c q")
        if self.R < 0:
            raise ValueError("R must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> NonlinearityParams:
        keys = ("n", "p", "q", "c", "alpha", "R", "a", "b")
        kw = {k: d[k] for k in keys if k in d}
        if "n" in kw:
            kw["n"] = int(kw["n"])
        return cls(**kw)


def _check_nonneg(s):
    s = np.asarray(s)
    if np.any(s < 0):
        raise ValueError("squared-magnitude argument must be >= 0")
    return s


def f_eval(params: NonlinearityParams, s):
    s = _check_nonneg(s)
    hi = s > 1
    sl = np.where(hi, 1, s)
    sh = np.where(hi, s, 1)
    out = np.where(hi, params.a * sh ** (params.p / 2) + params.b, params.c * sl ** (params.q / 2))
    return out if out.ndim else out[()]


def f_prime(params: NonlinearityParams, s):
    s = _check_nonneg(s)
    hi = s > 1
    sl = np.where(hi, 1, s)
    sh = np.where(hi, s, 1)
    out = np.where(
        hi,
        params.a * params.p / 2 * sh ** (params.p / 2 - 1),
        params.c * params.q / 2 * sl ** (params.q / 2 - 1),
    )
    return out if out.ndim else out[()]


def f_second(params: NonlinearityParams, s):
    """f''(s); one-sided at the knot, where it jumps."""
    s = _check_nonneg(s)
    hi = s > 1
    sl = np.where(hi, 1, s)
    sh = np.where(hi, s, 1)
    p, q = params.p, params.q
    out = np.where(
        hi,
        params.a * p / 2 * (p / 2 - 1) * sh ** (p / 2 - 2),
        params.c * q / 2 * (q / 2 - 1) * sl ** (q / 2 - 2),
    )
    return out if out.ndim else out[()]


def g_eval(params: NonlinearityParams, x):
    """Un-squared form ``g(x) = a x^p + b`` (x > 1), ``c x^q`` (0 <= x <= 1)."""
    x = _check_nonneg(x)
    return f_eval(params, x * x)


def g_prime(params: NonlinearityParams, x):
    x = _check_nonneg(x)
    return 2 * x * f_prime(params, x * x)


def knot_residuals(params: NonlinearityParams) -> tuple[float, float]:
    """Branch mismatch of value and slope at the knot, from the formulas."""
    a, b, c, p, q = params.a, params.b, params.c, params.p, params.q
    return abs((a + b) - c), abs(a * p / 2 - c * q / 2)


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), count)


def certify_f3(params: NonlinearityParams, sample_count: int = 10_000,
               t_range: tuple[float, float] = (1e-6, 1e6)) -> float:
    """sup of f'(t) / min(t^(p/2-1), t^(q/2-1)) over a log grid (includes t=1)."""
    if sample_count < 1000:
        raise ValueError("sample_count must be >= 1000")
    t = np.union1d(log_grid(*t_range, sample_count), [1.0])
    t = t[(t >= t_range[0]) & (t <= t_range[1])]
    env = np.minimum(t ** (params.p / 2 - 1), t ** (params.q / 2 - 1))
    return float(np.max(f_prime(params, t) / env))


def growth_constants(params: NonlinearityParams, sample_count: int = 10_000,
                     s_range: tuple[float, float] = (1e-6, 1e6)) -> tuple[float, float]:
    """inf and sup of f(s) / min(s^(p/2), s^(q/2)); the sup is the constant c2'."""
    s = np.union1d(log_grid(*s_range, sample_count), [1.0])
    ratio = f_eval(params, s) / np.minimum(s ** (params.p / 2), s ** (params.q / 2))
    return float(ratio.min()), float(ratio.max())


def certify_f4(params: NonlinearityParams, alpha: float | None = None, R: float | None = None,
               sample_count: int = 10_000, t_max: float = 1e6) -> tuple[bool, float]:
    """Check (alpha/2) f(t) <= f'(t) t and f(t) > 0 on a log grid over [R, t_max]."""
    alpha = params.alpha if alpha is None else alpha
    R = params.R if R is None else R
    if alpha <= 2:
        raise ValueError("alpha must exceed 2")
    if R <= 0:
        raise ValueError("R must be positive")
    t = log_grid(R, max(t_max, 10 * R), sample_count).astype(LD)
    ft = f_eval(params, t)
    slack = f_prime(params, t) * t - LD(alpha) / 2 * ft
    ok = bool(np.all(slack >= 0) and np.all(ft > 0))
    return ok, float(slack.min())


def convexity_gap(params: NonlinearityParams, x, y):
    """gap = f(|x|^2) - f(|y|^2) - 2 f'(|y|^2) (y | x - y), bound = min(|x-y|^p, |x-y|^q).

    ``x`` and ``y`` may be single points or stacks of shape ``(..., n)``.
    """
    x = np.asarray(x, dtype=LD)
    y = np.asarray(y, dtype=LD)
    sx = np.sum(x * x, axis=-1)
    sy = np.sum(y * y, axis=-1)
    d = x - y
    gap = f_eval(params, sx) - f_eval(params, sy) - 2 * f_prime(params, sy) * np.sum(y * d, axis=-1)
    r = np.sqrt(np.sum(d * d, axis=-1))
    bound = np.minimum(r ** LD(params.p), r ** LD(params.q))
    return gap, bound


def _unit(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _logmag(rng: np.random.Generator, count: int, lo=1e-4, hi=1e4) -> np.ndarray:
    return 10.0 ** rng.uniform(np.log10(lo), np.log10(hi), count)


def sample_pairs(rng: np.random.Generator, n: int, count: int,
                 near_knot_fraction: float = 0.3) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Structured (x, y) pairs in R^n and an integer label per pair.

    Labels: 0 generic, 1 near the knot, 2 collinear (three magnitude regimes),
    3 antipodal, 4 y plus an orthogonal increment, 5 one endpoint at 0.
    """
    if not 0.0 <= near_knot_fraction <= 1.0:
        raise ValueError("near_knot_fraction must lie in [0, 1]")
    n_knot = int(round(count * near_knot_fraction))
    rest = count - n_knot
    sizes = [rest - 4 * (rest // 5)] + [rest // 5] * 4
    xs, ys, labels = [], [], []

    k = sizes[0]
    xs.append(_unit(rng, k, n) * _logmag(rng, k)[:, None])
    ys.append(_unit(rng, k, n) * _logmag(rng, k)[:, None])
    labels.append(np.zeros(k, int))

    k = n_knot
    eps_x = 10.0 ** rng.uniform(-6, -0.5, k) * rng.choice([-1, 1], k)
    eps_y = 10.0 ** rng.uniform(-6, -0.5, k) * rng.choice([-1, 1], k)
    dx = _unit(rng, k, n)
    same = rng.random(k) < 0.5
    dy = np.where(same[:, None], dx, _unit(rng, k, n))
    xs.append(dx * (1 + eps_x)[:, None])
    ys.append(dy * (1 + eps_y)[:, None])
    labels.append(np.ones(k, int))

    k = sizes[1]
    # regimes: y <= 1 < x, both > 1, both <= 1 (and their mirror images)
    regime = rng.integers(0, 3, k)
    lo_ = np.where(regime == 1, 1.0, 1e-4)
    hi_ = np.where(regime == 2, 1.0, 1e4)
    mx = 10.0 ** rng.uniform(np.log10(np.where(regime == 0, 1.0, lo_)), np.log10(hi_))
    my = 10.0 ** rng.uniform(np.log10(lo_), np.log10(np.where(regime == 0, 1.0, hi_)))
    swap = rng.random(k) < 0.5
    mx, my = np.where(swap, my, mx), np.where(swap, mx, my)
    d = _unit(rng, k, n)
    xs.append(d * mx[:, None])
    ys.append(d * my[:, None])
    labels.append(np.full(k, 2))

    k = sizes[2]
    d = _unit(rng, k, n)
    ys.append(d * _logmag(rng, k)[:, None])
    xs.append(-d * _logmag(rng, k)[:, None])
    labels.append(np.full(k, 3))

    k = sizes[3]
    yk = _unit(rng, k, n) * _logmag(rng, k)[:, None]
    z = rng.standard_normal((k, n))
    yhat = yk / np.linalg.norm(yk, axis=1, keepdims=True)
    z -= np.sum(z * yhat, axis=1, keepdims=True) * yhat
    if n > 1:
        z /= np.linalg.norm(z, axis=1, keepdims=True)
    xs.append(yk + z * _logmag(rng, k)[:, None])
    ys.append(yk)
    labels.append(np.full(k, 4))

    k = sizes[4]
    v = _unit(rng, k, n) * _logmag(rng, k)[:, None]
    zero_x = rng.random(k) < 0.5
    xs.append(np.where(zero_x[:, None], 0.0, v))
    ys.append(np.where(zero_x[:, None], v, 0.0))
    labels.append(np.full(k, 5))

    return np.concatenate(xs), np.concatenate(ys), np.concatenate(labels)


@dataclass
class C1Report:
    c1: float
    worst_x: np.ndarray
    worst_y: np.ndarray
    negative_count: int
    sample_count: int
    min_by_label: dict

    @property
    def ok(self) -> bool:
        return self.negative_count == 0 and self.c1 > 0


def certify_c1(params: NonlinearityParams, sample_count: int = 100_000,
               near_knot_fraction: float = 0.3, rng: np.random.Generator | None = None,
               n: int | None = None) -> C1Report:
    """Infimum of gap / bound over structured samples.

    ``n=1`` exercises the even extension of the scalar inequality, the
    default (``params.n``) the radial extension.
    """
    if sample_count < 100_000:
        raise ValueError("sample_count must be >= 1e5")
    rng = rng if rng is not None else np.random.default_rng(0)
    dim = params.n if n is None else n
    x, y, labels = sample_pairs(rng, dim, sample_count, near_knot_fraction)
    gap, bound = convexity_gap(params, x, y)
    keep = bound > 0
    ratio = np.full(gap.shape, np.inf, dtype=LD)
    ratio[keep] = gap[keep] / bound[keep]
    i = int(np.argmin(ratio))
    per = {int(l): float(ratio[labels == l].min()) for l in np.unique(labels)}
    return C1Report(float(ratio[i]), x[i], y[i], int(np.sum(gap < 0)), len(gap), per)


def _kantorovich_ratio(u, r):
    u = np.asarray(u, dtype=LD)
    return (np.abs(1 + u) ** LD(r) - 1 - LD(r) * u) / np.abs(u) ** LD(r)


def kantorovich_constant(r: float, u_max: float = 1e6) -> tuple[float, float]:
    """inf over u != 0 of (|1+u|^r - 1 - r u) / |u|^r, with its minimizer."""
    if r <= 2:
        raise ValueError("exponent must exceed 2")
    # the ratio blows up at u=0 so a symmetric log-spaced scan brackets the minimum
    mags = np.logspace(-4, np.log10(u_max), 20001)
    u = np.concatenate([-mags[::-1], mags])
    vals = _kantorovich_ratio(u, r)
    k = int(np.argmin(vals))
    lo, hi = u[max(k - 1, 0)], u[min(k + 1, len(u) - 1)]
    res = optimize.minimize_scalar(lambda t: float(_kantorovich_ratio(t, r)),
                                   bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    best_u, best = (res.x, res.fun) if res.fun < vals[k] else (u[k], float(vals[k]))
    return float(best), float(best_u)


def knot_crossing_ratio(params: NonlinearityParams, x: float, y: float) -> float:
    """h(x, y) = (g(x) - g(y) - g'(y)(x - y)) / |x - y|^q for x > 1 >= y > 0."""
    if not (x > 1 and 0 < y <= 1):
        raise ValueError("need x > 1 and 0 < y <= 1")
    xl, yl = LD(x), LD(y)
    num = g_eval(params, xl) - g_eval(params, yl) - g_prime(params, yl) * (xl - yl)
    return float(num / abs(xl - yl) ** LD(params.q))


def superadditivity_check(params: NonlinearityParams, a_val: float, b_val: float) -> bool:
    """g(sqrt(a+b)) >= g(sqrt(a)) + g(sqrt(b)) within -1e-12 slack."""
    if a_val < 0 or b_val < 0:
        raise ValueError("arguments must be nonnegative")
    lhs = g_eval(params, np.sqrt(LD(a_val) + LD(b_val)))
    rhs = g_eval(params, np.sqrt(LD(a_val))) + g_eval(params, np.sqrt(LD(b_val)))
    return bool(lhs - rhs >= -1e-12)


def strict_convexity_gap(params: NonlinearityParams, xi, psi, lam: float):
    """lam f(|xi|^2) + (1-lam) f(|psi|^2) - f(|lam xi + (1-lam) psi|^2)."""
    xi = np.asarray(xi, dtype=LD)
    psi = np.asarray(psi, dtype=LD)
    lam = np.asarray(lam, dtype=LD)
    mid = lam[..., None] * xi + (1 - lam[..., None]) * psi
    return (lam * f_eval(params, np.sum(xi * xi, -1)) + (1 - lam) * f_eval(params, np.sum(psi * psi, -1))
            - f_eval(params, np.sum(mid * mid, -1)))
