"""Certification suites run by ``smaxwell verify``.

Each suite returns a list of ``Check`` rows; a row with ``passed=None`` is a
reported measurement rather than a pass/fail check.  All randomness comes
from one ``numpy.random.Generator`` seeded by the caller.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import nonlinearity as nl
from .fields import (
    GridSpec,
    OneForm,
    ScalarField,
    curl_energy,
    d_norm,
    dirichlet_energy,
    divergence,
    exterior_derivative,
    gradient,
    hodge_split,
    laplace_beltrami_identity_check,
)
from .inner import InnerConfig, c_tilde
from .orlicz import (
    OrliczPair,
    brute_force_norm,
    dual_norm,
    lebesgue_norm,
    norm_bounds,
    norm_exact,
    omega_split_value,
)
from .outer import (
    OuterConfig,
    envelope_corrected,
    envelope_printed,
    find_far_point,
    grad_j_hat,
    j_hat,
    project_v,
)
from .seeds import SeedProfile, seed_form
from .symmetry import equivariance_residual, symmetrize_oneform, symmetrize_scalar

SUITES = ("nonlinearity", "orlicz", "calculus", "geometry")

# the bundled four-site example
FOUR_SITE = (1.5, 0.5, 2.0, 0.1)


@dataclass
class Check:
    suite: str
    name: str
    passed: bool | None
    value: float
    threshold: float
    detail: str = ""


def to_csv(checks: list[Check]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["suite", "check", "passed", "value", "threshold", "detail"])
    for c in checks:
        status = "report" if c.passed is None else ("pass" if c.passed else "FAIL")
        wr.writerow([c.suite, c.name, status, repr(float(c.value)), repr(float(c.threshold)), c.detail])
    return buf.getvalue()


def all_passed(checks: list[Check]) -> bool:
    return all(c.passed is not False for c in checks)


# -- nonlinearity ------------------------------------------------------------------


def suite_nonlinearity(rng: np.random.Generator, samples: int = 100_000,
                       params: nl.NonlinearityParams | None = None) -> list[Check]:
    P = params or nl.NonlinearityParams()
    S = "nonlinearity"
    out = []
    dv, ds = nl.knot_residuals(P)
    out.append(Check(S, "knot_value_residual", dv <= 1e-12, dv, 1e-12))
    out.append(Check(S, "knot_slope_residual", ds <= 1e-12, ds, 1e-12))
    s = np.union1d(nl.log_grid(1e-8, 1e8, 10_000), [0.0, 1.0])
    fmin = float(np.min(nl.f_prime(P, s)))
    out.append(Check(S, "f_prime_nonnegative", fmin >= 0, fmin, 0.0))
    c2 = nl.certify_f3(P, 10_000)
    out.append(Check(S, "c2_measured", None, c2, P.a * P.p / 2, "sup f'(t)/min(t^(p/2-1),t^(q/2-1))"))
    out.append(Check(S, "c2_attained_at_knot", abs(c2 - P.a * P.p / 2) <= 1e-12 * c2, c2, P.a * P.p / 2))
    g_lo, g_hi = nl.growth_constants(P)
    out.append(Check(S, "growth_lower_positive", g_lo > 0, g_lo, 0.0, "inf f(s)/min(s^(p/2),s^(q/2))"))
    out.append(Check(S, "growth_upper_c2prime", None, g_hi, 0.0, "sup f(s)/min(s^(p/2),s^(q/2))"))
    ok, margin = nl.certify_f4(P, P.alpha, P.R, 10_000)
    out.append(Check(S, "f4_alpha", ok, margin, 0.0, f"alpha={P.alpha} R={P.R} 1e4-point log grid"))
    for dim in (P.n, 1):
        rep = nl.certify_c1(P, max(samples, 100_000), 0.3, rng, n=dim)
        worst = min(rep.min_by_label, key=rep.min_by_label.get)
        out.append(Check(S, f"c1_measured_n{dim}", rep.ok, rep.c1, 0.0,
                         f"{rep.sample_count} pairs; negative gaps {rep.negative_count}; worst class {worst}"))
    for r in (P.p, P.q):
        c, u = nl.kantorovich_constant(r)
        out.append(Check(S, f"kantorovich_C2_r{r:g}", c > 0, c, 0.0, f"minimizer u={u!r}"))
    hs = [nl.knot_crossing_ratio(P, 1 + 1 / k, 1 - 1 / k) for k in (10, 100, 1000)]
    out.append(Check(S, "knot_crossing_growth", bool(hs[0] < hs[1] < hs[2]), hs[2], hs[1],
                     " < ".join(repr(h) for h in hs)))
    grid = np.linspace(0.0, 10.0, 41)
    bad = sum(not nl.superadditivity_check(P, x, y) for x in grid for y in grid)
    out.append(Check(S, "superadditivity_grid", bad == 0, bad, 0, "41x41 grid on [0,10]^2"))
    xi = rng.standard_normal((10_000, P.n)) * 10 ** rng.uniform(-2, 2, (10_000, 1))
    psi = rng.standard_normal((10_000, P.n)) * 10 ** rng.uniform(-2, 2, (10_000, 1))
    lam = rng.uniform(0.05, 0.95, 10_000)
    gmin = float(np.min(nl.strict_convexity_gap(P, xi, psi, lam)))
    out.append(Check(S, "strict_convexity", gmin > 0, gmin, 0.0, "10^4 random triples"))
    return out


# -- orlicz -------------------------------------------------------------------------


def random_four_site(rng: np.random.Generator, count: int) -> list[np.ndarray]:
    fields = [np.array(FOUR_SITE)]
    while len(fields) < count:
        fields.append(10 ** rng.uniform(-1.0, 0.7, 4))
    return fields


def random_lattice_fields(rng: np.random.Generator, count: int,
                          grid: GridSpec = GridSpec(2, 8, 2.0)) -> list[OneForm]:
    """Gaussian one-forms with a log-uniform amplitude in [0.1, 10]."""
    out = []
    for _ in range(count):
        amp = 10 ** rng.uniform(-1.0, 1.0)
        out.append(OneForm(amp * rng.standard_normal((grid.n,) + grid.shape), grid))
    return out


def suite_orlicz(rng: np.random.Generator, samples: int = 100, pair: OrliczPair = OrliczPair()) -> list[Check]:
    S = "orlicz"
    out = []
    worst = 0.0
    for a in random_four_site(rng, 10):
        worst = max(worst, abs(norm_exact(a, pair).value - brute_force_norm(a, pair)))
    out.append(Check(S, "brute_force_agreement", worst <= 1e-3, worst, 1e-3, "ten 4-site fields, 51 levels"))
    fields = random_lattice_fields(rng, samples)
    low_bad = up_bad = trivial_bad = 0
    worst_up, gap = 0.0, 0.0
    for xi in fields:
        res = norm_exact(xi, pair)
        lo, up = norm_bounds(xi, pair)
        a, w = np.sqrt(xi.sq_magnitude()).ravel(), xi.grid.cell_volume
        low_bad += res.value < lo * (1 - 1e-9)
        if res.value > up * (1 + 1e-9):
            up_bad += 1
            worst_up = max(worst_up, res.value / up - 1)
        trivial_bad += res.value > min(lebesgue_norm(a, w, pair.p), lebesgue_norm(a, w, pair.q)) * (1 + 1e-12)
        gap = max(gap, res.gap / max(res.value, 1e-300))
        trivial_bad += res.value > omega_split_value(xi, pair) * (1 + 1e-12)
    out.append(Check(S, "sandwich_lower", low_bad == 0, low_bad, 0, f"violations over {samples} fields"))
    out.append(Check(S, "sandwich_upper", up_bad == 0, up_bad, 0,
                     f"violations over {samples} fields; worst relative excess {worst_up!r}"))
    out.append(Check(S, "trivial_split_bound", trivial_bad == 0, trivial_bad, 0,
                     "norm <= min(L^p, L^q) and <= Omega-split cost"))
    out.append(Check(S, "dual_certificate_gap", gap <= 1e-6, gap, 1e-6, "relative primal-dual gap"))
    hb = 0
    for xi, eta in zip(fields[:20], fields[20:40]):
        lhs = abs(xi.dot(eta))
        hb += lhs > norm_exact(xi, pair).value * dual_norm(eta, pair) * (1 + 1e-9)
    out.append(Check(S, "holder_pairing", hb == 0, hb, 0, "20 random pairs"))
    tri = hom = 0
    for xi, eta in zip(fields[:20], fields[40:60]):
        nx, ne = norm_exact(xi, pair).value, norm_exact(eta, pair).value
        tri += norm_exact(xi + eta, pair).value > (nx + ne) * (1 + 1e-8)
        hom += abs(norm_exact(xi * 2.5, pair).value - 2.5 * nx) > 1e-8 * 2.5 * nx
    out.append(Check(S, "triangle_inequality", tri == 0, tri, 0, "20 random pairs"))
    out.append(Check(S, "homogeneity", hom == 0, hom, 0, "20 random fields"))
    return out


# -- calculus -------------------------------------------------------------------------


def suite_calculus(rng: np.random.Generator, samples: int = 20, grid: GridSpec = GridSpec()) -> list[Check]:
    S = "calculus"
    worst = dict.fromkeys(("dd", "adjoint", "hodge_reconstruction", "hodge_divergence", "laplace_beltrami",
                           "energy_identity", "symmetrize_idempotent", "invariant_gradient_equivariance"), 0.0)
    for _ in range(samples):
        A = OneForm(rng.standard_normal((grid.n,) + grid.shape), grid)
        w = ScalarField(rng.standard_normal(grid.shape), grid)
        gw = gradient(w)
        worst["dd"] = max(worst["dd"], exterior_derivative(gw).max_abs() / max(gw.norm(), 1e-300))
        lhs, rhs = gw.dot(A), -grid.inner(w.values, divergence(A).values)
        worst["adjoint"] = max(worst["adjoint"], abs(lhs - rhs) / (gw.norm() * A.norm()))
        u, phi_ = hodge_split(A)
        rec = (u + gradient(phi_) - A).norm() / A.norm()
        worst["hodge_reconstruction"] = max(worst["hodge_reconstruction"], rec)
        dv = float(np.max(np.abs(divergence(u).values))) / A.norm()
        worst["hodge_divergence"] = max(worst["hodge_divergence"], dv)
        worst["laplace_beltrami"] = max(worst["laplace_beltrami"], laplace_beltrami_identity_check(A))
        de = dirichlet_energy(A)
        div2 = divergence(A).norm() ** 2
        worst["energy_identity"] = max(worst["energy_identity"], abs(curl_energy(A) + div2 - de) / de)
        sA = symmetrize_oneform(A)
        worst["symmetrize_idempotent"] = max(worst["symmetrize_idempotent"],
                                             (symmetrize_oneform(sA) - sA).norm() / max(sA.norm(), 1e-300))
        worst["invariant_gradient_equivariance"] = max(worst["invariant_gradient_equivariance"],
                                                       equivariance_residual(gradient(symmetrize_scalar(w))))
    return [Check(S, k, v <= 1e-9, v, 1e-9, f"max over {samples} random fields") for k, v in worst.items()]


# -- geometry -------------------------------------------------------------------------


def envelope_scan(seed: OneForm, params: nl.NonlinearityParams, inner: InnerConfig, pair: OrliczPair,
                  k_range: tuple[int, int] = (-3, 34)) -> dict:
    """J_hat(t s) for t = 2^k (s the D-normalized seed) against both envelopes."""
    s = seed * (1.0 / d_norm(seed))
    ct_p, _ = c_tilde([s], pair.p, pair, inner)
    ct_q, _ = c_tilde([s], pair.q, pair, inner)
    g_lo, _ = nl.growth_constants(params)
    rows, w = [], None
    for k in range(k_range[0], k_range[1] + 1):
        t = 2.0**k
        j, w, _ = j_hat(s * t, params, inner, w)
        w = w * 2.0
        rows.append((t, j, float(envelope_printed(t, g_lo, ct_p, ct_q, pair.p, pair.q)),
                     float(envelope_corrected(t, g_lo, ct_p, ct_q, pair.p, pair.q))))
    return {"ct_p": ct_p, "ct_q": ct_q, "growth_c1": g_lo, "rows": rows}


def small_sphere(seed: OneForm, params: nl.NonlinearityParams, inner: InnerConfig, directions: list[OneForm],
                 far_t: float) -> tuple[float, float, float]:
    """Bisection for the first zero rho0 of J_hat along the seed ray, then
    (rho, min J_hat over the directions at rho = rho0 / 2, its direction index)."""
    s = seed * (1.0 / d_norm(seed))
    lo, hi = 0.0, far_t
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if j_hat(s * mid, params, inner)[0] > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-6 * hi:
            break
    rho = 0.5 * lo
    vals = [j_hat(d * (rho / d_norm(d)), params, inner)[0] for d in directions]
    i = int(np.argmin(vals))
    return rho, float(vals[i]), i


def random_v_directions(rng: np.random.Generator, count: int, grid: GridSpec) -> list[OneForm]:
    out = []
    while len(out) < count:
        d = project_v(OneForm(rng.standard_normal((grid.n,) + grid.shape), grid))
        if d_norm(d) > 0:
            out.append(d * (1.0 / d_norm(d)))
    return out


def gradient_check(rng: np.random.Generator, params: nl.NonlinearityParams, inner: InnerConfig,
                   grid: GridSpec, bases: int = 3, directions: int = 5, h: float = 1e-3) -> list[tuple]:
    """Rows (base, direction, analytic, central difference, relative error)."""
    pts = [b * float(rng.uniform(1.0, 10.0)) for b in random_v_directions(rng, bases, grid)]
    dirs = random_v_directions(rng, directions, grid)
    rows = []
    for i, b in enumerate(pts):
        _, w, _ = j_hat(b, params, inner)
        G = grad_j_hat(b, params, inner, w)
        for k, d in enumerate(dirs):
            an = G.dot(d)
            fd = (j_hat(b + d * h, params, inner, w)[0] - j_hat(b - d * h, params, inner, w)[0]) / (2 * h)
            rows.append((i, k, an, fd, abs(fd - an) / max(abs(an), abs(fd), 1e-300)))
    return rows


def suite_geometry(rng: np.random.Generator, samples: int = 20, grid: GridSpec = GridSpec(),
                   params: nl.NonlinearityParams | None = None, inner: InnerConfig = InnerConfig(),
                   pair: OrliczPair | None = None) -> list[Check]:
    S = "geometry"
    P = params or nl.NonlinearityParams(n=grid.n)
    pair = pair or OrliczPair(P.p, P.q)
    seed = seed_form(grid, SeedProfile(radius=0.875 * grid.L))
    out = []
    dirs = random_v_directions(rng, samples - 1, grid) + [seed * (1.0 / d_norm(seed))]
    even = max(abs(j_hat(d * 7.0, P, inner)[0] - j_hat(d * -7.0, P, inner)[0]) for d in dirs[:5])
    out.append(Check(S, "evenness", even <= 1e-10, even, 1e-10, "|J(u) - J(-u)| on 5 directions"))
    rows = gradient_check(rng, P, inner, grid)
    worst = max(r[4] for r in rows)
    out.append(Check(S, "gradient_check", worst <= 1e-4, worst, 1e-4,
                     f"{len(rows)} central differences, h=1e-3"))
    far = find_far_point(seed, P, inner, OuterConfig())
    out.append(Check(S, "far_point", far.j < 0 and far.t <= 2.0**60, far.t, 2.0**60,
                     f"J_hat(e)={far.j!r}; doublings {len(far.curve) - 1}"))
    rho, jmin, idx = small_sphere(seed, P, inner, dirs, far.t)
    out.append(Check(S, "small_sphere_positive", jmin > 0, jmin, 0.0,
                     f"rho={rho!r}; {len(dirs)} directions; worst index {idx}"))
    env = envelope_scan(seed, P, inner, pair)
    tol = 1e-12
    bad_c = [r for r in env["rows"] if r[1] > r[3] + tol * max(1.0, abs(r[3]))]
    bad_p = [r for r in env["rows"] if r[1] > r[2] + tol * max(1.0, abs(r[2]))]
    neg = [r[0] for r in env["rows"] if r[1] < 0]
    info = f"C_p={env['ct_p']!r} C_q={env['ct_q']!r} c1={env['growth_c1']!r}"
    out.append(Check(S, "ray_goes_negative", bool(neg), neg[0] if neg else math.inf, 2.0**60, info))
    out.append(Check(S, "envelope_corrected", not bad_c, len(bad_c), 0,
                     f"{len(env['rows'])} scan points; first t above envelope "
                     f"{bad_c[0][0] if bad_c else 'none'}"))
    out.append(Check(S, "envelope_printed", not bad_p, len(bad_p), 0,
                     f"{len(env['rows'])} scan points; first t above envelope "
                     f"{bad_p[0][0] if bad_p else 'none'}"))
    return out


def run_suite(name: str, rng_seed: int = 0, samples: int | None = None) -> list[Check]:
    if name not in SUITES:
        raise KeyError(name)
    rng = np.random.default_rng(rng_seed)
    fn = {"nonlinearity": suite_nonlinearity, "orlicz": suite_orlicz,
          "calculus": suite_calculus, "geometry": suite_geometry}[name]
    return fn(rng) if samples is None else fn(rng, samples)
