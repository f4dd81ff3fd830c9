"""The convex inner problem.

For a divergence-free equivariant ``u`` the map ``w -> F(u + grad w)`` is
strictly convex on zero-mean invariant scalars; ``phi`` returns its
minimizer.  ``phi_gamma`` minimizes the L^p + L^q norm of ``u + grad w``
instead, and ``c_tilde`` samples the sphere of a finite-dimensional subspace
to bound that norm from below.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg, optimize

from .bases import ReducedSpaces, reduced_spaces
from .fields import (
    OneForm,
    ScalarField,
    d_norm,
    divergence,
    gradient,
    leray,
    neg_laplacian_power,
    strip_null_modes,
)
from .nonlinearity import NonlinearityParams, f_eval, f_prime, f_second
from .orlicz import OrliczPair, lebesgue_norm, norm_exact
from .symmetry import symmetrize_oneform, symmetrize_scalar


@dataclass(frozen=True)
class InnerConfig:
    grad_tol: float = 1e-10
    max_iter: int = 200
    ls_shrink: float = 0.5
    ls_slope: float = 1e-4
    method: str = "newton"  # or "gd"
    cg_max_iter: int = 200

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not 0 < self.ls_shrink < 1:
            raise ValueError("ls_shrink must lie in (0, 1)")
        if not 0 < self.ls_slope < 0.5:
            raise ValueError("ls_slope must lie in (0, 0.5)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.method not in ("newton", "gd"):
            raise ValueError(f"unknown inner method {self.method!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> InnerConfig:
        return cls(**d)


@dataclass
class ConvergenceTrace:
    columns: tuple[str, ...] = ("iter", "objective", "grad_norm", "step")
    rows: list = field(default_factory=list)
    converged: bool = False

    def add(self, *row) -> None:
        self.rows.append(tuple(float(r) if i else int(r) for i, r in enumerate(row)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.columns)
        for r in self.rows:
            wr.writerow([r[0]] + [repr(float(x)) for x in r[1:]])
        return buf.getvalue()


# -- F and its derivatives ----------------------------------------------


def F_total(A: OneForm, params: NonlinearityParams) -> float:
    return float(np.sum(f_eval(params, A.sq_magnitude())) * A.grid.cell_volume)


def dF_field(A: OneForm, params: NonlinearityParams) -> OneForm:
    """Density 2 f'(|A|^2) A whose L2 pairing is the differential of F."""
    return OneForm(2.0 * f_prime(params, A.sq_magnitude()) * A.components, A.grid)


def reduced_gradient(u: OneForm, w: ScalarField, params: NonlinearityParams) -> ScalarField:
    """L2 gradient of ``w -> F(u + grad w)``, namely ``-div(2 f'(|v|^2) v)``."""
    v = u + gradient(w)
    return -divergence(dF_field(v, params))


def _hessian_apply(v: OneForm, z: ScalarField, params: NonlinearityParams) -> ScalarField:
    """``-div(2 f' grad z + 4 f'' (v . grad z) v)`` at ``v``."""
    s = v.sq_magnitude()
    gz = gradient(z).components
    vg = np.sum(v.components * gz, axis=0)
    flux = 2.0 * f_prime(params, s) * gz + 4.0 * f_second(params, s) * vg * v.components
    return -divergence(OneForm(flux, v.grid))


def _precondition(r: ScalarField) -> ScalarField:
    return neg_laplacian_power(r, -1.0)


def _project(w: ScalarField) -> ScalarField:
    return symmetrize_scalar(strip_null_modes(w))


def _pcg(v, g: ScalarField, params, tol: float, max_iter: int) -> tuple[ScalarField, int]:
    """Solve H d = -g by preconditioned conjugate gradients (truncated)."""
    grid = g.grid
    d = ScalarField.zeros(grid)
    r = -g
    zr = _precondition(r)
    pdir = zr
    rz = grid.inner(r.values, zr.values)
    r0 = r.norm()
    k = 0
    for k in range(1, max_iter + 1):
        Hp = _project(_hessian_apply(v, pdir, params))
        curv = grid.inner(pdir.values, Hp.values)
        if curv <= 0:
            if k == 1:
                d = zr
            break
        step = rz / curv
        d = d + step * pdir
        r = r - step * Hp
        if r.norm() <= tol * r0:
            break
        zr = _precondition(r)
        rz_new = grid.inner(r.values, zr.values)
        pdir = zr + (rz_new / rz) * pdir
        rz = rz_new
    return d, k


def form_hessian_apply(v: np.ndarray, Y: np.ndarray, params: NonlinearityParams) -> np.ndarray:
    """Apply the pointwise Hessian ``2 f' I + 4 f'' v v^T`` of ``xi -> f(|xi|^2)``.

    ``v`` has shape (n, N); ``Y`` has shape (n, N, k) and holds k fields.
    """
    s = np.sum(v * v, axis=0)
    vy = np.einsum("in,ink->nk", v, Y)
    return 2.0 * f_prime(params, s)[None, :, None] * Y + 4.0 * (f_second(params, s)[:, None] * vy)[None] * v[:, :, None]


def phi_coefficients(uvec: np.ndarray, spaces: ReducedSpaces, params: NonlinearityParams,
                     cfg: InnerConfig = InnerConfig(), c0: np.ndarray | None = None):
    """Damped Newton for ``min_c F(u + gradB c)`` with the exact dense Hessian.

    ``uvec`` is the flattened (n*N) one-form.  Returns the coefficients, the
    trace and the final Hessian (Euclidean, including the cell volume).
    """
    grid = spaces.grid
    n, N, vol = grid.n, grid.size, grid.cell_volume
    G = spaces.gradB
    c = np.zeros(spaces.kw) if c0 is None else np.array(c0, dtype=float)
    trace = ConvergenceTrace()

    def state(cc):
        v = (uvec + G @ cc).reshape(n, N)
        with np.errstate(over="ignore", invalid="ignore"):
            sq = np.sum(v * v, axis=0)
            val = float(np.sum(f_eval(params, sq)) * vol)
        return v, sq, val if np.isfinite(val) else np.inf

    u2 = uvec.reshape(n, N)
    scale = max(1.0, float(np.sqrt(vol * np.sum((2 * f_prime(params, np.sum(u2 * u2, axis=0)) * u2) ** 2))))
    tol = cfg.grad_tol * scale
    v, sq, fval = state(c)
    H, t = None, 0.0
    for it in range(cfg.max_iter + 1):
        flux = (2.0 * f_prime(params, sq) * v).ravel()
        g = vol * (G.T @ flux)
        gn = float(np.linalg.norm(g) / np.sqrt(vol))  # L2 norm of the projected reduced gradient
        trace.add(it, fval, gn, t)
        if cfg.method == "newton" or gn <= tol:
            Y = G.T.reshape(spaces.kw, n, N).transpose(1, 2, 0)
            MY = form_hessian_apply(v, Y, params)
            H = vol * (G.T @ MY.reshape(n * N, spaces.kw))
            H = 0.5 * (H + H.T)
        if gn <= tol:
            trace.converged = True
            break
        if it == cfg.max_iter:
            break
        if cfg.method == "newton":
            shift = 1e-14 * max(float(np.max(np.diag(H))), 1e-300)
            try:
                d = -linalg.solve(H + shift * np.eye(spaces.kw), g, assume_a="pos")
            except linalg.LinAlgError:
                d = -np.linalg.lstsq(H, g, rcond=1e-12)[0]
            if float(g @ d) >= 0:
                d = -g
        else:
            d = -g / max(float(np.linalg.norm(g)), 1e-300) * max(gn, 1e-300)
        slope = float(g @ d)
        t = 1.0
        while True:
            v_try, sq_try, f_try = state(c + t * d)
            if f_try <= fval + cfg.ls_slope * t * slope:
                break
            t *= cfg.ls_shrink
            if t < 1e-20:
                break
        if t < 1e-20 or f_try > fval:
            break  # no representable decrease left
        c = c + t * d
        v, sq, fval = v_try, sq_try, f_try
    return c, trace, H


def phi(u: OneForm, params: NonlinearityParams, cfg: InnerConfig = InnerConfig(),
        w0: ScalarField | None = None) -> tuple[ScalarField, ConvergenceTrace]:
    """Minimizer of ``F_u(w) = F(u + grad w)`` over zero-mean invariant w.

    Stops when the L2 norm of the projected reduced gradient falls below
    ``grad_tol * max(1, ||2 f'(|u|^2) u||_L2)``.  On grids small enough for
    dense reduced bases Newton runs with the exact Hessian; otherwise with
    preconditioned conjugate gradients.
    """
    grid = u.grid
    if cfg.method == "newton":
        try:
            spaces = reduced_spaces(grid)
        except ValueError:
            spaces = None
        if spaces is not None:
            c0 = None if w0 is None else spaces.B.T @ w0.values.ravel()
            c, trace, _ = phi_coefficients(u.components.ravel(), spaces, params, cfg, c0)
            return ScalarField((spaces.B @ c).reshape(grid.shape), grid), trace
    return _phi_matrix_free(u, params, cfg, w0)


def _phi_matrix_free(u: OneForm, params: NonlinearityParams, cfg: InnerConfig,
                     w0: ScalarField | None) -> tuple[ScalarField, ConvergenceTrace]:
    grid = u.grid
    w = _project(w0) if w0 is not None else ScalarField.zeros(grid)
    trace = ConvergenceTrace()
    scale = max(1.0, dF_field(u, params).norm())
    tol = cfg.grad_tol * scale

    def obj(wf: ScalarField) -> float:
        return F_total(u + gradient(wf), params)

    fval = obj(w)
    g = _project(reduced_gradient(u, w, params))
    gn = g.norm()
    g0 = max(gn, 1e-300)
    trace.add(0, fval, gn, 0.0)
    bb = None
    for it in range(1, cfg.max_iter + 1):
        if gn <= tol:
            trace.converged = True
            break
        v = u + gradient(w)
        if cfg.method == "newton":
            forcing = min(0.5, np.sqrt(gn / g0))
            d, _ = _pcg(v, g, params, forcing, cfg.cg_max_iter)
            t = 1.0
        else:
            d = -_precondition(g)
            t = 1.0 if bb is None else bb
        slope = grid.inner(g.values, d.values)
        if slope >= 0:
            d = -_precondition(g)
            slope = grid.inner(g.values, d.values)
        accepted = False
        while t > 1e-20:
            w_try = w + t * d
            f_try = obj(w_try)
            if f_try <= fval + cfg.ls_slope * t * slope:
                accepted = True
                break
            t *= cfg.ls_shrink
        if not accepted:
            break  # no representable decrease left
        w_new = _project(w_try)
        g_new = _project(reduced_gradient(u, w_new, params))
        if cfg.method == "gd":
            # Barzilai-Borwein step in the metric of the preconditioner
            s_vec = w_new - w
            sy = grid.inner(s_vec.values, (g_new - g).values)
            sMs = grid.inner(s_vec.values, neg_laplacian_power(s_vec, 1.0).values)
            bb = sMs / sy if sy > 0 else None
        w, g = w_new, g_new
        fval = obj(w)
        gn = g.norm()
        trace.add(it, fval, gn, t)
    else:
        trace.converged = gn <= tol
    if not trace.converged:
        trace.converged = gn <= tol
    return w, trace


def F_u(u: OneForm, w: ScalarField, params: NonlinearityParams) -> float:
    return F_total(u + gradient(w), params)


# -- norm minimization --------------------------------------------------


def norm_and_gradient(xi: OneForm, pair: OrliczPair = OrliczPair(),
                      log_kappa_hint: float | None = None):
    """L^p + L^q norm of ``xi``, its Euclidean gradient w.r.t. the site values,
    and the optimal ``log kappa``.

    By Danskin's rule the gradient is that of the part norm at the optimal
    split, taken from the q-part unless that part vanishes.
    """
    res = norm_exact(xi, pair, log_kappa_hint=log_kappa_hint)
    grid = xi.grid
    wgt = grid.cell_volume
    t = res.split.t.reshape(grid.shape)
    xi2 = (1 - t) * xi.components
    r, part = pair.q, xi2
    if lebesgue_norm(np.sqrt(np.sum(xi2**2, axis=0)).ravel(), wgt, pair.q) == 0.0:
        r, part = pair.p, t * xi.components
    mag = np.sqrt(np.sum(part**2, axis=0))
    nr = lebesgue_norm(mag.ravel(), wgt, r)
    if nr == 0.0:
        return res.value, np.zeros_like(part), res.log_kappa
    return res.value, wgt * (mag / nr) ** (r - 2) / nr * part, res.log_kappa


def dual_lower_bound(u: OneForm, g: np.ndarray, pair: OrliczPair = OrliczPair()) -> float:
    """Lower bound for ``min_w ||u + grad w||`` from a trial dual field.

    Any divergence-free invariant ``eta`` gives
    ``min_w ||u + grad w|| >= <u, eta> / max(||eta||_p', ||eta||_q')``;
    the trial is the projected norm gradient ``g`` (a Euclidean gradient, so
    it is divided by the cell volume first).
    """
    grid = u.grid
    eta = symmetrize_oneform(strip_null_modes(leray(OneForm(g / grid.cell_volume, grid))))
    mag = np.sqrt(eta.sq_magnitude()).ravel()
    den = max(lebesgue_norm(mag, grid.cell_volume, pair.p_dual),
              lebesgue_norm(mag, grid.cell_volume, pair.q_dual))
    if den == 0.0:
        return 0.0
    return max(u.dot(eta) / den, 0.0)


def phi_gamma(u: OneForm, gamma: float, pair: OrliczPair = OrliczPair(),
              cfg: InnerConfig = InnerConfig(), max_iter: int = 3000, ftol: float = 1e-15,
              rel_gap: float = 1e-6, chunk: int = 50) -> tuple[ScalarField, dict]:
    """Minimize ``||u + grad w||_{L^p+L^q}`` over zero-mean invariant ``w``.

    The power ``gamma`` leaves the minimizer unchanged and is only validated.
    L-BFGS runs on ``z`` with ``w = (-Delta)^(-1/2) z``, which makes the
    problem roughly isotropic.  ``info["lower"]`` is a dual lower bound on
    the minimum; ``converged`` means the duality gap is below ``rel_gap``.
    """
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    grid = u.grid
    start = norm_exact(u, pair).value
    if start == 0.0:
        return ScalarField.zeros(grid), {"value": 0.0, "lower": 0.0, "start_value": 0.0, "iterations": 0,
                                         "converged": True, "message": "zero field"}

    def w_of(x):
        return neg_laplacian_power(_project(ScalarField(x.reshape(grid.shape), grid)), -0.5)

    hint = [None]

    def fun(x):
        w = w_of(x)
        val, g, hint[0] = norm_and_gradient(u + gradient(w), pair, hint[0])
        gz = _project(neg_laplacian_power(-divergence(OneForm(g, grid)), -0.5))
        # rescale so the objective is O(1) for the line search tolerances
        return val / start, gz.values.ravel() / start

    x = np.zeros(grid.size)
    done, value, lower, nit, msg = 0, start, 0.0, 0, ""
    while done < max_iter:
        # restart in chunks so the duality gap can end the solve early
        res = optimize.minimize(fun, x, jac=True, method="L-BFGS-B",
                                options={"maxiter": min(chunk, max_iter - done), "gtol": 1e-14,
                                         "ftol": ftol})
        x, nit, msg = res.x, nit + int(res.nit), str(res.message)
        done += chunk
        w = _project(w_of(x))
        value, g, _ = norm_and_gradient(u + gradient(w), pair)
        lower = dual_lower_bound(u, g, pair)
        if value - lower <= rel_gap * value or res.nit == 0:
            break
    info = {"value": value, "lower": lower, "start_value": start, "iterations": nit,
            "converged": bool(value - lower <= rel_gap * value), "message": msg}
    return w, info


def c_tilde(basis: list[OneForm], gamma: float, pair: OrliczPair = OrliczPair(),
            cfg: InnerConfig = InnerConfig(), samples: int = 16,
            rng: np.random.Generator | None = None) -> tuple[float, OneForm]:
    """min over sampled ``||u||_D = 1`` in span(basis) of ``||u + grad phi_gamma(u)||^gamma``.

    Each sample contributes the dual lower bound of its minimum, so the result
    never overestimates the sampled minimum.
    """
    if not basis:
        raise ValueError("empty basis")
    rng = rng if rng is not None else np.random.default_rng(0)
    k = len(basis)
    coeffs = [np.eye(k)[i] for i in range(k)]
    if k > 1:
        coeffs += list(rng.standard_normal((samples, k)))
    best, best_u = np.inf, None
    for c in coeffs:
        u = sum((ci * b for ci, b in zip(c, basis)), OneForm.zeros(basis[0].grid))
        dn = d_norm(u)
        if dn == 0:
            continue
        u = u * (1.0 / dn)
        _, info = phi_gamma(u, gamma, pair, cfg)
        val = info["lower"] ** gamma
        if val < best:
            best, best_u = val, u
    if best_u is None:
        raise ValueError("basis spans only null directions")
    return float(best), best_u
