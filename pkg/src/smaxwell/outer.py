"""The reduced functional on V and the mountain-pass search.

``J_hat(u) = 1/2 ||u||_D^2 - 1/2 F(u + grad phi(u))`` on divergence-free
equivariant ``u``.  By the envelope property its differential needs no
derivative of ``phi``:

    DJ_hat(u)[ub] = <grad u, grad ub> - <f'(|v|^2) v, ub>,   v = u + grad phi(u).

Two views are provided.  The field view (``j_hat``, ``grad_j_hat``) works
on any grid.  ``ReducedProblem`` works in coordinates of the orthonormal
basis of V; it adds the exact Hessian, which the mountain-pass search uses
for a final Newton polish once the path deformation has brought the path
maximizer close to a critical point.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from .bases import ReducedSpaces, reduced_spaces
from .fields import (
    GridSpec,
    OneForm,
    ScalarField,
    d_norm,
    dirichlet_energy,
    div_residual,
    exterior_derivative,
    gradient,
    laplacian,
    leray,
    strip_null_modes,
)
from .inner import (
    ConvergenceTrace,
    F_total,
    InnerConfig,
    form_hessian_apply,
    phi,
    phi_coefficients,
)
from .nonlinearity import NonlinearityParams, f_eval, f_prime
from .seeds import bump
from .symmetry import equivariance_residual, symmetrize_oneform

log = logging.getLogger(__name__)

# thresholds every reported solution must meet
DIV_TOL = 1e-8
EQUIV_TOL = 1e-10
WEAK_TOL = 1e-3
NONTRIVIAL_FRACTION = 0.1


@dataclass(frozen=True)
class OuterConfig:
    path_points: int = 16
    deform_steps: int = 3
    mp_tol: float = 1e-4  # relative to ||u||_D
    ray_scale: float = 2.0
    max_sweeps: int = 200
    polish_tol: float = 1e-1  # relative gradient at which Newton polishing starts
    polish_max_iter: int = 25

    def __post_init__(self):
        if self.path_points < 8:
            raise ValueError("path_points must be >= 8")
        if not self.mp_tol > 0:
            raise ValueError("mp_tol must be positive")
        if not self.ray_scale > 1:
            raise ValueError("ray_scale must exceed 1")
        if self.max_sweeps < 1 or self.deform_steps < 1:
            raise ValueError("max_sweeps and deform_steps must be >= 1")
        if not self.polish_tol > 0 or self.polish_max_iter < 0:
            raise ValueError("polish_tol must be positive and polish_max_iter >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> OuterConfig:
        return cls(**d)


# -- field view -------------------------------------------------------------


def project_v(A: OneForm) -> OneForm:
    """Orthogonal projection onto the discrete V."""
    return symmetrize_oneform(strip_null_modes(leray(A)))


def j_hat(u: OneForm, params: NonlinearityParams, cfg: InnerConfig = InnerConfig(),
          w0: ScalarField | None = None) -> tuple[float, ScalarField, ConvergenceTrace]:
    """(J_hat(u), phi(u), inner trace)."""
    w, tr = phi(u, params, cfg, w0)
    return 0.5 * dirichlet_energy(u) - 0.5 * F_total(u + gradient(w), params), w, tr


def grad_j_hat(u: OneForm, params: NonlinearityParams, cfg: InnerConfig = InnerConfig(),
               w: ScalarField | None = None) -> OneForm:
    """L2 representative of DJ_hat(u), projected onto V.

    ``w`` may be passed when ``phi(u)`` is already known.
    """
    if w is None:
        w, _ = phi(u, params, cfg)
    v = u + gradient(w)
    nl = OneForm(f_prime(params, v.sq_magnitude()) * v.components, u.grid)
    return project_v(-laplacian(u) - nl)


# -- coefficient view ----------------------------------------------------------


@dataclass
class NodeState:
    a: np.ndarray  # coordinates of u in the V basis
    c: np.ndarray  # coordinates of phi(u) in the scalar basis
    j: float
    g: np.ndarray  # Euclidean gradient of J_hat with respect to a
    inner_converged: bool


class ReducedProblem:
    """J_hat in coordinates ``u = U a``, ``phi(u) = B c``."""

    def __init__(self, grid: GridSpec, params: NonlinearityParams, inner: InnerConfig = InnerConfig()):
        self.grid = grid
        self.params = params
        self.inner = inner
        self.spaces: ReducedSpaces = reduced_spaces(grid)
        self.vol = grid.cell_volume
        self._K = linalg.cho_factor(self.spaces.K)
        self.evaluations = 0

    # geometry in the D inner product
    def coords(self, u: OneForm) -> np.ndarray:
        return self.spaces.U.T @ u.components.ravel()

    def field(self, a: np.ndarray) -> OneForm:
        return OneForm((self.spaces.U @ a).reshape((self.grid.n,) + self.grid.shape), self.grid)

    def scalar(self, c: np.ndarray) -> ScalarField:
        return ScalarField((self.spaces.B @ c).reshape(self.grid.shape), self.grid)

    def d_inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(self.vol * a @ (self.spaces.K @ b))

    def d_norm(self, a: np.ndarray) -> float:
        return math.sqrt(max(self.d_inner(a, a), 0.0))

    def riesz(self, g: np.ndarray) -> np.ndarray:
        """D-gradient: the r with <r, b>_D = g . b for all b."""
        return linalg.cho_solve(self._K, g) / self.vol

    def dual_norm(self, g: np.ndarray) -> float:
        return math.sqrt(max(float(g @ self.riesz(g)), 0.0))

    def evaluate(self, a: np.ndarray, c0: np.ndarray | None = None) -> NodeState:
        sp, n, N = self.spaces, self.grid.n, self.grid.size
        uvec = sp.U @ a
        c, tr, _ = phi_coefficients(uvec, sp, self.params, self.inner, c0)
        self.evaluations += 1
        v = (uvec + sp.gradB @ c).reshape(n, N)
        s = np.sum(v * v, axis=0)
        F = float(np.sum(f_eval(self.params, s)) * self.vol)
        Ka = sp.K @ a
        j = 0.5 * self.vol * float(a @ Ka) - 0.5 * F
        g = self.vol * (Ka - sp.U.T @ (f_prime(self.params, s) * v).ravel())
        return NodeState(np.array(a, dtype=float), c, j, g, tr.converged)

    def hessian(self, st: NodeState) -> tuple[np.ndarray, np.ndarray]:
        """Exact Hessian of J_hat in a, and dc/da (sensitivity of phi).

        With Q = [U, gradB] and A = vol Q^T M Q (M the pointwise Hessian of
        xi -> f(|xi|^2)), the Schur complement A_aa - A_ac A_cc^-1 A_ca is
        the Hessian of a -> F(U a + gradB c(a)).
        """
        sp, n, N = self.spaces, self.grid.n, self.grid.size
        kv = sp.kv
        v = (sp.U @ st.a + sp.gradB @ st.c).reshape(n, N)
        Q = np.hstack([sp.U, sp.gradB])
        MQ = form_hessian_apply(v, Q.reshape(n, N, -1), self.params).reshape(n * N, -1)
        A = self.vol * (Q.T @ MQ)
        A = 0.5 * (A + A.T)
        Aaa, Aac, Acc = A[:kv, :kv], A[:kv, kv:], A[kv:, kv:]
        dc = -np.linalg.lstsq(Acc, Aac.T, rcond=1e-13)[0]
        H = self.vol * sp.K - 0.5 * (Aaa + Aac @ dc)
        return 0.5 * (H + H.T), dc

    def morse_index(self, H: np.ndarray, rtol: float = 1e-9) -> int:
        """Number of negative eigenvalues of H relative to the D metric."""
        ev = linalg.eigh(H, self.vol * self.spaces.K, eigvals_only=True)
        return int(np.sum(ev < -rtol * np.max(np.abs(ev))))


def block_swap(A: OneForm) -> OneForm:
    """Exchange the first two coordinate blocks (a symmetry of J_hat that normalizes the group)."""
    n = A.grid.n
    if n < 4:
        raise ValueError("block swap needs n >= 4")
    perm = [2, 3, 0, 1] + list(range(4, n))
    comps = A.components[perm]
    return OneForm(np.transpose(comps, [0] + [1 + p for p in perm]), A.grid)


def _swap_matrix(prob: ReducedProblem) -> np.ndarray:
    U = prob.spaces.U
    n, shape = prob.grid.n, prob.grid.shape
    perm = [2, 3, 0, 1] + list(range(4, n))
    cols = U.reshape((n,) + shape + (U.shape[1],))[perm]
    cols = np.transpose(cols, [0] + [1 + p for p in perm] + [n + 1])
    return U.T @ cols.reshape(U.shape)


def seed_parity(prob: ReducedProblem, a: np.ndarray, tol: float = 1e-10) -> int:
    """+1 / -1 when the seed is even / odd under the block swap, else 0."""
    if prob.grid.n < 4:
        return 0
    S = _swap_matrix(prob)
    sa, na = S @ a, np.linalg.norm(a)
    if np.linalg.norm(sa - a) <= tol * na:
        return 1
    if np.linalg.norm(sa + a) <= tol * na:
        return -1
    return 0


# -- far point and envelopes -----------------------------------------------


@dataclass
class FarPoint:
    e: OneForm  # far endpoint, J_hat(e) < 0
    w: ScalarField  # phi(e)
    t: float  # e = t * direction / ||direction||_D
    j: float
    curve: list  # (t, J_hat) samples of the scan


def find_far_point(direction: OneForm, params: NonlinearityParams, inner: InnerConfig = InnerConfig(),
                   cfg: OuterConfig = OuterConfig(), t0: float = 1.0,
                   max_doublings: int = 60) -> FarPoint:
    """Grow ``t`` geometrically (factor ``ray_scale``) until J_hat(t d) < 0.

    ``d`` is ``direction`` normalized in the D norm.
    """
    dn = d_norm(direction)
    if dn == 0.0:
        raise ValueError("direction must be a nonzero element of V")
    d = direction * (1.0 / dn)
    t, w, curve = t0, None, []
    for _ in range(max_doublings + 1):
        j, w, _ = j_hat(d * t, params, inner, w)
        curve.append((t, j))
        if j < 0:
            return FarPoint(d * t, w, t, j, curve)
        # phi is close to positively homogeneous at large amplitude
        w = w * cfg.ray_scale
        t *= cfg.ray_scale
    raise RuntimeError(
        f"J_hat stayed nonnegative along the ray up to t={t / cfg.ray_scale:.3g} "
        f"(last value {curve[-1][1]:.6g}); the nonlinearity is probably mis-scaled"
    )


def envelope_printed(t, growth_c1: float, ct_p: float, ct_q: float, pair_p: float, pair_q: float):
    """Claimed upper envelope for J_hat(u) with ||u||_D = t.

    It has no factor 1/2 on F and assumes ||xi|| <= max(X, Y) for the Omega
    split, which fails in general; ``suite_geometry`` measures it anyway.
    """
    t = np.asarray(t, dtype=float)
    return 0.5 * t**2 - growth_c1 * min(ct_p, ct_q) * np.minimum(t**pair_p, t**pair_q)


def envelope_corrected(t, growth_c1: float, ct_p: float, ct_q: float, pair_p: float, pair_q: float):
    """Envelope that uses only valid estimates.

    F(xi) >= c1 (X^p + Y^q) with X, Y the L^p(Omega), L^q(Omega^c) norms, and
    ||xi|| <= X + Y, so max(X, Y) >= ||xi|| / 2 and
    F(xi) >= c1 2^-q min(||xi||^p, ||xi||^q).  J_hat carries the factor 1/2.
    """
    t = np.asarray(t, dtype=float)
    return 0.5 * t**2 - 0.5 * growth_c1 * 2.0**-pair_q * min(ct_p, ct_q) * np.minimum(t**pair_p, t**pair_q)


# -- certificates ------------------------------------------------------------


def residual_battery(grid: GridSpec, radius_fraction: float = 0.8, max_wave: int = 1) -> list[OneForm]:
    """Equivariant compactly supported test forms over low Fourier modes.

    Each form is ``bump(|x|/R) cos(k.x) e_j`` (and the ``x_j`` weighted
    variant), symmetrized and stripped of the modes without Dirichlet
    energy, then normalized in the D norm.  Duplicates are dropped.
    """
    x = grid.coords()
    R = radius_fraction * grid.L
    beta = bump(np.sqrt(sum(xi**2 for xi in x)) / R)
    waves = [np.zeros(grid.n)]
    for kk in range(1, max_wave + 1):
        for i in range(grid.n):
            k = np.zeros(grid.n)
            k[i] = kk * np.pi / grid.L
            waves.append(k)
    out: list[OneForm] = []
    for k in waves:
        phase = np.cos(sum(ki * xi for ki, xi in zip(k, x)))
        for j in range(grid.n):
            for weight in (1.0, x[j]):
                comps = np.zeros((grid.n,) + grid.shape)
                comps[j] = beta * phase * weight
                phi_ = symmetrize_oneform(strip_null_modes(OneForm(comps, grid)))
                dn = d_norm(phi_)
                if dn < 1e-12:
                    continue
                phi_ = phi_ * (1.0 / dn)
                if all(abs(abs(phi_.dot(o)) - phi_.dot(phi_)) > 1e-9 * phi_.dot(phi_) for o in out):
                    out.append(phi_)
    return out


def weak_residual(A: OneForm, battery: list[OneForm], params: NonlinearityParams) -> float:
    """max over the battery of |int <dA, d phi> - int f'(|A|^2)(A|phi)| / (||phi||_D (1 + ||A||_D))."""
    dA = exterior_derivative(A)
    fp = f_prime(params, A.sq_magnitude())
    nl = OneForm(fp * A.components, A.grid)
    scale = 1.0 + d_norm(A)
    worst = 0.0
    for phi_ in battery:
        dn = d_norm(phi_)
        if dn == 0.0:
            continue
        r = dA.dot(exterior_derivative(phi_)) - nl.dot(phi_)
        worst = max(worst, abs(r) / (dn * scale))
    return worst


def nontriviality_check(u: OneForm, w: ScalarField) -> float:
    """||u + grad w||_L2."""
    return (u + gradient(w)).norm()


def nontriviality_mechanism(u: OneForm, w: ScalarField) -> dict:
    """L2 orthogonality of u (divergence-free) and grad w, which makes
    ||u + grad w||^2 = ||u||^2 + ||grad w||^2, so a vanishing sum forces both to vanish."""
    gw = gradient(w)
    nu, ng = u.norm(), gw.norm()
    cross = abs(u.dot(gw))
    total = (u + gw).norm()
    return {
        "orthogonality": cross / (nu * ng) if nu * ng > 0 else 0.0,
        "pythagoras_residual": abs(total**2 - nu**2 - ng**2) / max(total**2, 1e-300),
        "u_l2": nu,
        "grad_w_l2": ng,
        "sum_l2": total,
    }


@dataclass
class PSRecord:
    u: OneForm
    w: ScalarField
    j: float
    grad_norm: float  # dual D norm of DJ_hat(u)


def ps_diagnostic(records: list[PSRecord], params: NonlinearityParams, rtol: float = 1e-9) -> dict:
    """Check the boundedness estimate behind the Palais-Smale argument.

    With M = max_k J_k and eps_k the recorded gradient norm,
    (alpha/2 - 1) ||u_k||^2 + int [f'(|v_k|^2)|v_k|^2 - (alpha/2) f(|v_k|^2)] <= alpha M + eps_k ||u_k||,
    and since the integral is nonnegative (f_4 on the whole range) the
    norm is bounded by the positive root of
    (alpha/2 - 1) x^2 - eps_k x - alpha M.
    """
    if not records:
        return {"rows": [], "violations": 0, "M": None, "alpha": params.alpha}
    al = params.alpha
    kappa = al / 2 - 1
    M = max(r.j for r in records)
    rows, bad = [], 0
    for k, r in enumerate(records):
        v = r.u + gradient(r.w)
        s = v.sq_magnitude()
        integral = float(np.sum(f_prime(params, s) * s - 0.5 * al * f_eval(params, s)) * v.grid.cell_volume)
        x = d_norm(r.u)
        lhs = kappa * x**2 + integral
        rhs = al * M + r.grad_norm * x
        bound = (r.grad_norm + math.sqrt(r.grad_norm**2 + 4 * kappa * al * max(M, 0.0))) / (2 * kappa)
        tol = rtol * max(1.0, abs(rhs), abs(lhs))
        violated = bool(lhs > rhs + tol or x > bound * (1 + rtol) + rtol)
        bad += violated
        rows.append({"k": k, "lhs": lhs, "rhs": rhs, "norm": x, "norm_bound": bound, "violated": violated})
    return {"rows": rows, "violations": bad, "M": M, "alpha": al}


# -- mountain pass -------------------------------------------------------------


@dataclass
class SolutionReport:
    u: OneForm
    w: ScalarField
    j_value: float
    grad_norm: float
    weak_residual: float
    nontriviality: float
    equivariance_residual: float
    div_residual: float
    scale: float  # ||u||_D
    u_l2: float
    converged: bool
    sweeps: int
    morse_index: int
    parity: int
    path_max_history: list
    ps: dict
    trace: ConvergenceTrace
    evaluations: int = 0
    flags: list = field(default_factory=list)
    mp_tol: float = 1e-4

    def check(self) -> list[str]:
        flags = []
        if not self.converged:
            flags.append("not_converged")
        if not self.grad_norm <= self.mp_tol * self.scale:
            flags.append("grad_norm")
        if not self.weak_residual <= WEAK_TOL:
            flags.append("weak_residual")
        if not self.div_residual <= DIV_TOL:
            flags.append("div_residual")
        if not self.equivariance_residual <= EQUIV_TOL:
            flags.append("equivariance_residual")
        if not self.j_value > 0:
            flags.append("j_value")
        if not self.nontriviality > NONTRIVIAL_FRACTION * self.u_l2:
            flags.append("nontriviality")
        if self.ps.get("violations", 0):
            flags.append("palais_smale")
        self.flags = flags
        return flags

    @property
    def ok(self) -> bool:
        return not self.check()

    def to_dict(self) -> dict:
        ps = dict(self.ps)
        return {
            "j_value": self.j_value,
            "grad_norm": self.grad_norm,
            "grad_norm_relative": self.grad_norm / self.scale if self.scale else 0.0,
            "mp_tol": self.mp_tol,
            "weak_residual": self.weak_residual,
            "nontriviality": self.nontriviality,
            "u_l2": self.u_l2,
            "u_d_norm": self.scale,
            "equivariance_residual": self.equivariance_residual,
            "div_residual": self.div_residual,
            "converged": self.converged,
            "sweeps": self.sweeps,
            "inner_solves": self.evaluations,
            "morse_index": self.morse_index,
            "parity": self.parity,
            "path_max_history": list(self.path_max_history),
            "palais_smale": {"violations": ps.get("violations", 0), "M": ps.get("M"),
                             "alpha": ps.get("alpha"), "rows": ps.get("rows", [])},
            "flags": self.check(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _hermite_max(j0: float, j1: float, d0: float, d1: float) -> tuple[float, float]:
    """Maximizer in [0, 1] of the cubic with values j0, j1 and slopes d0, d1 at the ends."""
    # p(s) = j0 + d0 s + b s^2 + e s^3
    b = 3 * (j1 - j0) - 2 * d0 - d1
    e = 2 * (j0 - j1) + d0 + d1
    cands = [0.0, 1.0]
    roots = np.roots([3 * e, 2 * b, d0]) if abs(e) + abs(b) > 0 else []
    cands += [float(r.real) for r in roots if abs(r.imag) < 1e-12 and 0 < r.real < 1]
    vals = [j0 + d0 * s + b * s * s + e * s**3 for s in cands]
    i = int(np.argmax(vals))
    return cands[i], vals[i]


def _refine_max(prob: ReducedProblem, nodes: list[NodeState], k: int, project,
                rounds: int = 2) -> NodeState:
    """Move node k toward the maximum of J_hat on the polyline through k-1, k, k+1.

    The profile along each adjacent segment is modeled by the cubic Hermite
    interpolant of the end values and directional derivatives; the predicted
    maximizer is evaluated and kept if it beats the current node.
    """
    best = nodes[k]
    for _ in range(rounds):
        trial = None
        for other in (nodes[k - 1], nodes[k + 1]):
            dirn = other.a - best.a
            s, pred = _hermite_max(best.j, other.j, float(best.g @ dirn), float(other.g @ dirn))
            if 0 < s < 1 and (trial is None or pred > trial[0]):
                trial = (pred, s, other)
        if trial is None:
            break
        _, s, other = trial
        st = prob.evaluate(project((1 - s) * best.a + s * other.a), (1 - s) * best.c + s * other.c)
        if not st.j > best.j:
            break
        best = st
    return best


def _perp_newton(prob, st: NodeState, tangent: np.ndarray, project, max_move: float = 0.25,
                 floor: float = 1e-2) -> tuple[NodeState, bool]:
    """Minimize J_hat over the hyperplane D-orthogonal to ``tangent`` by one damped Newton step.

    The restricted Hessian is shifted until its smallest eigenvalue (in the
    D metric) is at least ``floor``, which makes the step a descent direction.
    """
    H, dc = prob.hessian(st)
    Kd = prob.vol * prob.spaces.K
    Z = linalg.null_space((Kd @ tangent)[None, :])
    Hz, Mz, gz = Z.T @ H @ Z, Z.T @ Kd @ Z, Z.T @ st.g
    lam_min = float(linalg.eigh(Hz, Mz, eigvals_only=True, subset_by_index=[0, 0])[0])
    if lam_min < floor:
        Hz = Hz + (floor - lam_min) * Mz
    d = Z @ linalg.solve(Hz, -gz, assume_a="pos")
    slope = float(st.g @ d)
    if not slope < 0:
        return st, False
    lam = min(1.0, max_move * prob.d_norm(st.a) / max(prob.d_norm(d), 1e-300))
    for _ in range(12):
        trial = prob.evaluate(project(st.a + lam * d), st.c + lam * (dc @ d))
        if np.isfinite(trial.j) and trial.j <= st.j + 1e-4 * lam * slope:
            return trial, True
        lam *= 0.5
    return st, False


def _descend(prob, st: NodeState, tangent: np.ndarray | None, step: float, project,
             tries: int = 12, max_move: float = 0.25) -> tuple[NodeState, float, bool]:
    """One Armijo step of -grad (D metric), perpendicular to ``tangent`` if given."""
    r = prob.riesz(st.g)
    if tangent is not None:
        r = r - prob.d_inner(r, tangent) * tangent
    slope = prob.d_inner(r, r)
    if slope == 0.0:
        return st, step, False
    # never move by more than a fraction of the node's own norm
    cap = max_move * prob.d_norm(st.a) / math.sqrt(slope)
    for _ in range(tries):
        t = min(step, cap)
        trial = prob.evaluate(project(st.a - t * r), st.c)
        if np.isfinite(trial.j) and trial.j <= st.j - 1e-4 * t * slope:
            return trial, step, True
        step = 0.5 * t
    return st, step, False


def _tangent(prob, nodes: list[NodeState], k: int) -> np.ndarray:
    t = nodes[k + 1].a - nodes[k - 1].a
    tn = prob.d_norm(t)
    return t / tn if tn > 0 else t


def _reparametrize(prob, nodes: list[NodeState], project) -> list[NodeState]:
    """Equal D-arclength nodes by linear interpolation (coefficients and warm starts)."""
    seg = np.array([prob.d_norm(nodes[i + 1].a - nodes[i].a) for i in range(len(nodes) - 1)])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    target = np.linspace(0.0, cum[-1], len(nodes))
    out = [nodes[0]]
    for s in target[1:-1]:
        i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg) - 1)
        lam = (s - cum[i]) / seg[i] if seg[i] > 0 else 0.0
        a = (1 - lam) * nodes[i].a + lam * nodes[i + 1].a
        c = (1 - lam) * nodes[i].c + lam * nodes[i + 1].c
        out.append(prob.evaluate(project(a), c))
    out.append(nodes[-1])
    return out


def _newton_polish(prob, st: NodeState, cfg: OuterConfig, project) -> tuple[NodeState, bool, int]:
    """Newton on DJ_hat = 0 with the exact Hessian; backtracking on the dual gradient norm."""
    its = 0
    for its in range(cfg.polish_max_iter + 1):
        gn = prob.dual_norm(st.g)
        if gn <= cfg.mp_tol * prob.d_norm(st.a):
            return st, True, its
        if its == cfg.polish_max_iter:
            break
        H, dc = prob.hessian(st)
        try:
            d = linalg.solve(H, -st.g, assume_a="sym")
        except linalg.LinAlgError:
            d = -np.linalg.lstsq(H, st.g, rcond=1e-12)[0]
        lam, accepted = 1.0, False
        for _ in range(6):
            trial = prob.evaluate(project(st.a + lam * d), st.c + lam * (dc @ d))
            if np.isfinite(trial.j) and prob.dual_norm(trial.g) <= (1 - 1e-4 * lam) * gn:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
        st = trial
    return st, False, its


def mountain_pass(seed: OneForm, params: NonlinearityParams, inner: InnerConfig = InnerConfig(),
                  cfg: OuterConfig = OuterConfig(), battery: list[OneForm] | None = None) -> SolutionReport:
    """Deform a path from 0 to a far point until its maximizer is a critical point.

    Each sweep moves the maximizer node toward the maximum of J_hat on the
    adjacent polyline, then lowers it ``deform_steps`` times within the
    hyperplane orthogonal to the path (damped Newton with the exact
    Hessian restricted to that hyperplane).  Every other interior node
    whose energy is within ``1 - band`` of the path maximum takes one
    gradient step orthogonal to the path; nodes are re-spaced when they
    become uneven.  A sweep that raises the path maximum is undone and the
    deformation shortened.  Once the relative gradient at the maximizer is below
    ``polish_tol`` a full Newton polish finishes; a failed polish is
    discarded and the sweeps continue with a tighter switch.

    Iterates stay in the swap-parity class of the seed when it has one.
    """
    prob = ReducedProblem(seed.grid, params, inner)
    a_seed = prob.coords(seed)
    if np.linalg.norm(a_seed) == 0.0:
        raise ValueError("seed must be a nonzero element of V")
    resid = np.linalg.norm(prob.spaces.U @ a_seed - seed.components.ravel())
    if resid > 1e-8 * np.linalg.norm(seed.components):
        raise ValueError(f"seed is not in the discrete V (residual {resid:.3g})")
    parity = seed_parity(prob, a_seed)
    if parity:
        S = _swap_matrix(prob)

        def project(a):
            return 0.5 * (a + parity * (S @ a))
    else:
        def project(a):
            return a

    far = find_far_point(seed, params, inner, cfg)
    a_far = project(prob.coords(far.e))
    end = prob.evaluate(a_far, prob.spaces.B.T @ far.w.values.ravel())
    P = cfg.path_points
    nodes = [prob.evaluate(np.zeros_like(a_seed))]
    for s in np.linspace(0.0, 1.0, P)[1:-1]:
        nodes.append(prob.evaluate(project(s * a_far), nodes[-1].c))
    nodes.append(end)

    trace = ConvergenceTrace(columns=("sweep", "path_max", "grad_norm", "step"))
    history: list[float] = []
    records: list[tuple[np.ndarray, np.ndarray, float, float]] = []
    band = 0.1
    polish_tol = cfg.polish_tol
    converged = False
    best = None
    sweep = 0
    prev = None  # (nodes before the last deformation, their path maximum)
    shrink = 1.0
    for sweep in range(1, cfg.max_sweeps + 1):
        k = 1 + int(np.argmax([nd.j for nd in nodes[1:-1]]))
        nodes[k] = _refine_max(prob, nodes, k, project)
        path_max = max(nd.j for nd in nodes[1:-1])
        if prev is not None and path_max > prev[1] + 1e-12 * abs(prev[1]):
            # the last deformation raised the path: undo it and deform less
            nodes, path_max = list(prev[0]), prev[1]
            k = 1 + int(np.argmax([nd.j for nd in nodes[1:-1]]))
            shrink *= 0.5
            trace.add(sweep, path_max, math.nan, shrink)
            log.info("sweep %d rejected, shrink %.3g", sweep, shrink)
            if shrink < 1e-6:
                break
        else:
            top = nodes[k]
            gn = prob.dual_norm(top.g)
            rel = gn / prob.d_norm(top.a)
            history.append(path_max)
            records.append((top.a, top.c, top.j, gn))
            trace.add(sweep, path_max, gn, shrink)
            log.info("sweep %d node %d path_max %.10g rel_grad %.3e shrink %.3g solves %d",
                     sweep, k, path_max, rel, shrink, prob.evaluations)
            if best is None or rel < best[0]:
                best = (rel, top)
            if rel <= polish_tol:
                pol, ok, _ = _newton_polish(prob, top, cfg, project)
                if ok and pol.j > 0:
                    best = (prob.dual_norm(pol.g) / prob.d_norm(pol.a), pol)
                    records.append((pol.a, pol.c, pol.j, prob.dual_norm(pol.g)))
                    converged = True
                    break
                polish_tol *= 0.5
            shrink = min(1.0, 2.0 * shrink)
        prev = (list(nodes), path_max)
        # deform the maximizer, then the other high nodes
        tan = _tangent(prob, nodes, k)
        st = nodes[k]
        for _ in range(cfg.deform_steps):
            st, moved = _perp_newton(prob, st, tan, project, max_move=0.25 * shrink)
            if not moved:
                break
        nodes[k] = st
        for i in range(1, P - 1):
            if i != k and nodes[i].j >= (1 - band) * path_max:
                nodes[i], _, _ = _descend(prob, nodes[i], _tangent(prob, nodes, i), 0.5 * shrink, project,
                                          tries=2)
        seg = [prob.d_norm(nodes[i + 1].a - nodes[i].a) for i in range(P - 1)]
        if max(seg) > 3.0 * max(min(seg), 1e-300):
            nodes = _reparametrize(prob, nodes, project)

    final = best[1]
    u = prob.field(final.a)
    w = prob.scalar(final.c)
    A = u + gradient(w)
    battery = battery if battery is not None else residual_battery(seed.grid)
    H, _ = prob.hessian(final)
    ps_records = [PSRecord(prob.field(a), prob.scalar(c), j, g) for a, c, j, g in records]
    rep = SolutionReport(
        u=u,
        w=w,
        j_value=final.j,
        grad_norm=prob.dual_norm(final.g),
        weak_residual=weak_residual(A, battery, params),
        nontriviality=nontriviality_check(u, w),
        equivariance_residual=max(equivariance_residual(u), equivariance_residual(A)),
        div_residual=div_residual(u),
        scale=prob.d_norm(final.a),
        u_l2=u.norm(),
        converged=converged,
        sweeps=sweep,
        morse_index=prob.morse_index(H),
        parity=parity,
        path_max_history=history,
        ps=ps_diagnostic(ps_records, params),
        trace=trace,
        evaluations=prob.evaluations,
        mp_tol=cfg.mp_tol,
    )
    trace.converged = converged
    rep.check()
    return rep


def aligned_distance(A1: OneForm, A2: OneForm) -> float:
    """min over sign and block swap of ||A1 - g A2||_L2 / max(||A1||, ||A2||)."""
    cands = [A2, -A2]
    if A2.grid.n >= 4:
        sw = block_swap(A2)
        cands += [sw, -sw]
    scale = max(A1.norm(), A2.norm(), 1e-300)
    return min((A1 - c).norm() for c in cands) / scale
