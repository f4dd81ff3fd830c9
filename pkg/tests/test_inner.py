import numpy as np
import pytest

from smaxwell.fields import GridSpec, OneForm, ScalarField, gradient, strip_null_modes
from smaxwell.inner import (
    F_total,
    F_u,
    InnerConfig,
    dF_field,
    form_hessian_apply,
    phi,
    phi_gamma,
    reduced_gradient,
)
from smaxwell.nonlinearity import NonlinearityParams
from smaxwell.orlicz import norm_exact
from smaxwell.seeds import seed_form
from smaxwell.symmetry import equivariance_residual, symmetrize_scalar

G = GridSpec(4, 8, 4.0)
P = NonlinearityParams()


@pytest.fixture(scope="module")
def u():
    return seed_form(G) * 3.0


def test_dF_matches_directional_difference():
    rng = np.random.default_rng(0)
    A = OneForm(rng.standard_normal((4,) + G.shape), G)
    B = OneForm(rng.standard_normal((4,) + G.shape), G)
    h = 1e-6
    fd = (F_total(A + B * h, P) - F_total(A - B * h, P)) / (2 * h)
    assert fd == pytest.approx(dF_field(A, P).dot(B), rel=1e-6)


def test_form_hessian_matches_difference_of_gradients():
    rng = np.random.default_rng(1)
    v = rng.standard_normal((4, 50)) * 2
    y = rng.standard_normal((4, 50, 1))
    h = 1e-6

    def grad(x):
        s = np.sum(x * x, axis=0)
        from smaxwell.nonlinearity import f_prime
        return 2 * f_prime(P, s) * x

    fd = (grad(v + h * y[..., 0]) - grad(v - h * y[..., 0])) / (2 * h)
    assert np.allclose(form_hessian_apply(v, y, P)[..., 0], fd, rtol=1e-5, atol=1e-7)


def test_phi_is_stationary_and_invariant(u):
    w, tr = phi(u, P)
    assert tr.converged
    g = reduced_gradient(u, w, P)
    g = symmetrize_scalar(strip_null_modes(g))
    scale = max(1.0, dF_field(u, P).norm())
    assert g.norm() <= 1e-8 * scale
    assert equivariance_residual(w) <= 1e-10


def test_phi_unique_from_random_starts(u):
    w_ref, _ = phi(u, P)
    f_ref = F_u(u, w_ref, P)
    rng = np.random.default_rng(2)
    for _ in range(10):
        w0 = symmetrize_scalar(strip_null_modes(ScalarField(rng.standard_normal(G.shape) * 5, G)))
        w, _ = phi(u, P, w0=w0)
        assert F_u(u, w, P) == pytest.approx(f_ref, rel=1e-8)
        assert (w - w_ref).norm() <= 1e-4 * max(1.0, w_ref.norm())


def test_phi_minimizes_along_random_perturbations(u):
    w, _ = phi(u, P)
    base = F_u(u, w, P)
    rng = np.random.default_rng(3)
    for _ in range(5):
        z = symmetrize_scalar(strip_null_modes(ScalarField(rng.standard_normal(G.shape), G)))
        assert F_u(u, w + z * 1e-2, P) >= base - 1e-9 * abs(base)


def test_newton_and_matrix_free_agree():
    g = GridSpec(4, 4, 4.0)
    v = seed_form(g) * 3.0
    w1, _ = phi(v, P, InnerConfig(method="newton"))
    w2, t2 = phi(v, P, InnerConfig(method="gd", grad_tol=1e-8, max_iter=5000))
    assert t2.converged
    assert F_u(v, w1, P) == pytest.approx(F_u(v, w2, P), rel=1e-8)


def test_zero_u_gives_zero_w():
    w, _ = phi(OneForm.zeros(G), P)
    assert w.norm() == 0 or np.abs(w.values).max() < 1e-14


def test_phi_gamma_lowers_the_norm_with_certificate(u):
    w, info = phi_gamma(u, 2.0)
    assert info["value"] <= info["start_value"] * (1 + 1e-12)
    assert info["lower"] <= info["value"] * (1 + 1e-12)
    assert norm_exact(u + gradient(w)).value == pytest.approx(info["value"], rel=1e-9)
    with pytest.raises(ValueError):
        phi_gamma(u, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        InnerConfig(grad_tol=0)
    with pytest.raises(ValueError):
        InnerConfig(method="bfgs")
