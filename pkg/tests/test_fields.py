import numpy as np
import pytest

from smaxwell.fieldio import FieldFormatError, read_field, write_field
from smaxwell.fields import (
    GridSpec,
    OneForm,
    ScalarField,
    codifferential,
    codifferential2,
    curl_energy,
    d_norm,
    dirichlet_energy,
    divergence,
    dual_d_norm,
    exterior_derivative,
    gradient,
    hodge_split,
    inverse_laplacian,
    laplace_beltrami_identity_check,
    laplacian,
    poisson_solve,
    strip_null_modes,
)

G = GridSpec(4, 8, 4.0)


def rand_form(rng, g=G):
    return OneForm(rng.standard_normal((g.n,) + g.shape), g)


def rand_scalar(rng, g=G):
    return ScalarField(rng.standard_normal(g.shape), g)


@pytest.mark.parametrize("kw", [dict(n=3), dict(m=7), dict(L=0.0), dict(n=0)])
def test_grid_validation(kw):
    with pytest.raises(ValueError):
        GridSpec(**kw)


def test_d_of_d_vanishes():
    w = rand_scalar(np.random.default_rng(0))
    assert exterior_derivative(gradient(w)).max_abs() <= 1e-12 * np.abs(w.values).max()


def test_codifferential_is_adjoint_of_d():
    rng = np.random.default_rng(1)
    w, A = rand_scalar(rng), rand_form(rng)
    assert gradient(w).dot(A) == pytest.approx(G.inner(w.values, codifferential(A).values), rel=1e-12)
    B = exterior_derivative(rand_form(rng))
    assert exterior_derivative(A).dot(B) == pytest.approx(A.dot(codifferential2(B)), rel=1e-12)


def test_codifferential_is_minus_divergence():
    A = rand_form(np.random.default_rng(2))
    assert np.allclose(codifferential(A).values, -divergence(A).values, atol=1e-12)


def test_hodge_split_reconstructs_and_is_divergence_free():
    A = rand_form(np.random.default_rng(3))
    u, w = hodge_split(A)
    assert np.allclose((u + gradient(w)).components, A.components, atol=1e-12)
    assert np.abs(divergence(u).values).max() <= 1e-11
    assert abs(u.dot(gradient(w))) <= 1e-10 * A.norm() ** 2


def test_laplace_beltrami_and_energy_identity():
    A = strip_null_modes(rand_form(np.random.default_rng(4)))
    assert laplace_beltrami_identity_check(A) <= 1e-11
    div2 = divergence(A).norm() ** 2
    assert curl_energy(A) + div2 == pytest.approx(dirichlet_energy(A), rel=1e-10)


def test_inverse_laplacian_and_poisson():
    rng = np.random.default_rng(5)
    A = strip_null_modes(rand_form(rng))
    assert np.allclose(-laplacian(inverse_laplacian(A)).components, A.components, atol=1e-10)
    r = strip_null_modes(rand_scalar(rng))
    w = poisson_solve(r)
    assert np.allclose(divergence(gradient(w)).values, r.values, atol=1e-10)


def test_plane_wave_derivative_is_spectrally_exact():
    x = G.coords()
    k = np.pi / G.L
    w = ScalarField(np.sin(k * x[0]), G)
    assert np.allclose(gradient(w).components[0], k * np.cos(k * x[0]), atol=1e-12)


def test_dual_norm_is_riesz_dual():
    rng = np.random.default_rng(6)
    Gf = strip_null_modes(rand_form(rng))
    # the maximizer of <G, v>/||v||_D is v = (-Delta)^-1 G
    v = inverse_laplacian(Gf)
    assert Gf.dot(v) / d_norm(v) == pytest.approx(dual_d_norm(Gf), rel=1e-10)
    for _ in range(5):
        t = strip_null_modes(rand_form(rng))
        assert abs(Gf.dot(t)) <= dual_d_norm(Gf) * d_norm(t) * (1 + 1e-12)


def test_field_dump_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    for fld in (rand_form(rng), rand_scalar(rng)):
        path = tmp_path / "f.bin"
        write_field(path, fld)
        back = read_field(path)
        arr = back.components if isinstance(back, OneForm) else back.values
        ref = fld.components if isinstance(fld, OneForm) else fld.values
        assert type(back) is type(fld) and back.grid == fld.grid
        assert np.array_equal(arr, ref)


def test_truncated_dump_rejected(tmp_path):
    path = tmp_path / "f.bin"
    write_field(path, rand_scalar(np.random.default_rng(8)))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(FieldFormatError):
        read_field(path)
    path.write_bytes(b'{"n": 4}\n')
    with pytest.raises(FieldFormatError):
        read_field(path)
