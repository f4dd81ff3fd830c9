import numpy as np
import pytest

from smaxwell.fields import GridSpec, OneForm, ScalarField, divergence, leray
from smaxwell.nonlinearity import NonlinearityParams
from smaxwell.outer import ReducedProblem, block_swap, seed_parity
from smaxwell.seeds import SeedProfile, raw_vortex_form, seed_form
from smaxwell.symmetry import (
    act_oneform,
    equivariance_residual,
    group_elements,
    group_order,
    symmetrize_oneform,
    symmetrize_scalar,
)

G = GridSpec(4, 8, 4.0)


def test_group_is_closed_and_orthogonal():
    gs = group_elements(4)
    assert len(gs) == group_order(4)
    keys = {g.tobytes() for g in gs}
    for a in gs:
        assert np.allclose(a @ a.T, np.eye(4))
        for b in gs:
            assert (a @ b).tobytes() in keys


def test_symmetrization_is_idempotent_projection():
    rng = np.random.default_rng(0)
    A = OneForm(rng.standard_normal((4,) + G.shape), G)
    S = symmetrize_oneform(A)
    assert np.allclose(symmetrize_oneform(S).components, S.components, atol=1e-14)
    assert equivariance_residual(S) <= 1e-13
    B = OneForm(rng.standard_normal((4,) + G.shape), G)
    # self-adjoint in L2
    assert S.dot(B) == pytest.approx(A.dot(symmetrize_oneform(B)), rel=1e-12)
    w = ScalarField(rng.standard_normal(G.shape), G)
    assert np.allclose(symmetrize_scalar(symmetrize_scalar(w)).values, symmetrize_scalar(w).values)


def test_raw_vortex_is_annihilated_by_symmetrization():
    V = raw_vortex_form(G, [1.0, 1.0])
    assert np.abs(symmetrize_oneform(V).components).max() <= 1e-12 * np.abs(V.components).max()


def test_seed_is_divergence_free_equivariant_and_nonzero():
    u = seed_form(G)
    assert u.norm() > 0
    assert equivariance_residual(u) <= 1e-12
    assert np.abs(divergence(u).values).max() <= 1e-10 * np.abs(u.components).max()
    assert np.allclose(leray(u).components, u.components, atol=1e-12)


def test_seed_parities_under_block_swap():
    prob = ReducedProblem(G, NonlinearityParams())
    odd = seed_form(G, SeedProfile((1.0, 0.0)))
    even = seed_form(G, SeedProfile((0.0, 1.0)))
    assert np.allclose(block_swap(odd).components, -odd.components, atol=1e-12)
    assert np.allclose(block_swap(even).components, even.components, atol=1e-12)
    assert seed_parity(prob, prob.coords(odd)) == -1
    assert seed_parity(prob, prob.coords(even)) == 1
    assert seed_parity(prob, prob.coords(seed_form(G, SeedProfile((1.0, 1.0))))) == 0


def test_group_action_preserves_seed():
    u = seed_form(G)
    for k in range(group_order(4)):
        assert np.allclose(act_oneform(k, u).components, u.components, atol=1e-12)


def test_seed_radius_validated():
    with pytest.raises(ValueError):
        seed_form(G, SeedProfile(radius=5.0))
