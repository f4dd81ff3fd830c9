import math

import numpy as np
import pytest

from smaxwell.fields import GridSpec, OneForm, d_norm, dual_d_norm, gradient
from smaxwell.inner import InnerConfig
from smaxwell.nonlinearity import NonlinearityParams
from smaxwell.outer import (
    OuterConfig,
    PSRecord,
    aligned_distance,
    block_swap,
    envelope_corrected,
    envelope_printed,
    find_far_point,
    grad_j_hat,
    j_hat,
    mountain_pass,
    nontriviality_mechanism,
    project_v,
    ps_diagnostic,
    residual_battery,
    weak_residual,
)
from smaxwell.seeds import SeedProfile, seed_form
from smaxwell.verify import gradient_check

P = NonlinearityParams()
SMALL = GridSpec(4, 4, 4.0)


@pytest.fixture(scope="module")
def small_solution():
    return mountain_pass(seed_form(SMALL), P)


def test_j_hat_even_and_zero_at_origin():
    u = seed_form(GridSpec()) * 4.0
    assert j_hat(u, P)[0] == pytest.approx(j_hat(u * -1.0, P)[0], rel=1e-12)
    assert j_hat(OneForm.zeros(GridSpec()), P)[0] == 0.0


def test_grad_j_hat_matches_central_differences():
    rows = gradient_check(np.random.default_rng(0), P, InnerConfig(), GridSpec(), bases=1, directions=3)
    assert max(r[4] for r in rows) <= 1e-6


def test_grad_j_hat_lies_in_v():
    u = seed_form(GridSpec()) * 2.0
    g = grad_j_hat(u, P)
    assert np.allclose(project_v(g).components, g.components, atol=1e-12)


def test_far_point_is_negative_and_rejects_zero():
    far = find_far_point(seed_form(SMALL), P)
    assert far.j < 0 and far.t <= 2.0**60
    with pytest.raises(ValueError):
        find_far_point(OneForm.zeros(SMALL), P)


def test_corrected_envelope_dominates_printed_one():
    t = np.logspace(-3, 3, 50)
    assert np.all(envelope_corrected(t, 1.0, 1e-3, 1e-4, 3.0, 6.0)
                  >= envelope_printed(t, 1.0, 1e-3, 1e-4, 3.0, 6.0))


def test_block_swap_is_an_involution():
    rng = np.random.default_rng(1)
    A = OneForm(rng.standard_normal((4,) + SMALL.shape), SMALL)
    assert np.array_equal(block_swap(block_swap(A)).components, A.components)


def test_aligned_distance_symmetries():
    u = seed_form(GridSpec(), SeedProfile((1.0, 0.5)))
    assert aligned_distance(u, u * -1.0) == 0.0
    assert aligned_distance(u, block_swap(u)) == 0.0
    assert aligned_distance(u, u * 2.0) > 0.1


def test_weak_residual_detects_non_solutions():
    A = seed_form(GridSpec()) * 3.0
    assert weak_residual(A, residual_battery(GridSpec()), P) > 1e-3


def test_small_grid_mountain_pass(small_solution):
    rep = small_solution
    assert rep.converged and rep.ok, rep.flags
    assert rep.j_value > 0 and rep.morse_index == 1
    assert rep.grad_norm <= 1e-4 * rep.scale
    assert rep.ps["violations"] == 0
    mech = nontriviality_mechanism(rep.u, rep.w)
    assert mech["orthogonality"] <= 1e-10 and mech["pythagoras_residual"] <= 1e-10
    assert rep.nontriviality >= rep.u_l2 * (1 - 1e-12)


def test_solution_is_weak_solution_on_fine_battery(small_solution):
    A = small_solution.u + gradient(small_solution.w)
    assert weak_residual(A, residual_battery(SMALL, max_wave=2), P) <= 1e-3


def test_forced_non_convergence_is_flagged():
    rep = mountain_pass(seed_form(SMALL), P, cfg=OuterConfig(max_sweeps=1))
    assert not rep.converged and "not_converged" in rep.flags


def test_mountain_pass_rejects_bad_seeds():
    with pytest.raises(ValueError):
        mountain_pass(OneForm.zeros(SMALL), P)
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        mountain_pass(OneForm(rng.standard_normal((4,) + SMALL.shape), SMALL), P)


def test_ps_diagnostic_flags_a_violation():
    u = seed_form(SMALL) * 2.0
    j, w, _ = j_hat(u, P)
    eps = dual_d_norm(grad_j_hat(u, P, w=w))
    ok = ps_diagnostic([PSRecord(u, w, j, eps)], P)
    assert ok["violations"] == 0
    # the estimate is tight up to <DJ_hat(u), u>, which eps ||u|| bounds
    row = ok["rows"][0]
    assert row["rhs"] - row["lhs"] <= 2 * eps * row["norm"] + 1e-9 * abs(row["rhs"])
    # an absurdly small level makes the norm bound fail
    big = u * 50.0
    bad = ps_diagnostic([PSRecord(big, j_hat(big, P)[1], 1e-6, 0.0)], P)
    assert bad["violations"] == 1
    assert bad["rows"][0]["norm"] > bad["rows"][0]["norm_bound"]
    assert ps_diagnostic([], P)["violations"] == 0


def test_report_json_is_deterministic(small_solution):
    again = mountain_pass(seed_form(SMALL), P)
    assert again.to_json() == small_solution.to_json()
    assert math.isfinite(d_norm(small_solution.u))


def test_outer_config_validation():
    with pytest.raises(ValueError):
        OuterConfig(path_points=2)
    with pytest.raises(ValueError):
        OuterConfig(mp_tol=0)
