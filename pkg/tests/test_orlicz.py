import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smaxwell.fields import GridSpec, OneForm
from smaxwell.orlicz import (
    OrliczPair,
    brute_force_norm,
    dual_norm,
    lebesgue_norm,
    norm_bounds,
    norm_exact,
    omega_split_value,
)

PAIR = OrliczPair()


def cvx_norm(a, w=1.0, pair=PAIR):
    t = cp.Variable(len(a))
    obj = w ** (1 / pair.p) * cp.pnorm(cp.multiply(a, t), pair.p) \
        + w ** (1 / pair.q) * cp.pnorm(cp.multiply(a, 1 - t), pair.q)
    prob = cp.Problem(cp.Minimize(obj), [t >= 0, t <= 1])
    prob.solve()
    return prob.value


def test_four_site_example_matches_brute_force():
    a = np.array([1.5, 0.5, 2.0, 0.1])
    assert norm_exact(a).value == pytest.approx(brute_force_norm(a), abs=1e-3)
    assert norm_exact(a).value == pytest.approx(2.0554230613178675, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_exact_norm_matches_cvxpy(seed):
    rng = np.random.default_rng(seed)
    a = np.abs(rng.standard_normal(30)) * 10 ** rng.uniform(-1, 1, 30)
    w = 0.3
    res = norm_exact(a, weight=w)
    assert res.value == pytest.approx(cvx_norm(a, w), rel=1e-5)
    assert res.lower <= res.value + 1e-12
    assert res.gap <= 1e-9 * res.value


def test_zero_field():
    res = norm_exact(np.zeros(5))
    assert res.value == 0 and res.converged
    assert norm_bounds(np.zeros(5)) == (0.0, 0.0)


def test_one_part_limits():
    small = np.full(4, 0.01)
    assert norm_exact(small).value == pytest.approx(lebesgue_norm(small, 1.0, 6.0), rel=1e-12)
    big = np.full(4, 100.0)
    assert norm_exact(big).value <= min(lebesgue_norm(big, 1.0, 3.0), lebesgue_norm(big, 1.0, 6.0)) + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 30), min_size=1, max_size=5), st.floats(0.1, 10))
def test_norm_properties(vals, s):
    a = np.array(vals)
    v = norm_exact(a).value
    assert v <= min(lebesgue_norm(a, 1, 3), lebesgue_norm(a, 1, 6)) * (1 + 1e-12) + 1e-300
    assert v <= omega_split_value(a) * (1 + 1e-12) + 1e-300
    assert norm_exact(s * a).value == pytest.approx(s * v, rel=1e-7, abs=1e-12)
    lower, _ = norm_bounds(a)
    assert lower <= v * (1 + 1e-9) + 1e-12


def test_triangle_and_holder():
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal(40) * 3, rng.standard_normal(40) * 3
    assert norm_exact(a + b).value <= norm_exact(a).value + norm_exact(b).value + 1e-9
    assert abs(a @ b) <= norm_exact(a).value * dual_norm(b) + 1e-9


def test_upper_omega_bound_counterexample():
    # two sites: one big, one small; the L^p + L^q norm exceeds max(||.||_p(Omega), ||.||_q(Omega^c))
    a = np.array([2.0, 0.5])
    lower, upper = norm_bounds(a)
    assert upper == pytest.approx(2.0)
    assert norm_exact(a).value == pytest.approx(2.0000814, abs=1e-7)
    assert norm_exact(a).value > upper


def test_oneform_magnitudes_use_cell_volume():
    g = GridSpec(2, 4, 1.0)
    A = OneForm(np.ones((2,) + g.shape) * 0.1, g)
    a = np.full(g.size, np.sqrt(0.02))
    assert norm_exact(A).value == pytest.approx(norm_exact(a, weight=g.cell_volume).value, rel=1e-12)


def test_brute_force_limited_to_few_sites():
    with pytest.raises(ValueError):
        brute_force_norm(np.ones(8))


def test_pair_validation():
    with pytest.raises(ValueError):
        OrliczPair(6.0, 3.0)
