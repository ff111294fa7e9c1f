import time

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seldist.geometry import Workload, empirical_error
from seldist.mwu import (FeasibleOutput, Infeasible, MWUConfig, TimeLimitExceeded, choose_u, is_feasible,
                         mwu_constants, phi, rhs_vector, run_round, update_weights)
from seldist.oracles import exhaustive_opt, gen_consistent, gen_cover_gadget

EXACT = MWUConfig(exact_depth=True)


def check_guarantee(out, Z, alpha, delta, mode):
    if isinstance(out, FeasibleOutput):
        assert empirical_error(out.distribution, Z, mode) <= alpha + delta / 2 + 1e-12
        assert out.F.shape[0] <= out.T
        assert out.distribution.total_weight <= 1 + 1e-9
    assert out.max_abs_slack <= 2.0
    assert out.max_norm_deviation <= 1e-9


class TestConstants:
    def test_unit_delta_single_box(self):
        eta, T = mwu_constants(1.0, 1)
        assert eta == 1 / 32
        assert T == 563

    @pytest.mark.parametrize("delta,n", [(0.5, 10), (0.1, 100), (0.2, 100), (0.25, 100), (0.05, 3)])
    def test_round_count_against_high_precision(self, delta, n):
        with mpmath.workdps(60):
            expected = int(mpmath.ceil(512 * mpmath.log(2 * n + 1) / mpmath.mpf(delta) ** 2))
        assert mwu_constants(delta, n)[1] == expected

    def test_frozen_values(self):
        assert mwu_constants(0.5, 10) == (0.015625, 6236)
        assert mwu_constants(0.1, 100)[1] == 271530

    @pytest.mark.parametrize("delta", [0.0, -0.1, 1.5])
    def test_rejects_delta(self, delta):
        with pytest.raises(ValueError):
            mwu_constants(delta, 3)


def test_phi_uniform():
    assert phi(np.full(3, 1 / 3), 1)[0] == pytest.approx(1 / 3)


def test_phi_all_on_aggregate_row():
    np.testing.assert_allclose(phi(np.r_[1.0, np.zeros(8)], 4), -0.25)


def test_phi_random():
    w = np.random.default_rng(0).dirichlet(np.ones(13))
    expected = [w[2 * i] + w[2 * i - 1] - w[0] / 6 for i in range(1, 7)]
    np.testing.assert_allclose(phi(w, 6), expected, atol=1e-15)


def test_choose_u_l1_uniform():
    assert choose_u(np.full(3, 1 / 3), "l1", 0.1, 1)[0] == 1.0


def test_choose_u_l2_example():
    u = choose_u(np.array([0.8, 0.05, 0.05]), "l2", 0.1, 1)[0]
    grid = np.linspace(0, 1, 1_000_001)
    target = grid[np.argmax(-0.8 * grid**2 + 0.1 * grid)]
    assert u == pytest.approx(0.0625)
    assert abs(u - target) <= 1e-6


def test_choose_u_l2_without_aggregate_weight():
    np.testing.assert_array_equal(choose_u(np.array([0.0, 0.5, 0.5]), "l2", 0.1, 1), [1.0])


def test_choose_u_linf():
    np.testing.assert_array_equal(choose_u(np.full(11, 1 / 11), "linf", 0.3, 5), np.full(5, 0.3))


def test_choose_u_linf_rejects_alpha():
    with pytest.raises(ValueError):
        choose_u(np.full(3, 1 / 3), "linf", 1.5, 1)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 50))
def test_choose_u_l2_maximises_row_sum(seed, n):
    rng = np.random.default_rng(seed)
    w = rng.dirichlet(np.ones(2 * n + 1))
    u = choose_u(w, "l2", 0.0, n)
    grid = np.linspace(0, 1, 10_001)
    for i in range(n):
        coef = w[2 * i + 2] + w[2 * i + 1]
        f = lambda x: -(w[0] / n) * x * x + coef * x
        assert f(u[i]) >= f(grid).max() - 1e-12


def test_rhs_layout():
    np.testing.assert_array_equal(rhs_vector([0.2, 0.7], 0.1), [-0.1, -0.2, 0.2, -0.7, 0.7])


def test_round_all_weight_on_aggregate_row():
    Z = Workload([[0.0], [2.0]], [[1.0], [3.0]], [0.5, 0.2])
    w = np.r_[1.0, np.zeros(4)]
    out = run_round(Z, w, rhs_vector(Z.s, 0.05), "l1", 0.5, EXACT)
    assert out.deep_point is None and out.deep_value == 0.0
    np.testing.assert_array_equal(out.u, 0.0)
    assert out.lhs == 0.0 and out.satisfied


def test_round_hand_evaluated():
    Z = Workload([[0.0]], [[1.0]], [1.0])
    out = run_round(Z, np.full(3, 1 / 3), rhs_vector(Z.s, 0.1), "l1", 0.5, EXACT)
    assert out.u[0] == 1.0
    assert out.deep_point is None and out.deep_value == 0.0
    np.testing.assert_array_equal(out.row_values, [-1.0, 1.0, 1.0])
    assert out.lhs == pytest.approx(1 / 3)


def test_round_lhs_reconstructed():
    Z, _ = gen_consistent(6, 2, 3, 4)
    w = np.random.default_rng(1).dirichlet(np.ones(13))
    out = run_round(Z, w, rhs_vector(Z.s, 0.1), "l1", 0.5, EXACT)
    hit = np.zeros(6)
    if out.deep_point is not None:
        hit = np.all((Z.lo <= out.deep_point) & (out.deep_point <= Z.hi), axis=1).astype(float)
    ax = np.empty(13)
    ax[0] = -out.u.sum() / 6
    ax[1::2] = out.u - hit
    ax[2::2] = out.u + hit
    assert out.lhs == pytest.approx(float(np.dot(w, ax)), abs=1e-12)
    np.testing.assert_allclose(out.slacks, ax - rhs_vector(Z.s, 0.1), atol=1e-15)


def test_round_exact_and_sampled_both_satisfied():
    Z, _ = gen_consistent(5, 2, 2, 8)
    w = np.full(11, 1 / 11)
    b = rhs_vector(Z.s, 0.3)
    for exact in (True, False):
        assert run_round(Z, w, b, "l1", 1.0, EXACT, rng=0, exact=exact).satisfied


def test_update_zero_slack():
    w = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(update_weights(w, np.zeros(3), 0.1), w, atol=1e-16)


def test_update_two_rows():
    np.testing.assert_allclose(update_weights([0.5, 0.5], [1.0, -1.0], 0.1), [0.45, 0.55], atol=1e-15)


def test_update_against_high_precision():
    rng = np.random.default_rng(2)
    w = rng.dirichlet(np.ones(21))
    s = rng.uniform(-2, 2, 21)
    with mpmath.workdps(40):
        raw = [mpmath.mpf(a) * (1 - mpmath.mpf(1 / 32) * mpmath.mpf(b)) for a, b in zip(w, s)]
        total = mpmath.fsum(raw)
        expected = [float(x / total) for x in raw]
    np.testing.assert_allclose(update_weights(w, s, 1 / 32), expected, rtol=0, atol=1e-15)


def test_update_rejects_wide_slack():
    with pytest.raises(AssertionError):
        update_weights([0.5, 0.5], [2.5, 0.0], 0.1)


@pytest.mark.parametrize("mode", ["l1", "l2", "linf"])
@pytest.mark.parametrize("seed", range(3))
def test_alpha_one_always_feasible(mode, seed):
    Z, _ = gen_consistent(8, 2, 3, seed)
    rng = np.random.default_rng(seed)
    Z = Workload(Z.lo, Z.hi, rng.random(Z.n))
    out = is_feasible(Z, 1.0, 0.5, mode, EXACT)
    assert isinstance(out, FeasibleOutput)
    check_guarantee(out, Z, 1.0, 0.5, mode)


def test_consistent_workload_feasible():
    Z, _ = gen_consistent(50, 2, 3, 0)
    out = is_feasible(Z, 0.1, 0.2, "l1", EXACT)
    assert isinstance(out, FeasibleOutput)
    assert empirical_error(out.distribution, Z, "l1") <= 0.2
    check_guarantee(out, Z, 0.1, 0.2, "l1")


def test_cover_gadget_infeasible():
    Z = gen_cover_gadget(1, 2)
    alpha = 1 / (8 * Z.n**2)
    assert alpha + 0.1 < exhaustive_opt(Z, "l1", 60)
    out = is_feasible(Z, alpha, 0.2, "l1", EXACT)
    assert isinstance(out, Infeasible)
    assert out.lhs < out.rhs
    check_guarantee(out, Z, alpha, 0.2, "l1")


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), mode=st.sampled_from(["l1", "l2", "linf"]))
def test_consistent_never_infeasible(seed, mode):
    rng = np.random.default_rng(seed)
    Z, _ = gen_consistent(int(rng.integers(1, 6)), int(rng.integers(1, 3)), 2, seed)
    out = is_feasible(Z, 0.25, 0.5, mode, EXACT)
    assert isinstance(out, FeasibleOutput)
    check_guarantee(out, Z, 0.25, 0.5, mode)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("mode", ["l1", "l2"])
def test_jitted_loop_matches_reference_rounds(d, mode):
    Z, _ = gen_consistent(2, d, 2, 3 + d)
    alpha, delta = 0.05, 1.0
    out = is_feasible(Z, alpha, delta, mode, MWUConfig(exact_depth=True, record_trajectory=True))
    eta, T = mwu_constants(delta, Z.n)
    b = rhs_vector(Z.s, alpha)
    w = np.full(2 * Z.n + 1, 1 / (2 * Z.n + 1))
    for t in range(out.trajectory.shape[0] - 1):
        r = run_round(Z, w, b, mode, delta, EXACT)
        assert r.satisfied
        w = update_weights(w, r.slacks, eta)
        np.testing.assert_array_equal(w, out.trajectory[t + 1])


def test_sampled_mode_is_deterministic():
    Z, _ = gen_consistent(6, 2, 2, 1)
    cfg = MWUConfig(exact_depth=False, sample_size=20, repetitions=3)
    a = is_feasible(Z, 0.3, 1.0, "l1", cfg, rng=5)
    b = is_feasible(Z, 0.3, 1.0, "l1", cfg, rng=5)
    assert type(a) is type(b)
    if isinstance(a, FeasibleOutput):
        np.testing.assert_array_equal(a.F, b.F)
        np.testing.assert_array_equal(a.weights, b.weights)
    else:
        assert a.round == b.round


def test_sampled_mode_guarantee_small_case():
    Z, _ = gen_consistent(6, 2, 2, 2)
    out = is_feasible(Z, 0.3, 1.0, "l1", MWUConfig(exact_depth=False), rng=0)
    check_guarantee(out, Z, 0.3, 1.0, "l1")


def test_even_repetitions_rejected():
    Z, _ = gen_consistent(3, 1, 1, 0)
    with pytest.raises(ValueError):
        is_feasible(Z, 0.3, 1.0, "l1", MWUConfig(exact_depth=False, repetitions=4))


def test_deadline_raises():
    Z, _ = gen_consistent(20, 2, 3, 0)
    with pytest.raises(TimeLimitExceeded):
        is_feasible(Z, 0.5, 0.05, "l1", MWUConfig(exact_depth=True, chunk_rounds=64),
                    deadline=time.monotonic() - 1.0)


@pytest.mark.parametrize("alpha,delta", [(-0.1, 0.5), (1.1, 0.5), (0.5, 0.0), (0.5, 2.0)])
def test_rejects_parameters(alpha, delta):
    Z, _ = gen_consistent(3, 1, 1, 0)
    with pytest.raises(ValueError):
        is_feasible(Z, alpha, delta)
