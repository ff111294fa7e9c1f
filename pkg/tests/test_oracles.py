import numpy as np
import pytest

from seldist.geometry import DiscreteDistribution, Workload, empirical_error
from seldist.mwu import Infeasible, MWUConfig, is_feasible
from seldist.oracles import exhaustive_opt, explicit_mwu, gen_consistent, gen_cover_gadget


def test_single_atom_gives_binary_selectivities():
    Z, _ = gen_consistent(40, 2, 1, 3)
    assert set(np.unique(Z.s)) <= {0.0, 1.0}


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("d", [1, 2, 3])
def test_ground_truth_has_zero_error(seed, d):
    Z, gt = gen_consistent(25, d, 4, seed)
    for p in ("l1", "l2", "linf"):
        assert empirical_error(gt.distribution, Z, p) == 0.0


def test_generation_is_reproducible():
    a, ga = gen_consistent(10, 2, 3, 42)
    b, gb = gen_consistent(10, 2, 3, 42)
    assert a == b and ga.distribution == gb.distribution


def test_generation_rejects_sizes():
    with pytest.raises(ValueError):
        gen_consistent(0, 2, 1, 0)


def test_gadget_every_inner_point_hits_a_slab():
    Z = gen_cover_gadget(1, 2)
    assert Z.n == 3 and Z.s[0] == 1.0 and not Z.s[1:].any()
    for x in np.linspace(0, 1, 101):
        assert ((Z.lo[1:, 0] <= x) & (x <= Z.hi[1:, 0])).any()


def test_gadget_rejects_single_slab():
    with pytest.raises(ValueError):
        gen_cover_gadget(2, 1)


def test_gadget_infeasible_at_small_alpha():
    Z = gen_cover_gadget(1, 2)
    assert isinstance(is_feasible(Z, 1 / (8 * 9), 0.2, "l1", MWUConfig(exact_depth=True)), Infeasible)


def test_gadget_without_a_slab_is_consistent():
    Z = gen_cover_gadget(1, 2)
    opened = Workload(Z.lo[:2], Z.hi[:2], Z.s[:2])
    assert exhaustive_opt(opened, "l1", 10) == 0.0


def test_opt_consistent_tiny():
    for seed in range(5):
        Z, _ = gen_consistent(2, 2, 2, seed)
        assert exhaustive_opt(Z, "l1", 200) <= Z.n / 200


@pytest.mark.parametrize("p", ["l1", "l2", "linf"])
def test_opt_gadget_lower_bound(p):
    Z = gen_cover_gadget(1, 2)
    G = 30 if p == "l2" else 200
    assert exhaustive_opt(Z, p, G) >= 1 / (2 * Z.n**2) - Z.n / G


def test_opt_gadget_values():
    # with three boxes the best l1 error is one third: half the mass in each slab
    Z = gen_cover_gadget(1, 2)
    assert exhaustive_opt(Z, "l1", 200) == pytest.approx(1 / 3)


def test_opt_single_weight_unit():
    Z = Workload([[0.0], [2.0]], [[1.0], [3.0]], [0.5, 0.5])
    assert exhaustive_opt(Z, "l1", 1) == pytest.approx(0.5)
    assert exhaustive_opt(Z, "l1", 2) == 0.0


def test_opt_monotone_under_refinement():
    for seed in range(4):
        Z, _ = gen_consistent(2, 1, 3, seed)
        Z = Workload(Z.lo, Z.hi, np.random.default_rng(seed).random(2))
        values = [exhaustive_opt(Z, "l1", G) for G in (1, 2, 4, 8, 16, 32)]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_opt_matches_enumeration_for_linear_modes():
    Z = Workload([[0.0], [0.5]], [[1.0], [2.0]], [0.3, 0.8])
    for p in ("l1", "linf"):
        best = np.inf
        for a in range(11):
            for b in range(11 - a):
                for c in range(11 - a - b):
                    pts, ws = [], []
                    for x, k in ((0.25, a), (0.75, b), (1.5, c)):
                        if k:
                            pts.append([x])
                            ws.append(k / 10)
                    D = DiscreteDistribution(np.array(pts).reshape(-1, 1), ws, d=1)
                    best = min(best, empirical_error(D, Z, p))
        assert exhaustive_opt(Z, p, 10) == pytest.approx(best, abs=1e-12)


def test_opt_rejects_large_instances():
    Z, _ = gen_consistent(6, 1, 2, 0)
    with pytest.raises(ValueError, match="too large"):
        exhaustive_opt(Z)
    Z, _ = gen_consistent(4, 2, 2, 0)
    with pytest.raises(ValueError, match="too large"):
        exhaustive_opt(Z)


@pytest.mark.parametrize("seed", range(3))
def test_explicit_matches_implicit(seed):
    Z, _ = gen_consistent(3, 2, 2, seed)
    ex = explicit_mwu(Z, 0.05, 0.5)
    im = is_feasible(Z, 0.05, 0.5, "l1", MWUConfig(exact_depth=True, depth_method="grid", record_trajectory=True))
    assert ex.feasible == bool(im)
    assert ex.trajectory.shape == im.trajectory.shape
    assert np.abs(ex.trajectory - im.trajectory).max() <= 1e-12
