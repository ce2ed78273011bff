import math

import numpy as np
import pytest

from riskcal import (
    ControlSpec,
    HyperGrid,
    RiskMatrix,
    ValidationError,
    calibrate,
    calibrate_mean_risk,
    calibrate_quantile_risk,
    select_best,
)


def grid_of(m):
    return HyperGrid.from_params([[float(j)] for j in range(m)])


class TestSelectBest:
    def test_largest_reward_wins(self):
        assert select_best([1, 3], {1: -5.0, 3: -2.0}) == 3

    def test_empty_gives_none(self):
        assert select_best([], {}) is None

    def test_tie_breaks_to_smallest_id(self):
        assert select_best([3, 1], {1: -2.0, 3: -2.0}) == 1

    def test_missing_reward(self):
        with pytest.raises(ValidationError, match="missing reward"):
            select_best([0, 1], {0: 1.0})


class TestMeanCalibration:
    def test_single_zero_column_certifies(self):
        m = RiskMatrix(values=np.zeros((100, 1)), bounded_unit=True)
        spec = ControlSpec(alpha=0.5, delta=0.1, method="mean")
        res = calibrate_mean_risk(m, grid_of(1), spec)
        assert res.p_values[0] == pytest.approx(math.exp(-50.0))
        assert res.certified == (0,)
        assert res.selected == 0

    def test_mean_at_alpha_never_certifies(self):
        m = RiskMatrix(values=np.full((50, 3), 0.7), bounded_unit=True)
        spec = ControlSpec(alpha=0.5, delta=0.1, method="mean")
        res = calibrate_mean_risk(m, grid_of(3), spec)
        assert res.p_values == (1.0, 1.0, 1.0)
        assert res.certified == ()
        assert res.selected is None

    def test_unbounded_matrix_rejected(self):
        m = RiskMatrix(values=np.full((10, 1), 0.1), bounded_unit=False)
        spec = ControlSpec(alpha=0.5, delta=0.1, method="mean")
        with pytest.raises(ValidationError, match="bounded_unit"):
            calibrate_mean_risk(m, grid_of(1), spec)

    def test_wrong_method_rejected(self):
        m = RiskMatrix(values=np.full((10, 1), 0.1), bounded_unit=True)
        spec = ControlSpec(alpha=0.5, delta=0.1, method="quantile", q=0.1)
        with pytest.raises(ValidationError, match="method"):
            calibrate_mean_risk(m, grid_of(1), spec)

    def test_reward_matrix_drives_selection(self):
        rng = np.random.default_rng(3)
        m = RiskMatrix(values=rng.random((200, 2)) * 0.1, bounded_unit=True)
        spec = ControlSpec(alpha=0.5, delta=0.1, method="mean")
        rewards = np.column_stack([np.full(200, -9.0), np.full(200, -1.0)])
        res = calibrate_mean_risk(m, grid_of(2), spec, rewards=rewards)
        assert res.certified == (0, 1)
        assert res.selected == 1

    def test_default_selection_prefers_lower_risk(self):
        m = RiskMatrix(values=np.column_stack([np.full(100, 0.05), np.full(100, 0.02)]),
                       bounded_unit=True)
        spec = ControlSpec(alpha=0.5, delta=0.1, method="mean")
        res = calibrate_mean_risk(m, grid_of(2), spec)
        assert res.selected == 1


class TestQuantileCalibration:
    def test_ramp_column_certifies(self):
        risks = (np.arange(1, 1001) / 1000.0).reshape(-1, 1)
        m = RiskMatrix(values=risks, bounded_unit=True)
        spec = ControlSpec(alpha=0.96, delta=0.1, method="quantile", q=0.1)
        res = calibrate_quantile_risk(m, grid_of(1), spec)
        assert res.p_values[0] == pytest.approx(7.185e-4, abs=2e-5)
        assert res.certified == (0,)

    def test_vacuous_sample_size(self):
        rng = np.random.default_rng(1)
        m = RiskMatrix(values=rng.random((100, 4)), bounded_unit=True)
        spec = ControlSpec(alpha=0.9, delta=0.1, method="quantile", q=0.1)
        res = calibrate_quantile_risk(m, grid_of(4), spec)
        assert res.p_values == (1.0, 1.0, 1.0, 1.0)
        assert res.certified == ()

    def test_identical_columns_identical_p(self):
        rng = np.random.default_rng(2)
        col = rng.exponential(size=500)
        m = RiskMatrix(values=np.column_stack([col, col]), bounded_unit=False)
        spec = ControlSpec(alpha=2.0, delta=0.1, method="quantile", q=0.2)
        res = calibrate_quantile_risk(m, grid_of(2), spec)
        assert res.p_values[0] == res.p_values[1]

    def test_fst_prefix(self):
        rng = np.random.default_rng(4)
        good = rng.random(400) * 0.3
        bad = rng.random(400) * 3.0
        m = RiskMatrix(values=np.column_stack([bad, good, good]), bounded_unit=False)
        spec = ControlSpec(alpha=0.6, delta=0.1, method="quantile", q=0.1,
                           fwer="fst", ordering=(1, 2, 0))
        res = calibrate_quantile_risk(m, grid_of(3), spec)
        assert res.certified == (1, 2)

    def test_fst_default_ordering_is_grid_order(self):
        rng = np.random.default_rng(5)
        good = rng.random(400) * 0.3
        bad = rng.random(400) * 3.0
        m = RiskMatrix(values=np.column_stack([good, bad, good]), bounded_unit=False)
        spec = ControlSpec(alpha=0.6, delta=0.1, method="quantile", q=0.1, fwer="fst")
        res = calibrate_quantile_risk(m, grid_of(3), spec)
        assert res.certified == (0,)


class TestStructuralProperties:
    def test_column_permutation_permutes_p_values(self):
        rng = np.random.default_rng(6)
        values = rng.random((300, 5))
        spec = ControlSpec(alpha=0.6, delta=0.1, method="quantile", q=0.2)
        base = calibrate(RiskMatrix(values=values, bounded_unit=True), grid_of(5), spec)
        perm = [3, 0, 4, 1, 2]
        permuted = calibrate(
            RiskMatrix(values=values[:, perm], bounded_unit=True), grid_of(5), spec
        )
        assert permuted.p_values == tuple(base.p_values[j] for j in perm)

    def test_row_shuffle_leaves_p_values(self):
        rng = np.random.default_rng(7)
        values = rng.random((250, 3))
        spec = ControlSpec(alpha=0.5, delta=0.1, method="mean")
        base = calibrate(RiskMatrix(values=values, bounded_unit=True), grid_of(3), spec)
        shuffled = values[rng.permutation(250), :]
        again = calibrate(RiskMatrix(values=shuffled, bounded_unit=True), grid_of(3), spec)
        assert base.p_values == again.p_values

    def test_determinism(self):
        rng = np.random.default_rng(8)
        values = rng.random((200, 4))
        spec = ControlSpec(alpha=0.7, delta=0.2, method="quantile", q=0.15)
        a = calibrate(RiskMatrix(values=values, bounded_unit=True), grid_of(4), spec, seed=5)
        b = calibrate(RiskMatrix(values=values, bounded_unit=True), grid_of(4), spec, seed=5)
        assert a == b

    def test_dispatcher_routes_by_method(self):
        m = RiskMatrix(values=np.full((50, 1), 0.01), bounded_unit=True)
        res_mean = calibrate(m, grid_of(1), ControlSpec(alpha=0.5, delta=0.1, method="mean"))
        res_q = calibrate(
            m, grid_of(1), ControlSpec(alpha=0.5, delta=0.1, method="quantile", q=0.5)
        )
        assert res_mean.spec.method == "mean"
        assert res_q.spec.method == "quantile"
