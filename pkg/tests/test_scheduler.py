import numpy as np
import pytest

from riskcal import HyperPoint, ValidationError
from riskcal.envs import (
    SchedulerConfig,
    build_multiplier_grid,
    episode_risk,
    risk_reward_matrix,
    run_episode,
)
from riskcal.envs.scheduler import _episode_streams, _run_kernel

BASE = HyperPoint(0, (1.0, 1.0, 1.0, 1.0))


def small_cfg(**kw):
    defaults = dict(n_tti=200, n_ue=4, n_rb=2)
    defaults.update(kw)
    return SchedulerConfig(**defaults)


class TestConfig:
    def test_defaults_valid(self):
        cfg = SchedulerConfig()
        assert cfg.n_classes == 4

    def test_budgets_must_increase(self):
        with pytest.raises(ValidationError, match="increasing"):
            SchedulerConfig(budgets_ms=(10.0, 10.0, 50.0, 100.0))

    def test_probability_range(self):
        with pytest.raises(ValidationError, match="probability"):
            SchedulerConfig(arrival_probs=(0.5, 0.5, 0.5, 1.5))

    def test_round_trip(self):
        cfg = small_cfg(serve_rate=3.0)
        assert SchedulerConfig.from_dict(cfg.to_dict()) == cfg


class TestRunEpisode:
    def test_determinism(self):
        cfg = small_cfg()
        a = run_episode(cfg, BASE, seed=42)
        b = run_episode(cfg, BASE, seed=42)
        assert a.reward == b.reward
        assert all(np.array_equal(x, y) for x, y in zip(a.delays_by_class, b.delays_by_class))

    def test_seed_changes_outcome(self):
        cfg = small_cfg()
        a = run_episode(cfg, BASE, seed=1)
        b = run_episode(cfg, BASE, seed=2)
        assert a.arrived != b.arrived or a.reward != b.reward

    def test_packet_conservation(self):
        cfg = small_cfg(arrival_probs=(0.9, 0.8, 0.7, 0.6), n_rb=1, buffer_cap=5)
        for seed in range(5):
            tr = run_episode(cfg, BASE, seed=seed)
            assert tr.arrived == tr.served + tr.dropped + tr.residual
            assert tr.dropped > 0  # tiny buffer under heavy load must overflow

    def test_delay_bounds(self):
        cfg = small_cfg(arrival_probs=(0.9, 0.8, 0.7, 0.6), n_rb=1)
        tr = run_episode(cfg, BASE, seed=7)
        for delays in tr.delays_by_class:
            if delays.size:
                assert delays.min() >= 0
                assert delays.max() <= cfg.n_tti

    def test_reward_nonpositive(self):
        tr = run_episode(small_cfg(), BASE, seed=3)
        assert tr.reward <= 0

    def test_light_load_served_immediately(self):
        cfg = small_cfg(n_ue=1, n_rb=1, arrival_probs=(0.05, 0.05, 0.05, 0.05),
                        channel_mean=0.9, channel_mean_spread=0.05, serve_rate=2.0)
        tr = run_episode(cfg, BASE, seed=11)
        all_delays = np.concatenate([d for d in tr.delays_by_class if d.size])
        assert all_delays.max() <= 1.0

    def test_weight_validation(self):
        cfg = small_cfg()
        with pytest.raises(ValidationError, match="4 entries"):
            run_episode(cfg, HyperPoint(0, (1.0, 1.0)), seed=0)
        with pytest.raises(ValidationError, match="not all be zero"):
            run_episode(cfg, HyperPoint(0, (0.0, 0.0, 0.0, 0.0)), seed=0)
        with pytest.raises(ValidationError, match=">= 0"):
            run_episode(cfg, HyperPoint(0, (1.0, -1.0, 1.0, 1.0)), seed=0)


class TestEpisodeRisk:
    def test_mean_of_class0(self):
        tr = run_episode(small_cfg(), BASE, seed=5)
        if tr.class1_delays.size:
            assert episode_risk(tr) == pytest.approx(tr.class1_delays.mean())

    def test_empty_class0_gives_zero(self):
        # n_classes stays 4 but zero arrivals for class 0, so no class-0 UEs deliver
        cfg = small_cfg(arrival_probs=(0.0, 0.3, 0.3, 0.3))
        tr = run_episode(cfg, BASE, seed=6)
        assert tr.class1_empty
        assert episode_risk(tr) == 0.0


class TestAgeWeightVsRoundRobin:
    """Age-weighted priority vs the all-equal-scores rotation baseline.

    With zero weights every score ties and the rotation tie-break degrades
    to round robin. Observed over seeds 300..319 (frozen): the age-weighted
    max class-0 delay is <= the round-robin one on 15 of 20 seeds and
    clearly smaller in aggregate (692 vs 773 total).
    """

    def test_age_priority_beats_rotation_in_aggregate(self):
        cfg = SchedulerConfig(n_tti=500)
        budgets = np.array(cfg.budgets_ms)
        age_w = np.array([0.0, 0.0, 1.0, 0.0])
        rr_w = np.array([0.0, 0.0, 0.0, 0.0])
        max_age, max_rr, le_count = [], [], 0
        for seed in range(300, 320):
            ue_class, arrivals, cqi = _episode_streams(cfg, seed)
            outs = []
            for w in (age_w, rr_w):
                delays, cls, *_ = _run_kernel(w, arrivals, cqi, ue_class, budgets,
                                              cfg.n_rb, cfg.buffer_cap, cfg.serve_rate)
                sel = delays[cls == 0]
                outs.append(int(sel.max()) if sel.size else 0)
            a, r = outs
            max_age.append(a)
            max_rr.append(r)
            le_count += a <= r
        assert le_count >= 14
        assert sum(max_age) < sum(max_rr)


class TestRiskRewardMatrix:
    def test_matches_single_episode_path(self):
        cfg = small_cfg()
        grid = build_multiplier_grid(BASE, [0.5, 2.0])
        m, rewards = risk_reward_matrix(cfg, grid, seeds=[31, 32, 33])
        for i, seed in enumerate([31, 32, 33]):
            for j, pt in enumerate(grid.points):
                tr = run_episode(cfg, HyperPoint(0, pt.params), seed=seed)
                assert m.values[i, j] == pytest.approx(episode_risk(tr))
                assert rewards[i, j] == tr.reward

    def test_worker_count_does_not_change_values(self):
        cfg = small_cfg()
        grid = build_multiplier_grid(BASE, [0.5, 2.0])
        seeds = list(range(40, 52))
        a, ra = risk_reward_matrix(cfg, grid, seeds, workers=1)
        b, rb = risk_reward_matrix(cfg, grid, seeds, workers=3)
        assert a == b
        assert np.array_equal(ra, rb)

    def test_not_unit_bounded(self):
        cfg = small_cfg()
        grid = build_multiplier_grid(BASE, [1.0])
        m, _ = risk_reward_matrix(cfg, grid, seeds=[1])
        assert not m.bounded_unit


class TestMultiplierGrid:
    def test_256_points(self):
        g = build_multiplier_grid(BASE, [0.5, 1.0, 1.5, 2.0])
        assert len(g) == 256
        assert g.dimension == 4

    def test_identity(self):
        g = build_multiplier_grid(BASE, [1.0])
        assert g.points[0].params == BASE.params

    def test_scalar_base(self):
        g = build_multiplier_grid(HyperPoint(0, (2.0,)), [0.5, 1.0])
        assert [p.params for p in g.points] == [(1.0,), (2.0,)]

    def test_lexicographic_order(self):
        g = build_multiplier_grid(HyperPoint(0, (1.0, 1.0)), [1.0, 2.0])
        assert [p.params for p in g.points] == [
            (1.0, 1.0), (1.0, 2.0), (2.0, 1.0), (2.0, 2.0)]

    def test_cap(self):
        with pytest.raises(ValidationError, match="grid too large"):
            build_multiplier_grid(BASE, list(np.linspace(0.1, 2.0, 50)), cap=10**6)
