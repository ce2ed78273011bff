"""Toy downlink resource-block scheduler used as a risk-generating environment.

Each episode schedules packet transmissions for a handful of user
equipments (UEs) over a few thousand 1 ms transmission time intervals
(TTIs). A four-component score weighs channel quality, queue backlog,
oldest-packet age, and an allocation-fairness term; blocks go greedily to
the highest-scoring UEs. The per-episode risk downstream is the mean
delivery delay of the most demanding QoS class.

All episode randomness (UE classes, arrivals, channel paths) is drawn
up-front from the episode seed, so two episodes with the same seed see
identical exogenous streams regardless of the scheduling weights. The
per-TTI dynamics run in a numba-compiled kernel that releases the GIL;
episodes can therefore be simulated concurrently from threads.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np
from numba import njit

from ..core import HyperGrid, HyperPoint, RiskMatrix, ValidationError

__all__ = [
    "SchedulerConfig",
    "EpisodeTrace",
    "run_episode",
    "episode_risk",
    "risk_reward_matrix",
    "build_multiplier_grid",
]

GRID_CAP_DEFAULT = 10**6


@dataclass(frozen=True)
class SchedulerConfig:
    """Static parameters of the toy scheduler.

    QoS class k has per-TTI packet arrival probability arrival_probs[k]
    and delay budget budgets_ms[k]; class 0 is the most demanding. Each
    UE's channel quality follows a mean-reverting AR(1) process reflected
    into [0, 1]; the per-UE reversion level is drawn once per episode from
    channel_mean +- channel_mean_spread, giving persistent good- and
    bad-channel users. One allocated block delivers up to
    round(serve_rate * cqi) head-of-line packets.
    """

    n_ue: int = 8
    n_rb: int = 5
    n_tti: int = 2000
    arrival_probs: tuple[float, ...] = (0.6, 0.55, 0.5, 0.45)
    budgets_ms: tuple[float, ...] = (10.0, 20.0, 50.0, 100.0)
    buffer_cap: int = 100
    serve_rate: float = 2.0
    channel_coeff: float = 0.9
    channel_noise: float = 0.05
    channel_mean: float = 0.5
    channel_mean_spread: float = 0.25

    def __post_init__(self) -> None:
        object.__setattr__(self, "arrival_probs", tuple(float(p) for p in self.arrival_probs))
        object.__setattr__(self, "budgets_ms", tuple(float(b) for b in self.budgets_ms))
        if self.n_ue < 1 or self.n_rb < 1 or self.n_tti < 1 or self.buffer_cap < 1:
            raise ValidationError("n_ue, n_rb, n_tti, and buffer_cap must all be >= 1")
        if len(self.arrival_probs) != len(self.budgets_ms) or not self.arrival_probs:
            raise ValidationError(
                "arrival_probs and budgets_ms must be non-empty and of equal length"
            )
        for p in self.arrival_probs:
            if not (0.0 <= p <= 1.0):
                raise ValidationError(f"arrival probability {p} outside [0, 1]")
        for a, b in zip(self.budgets_ms, self.budgets_ms[1:]):
            if not (a < b):
                raise ValidationError("budgets_ms must be strictly increasing")
        if self.serve_rate <= 0:
            raise ValidationError(f"serve_rate must be > 0, got {self.serve_rate}")
        if not (0.0 <= self.channel_coeff < 1.0):
            raise ValidationError("channel_coeff must lie in [0, 1)")
        if self.channel_noise < 0 or not (0.0 <= self.channel_mean <= 1.0):
            raise ValidationError("invalid channel parameters")
        if not (0.0 <= self.channel_mean_spread <= min(self.channel_mean,
                                                       1.0 - self.channel_mean)):
            raise ValidationError(
                "channel_mean_spread must keep per-UE channel means inside [0, 1]"
            )

    @property
    def n_classes(self) -> int:
        return len(self.budgets_ms)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_ue": self.n_ue,
            "n_rb": self.n_rb,
            "n_tti": self.n_tti,
            "arrival_probs": list(self.arrival_probs),
            "budgets_ms": list(self.budgets_ms),
            "buffer_cap": self.buffer_cap,
            "serve_rate": self.serve_rate,
            "channel_coeff": self.channel_coeff,
            "channel_noise": self.channel_noise,
            "channel_mean": self.channel_mean,
            "channel_mean_spread": self.channel_mean_spread,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SchedulerConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass(frozen=True)
class EpisodeTrace:
    """Everything observable from one simulated episode.

    Delays are in ms, recorded at delivery; packets dropped on buffer
    overflow or still queued at episode end leave no delay sample but do
    count as QoS violations in the reward (negative violation count).
    """

    delays_by_class: tuple[np.ndarray, ...]
    reward: float
    seed: int
    arrived: int
    served: int
    dropped: int
    residual: int

    @property
    def class1_delays(self) -> np.ndarray:
        return self.delays_by_class[0]

    @property
    def class1_empty(self) -> bool:
        return self.delays_by_class[0].size == 0


@njit(cache=True, nogil=True)
def _channel_paths(ue_mean, noise, coeff, out):
    n_tti, n_ue = noise.shape
    for u in range(n_ue):
        x = ue_mean[u]
        for t in range(n_tti):
            x = ue_mean[u] + coeff * (x - ue_mean[u]) + noise[t, u]
            while x < 0.0 or x > 1.0:
                if x < 0.0:
                    x = -x
                if x > 1.0:
                    x = 2.0 - x
            out[t, u] = x


@njit(cache=True, nogil=True)
def _run_kernel(weights, arrivals, cqi, ue_class, budgets, n_rb, buffer_cap,
                serve_rate):
    """Simulate one episode for one weight vector on fixed exogenous streams.

    Returns (delays, pkt_class, arrived, dropped, residual, violations)
    where delays/pkt_class cover delivered packets only.
    """
    n_tti, n_ue = arrivals.shape
    arr_time = np.zeros((n_ue, buffer_cap), dtype=np.int64)
    head = np.zeros(n_ue, dtype=np.int64)
    qlen = np.zeros(n_ue, dtype=np.int64)
    alloc_tot = np.zeros(n_ue, dtype=np.int64)
    blocks = np.zeros(n_ue, dtype=np.int64)
    scores = np.zeros(n_ue, dtype=np.float64)
    order = np.zeros(n_ue, dtype=np.int64)
    delays = np.zeros(n_tti * n_ue, dtype=np.int64)
    pkt_class = np.zeros(n_tti * n_ue, dtype=np.int64)
    total_alloc = 0
    arrived = 0
    dropped = 0
    served = 0
    late = 0

    for t in range(n_tti):
        # arrivals land before scheduling, so same-TTI delivery is possible
        for u in range(n_ue):
            if arrivals[t, u]:
                arrived += 1
                if qlen[u] == buffer_cap:
                    dropped += 1
                else:
                    arr_time[u, (head[u] + qlen[u]) % buffer_cap] = t
                    qlen[u] += 1

        any_eligible = False
        for u in range(n_ue):
            if qlen[u] > 0:
                any_eligible = True
                share = 0.0
                if total_alloc > 0:
                    share = alloc_tot[u] / total_alloc
                age = t - arr_time[u, head[u]]
                scores[u] = (
                    weights[0] * cqi[t, u]
                    + weights[1] * (qlen[u] / buffer_cap)
                    + weights[2] * (age / n_tti)
                    + weights[3] * (1.0 - share)
                )
            else:
                scores[u] = -1e30

        for u in range(n_ue):
            blocks[u] = 0

        if any_eligible:
            # rotation by TTI breaks score ties round-robin; the insertion
            # sort is stable, so equal scores keep rotation order
            for i in range(n_ue):
                order[i] = (t + i) % n_ue
            for i in range(1, n_ue):
                u = order[i]
                s = scores[u]
                j = i - 1
                while j >= 0 and scores[order[j]] < s:
                    order[j + 1] = order[j]
                    j -= 1
                order[j + 1] = u

            remaining = n_rb
            while remaining > 0:
                progressed = False
                for i in range(n_ue):
                    u = order[i]
                    if qlen[u] == 0:
                        continue
                    blocks[u] += 1
                    remaining -= 1
                    progressed = True
                    if remaining == 0:
                        break
                if not progressed:
                    break

            for u in range(n_ue):
                if blocks[u] == 0 or qlen[u] == 0:
                    continue
                per_block = int(serve_rate * cqi[t, u] + 0.5)
                cap = blocks[u] * per_block
                n_serve = qlen[u] if qlen[u] < cap else cap
                for _ in range(n_serve):
                    arr = arr_time[u, head[u]]
                    head[u] = (head[u] + 1) % buffer_cap
                    qlen[u] -= 1
                    d = t - arr + 1
                    delays[served] = d
                    pkt_class[served] = ue_class[u]
                    served += 1
                    if d > budgets[ue_class[u]]:
                        late += 1

            for u in range(n_ue):
                alloc_tot[u] += blocks[u]
                total_alloc += blocks[u]

    residual = 0
    for u in range(n_ue):
        residual += qlen[u]
    violations = late + dropped + residual
    return delays[:served], pkt_class[:served], arrived, dropped, residual, violations


@njit(cache=True, nogil=True)
def _batch_kernel(weight_matrix, arrivals, cqi, ue_class, budgets, n_rb,
                  buffer_cap, serve_rate):
    """One episode's (risk, reward) for every candidate weight vector."""
    m = weight_matrix.shape[0]
    risks = np.zeros(m, dtype=np.float64)
    rewards = np.zeros(m, dtype=np.float64)
    for j in range(m):
        delays, pkt_class, _, _, _, violations = _run_kernel(
            weight_matrix[j], arrivals, cqi, ue_class, budgets, n_rb,
            buffer_cap, serve_rate,
        )
        total = 0.0
        count = 0
        for k in range(delays.shape[0]):
            if pkt_class[k] == 0:
                total += delays[k]
                count += 1
        risks[j] = total / count if count > 0 else 0.0
        rewards[j] = -float(violations)
    return risks, rewards


def _episode_streams(cfg: SchedulerConfig, seed: int):
    """Exogenous randomness of one episode: UE classes, arrivals, channel paths.

    Draw order (classes, per-UE channel means, channel noise, arrivals) is
    part of the reproducibility contract; changing it changes every seeded
    result.
    """
    rng = np.random.default_rng(seed)
    ue_class = rng.integers(0, cfg.n_classes, cfg.n_ue)
    ue_mean = cfg.channel_mean + cfg.channel_mean_spread * (2.0 * rng.random(cfg.n_ue) - 1.0)
    noise = rng.normal(0.0, cfg.channel_noise, (cfg.n_tti, cfg.n_ue))
    probs = np.array(cfg.arrival_probs, dtype=np.float64)
    arrivals = (rng.random((cfg.n_tti, cfg.n_ue)) < probs[ue_class]).astype(np.uint8)
    cqi = np.empty((cfg.n_tti, cfg.n_ue), dtype=np.float64)
    _channel_paths(ue_mean, noise, cfg.channel_coeff, cqi)
    return ue_class.astype(np.int64), arrivals, cqi


def _check_weights(params: Sequence[float]) -> np.ndarray:
    w = np.asarray(params, dtype=np.float64)
    if w.shape != (4,):
        raise ValidationError(
            f"scheduler weights must have exactly 4 entries, got {w.shape}"
        )
    if not np.isfinite(w).all() or (w < 0).any():
        raise ValidationError(f"scheduler weights must be finite and >= 0, got {w}")
    if not (w > 0).any():
        raise ValidationError("scheduler weights must not all be zero")
    return w


def run_episode(cfg: SchedulerConfig, lam: HyperPoint, seed: int) -> EpisodeTrace:
    """Simulate one episode under weight vector lam; deterministic given seed."""
    weights = _check_weights(lam.params)
    ue_class, arrivals, cqi = _episode_streams(cfg, seed)
    budgets = np.array(cfg.budgets_ms, dtype=np.float64)
    delays, pkt_class, arrived, dropped, residual, violations = _run_kernel(
        weights, arrivals, cqi, ue_class, budgets, cfg.n_rb, cfg.buffer_cap,
        cfg.serve_rate,
    )
    by_class = tuple(
        delays[pkt_class == k].astype(np.float64) for k in range(cfg.n_classes)
    )
    return EpisodeTrace(
        delays_by_class=by_class,
        reward=-float(violations),
        seed=int(seed),
        arrived=int(arrived),
        served=int(delays.size),
        dropped=int(dropped),
        residual=int(residual),
    )


def episode_risk(trace: EpisodeTrace) -> float:
    """Mean delivery delay (ms) of the most demanding QoS class; 0 when empty.

    Episodes with no delivered class-0 packets are visible via
    trace.class1_empty so callers may exclude them.
    """
    d = trace.class1_delays
    return float(d.mean()) if d.size else 0.0


def risk_reward_matrix(
    cfg: SchedulerConfig,
    grid: HyperGrid,
    seeds: Sequence[int],
    workers: int = 1,
) -> tuple[RiskMatrix, np.ndarray]:
    """Simulate every (episode, candidate) pair; rows follow the seed order.

    Returns the episode-by-candidate risk matrix (mean class-0 delay, ms,
    not unit-bounded) and the matching reward matrix. All candidates of one
    episode share that episode's exogenous streams, so columns are directly
    comparable. Episodes run concurrently when workers > 1.
    """
    if grid.dimension != 4:
        raise ValidationError(f"scheduler grids must have dimension 4, got {grid.dimension}")
    weight_matrix = grid.params_array()
    for row in weight_matrix:
        _check_weights(row)
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValidationError("at least one episode seed is required")
    budgets = np.array(cfg.budgets_ms, dtype=np.float64)

    def one(seed: int):
        ue_class, arrivals, cqi = _episode_streams(cfg, seed)
        return _batch_kernel(
            weight_matrix, arrivals, cqi, ue_class, budgets, cfg.n_rb,
            cfg.buffer_cap, cfg.serve_rate,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, seeds))
    else:
        rows = [one(s) for s in seeds]
    risks = np.stack([r for r, _ in rows])
    rewards = np.stack([w for _, w in rows])
    return RiskMatrix(values=risks, bounded_unit=False), rewards


def build_multiplier_grid(
    base: HyperPoint,
    multipliers: Sequence[float],
    cap: int = GRID_CAP_DEFAULT,
) -> HyperGrid:
    """Cartesian product grid: every combination of per-coordinate multipliers.

    Point ids follow lexicographic order of the multiplier combinations,
    with the last coordinate varying fastest.
    """
    mults = [float(a) for a in multipliers]
    if not mults:
        raise ValidationError("multipliers must be non-empty")
    d = len(base.params)
    count = len(mults) ** d
    if count > cap:
        raise ValidationError(
            f"grid too large: {len(mults)}^{d} = {count} points exceeds cap {cap}"
        )
    vectors = [
        tuple(b * a for b, a in zip(base.params, combo))
        for combo in itertools.product(mults, repeat=d)
    ]
    return HyperGrid.from_params(vectors)
