"""Adversarial retraining of the learned controller via a mixed trace pool."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cem import CemConfig, cem_maximize
from .learned import (PolicyNet, RewardParams, TrainLogRow, episode_return)
from .netsim import BandwidthTrace, SimConfig


@dataclass
class TracePool:
    benign: list[BandwidthTrace] = field(default_factory=list)
    adversarial: list[BandwidthTrace] = field(default_factory=list)
    mix_p: float = 0.2

    def __post_init__(self):
        if not 0 <= self.mix_p <= 1:
            raise ValueError("mix_p must be in [0, 1]")
        if self.mix_p < 1 and not self.benign:
            raise ValueError("benign traces required when mix_p < 1")
        if self.mix_p > 0 and not self.adversarial:
            raise ValueError("adversarial traces required when mix_p > 0")


def sample_trace(pool: TracePool, rng) -> BandwidthTrace:
    """Bernoulli(mix_p) picks the adversarial list, then uniform within it."""
    if pool.mix_p > 0 and float(rng.random()) < pool.mix_p:
        traces = pool.adversarial
    else:
        traces = pool.benign if pool.benign else pool.adversarial
    return traces[int(rng.integers(0, len(traces)))]


def adversarial_retrain(policy: PolicyNet, pool: TracePool, episodes: int,
                        sim: SimConfig, reward: RewardParams,
                        cem: CemConfig | None = None) -> tuple[PolicyNet, list[TrainLogRow]]:
    """Continue CEM training from `policy`, one sampled trace per episode.

    Reward, topology and optimizer are identical to the original training;
    only the trace distribution changes. The input policy object is never
    mutated; a new one is returned.
    """
    cem = cem or CemConfig()
    generations = episodes // cem.population
    if generations == 0:
        return policy, []

    train_sim = SimConfig(**{**sim.__dict__, "record_acks": False})

    def objective(params, ep_seed):
        rng = np.random.default_rng(ep_seed)
        trace = sample_trace(pool, rng)
        return episode_return(policy.with_params(params), trace, train_sim, reward)

    result = cem_maximize(objective, dim=policy.n_params, generations=generations,
                          config=cem, init_mean=policy.params)
    rows = [TrainLogRow(h.generation, h.elite_mean, h.best_return) for h in result.history]
    return policy.with_params(result.best_params), rows


@dataclass
class SuiteRow:
    trace_set: str
    utilization: float
    mean_delay_ms: float


def evaluate_suite(policy: PolicyNet, trace_sets: dict, sim: SimConfig,
                   reward: RewardParams, runs_per_trace: int = 3) -> list[SuiteRow]:
    """Per-set mean utilization/delay over runs_per_trace repetitions."""
    from .learned import LearnedController
    from .netsim import run_episode

    if not trace_sets:
        raise ValueError("need at least one trace set")
    rows = []
    for name, traces in trace_sets.items():
        utils, delays = [], []
        for trace in traces:
            for rep in range(runs_per_trace):
                cfg = SimConfig(**{**sim.__dict__, "rng_seed": sim.rng_seed + rep,
                                   "record_acks": False})
                ctl = LearnedController(policy, b_max=reward.b_max)
                log = run_episode(cfg, trace, ctl)
                utils.append(log.mean_utilization())
                delays.append(log.mean_queuing_delay_ms())
        rows.append(SuiteRow(trace_set=name,
                             utilization=sum(utils) / len(utils),
                             mean_delay_ms=sum(delays) / len(delays)))
    return rows
