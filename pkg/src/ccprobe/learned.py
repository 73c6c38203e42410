"""Parametric learned congestion controller and its reward.

The controller acts once per monitoring interval: a bounded action a in
[-a_max, a_max] scales cwnd by 2^a. The function approximator is a linear
map over a fixed normalized feature vector, optionally with one tanh hidden
layer (width 16), small enough for the shared CEM optimizer.

Defaults gamma=1.2, lambda=10, B_max = max capacity of the active trace set
are config keys; see the README for the caveats around them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cem import CemConfig, CemResult, OptimizerError, cem_maximize
from .netsim import Observation, SimConfig, run_episode


class DomainError(ValueError):
    pass


@dataclass
class RewardParams:
    lam: float = 10.0     # loss-penalty coefficient
    gamma: float = 1.2    # delay margin coefficient, >= 1
    b_max: float = 96.0   # normalizing bandwidth, Mbps

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if self.b_max <= 0:
            raise ValueError("b_max must be > 0")


def delay_factor(srtt_ms: float, min_rtt_ms: float, gamma: float) -> float:
    if min_rtt_ms <= 0:
        raise DomainError("min_rtt must be > 0")
    if gamma * min_rtt_ms < srtt_ms:
        return gamma * min_rtt_ms / srtt_ms
    return 1.0


def controller_reward(obs: Observation, params: RewardParams) -> float:
    """R_t = ((T_t - lam * L_t) / B_max) * D_t."""
    d = delay_factor(obs.srtt_ms, obs.min_rtt_ms, params.gamma)
    return (obs.throughput_mbps - params.lam * obs.loss_mbps) / params.b_max * d


FEATURE_NAMES = ("rtt_ratio", "throughput_norm", "loss_rate", "qdelay_norm", "prev_action")


def observation_features(obs: Observation, b_max: float, prev_action: float) -> np.ndarray:
    """Normalized feature vector shared by the learned controller and adversary."""
    min_rtt = max(obs.visible_min_rtt_ms, 1e-6)
    return np.array([
        obs.srtt_ms / min_rtt,
        obs.throughput_mbps / b_max,
        obs.loss_rate,
        (obs.srtt_ms - obs.visible_min_rtt_ms) / min_rtt,
        prev_action,
    ])


@dataclass
class PolicyNet:
    """Flat-vector parametric policy: linear head, optional tanh hidden layer."""

    n_features: int
    hidden: int = 16
    a_max: float = 2.0
    params: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.params is None:
            self.params = np.zeros(self.n_params)
        else:
            self.params = np.asarray(self.params, dtype=float)
            if self.params.shape != (self.n_params,):
                raise ValueError(f"expected {self.n_params} parameters, got {self.params.shape}")

    @property
    def n_params(self) -> int:
        if self.hidden == 0:
            return self.n_features + 1
        return self.hidden * (self.n_features + 1) + self.hidden + 1

    def act(self, features: np.ndarray) -> float:
        """Bounded action in [-a_max, a_max]; hard clamp after the tanh head."""
        x = np.asarray(features, dtype=float)
        p = self.params
        if self.hidden == 0:
            out = float(p[:self.n_features] @ x + p[self.n_features])
        else:
            nf, nh = self.n_features, self.hidden
            w1 = p[:nh * nf].reshape(nh, nf)
            b1 = p[nh * nf:nh * nf + nh]
            w2 = p[nh * nf + nh:nh * nf + nh + nh]
            b2 = p[-1]
            out = float(w2 @ np.tanh(w1 @ x + b1) + b2)
        a = self.a_max * math.tanh(out)
        return min(self.a_max, max(-self.a_max, a))

    def with_params(self, params: np.ndarray) -> "PolicyNet":
        return PolicyNet(n_features=self.n_features, hidden=self.hidden,
                         a_max=self.a_max, params=np.asarray(params, dtype=float))


CHECKPOINT_MAGIC = "ccprobe-policy v1"


def save_policy(policy: PolicyNet, path: str, feature_names=FEATURE_NAMES) -> None:
    with open(path, "w") as f:
        f.write(CHECKPOINT_MAGIC + "\n")
        f.write("features " + " ".join(feature_names) + "\n")
        f.write(f"hidden {policy.hidden}\n")
        f.write(f"a_max {float(policy.a_max)!r}\n")
        for v in policy.params:
            f.write(f"{float(v)!r}\n")


def load_policy(path: str) -> PolicyNet:
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a {CHECKPOINT_MAGIC} checkpoint")
    features = lines[1].split()[1:]
    hidden = int(lines[2].split()[1])
    a_max = float(lines[3].split()[1])
    params = np.array([float(x) for x in lines[4:] if x])
    return PolicyNet(n_features=len(features), hidden=hidden, a_max=a_max, params=params)


class LearnedController:
    """Interval-driven controller: cwnd <- max(1, cwnd * 2^a) per interval."""

    name = "learned"

    def __init__(self, policy: PolicyNet, b_max: float = 96.0,
                 cwnd_max: float = 4096.0):
        self.policy = policy
        self.b_max = b_max
        self.cwnd_max = cwnd_max  # far above any feasible BDP + buffer
        self.cwnd = 10.0
        self.ssthresh = 1e9
        self.phase = None
        self.pacing_rate_bps = None
        self.prev_action = 0.0
        self.actions: list[float] = []

    def on_ack(self, ack) -> None:
        pass

    def on_loss(self, kind) -> None:
        pass

    def on_interval(self, obs: Observation) -> None:
        feats = observation_features(obs, self.b_max, self.prev_action)
        a = self.policy.act(feats)
        self.cwnd = min(self.cwnd_max, max(1.0, self.cwnd * 2.0 ** a))
        self.prev_action = a
        self.actions.append(a)


@dataclass
class TrainLogRow:
    generation: int
    elite_mean: float
    best_return: float


def episode_return(policy: PolicyNet, trace, sim: SimConfig,
                   reward: RewardParams, intercept=None) -> float:
    """Mean per-interval controller reward over one episode."""
    ctl = LearnedController(policy, b_max=reward.b_max)
    log = run_episode(sim, trace, ctl, intercept=intercept)
    rs = [controller_reward(o, reward) for o in log.observations]
    return sum(rs) / len(rs) if rs else 0.0


def train_controller(policy: PolicyNet, traces, episodes: int,
                     sim: SimConfig, reward: RewardParams,
                     cem: CemConfig | None = None,
                     holdout=None) -> tuple[PolicyNet, list[TrainLogRow]]:
    """CEM training over a trace pool; returns (policy, per-generation log).

    `episodes` is a total rollout budget; generations = episodes // population.
    With a zero budget the policy is returned unchanged.
    """
    if not traces:
        raise ValueError("trace pool must be non-empty")
    cem = cem or CemConfig()
    generations = episodes // cem.population
    if generations == 0:
        return policy, []

    train_sim = SimConfig(**{**sim.__dict__, "record_acks": False})

    def objective(params, ep_seed):
        trace = traces[ep_seed % len(traces)]
        return episode_return(policy.with_params(params), trace, train_sim, reward)

    result = cem_maximize(objective, dim=policy.n_params, generations=generations,
                          config=cem, init_mean=policy.params)
    rows = [TrainLogRow(h.generation, h.elite_mean, h.best_return) for h in result.history]

    candidate = policy.with_params(result.best_params)
    # monotone-improvement contract, checked on a held-out trace
    check = holdout if holdout is not None else traces[0]
    if episode_return(candidate, check, train_sim, reward) >= \
            episode_return(policy, check, train_sim, reward):
        return candidate, rows
    return policy, rows
