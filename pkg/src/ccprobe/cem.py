"""Cross-entropy method over a flat parameter vector.

Shared by the learned controller and the adversary. Gradient-free,
deterministic given the seed: sample a Gaussian population, evaluate, refit
mean/std to the elite fraction, decay the exploration noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class OptimizerError(RuntimeError):
    pass


@dataclass
class CemConfig:
    population: int = 32
    elite_frac: float = 0.25
    sigma0: float = 1.0
    extra_noise: float = 0.25       # additive std floor, decayed per generation
    noise_decay: float = 0.9
    seed: int = 0


@dataclass
class GenerationStats:
    generation: int
    elite_mean: float
    best_return: float
    mean_return: float
    constraint_satisfaction_rate: float = float("nan")


@dataclass
class CemResult:
    best_params: np.ndarray
    mean_params: np.ndarray
    elite_params: list[np.ndarray]
    history: list[GenerationStats] = field(default_factory=list)


def cem_maximize(objective, dim: int, generations: int, config: CemConfig,
                 init_mean: np.ndarray | None = None) -> CemResult:
    """Maximize objective(params, episode_seed) -> float (or (float, ok_rate)).

    Raises OptimizerError if a generation's returns have exactly zero variance
    before the budget is exhausted (degenerate reward signal).
    """
    rng = np.random.default_rng(config.seed)
    mean = np.zeros(dim) if init_mean is None else np.asarray(init_mean, dtype=float).copy()
    std = np.full(dim, config.sigma0)
    n_elite = max(1, int(round(config.population * config.elite_frac)))

    best_params = mean.copy()
    best_return = -np.inf
    elites = [mean.copy()]
    history: list[GenerationStats] = []

    for gen in range(generations):
        noise = config.extra_noise * (config.noise_decay ** gen)
        pop = mean + (std + noise) * rng.standard_normal((config.population, dim))
        returns = np.empty(config.population)
        ok = np.full(config.population, np.nan)
        for i in range(config.population):
            ep_seed = int(rng.integers(0, 2**31 - 1))
            out = objective(pop[i], ep_seed)
            if isinstance(out, tuple):
                returns[i], ok[i] = out
            else:
                returns[i] = out
        order = np.argsort(returns)[::-1]
        elite_idx = order[:n_elite]
        elites = [pop[i].copy() for i in elite_idx]
        mean = pop[elite_idx].mean(axis=0)
        std = pop[elite_idx].std(axis=0)
        if returns[order[0]] > best_return:
            best_return = float(returns[order[0]])
            best_params = pop[order[0]].copy()
        history.append(GenerationStats(
            generation=gen,
            elite_mean=float(returns[elite_idx].mean()),
            best_return=float(returns[order[0]]),
            mean_return=float(returns.mean()),
            constraint_satisfaction_rate=float(np.nanmean(ok)) if not np.all(np.isnan(ok)) else float("nan"),
        ))
        if gen < generations - 1 and float(returns.std()) == 0.0:
            raise OptimizerError("population returns collapsed to zero variance")
    return CemResult(best_params=best_params, mean_params=mean,
                     elite_params=elites, history=history)
