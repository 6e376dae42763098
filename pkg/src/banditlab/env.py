"""Environments, adversaries, regret accounting and reproducible RNG streams."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ENV_STREAM_ID = 2**63  # reserved stream for config-level (replica-independent) draws


def derive_stream(master_seed: int, stream_id: int) -> np.random.Generator:
    """Return the RNG stream for (master_seed, stream_id).

    Streams are backed by the counter-based Philox generator keyed on both
    integers, so the draw sequence depends only on the pair and never on
    scheduling or on draws made from other streams.
    """
    key = np.array([master_seed % 2**64, stream_id % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_categorical(p: np.ndarray, rng: np.random.Generator) -> int:
    """Index drawn with probabilities p; one uniform draw per call."""
    u = rng.random()
    idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(idx, p.shape[0] - 1)


class BernoulliArm:
    """Reward in {0, 1} with the given mean."""

    def __init__(self, mean: float):
        if not 0.0 <= mean <= 1.0:
            raise ValueError(f"Bernoulli mean {mean} outside [0, 1]")
        self.mean = float(mean)

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.random() < self.mean)


class DiscreteArm:
    """Reward drawn from a finite support inside [0, 1]."""

    def __init__(self, support: Sequence[float], probs: Sequence[float]):
        self.support = np.asarray(support, dtype=float)
        self.probs = np.asarray(probs, dtype=float)
        if self.support.min() < 0.0 or self.support.max() > 1.0:
            raise ValueError("support values must lie in [0, 1]")
        if abs(self.probs.sum() - 1.0) > 1e-9 or (self.probs < 0).any():
            raise ValueError("probs must be a probability vector")
        self.mean = float(self.support @ self.probs)

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.choice(self.support, p=self.probs))


class StochasticEnv:
    """K arms with i.i.d. rewards in [0, 1]."""

    def __init__(self, arms: Sequence):
        if len(arms) < 1:
            raise ValueError("need at least one arm")
        self.arms = list(arms)
        self.means = np.array([a.mean for a in arms], dtype=float)
        if self.means.min() < 0.0 or self.means.max() > 1.0:
            raise ValueError("arm means must lie in [0, 1]")
        self.best_mean = float(self.means.max())
        self.best_arm = int(self.means.argmax())
        self.gaps = self.best_mean - self.means

    @classmethod
    def bernoulli(cls, means: Sequence[float]) -> "StochasticEnv":
        return cls([BernoulliArm(m) for m in means])

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    def sample_reward(self, arm: int, rng: np.random.Generator) -> float:
        if not 0 <= arm < self.n_arms:
            raise IndexError(f"arm {arm} out of range for K={self.n_arms}")
        return self.arms[arm].sample(rng)

    def sample_all_rewards(self, rng: np.random.Generator) -> np.ndarray:
        """One reward draw per arm (used by lower-bound experiments)."""
        return np.array([a.sample(rng) for a in self.arms])


def lower_bound_env(K: int, eps: float, best: int) -> StochasticEnv:
    """Bernoulli instance with means (1-eps)/2 everywhere except (1+eps)/2 at `best`."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps {eps} outside [0, 1)")
    if not 0 <= best < K:
        raise IndexError(f"best arm {best} out of range for K={K}")
    means = np.full(K, (1.0 - eps) / 2.0)
    means[best] = (1.0 + eps) / 2.0
    return StochasticEnv.bernoulli(means)


class ObliviousAdversary:
    """Loss sequence fixed in advance as an n-by-K matrix with entries in [0, 1]."""

    def __init__(self, loss_matrix: np.ndarray):
        m = np.asarray(loss_matrix, dtype=float)
        if m.ndim != 2:
            raise ValueError("loss matrix must be 2-dimensional (rounds x arms)")
        if m.min() < 0.0 or m.max() > 1.0:
            raise ValueError("losses must lie in [0, 1]")
        self.loss_matrix = m

    @property
    def horizon(self) -> int:
        return self.loss_matrix.shape[0]

    @property
    def n_arms(self) -> int:
        return self.loss_matrix.shape[1]

    def loss_vector(self, t: int) -> np.ndarray:
        return self.loss_matrix[t]


class NonObliviousAdversary:
    """Adversary that may react to the full history of past actions.

    `loss_fn` receives the tuple of actions played so far and must return a
    length-K loss vector in [0, 1]; it never sees the forecaster's internal
    randomness.
    """

    def __init__(self, loss_fn: Callable[[tuple], np.ndarray], n_arms: int):
        self.loss_fn = loss_fn
        self.n_arms = n_arms

    def loss_vector(self, history: tuple) -> np.ndarray:
        losses = np.asarray(self.loss_fn(history), dtype=float)
        if losses.shape != (self.n_arms,):
            raise ValueError(f"adversary returned shape {losses.shape}, expected ({self.n_arms},)")
        if losses.min() < 0.0 or losses.max() > 1.0:
            raise ValueError("adversary losses must lie in [0, 1]")
        return losses


@dataclass
class RunTrace:
    """Actions and realized losses of one run, plus per-arm pull counts."""

    actions: list = field(default_factory=list)
    losses: list = field(default_factory=list)

    def record(self, action: int, loss: float) -> None:
        self.actions.append(action)
        self.losses.append(loss)

    def __len__(self) -> int:
        return len(self.actions)

    def counts(self, n_arms: int) -> np.ndarray:
        c = np.zeros(n_arms, dtype=int)
        for a in self.actions:
            c[a] += 1
        return c


def pseudo_regret_stochastic(trace: RunTrace, env: StochasticEnv) -> float:
    """Sum over arms of gap times pull count, computed from the true means."""
    counts = trace.counts(env.n_arms)
    return float(env.gaps @ counts)


def pseudo_regret_oblivious(trace: RunTrace, adv: ObliviousAdversary) -> float:
    """Realized cumulative loss minus the best single arm's cumulative loss."""
    n = len(trace)
    if n > adv.horizon:
        raise ValueError(f"trace length {n} exceeds adversary horizon {adv.horizon}")
    if n == 0:
        return 0.0
    incurred = sum(adv.loss_matrix[t, a] for t, a in enumerate(trace.actions))
    best = adv.loss_matrix[:n].sum(axis=0).min()
    return float(incurred - best)


def losses_from_gains(gains: np.ndarray) -> np.ndarray:
    return 1.0 - np.asarray(gains, dtype=float)


def gains_from_losses(losses: np.ndarray) -> np.ndarray:
    return 1.0 - np.asarray(losses, dtype=float)
