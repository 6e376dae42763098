"""Exp3 and Exp3.P with their estimators, bound calculators and an exact oracle."""
from __future__ import annotations

import copy
import math

import numpy as np

from .env import sample_categorical


def exp_weights(scores: np.ndarray) -> np.ndarray:
    """Normalized exponential weights of `scores`, shifted by the max for stability."""
    scores = np.asarray(scores, dtype=float)
    w = np.exp(scores - scores.max())
    return w / w.sum()


def exp3_probs(cum_losses: np.ndarray, eta: float) -> np.ndarray:
    if eta <= 0:
        raise ValueError("eta must be positive")
    return exp_weights(-eta * np.asarray(cum_losses, dtype=float))


def importance_loss_estimate(p: np.ndarray, chosen: int, loss: float) -> np.ndarray:
    """loss / p[chosen] at the chosen coordinate, zero elsewhere."""
    p = np.asarray(p, dtype=float)
    if p[chosen] <= 0.0:
        raise ZeroDivisionError("chosen arm has zero probability")
    est = np.zeros_like(p)
    est[chosen] = loss / p[chosen]
    return est


class Exp3State:
    """Exponential weights over importance-weighted loss estimates.

    With a known horizon the fixed rate sqrt(2 ln K / (n K)) is used; the
    anytime variant recomputes eta_t = sqrt(ln K / (t K)) each round.
    """

    def __init__(self, K: int, n: int | None = None, eta: float | None = None,
                 anytime: bool = False):
        self.K = K
        self.anytime = anytime
        if eta is not None:
            self.eta = eta
        elif anytime:
            self.eta = None
        elif n is not None:
            self.eta = math.sqrt(2.0 * math.log(K) / (n * K))
        else:
            raise ValueError("need a horizon, an explicit eta, or anytime=True")
        self.cum_losses = np.zeros(K)
        self.t = 0  # rounds completed

    def current_eta(self) -> float:
        if self.eta is not None:
            return self.eta
        t = max(self.t, 1)
        return math.sqrt(math.log(self.K) / (t * self.K))

    def probs(self) -> np.ndarray:
        if self.t == 0:
            return np.full(self.K, 1.0 / self.K)
        return exp3_probs(self.cum_losses, self.current_eta())

    def select(self, rng: np.random.Generator) -> int:
        return sample_categorical(self.probs(), rng)

    def update(self, chosen: int, loss: float, sampling_probs: np.ndarray | None = None) -> None:
        """Apply the round's estimate; `sampling_probs` overrides the
        importance weights when the arm was drawn from another distribution."""
        p = self.probs() if sampling_probs is None else np.asarray(sampling_probs, float)
        self.cum_losses += importance_loss_estimate(p, chosen, loss)
        self.t += 1


def exp3p_params(n: int, K: int, delta: float | None = None) -> tuple[float, float, float]:
    """Return (beta, eta, gamma); delta=None selects the confidence-free beta."""
    if n < 1 or K < 2:
        raise ValueError("need n >= 1 and K >= 2")
    if delta is None:
        beta = math.sqrt(math.log(K) / (n * K))
    else:
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        beta = math.sqrt(math.log(K / delta) / (n * K))
    eta = 0.95 * math.sqrt(math.log(K) / (n * K))
    gamma = 1.05 * math.sqrt(K * math.log(K) / n)
    return beta, eta, gamma


def exp3p_gain_estimate(p: np.ndarray, chosen: int, gain: float, beta: float) -> np.ndarray:
    """(gain * 1{chosen=i} + beta) / p_i for every arm i."""
    p = np.asarray(p, dtype=float)
    if beta > 1.0:
        raise ValueError("beta must be at most 1")
    if (p <= 0.0).any():
        raise ZeroDivisionError("all arm probabilities must be positive")
    est = np.full_like(p, beta)
    est[chosen] += gain
    return est / p


class Exp3PState:
    """Gain-form exponential weights mixed with gamma/K uniform exploration."""

    def __init__(self, K: int, eta: float, gamma: float, beta: float):
        if not 0.0 <= gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        self.K = K
        self.eta = eta
        self.gamma = gamma
        self.beta = beta
        self.cum_gains = np.zeros(K)
        self.t = 0

    @classmethod
    def from_horizon(cls, K: int, n: int, delta: float | None = None) -> "Exp3PState":
        beta, eta, gamma = exp3p_params(n, K, delta)
        return cls(K, eta, gamma, beta)

    def probs(self) -> np.ndarray:
        soft = exp_weights(self.eta * self.cum_gains)
        return (1.0 - self.gamma) * soft + self.gamma / self.K

    def select(self, rng: np.random.Generator) -> int:
        return sample_categorical(self.probs(), rng)

    def update(self, chosen: int, gain: float) -> None:
        p = self.probs()
        self.cum_gains += exp3p_gain_estimate(p, chosen, gain, self.beta)
        self.t += 1

    def update_loss(self, chosen: int, loss: float) -> None:
        # losses are the module-wide convention; convert at the boundary
        self.update(chosen, 1.0 - loss)


def exp3_bound(n: int, K: int, anytime: bool = False) -> float:
    if anytime:
        return 2.0 * math.sqrt(n * K * math.log(K))
    return math.sqrt(2.0 * n * K * math.log(K))


def exp3p_bound(n: int, K: int, delta: float) -> float:
    return 5.15 * math.sqrt(n * K * math.log(K / delta))


def exp3p_expected_bound(n: int, K: int) -> float:
    return 5.15 * math.sqrt(n * K * math.log(K)) + math.sqrt(n * K / math.log(K))


def minimax_lower(n: int, K: int) -> float:
    return math.sqrt(n * K) / 20.0


def adversary_mean_gap_lower(n: int, K: int, eps: float) -> float:
    """Value the biased-coin construction forces on any forecaster."""
    return n * eps * (
        1.0 - 1.0 / K
        - math.sqrt(eps * math.log((1.0 + eps) / (1.0 - eps))) * math.sqrt(n / (2.0 * K))
    )


def exact_expectation_oracle(policy_factory, loss_matrix, max_paths: int = 10**6):
    """Exact expected cumulative loss and pseudo-regret of a randomized policy.

    Enumerates every action path, weighting it by the product of the policy's
    conditional probabilities. The policy object returned by `policy_factory`
    must be deterministic given past (arm, loss) observations and expose
    `probs()` and `update(chosen, loss)`.
    """
    losses = np.asarray(loss_matrix, dtype=float)
    n, K = losses.shape
    if K**n > max_paths:
        raise ValueError(f"{K}^{n} paths exceed the enumeration budget")

    def walk(state, t: int, weight: float) -> float:
        if t == n:
            return 0.0
        p = state.probs()
        total = 0.0
        for arm in range(K):
            if p[arm] == 0.0:
                continue
            child = copy.deepcopy(state)
            child.update(arm, losses[t, arm])
            total += p[arm] * (losses[t, arm] + walk(child, t + 1, weight * p[arm]))
        return total

    expected_loss = walk(policy_factory(), 0, 1.0)
    best_arm_loss = losses.sum(axis=0).min()
    return expected_loss, expected_loss - float(best_arm_loss)
