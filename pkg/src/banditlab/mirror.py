"""Legendre/potential machinery, mirror-descent cores, Exp2 with design
exploration, the m-set semi-bandit, and the Euclidean-ball strategy."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .adversarial import exp_weights
from .env import sample_categorical
from .geometry import (
    DesignWeights,
    doptimal_design,
    madow_sample,
    project_capped_simplex_negent,
    project_capped_simplex_potential,
)

X_FLOOR = 1e-12  # smallest coordinate kept alive for importance weighting


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    """Increasing convex bijection onto (0, inf) generating a coordinate-wise
    Legendre function; `a` is the supremum of its domain."""

    psi: Callable[[np.ndarray], np.ndarray]
    psi_prime: Callable[[np.ndarray], np.ndarray]
    psi_inv: Callable[[np.ndarray], np.ndarray]
    F_term: Callable[[np.ndarray], np.ndarray]
    a: float
    name: str = "potential"
    q: float | None = None


def power_potential(q: float) -> PotentialSpec:
    """psi(u) = (-u)^(-q) on (-inf, 0); q > 1."""
    if q <= 1.0:
        raise ValueError("the power exponent must exceed 1")
    return PotentialSpec(
        psi=lambda u: (-u) ** (-q),
        psi_prime=lambda u: q * (-u) ** (-q - 1.0),
        psi_inv=lambda s: -(s ** (-1.0 / q)),
        F_term=lambda x: -(q / (q - 1.0)) * x ** ((q - 1.0) / q),
        a=0.0,
        name=f"power-{q:g}",
        q=q,
    )


def exp_potential() -> PotentialSpec:
    """psi = exp; its coordinate-wise Legendre function is the negative entropy."""
    return PotentialSpec(
        psi=np.exp,
        psi_prime=np.exp,
        psi_inv=np.log,
        F_term=lambda x: np.where(x > 0.0, x * np.log(np.maximum(x, 1e-300)) - x, 0.0),
        a=math.inf,
        name="exp",
    )


@dataclass(frozen=True)
class LegendreSpec:
    """A mirror map together with the Bregman projection onto its feasible set."""

    F: Callable[[np.ndarray], float]
    grad_F: Callable[[np.ndarray], np.ndarray]
    grad_F_star: Callable[[np.ndarray], np.ndarray]
    bregman_project: Callable[[np.ndarray], np.ndarray]
    dual_domain_check: Callable[[np.ndarray], bool]
    name: str = "legendre"

    def divergence(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(self.F(x) - self.F(y) - self.grad_F(y) @ (x - y))


def _negentropy_value(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    pos = x > 0.0
    return float((x[pos] * np.log(x[pos])).sum() - x.sum())


def negentropy_simplex() -> LegendreSpec:
    return LegendreSpec(
        F=_negentropy_value,
        grad_F=np.log,
        grad_F_star=np.exp,
        bregman_project=lambda w: w / w.sum(),
        dual_domain_check=lambda u: True,
        name="negentropy-simplex",
    )


def negentropy_capped_simplex(m: float) -> LegendreSpec:
    return LegendreSpec(
        F=_negentropy_value,
        grad_F=np.log,
        grad_F_star=np.exp,
        bregman_project=lambda w: project_capped_simplex_negent(w, m),
        dual_domain_check=lambda u: True,
        name="negentropy-capped",
    )


def potential_capped_simplex(psi: PotentialSpec, m: float) -> LegendreSpec:
    return LegendreSpec(
        F=lambda x: float(psi.F_term(np.asarray(x, dtype=float)).sum()),
        grad_F=psi.psi_inv,
        grad_F_star=psi.psi,
        bregman_project=lambda w: project_capped_simplex_potential(w, m, psi),
        dual_domain_check=lambda u: bool((np.asarray(u) < psi.a).all()),
        name=f"{psi.name}-capped",
    )


def euclidean_ball(radius: float) -> LegendreSpec:
    def project(w: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(w)
        return w if norm <= radius else w * (radius / norm)

    return LegendreSpec(
        F=lambda x: 0.5 * float(np.dot(x, x)),
        grad_F=lambda x: np.asarray(x, dtype=float),
        grad_F_star=lambda u: np.asarray(u, dtype=float),
        bregman_project=project,
        dual_domain_check=lambda u: True,
        name="euclidean-ball",
    )


def ball_grad(x: np.ndarray) -> np.ndarray:
    """Primal-to-dual map x / (1 - ||x||) of the log-barrier ball geometry."""
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x)
    if norm >= 1.0:
        raise DomainError("primal point must lie strictly inside the unit ball")
    return x / (1.0 - norm)


def ball_grad_star(u: np.ndarray) -> np.ndarray:
    """Dual-to-primal map u / (1 + ||u||); always lands inside the unit ball."""
    u = np.asarray(u, dtype=float)
    return u / (1.0 + np.linalg.norm(u))


def log_barrier_ball(radius: float) -> LegendreSpec:
    """Geometry for the ball strategy; the Bregman projection onto a centered
    ball is exact radial scaling for this divergence."""

    def F(x: np.ndarray) -> float:
        norm = np.linalg.norm(x)
        if norm >= 1.0:
            raise DomainError("primal point must lie strictly inside the unit ball")
        return -math.log(1.0 - norm) - norm

    def project(w: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(w)
        return w if norm <= radius else w * (radius / norm)

    return LegendreSpec(
        F=F,
        grad_F=ball_grad,
        grad_F_star=ball_grad_star,
        bregman_project=project,
        dual_domain_check=lambda u: True,
        name="log-barrier-ball",
    )


def omd_step(x: np.ndarray, gradient: np.ndarray, eta: float, spec: LegendreSpec) -> np.ndarray:
    """Dual gradient step followed by the Bregman projection."""
    u = spec.grad_F(np.asarray(x, dtype=float)) - eta * np.asarray(gradient, dtype=float)
    if not spec.dual_domain_check(u):
        raise DomainError("dual step left the gradient image; lower eta or rescale losses")
    return spec.bregman_project(spec.grad_F_star(u))


class MirrorDescentSimplex:
    """Negative-entropy mirror descent on the simplex with linear losses.

    For this geometry the projection is a plain normalization, which in dual
    coordinates is an additive shift; tracking the running gradient sum and
    applying the mirror map lazily is therefore exact, and reproduces the
    exponential-weights probabilities bit for bit.
    """

    def __init__(self, K: int, eta: float):
        self.K = K
        self.eta = eta
        self.cum_gradients = np.zeros(K)
        self.t = 0

    def probs(self) -> np.ndarray:
        if self.t == 0:
            return np.full(self.K, 1.0 / self.K)
        return exp_weights(-self.eta * self.cum_gradients)

    def step(self, gradient: np.ndarray) -> None:
        self.cum_gradients += gradient
        self.t += 1


def exp2_schedule(n: int, d: int, N: int) -> tuple[float, float]:
    eta = math.sqrt(math.log(N) / (3.0 * n * d))
    return eta, eta * d


class Exp2State:
    """Exponential weights over a finite point set with design-based exploration."""

    def __init__(self, points, n: int | None = None, eta: float | None = None,
                 gamma: float | None = None, design_tol: float = 1e-7):
        self.points = np.asarray(points, dtype=float)
        self.N, self.d = self.points.shape
        self.design: DesignWeights = doptimal_design(self.points, tol=design_tol)
        if eta is None or gamma is None:
            if n is None:
                raise ValueError("need a horizon to derive eta and gamma")
            eta_d, gamma_d = exp2_schedule(n, self.d, self.N)
            eta = eta_d if eta is None else eta
            gamma = gamma_d if gamma is None else gamma
        if gamma <= 0.0:
            raise ValueError("gamma must be positive so the design matrix is invertible")
        self.eta = eta
        self.gamma = gamma
        self.cum_estimate = np.zeros(self.d)
        self.t = 0

    def probs(self) -> np.ndarray:
        scores = self.points @ self.cum_estimate
        soft = exp_weights(-self.eta * scores)
        return (1.0 - self.gamma) * soft + self.gamma * self.design.weights

    def select(self, rng: np.random.Generator) -> int:
        return sample_categorical(self.probs(), rng)

    def sampling_matrix(self, p: np.ndarray) -> np.ndarray:
        return self.points.T @ (p[:, None] * self.points)

    def estimate(self, played: int, scalar_loss: float, p: np.ndarray | None = None) -> np.ndarray:
        if not -1.0 <= scalar_loss <= 1.0:
            raise ValueError("scalar loss must lie in [-1, 1]")
        if p is None:
            p = self.probs()
        P = self.sampling_matrix(p)
        return scalar_loss * np.linalg.solve(P, self.points[played])

    def update(self, played: int, scalar_loss: float) -> None:
        self.cum_estimate += self.estimate(played, scalar_loss)
        self.t += 1


def exp2_probs(state: Exp2State) -> np.ndarray:
    return state.probs()


def exp2_estimate(state: Exp2State, played: int, scalar_loss: float) -> np.ndarray:
    return state.estimate(played, scalar_loss)


def semibandit_estimate(x: np.ndarray, v: np.ndarray, losses: np.ndarray) -> np.ndarray:
    """Importance-weighted coordinate losses: loss_i * v_i / x_i, zero when inactive."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    losses = np.asarray(losses, dtype=float)
    active = v > 0.0
    if (x[active] < X_FLOOR).any():
        raise ZeroDivisionError("active coordinate fell below the importance floor")
    est = np.zeros_like(x)
    est[active] = losses[active] / x[active]
    return est


def osmd_negent_eta(n: int, d: int, m: int) -> float:
    return math.sqrt(2.0 * m / (n * d) * math.log(d / m)) if m < d else 0.0


def osmd_potential_eta(n: int, d: int, m: int, q: float = 2.0) -> float:
    return math.sqrt((2.0 / (q - 1.0)) * (m / d) ** (1.0 - 2.0 / q) / n)


class OsmdMsets:
    """Mirror descent over the convex hull of m-sets with semi-bandit feedback.

    Plays a random m-set whose inclusion probabilities match the current
    fractional point, so the played set is an unbiased perturbation of it.
    """

    def __init__(self, d: int, m: int, n: int | None = None, variant: str = "negent",
                 q: float = 2.0, eta: float | None = None):
        if not 1 <= m <= d:
            raise ValueError("need 1 <= m <= d")
        self.d = d
        self.m = m
        self.variant = variant
        if variant == "negent":
            self.spec = negentropy_capped_simplex(m)
            default_eta = None if n is None else osmd_negent_eta(n, d, m)
        elif variant == "potential":
            self.spec = potential_capped_simplex(power_potential(q), m)
            default_eta = None if n is None else osmd_potential_eta(n, d, m, q)
        else:
            raise ValueError(f"unknown variant {variant!r}")
        if eta is None:
            if default_eta is None:
                raise ValueError("need a horizon or an explicit eta")
            eta = default_eta
        self.eta = eta
        self.x = np.full(d, m / d)
        self.t = 0

    def select(self, rng: np.random.Generator) -> np.ndarray:
        return madow_sample(self.x, rng, self.m)

    def update(self, v: np.ndarray, losses: np.ndarray) -> None:
        est = semibandit_estimate(self.x, v, losses)
        if self.eta > 0.0:
            x = omd_step(self.x, est, self.eta, self.spec)
            self.x = np.maximum(x, X_FLOOR)
        self.t += 1

    def round(self, losses: np.ndarray, rng: np.random.Generator):
        v = self.select(rng)
        incurred = float(v @ losses)
        self.update(v, losses)
        return v, incurred


def ball_schedule(n: int, d: int) -> tuple[float, float]:
    gamma = 1.0 / math.sqrt(n)
    eta = math.sqrt(math.log(n) / (2.0 * n * d))
    return gamma, eta


class OsmdBall:
    """Mirror descent on the shrunken unit ball with one-scalar bandit feedback.

    Plays either the radial boundary point or a random signed coordinate, with
    the Bernoulli(||x||) switch making the played point unbiased for x.
    """

    def __init__(self, d: int, n: int | None = None, gamma: float | None = None,
                 eta: float | None = None):
        if gamma is None or eta is None:
            if n is None:
                raise ValueError("need a horizon to derive gamma and eta")
            gamma_d, eta_d = ball_schedule(n, d)
            gamma = gamma_d if gamma is None else gamma
            eta = eta_d if eta is None else eta
        if eta * d > 0.5:
            raise ValueError(f"eta * d = {eta * d:.4f} violates the requirement eta*d <= 1/2")
        self.d = d
        self.gamma = gamma
        self.eta = eta
        self.spec = log_barrier_ball(1.0 - gamma)
        self.x = np.zeros(d)
        self.t = 0

    def select(self, rng: np.random.Generator) -> tuple[np.ndarray, int]:
        """Return the played point and the Bernoulli switch value."""
        norm = np.linalg.norm(self.x)
        if rng.random() < norm:
            return self.x / norm, 1
        coord = int(rng.integers(self.d))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        played = np.zeros(self.d)
        played[coord] = sign
        return played, 0

    def loss_estimate(self, played: np.ndarray, xi: int, feedback: float) -> np.ndarray:
        if xi == 1:
            return np.zeros(self.d)
        norm = np.linalg.norm(self.x)
        return self.d * feedback / (1.0 - norm) * played

    def update(self, played: np.ndarray, xi: int, feedback: float) -> None:
        est = self.loss_estimate(played, xi, feedback)
        self.x = omd_step(self.x, est, self.eta, self.spec)
        self.t += 1

    def round(self, loss_vector: np.ndarray, rng: np.random.Generator):
        played, xi = self.select(rng)
        feedback = float(played @ loss_vector)
        self.update(played, xi, feedback)
        return played, feedback


def exp2_bound(n: int, d: int, N: int) -> float:
    return 2.0 * math.sqrt(3.0 * n * d * math.log(N))


def osmd_negent_bound(n: int, d: int, m: int) -> float:
    # degenerates to 0 at m = d, where the action set is a single point
    return math.sqrt(2.0 * m * d * n * math.log(d / m)) if m < d else 0.0


def osmd_potential_bound(n: int, d: int, m: int, q: float = 2.0) -> float:
    return q * math.sqrt(2.0 / (q - 1.0) * m * d * n)


def ball_bound(n: int, d: int) -> float:
    return 3.0 * math.sqrt(d * n * math.log(n))
