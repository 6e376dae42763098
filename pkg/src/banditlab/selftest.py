"""Property suites runnable from the CLI: estimator unbiasedness by exact
enumeration, mirror-map identities, projection optimality, design certificates,
inclusion probabilities, and cross-implementation agreement."""
from __future__ import annotations

import math

import numpy as np

from . import adversarial, contextual, convex, geometry, mirror
from .env import derive_stream

SELFTEST_SEED = 20240601


def check_estimator_unbiasedness(seed: int = SELFTEST_SEED):
    """Closed-form enumeration over the sampling outcome for every estimator."""
    rng = derive_stream(seed, 1)
    worst = 0.0
    for _ in range(20):
        K = int(rng.integers(2, 6))
        p = rng.dirichlet(np.ones(K))
        losses = rng.random(K)
        # arm-loss estimate: expectation over the drawn arm recovers each loss
        mean_est = sum(p[j] * adversarial.importance_loss_estimate(p, j, losses[j])
                       for j in range(K))
        worst = max(worst, float(np.abs(mean_est - losses).max()))
        # biased gain estimate: expectation is gain_i + beta / p_i
        beta = float(rng.random())
        gains = rng.random(K)
        mean_gain = sum(p[j] * adversarial.exp3p_gain_estimate(p, j, gains[j], beta)
                        for j in range(K))
        worst = max(worst, float(np.abs(mean_gain - (gains + beta / p)).max()))
        # expert estimates inherit unbiasedness through the advice mixture
        N = int(rng.integers(1, 5))
        advice = rng.dirichlet(np.ones(K), size=N)
        q = rng.dirichlet(np.ones(N))
        arm_probs = contextual.exp4_arm_probs(q, advice, gamma=0.2)
        mean_expert = sum(
            arm_probs[j] * contextual.expert_loss_estimates(
                advice, adversarial.importance_loss_estimate(arm_probs, j, losses[j]))
            for j in range(K))
        worst = max(worst, float(np.abs(mean_expert - advice @ losses).max()))
    # semi-bandit estimate under systematic sampling, by start-interval integration
    for _ in range(10):
        d = int(rng.integers(3, 6))
        m = int(rng.integers(1, d))
        x = _random_capped_point(d, m, rng)
        ell = rng.random(d)
        mean_est = np.zeros(d)
        for length, v in geometry.madow_start_intervals(x, m):
            mean_est += length * mirror.semibandit_estimate(x, v, ell)
        worst = max(worst, float(np.abs(mean_est - ell).max()))
    # ball estimate: enumerate the Bernoulli switch, the coordinate, and the sign
    for _ in range(10):
        d = 2
        x = rng.random(d) * 0.4
        ell = rng.uniform(-1.0, 1.0, d)
        ell /= max(1.0, np.linalg.norm(ell))
        norm = np.linalg.norm(x)
        policy = mirror.OsmdBall(d, gamma=0.1, eta=0.01)
        policy.x = x
        mean_est = norm * policy.loss_estimate(x / norm, 1, float(x / norm @ ell))
        mean_play = norm * (x / norm)
        for coord in range(d):
            for sign in (-1.0, 1.0):
                played = np.zeros(d)
                played[coord] = sign
                w = (1.0 - norm) / (2.0 * d)
                mean_est = mean_est + w * policy.loss_estimate(played, 0, float(played @ ell))
                mean_play = mean_play + w * played
        worst = max(worst, float(np.abs(mean_est - ell).max()))
        worst = max(worst, float(np.abs(mean_play - x).max()))
    return worst <= 1e-9, f"max estimator bias {worst:.2e}"


def check_mirror_map_roundtrip(seed: int = SELFTEST_SEED):
    """grad_F_star o grad_F is the identity on interior points."""
    rng = derive_stream(seed, 2)
    worst = 0.0
    specs = [
        mirror.negentropy_simplex(),
        mirror.negentropy_capped_simplex(2.0),
        mirror.potential_capped_simplex(mirror.power_potential(1.5), 2.0),
        mirror.potential_capped_simplex(mirror.power_potential(2.0), 2.0),
        mirror.potential_capped_simplex(mirror.power_potential(3.0), 2.0),
    ]
    for spec in specs:
        for _ in range(200):
            x = rng.random(5) * 0.9 + 0.05
            back = spec.grad_F_star(spec.grad_F(x))
            worst = max(worst, float(np.abs(back - x).max()))
    ball = mirror.log_barrier_ball(0.9)
    for _ in range(200):
        x = rng.standard_normal(4)
        x *= 0.9 * rng.random() / np.linalg.norm(x)
        back = ball.grad_F_star(ball.grad_F(x))
        worst = max(worst, float(np.abs(back - x).max()))
    return worst <= 1e-9, f"max roundtrip error {worst:.2e}"


def check_pythagorean(seed: int = SELFTEST_SEED, instances: int = 1000):
    """D(y, w) >= D(y, z) + D(z, w) for the projection z of w and feasible y."""
    rng = derive_stream(seed, 3)
    worst = 0.0
    for i in range(instances):
        if i % 2 == 0:
            d = 4
            m = 2.0
            spec = mirror.negentropy_capped_simplex(m)
            w = rng.random(d) * 3.0 + 1e-3
            y = _random_capped_point(d, int(m), rng)
            y = np.maximum(y, 1e-9)
            y *= m / y.sum()
        else:
            d = 3
            spec = mirror.log_barrier_ball(0.7)
            w = rng.standard_normal(d)
            w *= 0.95 * rng.random() / np.linalg.norm(w)
            y = rng.standard_normal(d)
            y *= 0.7 * rng.random() / np.linalg.norm(y)
        z = spec.bregman_project(w)
        lhs = spec.divergence(y, w)
        rhs = spec.divergence(y, z) + spec.divergence(z, w)
        worst = max(worst, rhs - lhs)
    return worst <= 1e-7, f"max Pythagorean violation {worst:.2e}"


def check_design_certificate(seed: int = SELFTEST_SEED, tol: float = 1e-3):
    """d <= max leverage <= d (1 + tol) at the returned design."""
    rng = derive_stream(seed, 4)
    ok = True
    detail = []
    for _ in range(10):
        d = int(rng.integers(2, 5))
        N = int(rng.integers(d + 1, 3 * d + 4))
        pts = rng.standard_normal((N, d))
        design = geometry.doptimal_design(pts, tol=tol)
        lev = design.leverage(pts)
        ok &= lev.max() <= d * (1.0 + tol) + 1e-12 and lev.max() >= d - 1e-9
        detail.append(f"{lev.max() / d:.6f}")
    return ok, "max leverage / d: " + ", ".join(detail)


def check_madow_inclusion(seed: int = SELFTEST_SEED):
    """Analytic inclusion probabilities equal the target point for d <= 6."""
    rng = derive_stream(seed, 5)
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 7))
        m = int(rng.integers(1, d + 1))
        x = _random_capped_point(d, m, rng)
        probs = geometry.madow_inclusion_probabilities(x)
        worst = max(worst, float(np.abs(probs - x).max()))
    return worst <= 1e-12, f"max inclusion gap {worst:.2e}"


def check_exp3_omd_agreement(seed: int = SELFTEST_SEED):
    """Exponential weights and simplex mirror descent agree bit for bit."""
    rng = derive_stream(seed, 6)
    K, n = 5, 300
    eta = math.sqrt(2.0 * math.log(K) / (n * K))
    exp3 = adversarial.Exp3State(K, eta=eta)
    omd = mirror.MirrorDescentSimplex(K, eta)
    for _ in range(n):
        p = exp3.probs()
        if not np.array_equal(p, omd.probs()):
            return False, "probability vectors diverged"
        chosen = int(rng.choice(K, p=p))
        loss = float(rng.random())
        est = adversarial.importance_loss_estimate(p, chosen, loss)
        exp3.cum_losses += est
        exp3.t += 1
        omd.step(est)
    return True, f"{n} rounds bit-identical"


def check_sgs_bracket_identities(seed: int = SELFTEST_SEED):
    """Golden-ratio spacings and the 1/phi shrink hold to 1e-12 every stage."""
    rng = derive_stream(seed, 7)
    phi = convex.PHI
    worst = 0.0
    state = convex.SgsState(n=1000)
    # 15 stages cover any realistic horizon; beyond that the bracket is so
    # short that float noise relative to its length passes 1e-12
    for _ in range(15):
        a, b, c = state.bracket
        pts = state.stage_points()
        length = pts[3] - pts[0]
        gaps = np.diff(pts) / length
        worst = max(worst, float(np.abs(gaps - [phi**-2, phi**-3, phi**-2]).max()))
        totals = rng.random(4)
        state.finish_stage(pts, totals)
        new_len = state.bracket[2] - state.bracket[0]
        worst = max(worst, abs(new_len / length - 1.0 / phi))
    return worst <= 1e-12, f"max golden-ratio deviation {worst:.2e}"


def _random_capped_point(d: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Random point of [0,1]^d with coordinate sum exactly m."""
    if m >= d:
        return np.ones(d)
    x = rng.random(d)
    x *= m / x.sum()
    for _ in range(100):
        excess = x - 1.0
        over = excess > 0
        if not over.any():
            break
        spill = excess[over].sum()
        x[over] = 1.0
        room = ~over
        headroom = 1.0 - x[room]
        x[room] += spill * headroom / headroom.sum()
    return x


CHECKS = [
    ("estimator-unbiasedness", check_estimator_unbiasedness),
    ("mirror-map-roundtrip", check_mirror_map_roundtrip),
    ("pythagorean-inequality", check_pythagorean),
    ("design-certificate", check_design_certificate),
    ("madow-inclusion", check_madow_inclusion),
    ("exp3-omd-agreement", check_exp3_omd_agreement),
    ("sgs-bracket-identities", check_sgs_bracket_identities),
]


def run_selftest(seed: int = SELFTEST_SEED):
    """Run every property suite; returns a list of (name, passed, detail)."""
    results = []
    for name, fn in CHECKS:
        passed, detail = fn(seed)
        results.append((name, passed, detail))
    return results
