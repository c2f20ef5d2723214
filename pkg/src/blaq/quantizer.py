"""Symmetric fixed-point grids and the loss-aware scaled projection.

A k-bit grid holds the 2^k levels {±i/2^(k-1) : i = 1..2^(k-1)}; zero is
never a level and the extremes are ±1.  Quantized weights are represented
as a single positive scale times a grid-valued code vector, fitted by
alternating minimization of the diagonally weighted squared error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Scale assigned when the input vector is exactly zero; keeps w_hat ~ 0
# while preserving alpha > 0.
ZERO_VECTOR_ALPHA = 1e-8

MAX_BITWIDTH = 16


class QuantGrid:
    """Level set for k-bit weights, sorted ascending."""

    __slots__ = ("bitwidth", "levels")

    def __init__(self, bitwidth):
        if not isinstance(bitwidth, (int, np.integer)) or bitwidth < 1:
            raise ValueError(f"bitwidth must be a positive integer, got {bitwidth!r}")
        if bitwidth > MAX_BITWIDTH:
            raise ValueError(f"bitwidth {bitwidth} exceeds supported maximum {MAX_BITWIDTH}")
        half = 2 ** (bitwidth - 1)
        pos = np.arange(1, half + 1, dtype=np.float64) / half
        self.bitwidth = int(bitwidth)
        self.levels = np.concatenate([-pos[::-1], pos])

    @property
    def resolution(self):
        """Count of positive levels, 2^(k-1)."""
        return 2 ** (self.bitwidth - 1)

    def __repr__(self):
        return f"QuantGrid(bitwidth={self.bitwidth})"


def nearest_level(grid, x):
    """Round to the closest grid level; ties go away from zero.

    Values beyond +-1 clamp to the extreme levels, and x = 0 maps to the
    smallest positive level (sign(0) is taken as +1).  Accepts scalars or
    arrays.
    """
    arr = np.asarray(x, dtype=np.float64)
    sign = np.where(arr < 0.0, -1.0, 1.0)
    n = grid.resolution
    # floor(m + 0.5) rounds half-up on the non-negative magnitude, which is
    # exactly "ties away from zero" after the sign is reapplied.
    idx = np.clip(np.floor(np.abs(arr) * n + 0.5), 1.0, float(n))
    out = sign * idx / n
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


@dataclass
class ScaledCode:
    """Quantized weights as alpha * beta with beta on the grid."""

    alpha: float
    beta: np.ndarray

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def w_hat(self):
        return self.alpha * self.beta


def weighted_objective(w, d, alpha, beta):
    """0.5 * sum_i d_i (w_i - alpha*beta_i)^2."""
    r = w - alpha * beta
    return 0.5 * float(np.dot(d, r * r))


def _validate_projection_args(w, d, m):
    w = np.asarray(w, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if w.shape != d.shape or w.ndim != 1:
        raise ValueError(f"w and d must be equal-length vectors, got {w.shape} and {d.shape}")
    if not np.all(d > 0.0):
        raise ValueError("all weights d must be strictly positive")
    if m < 1:
        raise ValueError(f"iteration count m must be >= 1, got {m}")
    return w, d


def _scale_starts(w, d, grid):
    """Initial scales for the alternating loop.

    The first entry is the 1-bit closed form.  For wider grids the code
    assignment nearest(w/alpha) is piecewise constant in alpha, with
    breakpoints where some |w_i|/alpha crosses a level midpoint; one
    start inside every interval lets the multi-start loop reach the
    assignment family's global optimum (a single start can lock coarse
    coordinates at the wrong level).  Large vectors fall back to
    magnitude quantiles to bound the start count.
    """
    starts = [float(np.dot(d, np.abs(w)) / d.sum())]
    if grid.bitwidth == 1:
        return starts
    mags = np.abs(w[w != 0.0])
    pos = grid.levels[grid.resolution:]
    mids = (pos[:-1] + pos[1:]) / 2.0
    if not mids.size:
        return starts
    anchors = mags if mags.size <= 64 else np.quantile(mags, [0.1, 0.25, 0.5, 0.75, 0.9, 1.0])
    bounds = np.unique(np.outer(anchors, 1.0 / mids).reshape(-1))
    interior = (bounds[:-1] + bounds[1:]) / 2.0
    for candidate in np.concatenate([[bounds[0] / 2.0], interior, [bounds[-1] * 2.0]]):
        c = float(candidate)
        if c > 0.0 and c not in starts:
            starts.append(c)
    return starts


def _alternate(w, d, grid, m, alpha0, collect_trace):
    """Run the alternating code/scale updates from one starting scale.

    Stops early at a fixed point (further iterations are no-ops), which
    keeps the objective trace trivially non-increasing.
    """
    alpha = alpha0
    beta = None
    trace = [] if collect_trace else None
    for _ in range(m):
        prev_alpha, prev_beta = alpha, beta
        beta = nearest_level(grid, w / alpha)
        if collect_trace:
            trace.append(weighted_objective(w, d, alpha, beta))
        alpha = float(np.dot(d, w * beta) / np.dot(d, beta * beta))
        if collect_trace:
            trace.append(weighted_objective(w, d, alpha, beta))
        if prev_beta is not None and alpha == prev_alpha and np.array_equal(beta, prev_beta):
            break
    return alpha, beta, trace


def project(w, d, grid, m):
    """Fit (alpha, beta) minimizing the d-weighted squared error to w.

    Alternates up to m times between the closed-form code update
    (per-entry nearest level of w/alpha) and the closed-form scale update
    alpha = sum(d*w*beta) / sum(d*beta^2), starting from the 1-bit
    closed-form scale sum(d*|w|)/sum(d) (plus extra scale starts on
    multi-bit grids).  Each half-step is an exact minimization, so the
    objective never increases.
    """
    w, d = _validate_projection_args(w, d, m)
    if not np.any(w):
        return ScaledCode(ZERO_VECTOR_ALPHA, np.ones_like(w))
    starts = _scale_starts(w, d, grid)
    if len(starts) == 1:
        alpha, beta, _ = _alternate(w, d, grid, m, starts[0], False)
        return ScaledCode(alpha, beta)
    best = None
    for alpha0 in starts:
        alpha, beta, _ = _alternate(w, d, grid, m, alpha0, False)
        obj = weighted_objective(w, d, alpha, beta)
        # earlier start wins ties so the outcome is stable under float noise
        if best is None or obj < best[0] - 1e-12 * max(1.0, best[0]):
            best = (obj, alpha, beta)
    return ScaledCode(best[1], best[2])


def project_with_trace(w, d, grid, m):
    """Like project, but also returns the winning start's objective trace."""
    w, d = _validate_projection_args(w, d, m)
    if not np.any(w):
        return ScaledCode(ZERO_VECTOR_ALPHA, np.ones_like(w)), []
    best = None
    for alpha0 in _scale_starts(w, d, grid):
        alpha, beta, trace = _alternate(w, d, grid, m, alpha0, True)
        if best is None or trace[-1] < best[0] - 1e-12 * max(1.0, best[0]):
            best = (trace[-1], alpha, beta, trace)
    return ScaledCode(best[1], best[2]), best[3]


def exhaustive_project(w, d, grid):
    """Brute-force reference: best objective over every code vector.

    Only feasible for tiny n and k; used as the oracle for project.
    Mirrored codes share the same w_hat, so the unconstrained per-code
    optimal scale loses nothing against the alpha > 0 constraint.
    """
    w = np.asarray(w, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    n = len(w)
    best = None
    grids = np.meshgrid(*([grid.levels] * n), indexing="ij")
    codes = np.stack([g.reshape(-1) for g in grids], axis=1)
    for beta in codes:
        denom = float(np.dot(d, beta * beta))
        alpha = float(np.dot(d, w * beta) / denom)
        obj = weighted_objective(w, d, alpha, beta)
        if best is None or obj < best[0]:
            best = (obj, alpha, beta.copy())
    return best
