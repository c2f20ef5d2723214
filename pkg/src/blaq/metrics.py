"""Zig-zag diagnostics over recorded optimization trajectories.

A TrajectoryRecord keeps per-step snapshots of the tracked coordinates:
the full-precision value, the quantized code level, and the step delta.
The quantized snapshot stores the grid level (code) of each coordinate
rather than the scale-times-code product: the layer scale drifts by a
tiny amount on every step, so counting raw value changes would register
a flip at every step for any moving optimizer and say nothing about
oscillation.  Level changes are exactly the sign flips of the 1-bit
case, generalized to finer grids.
"""

from __future__ import annotations

import numpy as np


class TrajectoryRecord:
    """Per-step log: (step index, loss, w, quantized level, delta w)."""

    def __init__(self):
        self.steps = []
        self.losses = []
        self.w = []
        self.w_hat = []
        self.updates = []

    def append(self, step, loss, w, w_hat, update):
        if self.steps and step <= self.steps[-1]:
            raise ValueError(f"step indices must be strictly increasing, got {step}")
        w = np.asarray(w, dtype=np.float64).reshape(-1)
        w_hat = np.asarray(w_hat, dtype=np.float64).reshape(-1)
        update = np.asarray(update, dtype=np.float64).reshape(-1)
        if self.w and (len(w) != len(self.w[0]) or len(w_hat) != len(self.w_hat[0])):
            raise ValueError("snapshot dimensions must stay constant")
        self.steps.append(int(step))
        self.losses.append(float(loss))
        self.w.append(w.copy())
        self.w_hat.append(w_hat.copy())
        self.updates.append(update.copy())

    def __len__(self):
        return len(self.steps)


def _check_window(record, window):
    if window < 1:
        raise ValueError("window must contain at least one step")
    if window > len(record):
        raise ValueError(f"window {window} exceeds record length {len(record)}")


def oscillation_amplitude(record, coord, window):
    """Largest per-step move of a full-precision coordinate in the window."""
    _check_window(record, window)
    trace = np.array([snap[coord] for snap in record.w[-window:]])
    if len(trace) < 2:
        return 0.0
    return float(np.max(np.abs(np.diff(trace))))


def flip_count(record, coord, window):
    """Number of quantized-level changes of a coordinate in the window."""
    _check_window(record, window)
    trace = np.array([snap[coord] for snap in record.w_hat[-window:]])
    if len(trace) < 2:
        return 0
    return int(np.count_nonzero(trace[1:] != trace[:-1]))


def direction_change_count(record, window):
    """Count consecutive update pairs pointing more than 90 degrees apart."""
    _check_window(record, window)
    updates = record.updates[-window:]
    if len(updates) < 2:
        raise ValueError("window must contain at least two update vectors")
    count = 0
    for prev, cur in zip(updates[:-1], updates[1:]):
        if float(np.dot(prev, cur)) < 0.0:
            count += 1
    return count


def steps_to_tolerance(record, target, tol):
    """First recorded step index with loss - target <= tol, else None."""
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    for step, loss in zip(record.steps, record.losses):
        if loss - target <= tol:
            return step
    return None


def sample_coordinates(rng, total, count):
    """Seeded draw of distinct coordinate indices, sorted for stable output."""
    count = min(count, total)
    return np.sort(rng.choice(total, size=count, replace=False))
