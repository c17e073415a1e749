"""Event-driven simulation of scaled Brownian motion with Poissonian resetting.

The scaled pair on [0, 1] is w_n(t) = w(nt)/n, whose increments over dt are
Normal(0, dt/n), and xi_n(t) = w_n(t) - w_n(last reset before t). Reset epochs
on the scaled clock arrive with Exponential(lambda n) gaps, truncated at the
horizon. Trajectories are sampled exactly on the union of a uniform grid and
the drawn epochs, so the stored value at a reset time is exactly 0 (the
process is taken right-continuous there).

Draw order per trajectory is fixed (epochs, then increments, then bridge
uniforms), so a given (params, seed) pair reproduces bit-identical arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: chunk width used when drawing exponential gaps
_GAP_BLOCK_FLOOR = 8


@dataclass(frozen=True)
class ModelParams:
    """Configuration of one scaled reset process.

    lam is the reset intensity (> 0), n the scaling index (>= 1),
    grid_points the number of uniform sample points on [0, 1] including both
    endpoints (>= 2), and seed the root of every derived random stream.
    """

    lam: float
    n: int
    grid_points: int = 2048
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.lam, (int, float)) and math.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError("lam must be a positive finite real")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError("n must be an integer >= 1")
        if not (isinstance(self.grid_points, (int, np.integer)) and self.grid_points >= 2):
            raise ValueError("grid_points must be an integer >= 2")
        if not (isinstance(self.seed, (int, np.integer)) and 0 <= self.seed < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "grid_points", int(self.grid_points))
        object.__setattr__(self, "seed", int(self.seed))

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_points)


@dataclass(frozen=True)
class TrajectorySample:
    """One simulated trajectory on the merged grid-plus-epochs time axis."""

    times: np.ndarray
    xi_values: np.ndarray
    w_values: np.ndarray
    reset_times: np.ndarray
    sup_abs: float


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key); the split is deterministic.

    Streams for different keys never overlap regardless of how work is
    scheduled, which is what makes estimator output independent of worker
    count.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def simulate_reset_epochs(params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """Reset epochs in (0, 1]: cumulative Exponential(lam * n) gaps, truncated.

    The returned array is strictly increasing and may be empty.
    """
    rate = params.lam * params.n
    scale = 1.0 / rate
    block = max(_GAP_BLOCK_FLOOR, int(rate + 10.0 * math.sqrt(rate) + 10.0))
    pieces = []
    last = 0.0
    while True:
        cum = last + np.cumsum(rng.exponential(scale, size=block))
        pieces.append(cum[cum <= 1.0])
        if cum[-1] > 1.0:
            break
        last = cum[-1]
    return np.concatenate(pieces)


def simulate_trajectory(
    params: ModelParams, rng: np.random.Generator, *, bridge: bool = True
) -> TrajectorySample:
    """Simulate one trajectory of (w_n, xi_n) on the merged time grid.

    With bridge=True the recorded sup_abs additionally draws, for every
    segment, the extremes of the Brownian bridge conditioned on the segment
    endpoints, removing the discretization bias of a pointwise maximum. The
    stored polylines are unaffected.
    """
    epochs = simulate_reset_epochs(params, rng)
    times = np.union1d(params.grid(), epochs)
    dt = np.diff(times)
    dw = rng.standard_normal(dt.size) * np.sqrt(dt / params.n)
    w = np.concatenate([[0.0], np.cumsum(dw)])

    if epochs.size:
        epoch_pos = np.searchsorted(times, epochs)
        ptr = np.searchsorted(epochs, times, side="right") - 1
        anchor = np.where(ptr >= 0, w[epoch_pos[np.maximum(ptr, 0)]], 0.0)
        xi = w - anchor
    else:
        xi = w.copy()

    sup = grid_sup_abs(times, xi, w)
    if bridge:
        sup = max(sup, _bridge_sup(xi, dw, dt / params.n, rng))
    return TrajectorySample(times, xi, w, epochs, sup)


def grid_sup_abs(times, xi_values, w_values) -> float:
    """Pointwise sup of |xi| over the stored nodes, pre-reset limits included.

    The left limit entering a reset at the right end of a segment is the
    segment's start value plus the w increment across it.
    """
    xi_values = np.asarray(xi_values, dtype=float)
    w_values = np.asarray(w_values, dtype=float)
    if xi_values.size == 1:
        return float(abs(xi_values[0]))
    left = xi_values[:-1]
    right = left + np.diff(w_values)
    return float(
        max(np.max(np.abs(left)), np.max(np.abs(right)), abs(xi_values[-1]))
    )


def _bridge_sup(xi, dw, var, rng) -> float:
    """Max over segments of the conditioned bridge extremes of |xi|."""
    a = xi[:-1]
    b = a + dw
    u_hi = rng.random(a.size)
    u_lo = rng.random(a.size)
    d2 = (b - a) ** 2
    hi = 0.5 * (a + b + np.sqrt(d2 - 2.0 * var * np.log1p(-u_hi)))
    lo = 0.5 * (a + b - np.sqrt(d2 - 2.0 * var * np.log1p(-u_lo)))
    return float(np.max(np.maximum(hi, -lo)))


def sup_abs_of(sample: TrajectorySample) -> float:
    """The running supremum statistic recorded on the sample."""
    return sample.sup_abs


# -- emission ----------------------------------------------------------------

def write_trajectory_csv(sample: TrajectorySample, dest) -> None:
    """Rows t,xi,w with 17 significant digits; byte-stable for a fixed sample."""
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,xi,w\n")
        for t, x, w in zip(sample.times, sample.xi_values, sample.w_values):
            fh.write(f"{t:.17g},{x:.17g},{w:.17g}\n")


def write_trajectory_sidecar(sample: TrajectorySample, dest) -> None:
    import json

    payload = {
        "reset_times": [float(t) for t in sample.reset_times],
        "sup_abs": float(sample.sup_abs),
    }
    with open(dest, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
