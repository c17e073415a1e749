"""Monte Carlo verification of the supremum rate and path-tube probabilities.

Estimators
----------
* estimate_crude: fraction of independent trajectories whose running sup of
  |xi_n| reaches the threshold, with a Wilson 95% interval.
* estimate_splitting: fixed-level multilevel splitting along an increasing
  ladder of thresholds. A particle that crosses a level is frozen at the
  right endpoint of the crossing segment (time and xi value fully determine
  the future law: the exponential reset clock and Brownian increments are
  both memoryless). Survivors are resampled with replacement to the fixed
  particle count, each clone continuing with fresh randomness. p_hat is the
  product of stage crossing frequencies; the interval comes from replicate
  percentiles. A stage with no survivor aborts with ExtinctionError.
* tube_probability: crude estimate of P(L1 distance of xi_n to a reference
  path stays below eps), trapezoid rule on the merged time grid.

Trajectory batches are simulated in vectorized chunks. Each chunk consumes
its own derived random stream, keyed by purpose and chunk index, so a result
never depends on scheduling. Segment maxima of |xi_n| are drawn from the
conditioned Brownian bridge law given the segment endpoints, which makes the
supremum statistic exact in law at any grid resolution (the extremes of the
two sides are drawn independently; a segment realizing both extremes at a
relevant magnitude has probability below double precision).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .paths import PiecewiseLinearPath
from .process import ModelParams, derive_rng
from .suprate import sup_rate

_Z95 = float(ndtri(0.975))

# stream purpose tags; part of the reproducibility contract
_TAG_CRUDE = 1
_TAG_TUBE = 2
_TAG_SPLIT = 3
_TAG_TABLE = 4

#: target number of matrix cells per simulation chunk
_CELL_BUDGET = 1 << 21

#: ladder sizing: one level per this much expected log-weight, capped
_LADDER_RATE_PER_LEVEL = 1.5
_LADDER_MAX_LEVELS = 40


class ExtinctionError(RuntimeError):
    """Raised when a splitting stage loses every particle."""

    def __init__(self, stage: int, levels: int, level: float, replicate: int):
        self.stage = stage
        self.levels = levels
        self.level = level
        self.replicate = replicate
        super().__init__(
            f"splitting went extinct at stage {stage}/{levels} "
            f"(level {level:g}, replicate {replicate}): no particle crossed"
        )


@dataclass(frozen=True)
class McEstimate:
    lam: float
    n: int
    x: float
    estimator: str
    trials: object
    hits: object
    p_hat: float
    ci_low: float
    ci_high: float
    log_rate: float
    seed: int

    def to_json_dict(self) -> dict:
        finite = math.isfinite(self.log_rate)
        return {
            "lam": self.lam,
            "n": self.n,
            "x": self.x,
            "estimator": self.estimator,
            "trials": list(self.trials) if isinstance(self.trials, tuple) else self.trials,
            "hits": list(self.hits) if isinstance(self.hits, tuple) else self.hits,
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "log_rate": self.log_rate if finite else None,
            "log_rate_finite": finite,
            "seed": self.seed,
        }


def wilson_interval(hits: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= hits <= trials:
        raise ValueError("hits must lie in [0, trials]")
    p = hits / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    lo = max(0.0, min(center - half, p))
    hi = min(1.0, max(center + half, p))
    return lo, hi


def _log_rate(p_hat: float, n: int) -> float:
    if p_hat <= 0.0:
        return math.inf
    # the + 0.0 turns the -0.0 arising at p_hat = 1 into a plain zero
    return -math.log(p_hat) / n + 0.0


# -- batched trajectory kernel ------------------------------------------------

def _poisson_budget(lam_n: float) -> int:
    # enough epoch columns that overflowing is impossible in practice;
    # overflow is still detected and raised rather than silently truncated
    if lam_n < 0.01:
        return 4
    return int(lam_n + 12.0 * math.sqrt(lam_n + 25.0) + 30.0)


def _chunk_rows(cols: int) -> int:
    return max(256, _CELL_BUDGET // cols)


def _batch_paths(lam, n, grid, t0, xi0, rng):
    """Vectorized continuation of the reset process from per-row states.

    Rows evolve from (t0, xi0) to the horizon on the union of the uniform
    grid and freshly drawn reset epochs. Grid nodes before t0 collapse onto
    t0 and unused epoch slots collapse onto the horizon, so every row shares
    one column layout; zero-length segments carry no randomness. Returns
    (times, xi, dt, dw), each row-aligned.
    """
    rows = t0.size
    k = _poisson_budget(lam * n)
    gaps = rng.exponential(1.0 / (lam * n), size=(rows, k))
    epochs = t0[:, None] + np.cumsum(gaps, axis=1)
    if np.any(epochs[:, -1] <= 1.0):
        raise RuntimeError("reset epoch column budget exhausted")
    epochs = np.where(epochs <= 1.0, epochs, 1.0)

    base = np.maximum(grid[None, :], t0[:, None])
    times = np.concatenate([base, epochs], axis=1)
    is_reset = np.zeros(times.shape, dtype=bool)
    is_reset[:, grid.size:] = True
    order = np.argsort(times, axis=1, kind="stable")
    times = np.take_along_axis(times, order, axis=1)
    is_reset = np.take_along_axis(is_reset, order, axis=1)

    dt = np.diff(times, axis=1)
    dw = rng.standard_normal(dt.shape) * np.sqrt(dt / n)
    w = np.concatenate([np.zeros((rows, 1)), np.cumsum(dw, axis=1)], axis=1)

    # anchor = w at the last reset; the start node acts as a virtual anchor
    # of value -xi0 so that xi(t0) comes out as xi0 exactly
    anchor_vals = np.where(is_reset, w, 0.0)
    anchor_vals[:, 0] = -xi0
    is_src = is_reset.copy()
    is_src[:, 0] = True
    pos = np.where(is_src, np.arange(times.shape[1])[None, :], 0)
    last_src = np.maximum.accumulate(pos, axis=1)
    xi = w - np.take_along_axis(anchor_vals, last_src, axis=1)
    return times, xi, dt, dw


def _segment_stats(xi, dt, dw, n, rng, bridge):
    """Per-segment sup of |xi|: endpoint max, or exact bridge extremes."""
    a = xi[:, :-1]
    b = a + dw
    if not bridge:
        return np.maximum(np.abs(a), np.abs(b))
    var = dt / n
    d2 = (b - a) ** 2
    hi = 0.5 * (a + b + np.sqrt(d2 - 2.0 * var * np.log1p(-rng.random(a.shape))))
    lo = 0.5 * (a + b - np.sqrt(d2 - 2.0 * var * np.log1p(-rng.random(a.shape))))
    return np.maximum(hi, -lo)


def _iter_chunks(trials: int, cols: int):
    chunk = _chunk_rows(cols)
    done = 0
    index = 0
    while done < trials:
        rows = min(chunk, trials - done)
        yield index, rows
        done += rows
        index += 1


def sample_sup_abs(params: ModelParams, trials: int, *, bridge: bool = True) -> np.ndarray:
    """Draws of the running sup statistic; same stream layout as estimate_crude."""
    grid = params.grid()
    cols = grid.size + _poisson_budget(params.lam * params.n)
    out = []
    for index, rows in _iter_chunks(trials, cols):
        rng = derive_rng(params.seed, _TAG_CRUDE, index)
        zeros = np.zeros(rows)
        times, xi, dt, dw = _batch_paths(params.lam, params.n, grid, zeros, zeros, rng)
        seg = _segment_stats(xi, dt, dw, params.n, rng, bridge)
        out.append(seg.max(axis=1))
    return np.concatenate(out) if out else np.empty(0)


def estimate_crude(
    params: ModelParams, x: float, trials: int, *, bridge: bool = True
) -> McEstimate:
    """Crude Monte Carlo estimate of P(sup |xi_n| >= x) over [0, 1]."""
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if trials < 1:
        raise ValueError("trials must be positive")
    grid = params.grid()
    cols = grid.size + _poisson_budget(params.lam * params.n)
    hits = 0
    for index, rows in _iter_chunks(trials, cols):
        rng = derive_rng(params.seed, _TAG_CRUDE, index)
        zeros = np.zeros(rows)
        times, xi, dt, dw = _batch_paths(params.lam, params.n, grid, zeros, zeros, rng)
        seg = _segment_stats(xi, dt, dw, params.n, rng, bridge)
        hits += int(np.count_nonzero(seg.max(axis=1) >= x))
    p_hat = hits / trials
    lo, hi = wilson_interval(hits, trials)
    return McEstimate(
        params.lam, params.n, float(x), "crude", trials, hits,
        p_hat, lo, hi, _log_rate(p_hat, params.n), params.seed,
    )


def estimate_splitting(
    params: ModelParams,
    x: float,
    levels: int,
    particles: int,
    replicates: int = 10,
    *,
    bridge: bool = True,
) -> McEstimate:
    """Fixed-level splitting estimate of P(sup |xi_n| >= x) over [0, 1].

    The ladder is uniform in x. Stage frequencies multiply into a replicate
    estimate; p_hat averages the replicates and the interval is their
    2.5/97.5 percentile range. Raises ExtinctionError (with the stage index)
    if any stage in any replicate loses every particle.
    """
    if x < 0.0:
        raise ValueError("x must be nonnegative")
    if levels < 1:
        raise ValueError("levels must be positive")
    if particles < 2:
        raise ValueError("particles must be at least 2")
    if replicates < 1:
        raise ValueError("replicates must be positive")
    if x == 0.0:
        # the sup of |xi| is nonnegative, so every ladder level is crossed
        return McEstimate(
            params.lam, params.n, 0.0, "splitting", (levels, particles),
            tuple([particles * replicates] * levels), 1.0, 1.0, 1.0, 0.0, params.seed,
        )
    ladder = np.linspace(x / levels, x, levels)
    reps = []
    stage_totals = np.zeros(levels, dtype=np.int64)
    for r in range(replicates):
        rng = derive_rng(params.seed, _TAG_SPLIT, r)
        p, stage_hits = _splitting_once(params, ladder, particles, rng, bridge, r)
        reps.append(p)
        stage_totals += stage_hits
    reps = np.asarray(reps)
    p_hat = float(np.mean(reps))
    lo, hi = np.percentile(reps, [2.5, 97.5])
    return McEstimate(
        params.lam, params.n, float(x), "splitting", (levels, particles),
        tuple(int(v) for v in stage_totals), p_hat, float(lo), float(hi),
        _log_rate(p_hat, params.n), params.seed,
    )


def _splitting_once(params, ladder, particles, rng, bridge, replicate):
    grid = params.grid()
    cols = grid.size + _poisson_budget(params.lam * params.n)
    chunk = _chunk_rows(cols)
    t_state = np.zeros(particles)
    xi_state = np.zeros(particles)
    carry = np.full(particles, -math.inf)
    freqs = []
    stage_hits = np.zeros(ladder.size, dtype=np.int64)
    for j, level in enumerate(ladder):
        crossed = carry >= level
        t_new = t_state.copy()
        xi_new = xi_state.copy()
        carry_new = carry.copy()
        todo = np.flatnonzero(~crossed)
        for start in range(0, todo.size, chunk):
            sel = todo[start : start + chunk]
            times, xi, dt, dw = _batch_paths(
                params.lam, params.n, grid, t_state[sel], xi_state[sel], rng
            )
            seg = _segment_stats(xi, dt, dw, params.n, rng, bridge)
            hit = seg >= level
            got = hit.any(axis=1)
            first = np.argmax(hit, axis=1)
            take = first[:, None]
            crossed[sel] = got
            t_new[sel] = np.take_along_axis(times, take + 1, axis=1)[:, 0]
            xi_new[sel] = np.take_along_axis(xi, take + 1, axis=1)[:, 0]
            carry_new[sel] = np.take_along_axis(seg, take, axis=1)[:, 0]
        survivors = np.flatnonzero(crossed)
        stage_hits[j] = survivors.size
        if survivors.size == 0:
            raise ExtinctionError(j + 1, ladder.size, float(level), replicate)
        freqs.append(survivors.size / particles)
        if j + 1 < ladder.size:
            pick = survivors[rng.integers(0, survivors.size, particles)]
            t_state = t_new[pick]
            xi_state = xi_new[pick]
            carry = carry_new[pick]
    return float(np.prod(freqs)), stage_hits


def tube_probability(
    params: ModelParams, path: PiecewiseLinearPath, eps: float, trials: int
) -> McEstimate:
    """Crude estimate of P(integral of |xi_n - f| over [0,1] < eps).

    The distance is a trapezoid sum on the merged grid, using the pre-reset
    left limit at each segment's right endpoint. The returned estimate
    records the tube radius in the threshold slot.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if trials < 1:
        raise ValueError("trials must be positive")
    grid = params.grid()
    cols = grid.size + _poisson_budget(params.lam * params.n)
    hits = 0
    for index, rows in _iter_chunks(trials, cols):
        rng = derive_rng(params.seed, _TAG_TUBE, index)
        zeros = np.zeros(rows)
        times, xi, dt, dw = _batch_paths(params.lam, params.n, grid, zeros, zeros, rng)
        a = xi[:, :-1]
        b = a + dw
        fa = path.values_at(times[:, :-1], side="right")
        fb = path.values_at(times[:, 1:], side="left")
        dist = np.sum(0.5 * (np.abs(a - fa) + np.abs(b - fb)) * dt, axis=1)
        hits += int(np.count_nonzero(dist < eps))
    p_hat = hits / trials
    lo, hi = wilson_interval(hits, trials)
    return McEstimate(
        params.lam, params.n, float(eps), "crude", trials, hits,
        p_hat, lo, hi, _log_rate(p_hat, params.n), params.seed,
    )


# -- reset-free oracles --------------------------------------------------------

def wiener_sup_one_sided(a: float) -> float:
    """P(sup of W over [0,1] >= a) by the reflection principle."""
    if a <= 0.0:
        return 1.0
    return min(1.0, math.erfc(a / math.sqrt(2.0)))


def wiener_sup_oracle(a: float) -> float:
    """P(sup of |W| over [0,1] >= a), alternating reflection series.

    Terms are added until they fall below 1e-15; for an alternating series
    with decreasing terms the truncation error is below the first omitted
    term.
    """
    if a <= 0.0:
        return 1.0
    total = 0.0
    sign = 1.0
    k = 0
    while True:
        term = 2.0 * math.erfc((2 * k + 1) * a / math.sqrt(2.0))
        total += sign * term
        if term < 1e-15:
            break
        sign = -sign
        k += 1
        if k > 100000:
            break
    return min(1.0, max(0.0, total))


# -- convergence study ---------------------------------------------------------

@dataclass(frozen=True)
class EstimatorBudget:
    """Configuration of a convergence run; grid choice is free because the
    bridge-corrected sup statistic is exact in law at any resolution."""

    crude_trials: int = 1_000_000
    p_threshold: float = 1e-4
    particles: int = 10_000
    replicates: int = 10
    levels: int | None = None
    grid_points: int = 256
    bridge: bool = True
    seed: int = 0


@dataclass(frozen=True)
class ConvergenceTable:
    lam: float
    x: float
    target_rate: float
    rows: tuple
    richardson: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "lam": self.lam,
            "x": self.x,
            "target_rate": self.target_rate,
            "rows": [row.to_json_dict() for row in self.rows],
            "richardson": {
                str(k): (v if math.isfinite(v) else None)
                for k, v in self.richardson.items()
            },
        }


def default_levels(n: int, target_rate: float) -> int:
    """Ladder sizing rule: one level per 1.5 nats of expected decay, capped at 40."""
    if not math.isfinite(target_rate):
        return _LADDER_MAX_LEVELS
    return min(_LADDER_MAX_LEVELS, max(1, math.ceil(n * target_rate / _LADDER_RATE_PER_LEVEL)))


def ldp_convergence_table(
    lam: float, x: float, n_list, budget: EstimatorBudget = EstimatorBudget()
) -> ConvergenceTable:
    """Estimate P(sup |xi_n| >= x) across n and report normalized log-rates.

    Uses the crude estimator wherever the predicted probability
    exp(-n * target) clears the budget threshold, splitting elsewhere. For
    every consecutive doubling in n_list a Richardson value 2 r(2n) - r(n) is
    recorded under the larger n.
    """
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be nonempty and strictly increasing")
    target = sup_rate(x, lam).rate
    rows = []
    for n in n_list:
        row_seed = int(
            np.random.SeedSequence(
                entropy=budget.seed, spawn_key=(_TAG_TABLE, int(n))
            ).generate_state(1, dtype=np.uint64)[0]
        )
        params = ModelParams(lam, int(n), grid_points=budget.grid_points, seed=row_seed)
        expected_p = math.exp(-n * target) if math.isfinite(target) else 0.0
        if expected_p >= budget.p_threshold:
            rows.append(estimate_crude(params, x, budget.crude_trials, bridge=budget.bridge))
        else:
            levels = budget.levels or default_levels(int(n), target)
            rows.append(
                estimate_splitting(
                    params, x, levels, budget.particles, budget.replicates,
                    bridge=budget.bridge,
                )
            )
    by_n = {row.n: row.log_rate for row in rows}
    richardson = {}
    for n in sorted(by_n):
        if 2 * n in by_n:
            richardson[2 * n] = 2.0 * by_n[2 * n] - by_n[n]
    return ConvergenceTable(float(lam), float(x), target, tuple(rows), richardson)


def write_convergence_csv(table: ConvergenceTable, dest) -> None:
    """Rows n,estimator,p_hat,ci_low,ci_high,log_rate,target_rate."""
    with open(dest, "w", encoding="utf-8", newline="") as fh:
        fh.write("n,estimator,p_hat,ci_low,ci_high,log_rate,target_rate\n")
        for row in table.rows:
            fh.write(
                f"{row.n},{row.estimator},{row.p_hat:.17g},{row.ci_low:.17g},"
                f"{row.ci_high:.17g},{row.log_rate:.17g},{table.target_rate:.17g}\n"
            )
