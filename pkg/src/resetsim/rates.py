"""Action functionals for piecewise-linear paths.

Three large-deviation rate functionals evaluated in closed form, segment by
segment, with no quadrature:

* rate_reset: lambda * m(M) + (1/2) * integral of f'(t)^2 over M, where M is
  the set where f is nonzero. Finite exactly on paths that start at 0 and
  whose every jump lands at 0.
* rate_wiener: the classical Schilder action (1/2) * integral of f'(t)^2,
  finite on continuous paths started at 0.
* rate_poisson: the counting-process entropy integral of
  f' ln(f'/lambda) - f' + lambda, finite on nondecreasing continuous paths
  started at 0 (a flat stretch prices in at lambda per unit time).

Zero tests compare stored values exactly; isolated zero crossings inside a
sloped segment have measure zero and are ignored by construction.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .paths import PiecewiseLinearPath


class Violation(enum.Enum):
    NONZERO_START = "NonzeroStart"
    JUMP_TO_NONZERO = "JumpToNonzero"
    DECREASING_POISSON = "DecreasingPoisson"
    NOT_ADMISSIBLE = "NotAdmissible"


@dataclass(frozen=True)
class RateResult:
    finite: bool
    value: float
    reset_term: float
    kinetic_term: float
    violation: Violation | None

    def to_json_dict(self) -> dict:
        return {
            "finite": self.finite,
            "value": self.value if self.finite else None,
            "reset_term": self.reset_term,
            "kinetic_term": self.kinetic_term,
            "violation": None if self.violation is None else self.violation.value,
        }


def _infinite(violation: Violation) -> RateResult:
    return RateResult(False, math.inf, 0.0, 0.0, violation)


def _finite(reset_term: float, kinetic_term: float) -> RateResult:
    return RateResult(True, reset_term + kinetic_term, reset_term, kinetic_term, None)


def classify_tilde_ac0(path: PiecewiseLinearPath) -> Violation | None:
    """Admissibility for the reset action: None if admissible, else the violation.

    Admissible means f(0) = 0 and every flagged jump lands at exactly 0.
    Between jumps a piecewise-linear path is absolutely continuous for free.
    """
    if path.values[0] != 0.0:
        return Violation.NONZERO_START
    flags = path.jump_flags
    if flags.size and np.any(path.values[1:-1][flags] != 0.0):
        return Violation.JUMP_TO_NONZERO
    return None


def nonzero_measure(path: PiecewiseLinearPath) -> float:
    """Lebesgue measure of {t : f(t) != 0}.

    A segment contributes its full length unless it is identically zero
    (zero start value and zero slope); a sloped segment's single crossing
    point has measure zero.
    """
    dt, slope, v_start, _ = path.segment_arrays()
    zero_seg = (v_start == 0.0) & (slope == 0.0)
    return float(np.sum(dt[~zero_seg]))


def rate_reset(path: PiecewiseLinearPath, lam: float) -> RateResult:
    """Reset action: lambda * m(M) + (1/2) integral over M of f'(t)^2."""
    _check_lam(lam)
    violation = classify_tilde_ac0(path)
    if violation is not None:
        return _infinite(violation)
    dt, slope, v_start, _ = path.segment_arrays()
    zero_seg = (v_start == 0.0) & (slope == 0.0)
    live = ~zero_seg
    measure = float(np.sum(dt[live]))
    kinetic = 0.5 * float(np.sum(slope[live] ** 2 * dt[live]))
    return _finite(lam * measure, kinetic)


def rate_wiener(path: PiecewiseLinearPath) -> RateResult:
    """Schilder action (1/2) integral of f'(t)^2; infinite on jumps or f(0) != 0."""
    if path.values[0] != 0.0 or bool(np.any(path.jump_flags)):
        return _infinite(Violation.NOT_ADMISSIBLE)
    dt, slope, _, _ = path.segment_arrays()
    kinetic = 0.5 * float(np.sum(slope**2 * dt))
    return _finite(0.0, kinetic)


def rate_poisson(path: PiecewiseLinearPath, lam: float) -> RateResult:
    """Counting-process entropy: integral of f' ln(f'/lambda) - f' + lambda.

    The integrand at slope 0 is the limit value lambda. Whole action reported
    as kinetic_term (there is no reset pricing in this functional).
    """
    _check_lam(lam)
    if path.values[0] != 0.0 or bool(np.any(path.jump_flags)):
        return _infinite(Violation.DECREASING_POISSON)
    dt, slope, _, _ = path.segment_arrays()
    if np.any(slope < 0.0):
        return _infinite(Violation.DECREASING_POISSON)
    g = np.full_like(slope, lam)
    pos = slope > 0.0
    sp = slope[pos]
    g[pos] = sp * np.log(sp / lam) - sp + lam
    return _finite(0.0, float(np.sum(g * dt)))


def _check_lam(lam: float) -> None:
    if not (lam > 0.0 and math.isfinite(lam)):
        raise ValueError("lambda must be a positive finite real")
