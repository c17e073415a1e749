"""Piecewise-linear cadlag paths on [0, 1].

A path is stored as breakpoints (strictly increasing, 0 to 1), one value per
breakpoint, and a jump flag per interior breakpoint. The value at a breakpoint
is always the right-continuous one. Between breakpoints the path is a straight
line through its endpoint data, with one exception: a segment whose right
breakpoint is flagged continues the geometric slope of the segment before it,
starting from its own left value, and the left limit at the flagged breakpoint
is the endpoint of that extension (flat if there is no previous segment). The
flagged breakpoint then restarts at the stored value. To encode a jump with a
particular approach slope, place a collinear breakpoint before the jump.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class PathSchemaError(ValueError):
    """Malformed path data; carries the offending field name."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"path field '{field}': {message}")


@dataclass(frozen=True)
class PiecewiseLinearPath:
    breakpoints: np.ndarray
    values: np.ndarray
    jump_flags: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        flags = np.asarray(self.jump_flags, dtype=bool)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "jump_flags", flags)
        _validate(bp, vals, flags)

    # -- geometry -----------------------------------------------------------

    def segment_arrays(self):
        """Per-segment geometry: (lengths, slopes, start values, end values).

        End values are left limits at the right breakpoint, which differ from
        the stored value exactly at flagged breakpoints.
        """
        bp, vals, flags = self.breakpoints, self.values, self.jump_flags
        nseg = bp.size - 1
        dt = np.diff(bp)
        slope = np.empty(nseg)
        v_end = np.empty(nseg)
        prev_slope = 0.0
        for i in range(nseg):
            flagged_right = i < flags.size and flags[i]
            if flagged_right:
                slope[i] = prev_slope
                v_end[i] = vals[i] + prev_slope * dt[i]
            else:
                slope[i] = (vals[i + 1] - vals[i]) / dt[i]
                v_end[i] = vals[i + 1]
            prev_slope = slope[i]
        return dt, slope, vals[:-1].copy(), v_end

    def values_at(self, t, side: str = "right"):
        """Evaluate the path at times t in [0, 1].

        side="right" gives the cadlag value, side="left" the left limit
        (at t=0 the stored start value is returned either way).
        """
        t = np.asarray(t, dtype=float)
        bp, vals = self.breakpoints, self.values
        _, slope, v_start, v_end = self.segment_arrays()
        if side == "right":
            idx = np.searchsorted(bp, t, side="right") - 1
        elif side == "left":
            idx = np.searchsorted(bp, t, side="left") - 1
        else:
            raise ValueError("side must be 'right' or 'left'")
        idx = np.clip(idx, 0, bp.size - 2)
        out = v_start[idx] + slope[idx] * (t - bp[idx])
        # the right endpoint of the domain has no further segment
        if side == "right":
            out = np.where(t >= bp[-1], vals[-1], out)
        else:
            out = np.where(t >= bp[-1], v_end[-1], out)
        return out if out.ndim else float(out)

    def sup_abs(self) -> float:
        """sup of |f| over [0, 1], left limits at jumps included."""
        _, _, v_start, v_end = self.segment_arrays()
        return float(
            max(np.max(np.abs(v_start)), np.max(np.abs(v_end)), abs(self.values[-1]))
        )

    def scale(self, c: float) -> "PiecewiseLinearPath":
        return PiecewiseLinearPath(self.breakpoints, c * self.values, self.jump_flags)

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "breakpoints": [float(b) for b in self.breakpoints],
            "values": [float(v) for v in self.values],
            "jump_flags": [bool(f) for f in self.jump_flags],
        }

    def dump_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def _validate(bp: np.ndarray, vals: np.ndarray, flags: np.ndarray) -> None:
    if bp.ndim != 1 or bp.size < 2:
        raise PathSchemaError("breakpoints", "need at least the two endpoints 0 and 1")
    if not np.all(np.isfinite(bp)):
        raise PathSchemaError("breakpoints", "entries must be finite")
    if bp[0] != 0.0:
        raise PathSchemaError("breakpoints", "must start at 0")
    if bp[-1] != 1.0:
        raise PathSchemaError("breakpoints", "must end at 1")
    if np.any(np.diff(bp) <= 0.0):
        raise PathSchemaError("breakpoints", "must be strictly increasing")
    if vals.shape != bp.shape:
        raise PathSchemaError("values", "need exactly one value per breakpoint")
    if not np.all(np.isfinite(vals)):
        raise PathSchemaError("values", "entries must be finite")
    if flags.ndim != 1 or flags.size != max(bp.size - 2, 0):
        raise PathSchemaError("jump_flags", "need one flag per interior breakpoint")


def path_from_json_dict(obj) -> PiecewiseLinearPath:
    """Build a path from a parsed JSON object, validating the schema."""
    if not isinstance(obj, dict):
        raise PathSchemaError("(root)", "expected a JSON object")
    for field in ("breakpoints", "values", "jump_flags"):
        if field not in obj:
            raise PathSchemaError(field, "missing")
        if not isinstance(obj[field], list):
            raise PathSchemaError(field, "expected a JSON array")
    for field in ("breakpoints", "values"):
        for entry in obj[field]:
            if isinstance(entry, bool) or not isinstance(entry, (int, float)):
                raise PathSchemaError(field, "entries must be numbers")
    for entry in obj["jump_flags"]:
        if not isinstance(entry, bool):
            raise PathSchemaError("jump_flags", "entries must be booleans")
    return PiecewiseLinearPath(
        np.asarray(obj["breakpoints"], dtype=float),
        np.asarray(obj["values"], dtype=float),
        np.asarray(obj["jump_flags"], dtype=bool),
    )


def load_path_json(path) -> PiecewiseLinearPath:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PathSchemaError("(root)", f"invalid JSON: {exc}") from exc
    return path_from_json_dict(obj)


# -- convenience constructors ------------------------------------------------

def zero_path() -> PiecewiseLinearPath:
    return PiecewiseLinearPath(np.array([0.0, 1.0]), np.array([0.0, 0.0]), np.array([], dtype=bool))


def ramp(c: float) -> PiecewiseLinearPath:
    """The linear path f(t) = c t."""
    return PiecewiseLinearPath(np.array([0.0, 1.0]), np.array([0.0, float(c)]), np.array([], dtype=bool))


def flat_then_ramp(s: float, k: float) -> PiecewiseLinearPath:
    """Zero on [0, s], then slope k up to t = 1."""
    if not 0.0 <= s < 1.0:
        if s == 1.0:
            return zero_path()
        raise ValueError("s must lie in [0, 1]")
    if s == 0.0:
        return ramp(k)
    return PiecewiseLinearPath(
        np.array([0.0, float(s), 1.0]),
        np.array([0.0, 0.0, float(k) * (1.0 - float(s))]),
        np.array([False]),
    )
