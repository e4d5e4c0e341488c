"""Stage-to-QoI response functions and their inversion.

A :class:`StageResponse` maps a static tide stage (m above MSL) to the
simulated quantity of interest at one location, either by piecewise-linear
interpolation through several runs or as a slope-one line through a single
run. Inversion follows the infimum rule: the answer is the lowest stage above
which the QoI strictly exceeds the requested level.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

PIECEWISE = "piecewise_linear"
SLOPE_ONE = "slope_one_single_run"
CLAMP = "clamp"
LINEAR = "linear_continuation"

MODES = (PIECEWISE, SLOPE_ONE)
EXTRAPOLATIONS = (CLAMP, LINEAR)


@dataclass(frozen=True)
class Location:
    lon: float
    lat: float
    bathy: float = 0.0


@dataclass(frozen=True)
class StageSample:
    stage: float
    qoi: float


@dataclass(frozen=True)
class ExceedanceSet:
    intervals: tuple[tuple[float, float], ...]

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    @property
    def total_length(self) -> float:
        return float(sum(b - a for a, b in self.intervals))


@dataclass(frozen=True, eq=False)
class StageResponse:
    """Immutable Z table for one location.

    ``domain`` bounds the stages over which inversion is meaningful, normally
    ``(xi_lowest, xi_highest)`` of the site; ``None`` means the whole real line.
    ``floor`` optionally stops extrapolated values from dropping below a
    physical minimum (0 for flow depth).
    """

    location: Location
    stages: np.ndarray
    qois: np.ndarray
    mode: str = PIECEWISE
    extrapolation: str = LINEAR
    domain: tuple[float, float] | None = None
    floor: float | None = None

    @property
    def is_monotone_increasing(self) -> bool:
        if self.mode == SLOPE_ONE:
            return True
        return bool(np.all(np.diff(self.qois) > 0))

    def __call__(self, stage):
        return eval_Z(self, stage)


def build_response(
    location: Location | None,
    samples: Sequence[StageSample | tuple[float, float]],
    mode: str = PIECEWISE,
    extrapolation: str = LINEAR,
    *,
    domain: tuple[float, float] | None = None,
    floor: float | None = None,
) -> StageResponse:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if extrapolation not in EXTRAPOLATIONS:
        raise ValueError(f"unknown extrapolation {extrapolation!r}")
    pairs = [(s.stage, s.qoi) if isinstance(s, StageSample) else tuple(s) for s in samples]
    if not pairs:
        raise ValueError("at least one stage sample is required")
    pairs.sort(key=lambda p: p[0])
    stages = np.array([p[0] for p in pairs], dtype=np.float64)
    qois = np.array([p[1] for p in pairs], dtype=np.float64)
    if not (np.all(np.isfinite(stages)) and np.all(np.isfinite(qois))):
        raise ValueError("stage samples must be finite")
    if np.any(np.diff(stages) == 0):
        raise ValueError("duplicate stages in samples")
    if mode == PIECEWISE and stages.size < 2:
        raise ValueError("piecewise mode needs at least two stages")
    if mode == SLOPE_ONE and stages.size != 1:
        raise ValueError("slope-one mode takes exactly one anchor run")
    if domain is not None:
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise ValueError("domain must satisfy lo < hi")
        if stages[0] < lo - 1.0 or stages[-1] > hi + 1.0:
            raise ValueError("stage samples lie more than 1 m outside the tide range")
        domain = (lo, hi)
    stages.setflags(write=False)
    qois.setflags(write=False)
    return StageResponse(
        location or Location(0.0, 0.0), stages, qois, mode, extrapolation, domain, floor
    )


def _end_slopes(sr: StageResponse) -> tuple[float, float]:
    if sr.mode == SLOPE_ONE:
        return 1.0, 1.0
    if sr.extrapolation == CLAMP:
        return 0.0, 0.0
    s, q = sr.stages, sr.qois
    return (q[1] - q[0]) / (s[1] - s[0]), (q[-1] - q[-2]) / (s[-1] - s[-2])


def eval_Z(sr: StageResponse, stage):
    """Evaluate Z at one stage or an array of stages."""
    x = np.asarray(stage, dtype=np.float64)
    s, q = sr.stages, sr.qois
    if sr.mode == SLOPE_ONE:
        out = q[0] + (x - s[0])
    else:
        out = np.interp(x, s, q)
        if sr.extrapolation == LINEAR:
            left, right = _end_slopes(sr)
            out = np.where(x < s[0], q[0] + left * (x - s[0]), out)
            out = np.where(x > s[-1], q[-1] + right * (x - s[-1]), out)
    if sr.floor is not None:
        outside = (x < s[0]) | (x > s[-1])
        out = np.where(outside, np.maximum(out, sr.floor), out)
    return float(out) if out.ndim == 0 else out


def _breakpoints(sr: StageResponse, lo: float, hi: float) -> np.ndarray:
    """Stages where Z changes slope, restricted to a finite [lo, hi]."""
    pts = [lo, hi]
    pts.extend(float(v) for v in sr.stages if lo < v < hi)
    if sr.floor is not None:
        # kinks where an extrapolated ray meets the floor
        left, right = _end_slopes(sr)
        s, q = sr.stages, sr.qois
        if left != 0:
            pts.append(s[0] + (sr.floor - q[0]) / left)
        if right != 0:
            pts.append(s[-1] + (sr.floor - q[-1]) / right)
    return np.unique(np.clip(np.array(pts, dtype=np.float64), lo, hi))


def _working_range(sr: StageResponse) -> tuple[float, float]:
    if sr.domain is not None:
        return sr.domain
    # Unbounded domain: every kink lies inside the knot span (or at a floor
    # crossing), so one unit beyond covers all breakpoints; rays are handled
    # separately.
    s = sr.stages
    lo, hi = float(s[0]) - 1.0, float(s[-1]) + 1.0
    if sr.floor is not None:
        left, right = _end_slopes(sr)
        for slope, s0, q0 in ((left, s[0], sr.qois[0]), (right, s[-1], sr.qois[-1])):
            if slope != 0:
                x = s0 + (sr.floor - q0) / slope
                lo, hi = min(lo, x - 1.0), max(hi, x + 1.0)
    return lo, hi


def exceedance_intervals(sr: StageResponse, qoi_level: float) -> ExceedanceSet:
    """Decompose ``{stage in domain : Z(stage) > qoi_level}`` into disjoint open intervals."""
    q = float(qoi_level)
    lo, hi = _working_range(sr)
    xs = _breakpoints(sr, lo, hi)
    ys = np.asarray(eval_Z(sr, xs), dtype=np.float64)
    pieces: list[list[float]] = []

    def _add(a, b, closed_left):
        # merge with the previous piece when they touch at a point above q
        if pieces and pieces[-1][1] == a and closed_left:
            pieces[-1][1] = b
        else:
            pieces.append([a, b])

    for i in range(xs.size - 1):
        x0, x1, y0, y1 = xs[i], xs[i + 1], ys[i], ys[i + 1]
        above0, above1 = y0 > q, y1 > q
        if above0 and above1:
            _add(x0, x1, True)
        elif above0:
            _add(x0, x0 + (q - y0) * (x1 - x0) / (y1 - y0), True)
        elif above1:
            _add(x0 + (q - y0) * (x1 - x0) / (y1 - y0), x1, False)

    if sr.domain is None:
        # beyond the working range Z is a single linear ray on each side
        left_slope = float(eval_Z(sr, lo - 1.0)) - ys[0]
        right_slope = float(eval_Z(sr, hi + 1.0)) - ys[-1]
        left = _ray_exceeds(ys[0], left_slope, q)
        if left is not None:
            a = lo - left
            if pieces and pieces[0][0] == lo and ys[0] > q:
                pieces[0][0] = a
            else:
                pieces.insert(0, [a, lo if ys[0] > q else lo - _crossing(ys[0], left_slope, q)])
        right = _ray_exceeds(ys[-1], right_slope, q)
        if right is not None:
            b = hi + right
            if pieces and pieces[-1][1] == hi and ys[-1] > q:
                pieces[-1][1] = b
            else:
                pieces.append([hi if ys[-1] > q else hi + _crossing(ys[-1], right_slope, q), b])

    return ExceedanceSet(tuple((float(a), float(b)) for a, b in pieces if a < b))


def _crossing(y0: float, slope: float, q: float) -> float:
    return (q - y0) / slope


def _ray_exceeds(y0: float, slope: float, q: float):
    """Far end (distance from the start) of the part of ``y0 + slope*u``, u > 0, above q.

    ``inf`` if the ray ends above q, a finite distance if it drops through q,
    ``None`` if no part of it exceeds q.
    """
    if slope > 0:
        return math.inf
    if slope == 0:
        return math.inf if y0 > q else None
    if y0 > q:
        return (y0 - q) / -slope
    return None


def inverse_Z(sr: StageResponse, qoi_level: float) -> float:
    """Lowest stage above which Z exceeds ``qoi_level``.

    ``-inf`` when Z exceeds the level across the whole domain, ``+inf`` when
    it never does.
    """
    intervals = exceedance_intervals(sr, qoi_level).intervals
    if not intervals:
        return math.inf
    a, b = intervals[0]
    if sr.domain is not None:
        lo, hi = sr.domain
        if a == lo and b == hi and float(eval_Z(sr, lo)) > qoi_level:
            return -math.inf
    return a


def read_ztable_csv(
    stream: TextIO,
    mode: str | None = None,
    extrapolation: str = LINEAR,
    *,
    domain: tuple[float, float] | None = None,
    floor: float | None = None,
) -> list[StageResponse]:
    """Parse a ``lon,lat,bathy_m,stage:<s>,...`` table, one response per row.

    With a single stage column the rows become slope-one responses unless a
    mode is forced.
    """
    reader = csv.reader(row for row in stream if row.strip() and not row.startswith("#"))
    header = [h.strip() for h in next(reader)]
    if header[:3] != ["lon", "lat", "bathy_m"]:
        raise ValueError("Z-table header must start with lon,lat,bathy_m")
    try:
        stages = [float(h.split(":", 1)[1]) for h in header[3:] if h.startswith("stage:")]
    except (IndexError, ValueError):
        raise ValueError("malformed stage column header") from None
    if len(stages) != len(header) - 3 or not stages:
        raise ValueError("Z-table needs stage:<meters> columns after bathy_m")
    if mode is None:
        mode = SLOPE_ONE if len(stages) == 1 else PIECEWISE
    out = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header) or any(not c.strip() for c in row):
            raise ValueError(f"Z-table line {lineno}: missing cells")
        lon, lat, bathy = (float(c) for c in row[:3])
        qois = [float(c) for c in row[3:]]
        out.append(
            build_response(
                Location(lon, lat, bathy),
                list(zip(stages, qois)),
                mode,
                extrapolation,
                domain=domain,
                floor=floor,
            )
        )
    return out


def write_ztable_csv(responses: Sequence[StageResponse], stream: TextIO) -> None:
    stages = responses[0].stages
    stream.write(",".join(["lon", "lat", "bathy_m"] + [f"stage:{s:g}" for s in stages]) + "\n")
    for sr in responses:
        if not np.array_equal(sr.stages, stages):
            raise ValueError("all responses must share the same stage columns")
        loc = sr.location
        cells = [f"{loc.lon:.6f}", f"{loc.lat:.6f}", f"{loc.bathy:.6f}"]
        cells += [f"{v:.6f}" for v in sr.qois]
        stream.write(",".join(cells) + "\n")
