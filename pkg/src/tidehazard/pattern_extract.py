"""Square-wave tsunami patterns from gauge series.

A :class:`WavePattern` lists K wave intervals ``[S_k, T_k]`` (integer
minutes, first start at 0) and height deficits ``D_k`` relative to the
tallest wave. Patterns drive :func:`tidehazard.tide_ccdf.build_phi_pattern`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence, TextIO

import numpy as np

HALF_AMPLITUDE = "half_amplitude"
THRESHOLD_RUN = "threshold_run"
WIDTH_RULES = (HALF_AMPLITUDE, THRESHOLD_RUN)

DEFAULT_THRESHOLD_FRACTION = 0.25
DEFAULT_MIN_GAP_MINUTES = 20

# Crest-resolving settings for the G-method proxy: every 20-minute crest
# stays a separate wave instead of merging into one long block.
PROXY_EXTRACT_PARAMS = {"threshold_fraction": 0.05, "min_gap_minutes": 1}

# Recommended contiguous windows for named Crescent City sources. The
# published numbers carry no unit; they are read as hours and flagged so.
RECOMMENDED_DT = {
    "units": "hours (interpreted; unit not stated at source)",
    "values": {
        "KmSZe01": 1, "KmSZe02": 3,
        "KrSZe01": 2, "KrSZe02": 3, "KrSZe03": 4,
        "AASZe01": 1, "AASZe02": 2, "AASZe03": 1, "AASZe08": 1,
        "SChSZe01": 1, "TOHe01": 1,
        "CSZBe01r13": 1, "CSZBe01r14": 1,
        **{f"CSZBe01r{i:02d}": 0 for i in list(range(1, 13)) + [15]},
    },
}


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class GaugeSeries:
    minutes_since_event: np.ndarray
    eta: np.ndarray
    run_stage: float = 0.0

    def __post_init__(self):
        t = np.array(self.minutes_since_event, dtype=np.float64)
        eta = np.array(self.eta, dtype=np.float64)
        if t.ndim != 1 or t.shape != eta.shape or t.size == 0:
            raise PatternError("times and eta must be equal-length 1-D arrays")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(eta))):
            raise PatternError("gauge series contains non-finite values")
        if np.any(np.diff(t) <= 0):
            raise PatternError("gauge times must be strictly ascending")
        t.setflags(write=False)
        eta.setflags(write=False)
        object.__setattr__(self, "minutes_since_event", t)
        object.__setattr__(self, "eta", eta)


@dataclass(frozen=True)
class WavePattern:
    intervals: tuple[tuple[int, int], ...]
    offsets: tuple[float, ...]
    source_label: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        intervals = tuple((int(s), int(t)) for s, t in self.intervals)
        offsets = tuple(float(d) for d in self.offsets)
        if not intervals or len(intervals) != len(offsets):
            raise PatternError("need one offset per interval and at least one wave")
        if intervals[0][0] != 0:
            raise PatternError("first wave must start at minute 0")
        for (s, t), nxt in zip(intervals, intervals[1:] + ((None, None),)):
            if not s < t:
                raise PatternError(f"wave interval [{s}, {t}] is empty")
            if nxt[0] is not None and t > nxt[0]:
                raise PatternError("wave intervals overlap or are out of order")
        if min(offsets) != 0.0 or any(not (d >= 0 and math.isfinite(d)) for d in offsets):
            raise PatternError("offsets must be finite, >= 0, and zero for the tallest wave")
        object.__setattr__(self, "intervals", intervals)
        object.__setattr__(self, "offsets", offsets)

    @property
    def K(self) -> int:
        return len(self.intervals)

    @property
    def duration(self) -> int:
        return self.intervals[-1][1]

    @property
    def starts(self) -> np.ndarray:
        return np.array([s for s, _ in self.intervals], dtype=np.int64)

    @property
    def ends(self) -> np.ndarray:
        return np.array([t for _, t in self.intervals], dtype=np.int64)

    @property
    def max_offset(self) -> float:
        return max(self.offsets)

    def lag_offsets(self) -> np.ndarray:
        """Per-minute offsets over ``[0, duration]``; ``inf`` between waves."""
        d = np.full(self.duration + 1, np.inf)
        for (s, t), off in zip(self.intervals, self.offsets):
            d[s : t + 1] = np.minimum(d[s : t + 1], off)
        return d

    def to_json(self) -> str:
        payload = {
            "source": self.source_label,
            "intervals": [list(iv) for iv in self.intervals],
            "offsets": list(self.offsets),
            "duration": self.duration,
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "WavePattern":
        payload = json.loads(text)
        pattern = cls(
            tuple(tuple(iv) for iv in payload["intervals"]),
            tuple(payload["offsets"]),
            payload.get("source", ""),
        )
        if "duration" in payload and int(payload["duration"]) != pattern.duration:
            raise PatternError("pattern duration does not match its last interval")
        return pattern


def single_wave(width: int, label: str = "") -> WavePattern:
    return WavePattern(((0, int(width)),), (0.0,), label)


def load_aasze02() -> WavePattern:
    """The seven-wave AASZe02 pattern recorded at Crescent City Gauge 101."""
    text = resources.files("tidehazard").joinpath("data/aasze02_pattern.json").read_text()
    return WavePattern.from_json(text)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive index ranges of consecutive True values."""
    if not mask.any():
        return []
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]


def extract_pattern(
    g: GaugeSeries,
    threshold_fraction: float = DEFAULT_THRESHOLD_FRACTION,
    min_gap_minutes: float = DEFAULT_MIN_GAP_MINUTES,
    width_rule: str = HALF_AMPLITUDE,
    source_label: str = "",
) -> WavePattern:
    """Reduce a gauge series to square waves.

    Runs where eta exceeds ``threshold_fraction`` of the highest crest become
    candidate waves; runs closer than ``min_gap_minutes`` are merged. Each wave
    spans the samples at or above half its own crest (``half_amplitude``) or
    its whole run (``threshold_run``). Drawdowns are ignored.
    """
    if width_rule not in WIDTH_RULES:
        raise PatternError(f"unknown width rule {width_rule!r}")
    if not 0 <= threshold_fraction < 1:
        raise PatternError("threshold_fraction must lie in [0, 1)")
    t, eta = g.minutes_since_event, g.eta
    H = float(eta.max())
    if not H > 0:
        raise PatternError("gauge series has no crest above zero")

    runs = _runs(eta > threshold_fraction * H)
    merged: list[list[int]] = []
    for a, b in runs:
        if merged and t[a] - t[merged[-1][1]] < min_gap_minutes:
            merged[-1][1] = b
        else:
            merged.append([a, b])
    if not merged:
        raise PatternError("no waves found above the threshold")

    spans = []
    crests = []
    for a, b in merged:
        seg = eta[a : b + 1]
        crest = float(seg.max())
        if width_rule == HALF_AMPLITUDE:
            idx = np.flatnonzero(seg >= 0.5 * crest)
            lo, hi = a + int(idx[0]), a + int(idx[-1])
        else:
            lo, hi = a, b
        start, end = math.floor(t[lo]), math.ceil(t[hi])
        if end == start:
            end += 1
        spans.append((start, end))
        crests.append(crest)

    t0 = spans[0][0]
    intervals = tuple((s - t0, e - t0) for s, e in spans)
    offsets = tuple(H - c for c in crests)
    return WavePattern(intervals, offsets, source_label)


def proxy_pattern(A_G: float, gp=None) -> GaugeSeries:
    """The G-method proxy: ``A_G exp(-t/efold) cos(2 pi t / period)`` for t in [0, T_G]."""
    if not A_G > 0:
        raise PatternError("proxy amplitude must be positive")
    T_G, period, efold = 7200, 20.0, 2880.0
    if gp is not None:
        T_G, period, efold = int(gp.T_G), float(gp.period), float(gp.efold)
    t = np.arange(T_G + 1, dtype=np.float64)
    phase = np.mod(t, period) / period
    eta = A_G * np.exp(-t / efold) * np.cos(2.0 * np.pi * phase)
    return GaugeSeries(t, eta, run_stage=0.0)


def recommend_dt(p: WavePattern, near_equal_margin: float = 0.1) -> int:
    """Contiguous window covering the tallest wave and any wave within the margin of it."""
    near = [iv for iv, d in zip(p.intervals, p.offsets) if d <= near_equal_margin]
    return max(t for _, t in near) - min(s for s, _ in near)


def read_gauge_csv(stream: TextIO) -> GaugeSeries:
    run_stage = None
    rows = []
    for line in stream:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "run_stage_m":
                run_stage = float(value)
            continue
        rows.append(line)
    reader = csv.reader(rows)
    header = [h.strip() for h in next(reader)]
    if header[:2] != ["t_min", "eta_m"]:
        raise PatternError("gauge CSV header must be t_min,eta_m")
    data = [(float(r[0]), float(r[1])) for r in reader]
    if not data:
        raise PatternError("gauge CSV has no rows")
    t, eta = zip(*data)
    return GaugeSeries(np.array(t), np.array(eta), 0.0 if run_stage is None else run_stage)


def write_gauge_csv(g: GaugeSeries, stream: TextIO) -> None:
    stream.write(f"# run_stage_m={g.run_stage!r}\n")
    stream.write("t_min,eta_m\n")
    for t, e in zip(g.minutes_since_event.tolist(), g.eta.tolist()):
        stream.write(f"{t!r},{e!r}\n")


def pattern_from_arrays(
    starts: Sequence[int], ends: Sequence[int], offsets: Sequence[float], label: str = ""
) -> WavePattern:
    return WavePattern(tuple(zip(starts, ends)), tuple(offsets), label)
