"""Hazard curves: compose a tide CCDF with a stage response.

For each exceedance level the stage response is inverted (or decomposed into
exceedance intervals) and the tide CCDF is read at the resulting stages.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO, Union

import numpy as np

from .pattern_extract import WavePattern
from .stage_response import Location, StageResponse, exceedance_intervals, inverse_Z
from .tide_ccdf import BinSpec, CcdfTable, _table_from_counts, eval_phi
from .tide_record import TideRecord

INFIMUM = "infimum"
INTERVAL_SUM = "interval_sum"
PSI_MODES = (INFIMUM, INTERVAL_SUM)

ORACLE_MAX_MINUTES = 10_000

PhiLike = Union[CcdfTable, Callable[[np.ndarray], np.ndarray]]


def default_levels() -> np.ndarray:
    """The 35 standard exceedance values (m): 0-2 by 0.1, 2.5-5.5 by 0.5, 6-12 by 1."""
    levels = np.concatenate(
        [np.arange(21) * 0.1, 2.5 + np.arange(7) * 0.5, 6.0 + np.arange(7) * 1.0]
    )
    return np.round(levels, 10)


@dataclass(frozen=True, eq=False)
class ExceedanceLevels:
    levels: np.ndarray = field(default_factory=default_levels)

    def __post_init__(self):
        levels = np.array(self.levels, dtype=np.float64)
        if levels.ndim != 1 or levels.size == 0:
            raise ValueError("need a non-empty 1-D set of levels")
        if np.any(np.diff(levels) <= 0) or np.any(levels < 0):
            raise ValueError("exceedance levels must be strictly ascending and nonnegative")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    def __len__(self):
        return self.levels.size

    def labels(self) -> list[str]:
        return [format(float(z), "g") for z in self.levels]


@dataclass(frozen=True, eq=False)
class HazardCurve:
    location: Location
    levels: ExceedanceLevels
    probabilities: np.ndarray
    method_tag: str = ""


@dataclass(frozen=True, eq=False)
class GridField:
    locations: tuple[Location, ...]
    levels: ExceedanceLevels
    probabilities: np.ndarray  # (n_locations, n_levels)
    method_tag: str = ""

    def row(self, i: int) -> np.ndarray:
        return self.probabilities[i]


@dataclass(frozen=True, eq=False)
class DiffSummary:
    max_diff: float
    min_diff: float
    diff: np.ndarray  # signed a - b, (n_locations, n_levels)
    abs_diff: np.ndarray
    levels: ExceedanceLevels
    locations: tuple[Location, ...]


def _phi_at(phi: PhiLike, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if isinstance(phi, CcdfTable):
        vals = np.asarray(eval_phi(phi, x), dtype=np.float64)
    else:
        vals = np.asarray(phi(x), dtype=np.float64)
    # infinite stages are defined as certain / impossible exceedance
    vals = np.where(x == -np.inf, 1.0, vals)
    return np.where(x == np.inf, 0.0, vals)


def _interval_prob(sr: StageResponse, phi: PhiLike, level: float) -> float:
    total = 0.0
    for a, b in exceedance_intervals(sr, level):
        if sr.domain is not None:
            # the domain is the tide range: nothing lies beyond its ends
            if a <= sr.domain[0]:
                a = -math.inf
            if b >= sr.domain[1]:
                b = math.inf
        pa, pb = _phi_at(phi, [a, b])
        total += pa - pb
    return max(total, 0.0)


def psi(
    sr: StageResponse,
    phi: PhiLike,
    levels: ExceedanceLevels | None = None,
    mode: str = INFIMUM,
) -> HazardCurve:
    """Exceedance probabilities at one location.

    ``infimum`` reads Phi at the lowest stage producing exceedance;
    ``interval_sum`` adds Phi differences over every stage interval where the
    response exceeds the level (for non-monotone responses).
    """
    levels = levels or ExceedanceLevels()
    if mode == INFIMUM:
        stages = np.array([inverse_Z(sr, z) for z in levels.levels])
        probs = _phi_at(phi, stages)
    elif mode == INTERVAL_SUM:
        probs = np.array([_interval_prob(sr, phi, z) for z in levels.levels])
    else:
        raise ValueError(f"unknown psi mode {mode!r}")
    tag = phi.method_tag if isinstance(phi, CcdfTable) else getattr(phi, "__name__", "phi")
    return HazardCurve(sr.location, levels, np.clip(probs, 0.0, 1.0), f"{tag}/{mode}")


def hazard_grid(
    responses: Sequence[StageResponse],
    phi: PhiLike,
    levels: ExceedanceLevels | None = None,
    mode: str = INFIMUM,
    *,
    threads: int = 1,
) -> GridField:
    """``psi`` at every location; rows keep the input order for any thread count."""
    if not responses:
        raise ValueError("no locations given")
    levels = levels or ExceedanceLevels()

    def one(sr):
        return psi(sr, phi, levels, mode).probabilities

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, responses))
    else:
        rows = [one(sr) for sr in responses]
    tag = phi.method_tag if isinstance(phi, CcdfTable) else getattr(phi, "__name__", "phi")
    return GridField(
        tuple(sr.location for sr in responses), levels, np.vstack(rows), f"{tag}/{mode}"
    )


def compare_fields(a: GridField, b: GridField) -> DiffSummary:
    """Signed element-wise ``a - b`` with its extremes and absolute values."""
    if a.probabilities.shape != b.probabilities.shape:
        raise ValueError(
            f"field shapes differ: {a.probabilities.shape} vs {b.probabilities.shape}"
        )
    if not np.array_equal(a.levels.levels, b.levels.levels):
        raise ValueError("fields use different exceedance levels")
    if a.locations != b.locations:
        raise ValueError("fields cover different locations")
    diff = a.probabilities - b.probabilities
    return DiffSummary(
        float(diff.max()), float(diff.min()), diff, np.abs(diff), a.levels, a.locations
    )


def oracle_phi(rec: TideRecord, p: WavePattern, bins: BinSpec | None = None) -> CcdfTable:
    """Pattern CCDF by direct enumeration, no sliding-window tricks.

    Loops over every start minute, every wave and every minute in the wave,
    then places the value with ``bisect`` on the right edges. Meant as an
    independent reference for small inputs only.
    """
    n = len(rec)
    if n > ORACLE_MAX_MINUTES:
        raise ValueError(f"oracle limited to {ORACLE_MAX_MINUTES} minutes, record has {n}")
    if p.duration >= n:
        raise ValueError("pattern longer than record")
    bins = bins or BinSpec.for_record(rec, p.max_offset)
    xi = rec.levels.tolist()
    right = bins.right_edges.tolist()
    last = len(right) - 1
    counts = [0] * len(right)
    n_windows = n - p.duration
    lowest, highest = math.inf, -math.inf
    for t0 in range(n_windows):
        best = -math.inf
        for (s, t), d in zip(p.intervals, p.offsets):
            for minute in range(s, t + 1):
                v = xi[t0 + minute] - d
                if v > best:
                    best = v
        counts[min(bisect_left(right, best), last)] += 1
        lowest, highest = min(lowest, best), max(highest, best)
    return _table_from_counts(np.array(counts), n_windows, bins, "oracle", (lowest, highest))


# -- hazard / diff CSV --------------------------------------------------------


def write_hazard_csv(g: GridField, stream: TextIO) -> None:
    cols = ["lon", "lat", "bathy_m"] + [f"p_gt_{z}" for z in g.levels.labels()]
    stream.write(",".join(cols) + "\n")
    for loc, row in zip(g.locations, g.probabilities):
        cells = [f"{loc.lon:.6f}", f"{loc.lat:.6f}", f"{loc.bathy:.6f}"]
        cells += [f"{p:.6f}" for p in row]
        stream.write(",".join(cells) + "\n")


def read_hazard_csv(stream: TextIO) -> GridField:
    lines = [ln.strip() for ln in stream if ln.strip() and not ln.startswith("#")]
    header = lines[0].split(",")
    if header[:3] != ["lon", "lat", "bathy_m"] or not all(
        h.startswith("p_gt_") for h in header[3:]
    ):
        raise ValueError("hazard CSV header must be lon,lat,bathy_m,p_gt_<level>,...")
    levels = ExceedanceLevels(np.array([float(h[5:]) for h in header[3:]]))
    locs, rows = [], []
    for line in lines[1:]:
        cells = [float(c) for c in line.split(",")]
        locs.append(Location(*cells[:3]))
        rows.append(cells[3:])
    return GridField(tuple(locs), levels, np.array(rows, dtype=np.float64).reshape(len(locs), -1))


def write_diff_csv(d: DiffSummary, stream: TextIO, *, absolute: bool = False) -> None:
    prefix = "absd" if absolute else "d"
    values = d.abs_diff if absolute else d.diff
    cols = ["lon", "lat", "bathy_m"] + [f"{prefix}_{z}" for z in d.levels.labels()]
    stream.write(",".join(cols) + "\n")
    for loc, row in zip(d.locations, values):
        cells = [f"{loc.lon:.6f}", f"{loc.lat:.6f}", f"{loc.bathy:.6f}"]
        cells += [f"{v:.6f}" for v in row]
        stream.write(",".join(cells) + "\n")
    stream.write(f"# max_diff={d.max_diff:.6f}, min_diff={d.min_diff:.6f}\n")
