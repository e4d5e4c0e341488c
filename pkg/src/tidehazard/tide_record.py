"""Tide records: ingestion, harmonic synthesis and datum estimation.

A :class:`TideRecord` is a gap-free, one-minute series of water levels in
meters relative to mean sea level. Every CCDF in :mod:`tidehazard.tide_ccdf`
is built by sliding windows across one of these.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .kernels import sliding_max

TIDAL_DAY_MINUTES = 1490
EXTREMUM_HALF_WINDOW = 120
MIN_TIDAL_DAYS = 40
DEFAULT_MAX_GAP_MINUTES = 120
MSL_TOLERANCE = 0.05

EPOCH_2000 = datetime(2000, 1, 1, tzinfo=timezone.utc)

DATUM_FIELDS = (
    "xi_mllw",
    "xi_mlw",
    "xi_msl",
    "xi_mhw",
    "xi_mhhw",
    "xi_lowest",
    "xi_highest",
    "sigma0",
)


class TideDataError(ValueError):
    """Raised for malformed or unusable tide input."""


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TideRecord:
    start_epoch: datetime
    levels: np.ndarray
    site_label: str = ""
    cadence_minutes: int = 1
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.cadence_minutes != 1:
            raise TideDataError("only one-minute cadence is supported")
        levels = _readonly(self.levels)
        if levels.ndim != 1 or levels.size == 0:
            raise TideDataError("levels must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(levels)):
            raise TideDataError("levels contain missing or non-finite values")
        start = self.start_epoch
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        object.__setattr__(self, "start_epoch", start.astimezone(timezone.utc))
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self) -> int:
        return self.levels.shape[0]

    @property
    def n_tidal_days(self) -> float:
        return len(self) / TIDAL_DAY_MINUTES

    def timestamps(self) -> list[datetime]:
        return [self.start_epoch + timedelta(minutes=i) for i in range(len(self))]

    def rebased(self) -> "TideRecord":
        """Copy shifted so the mean level is exactly zero."""
        levels = self.levels - self.levels.mean()
        meta = dict(self.metadata, rebased="true")
        return TideRecord(self.start_epoch, levels, self.site_label, metadata=meta)


@dataclass(frozen=True)
class HarmonicConstituent:
    name: str
    amplitude: float
    speed: float  # degrees per hour
    phase: float = 0.0  # degrees

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError(f"{self.name}: amplitude must be >= 0")
        if not self.speed > 0:
            raise ValueError(f"{self.name}: speed must be > 0")

    @property
    def period_minutes(self) -> float:
        return 360.0 / self.speed * 60.0


@dataclass(frozen=True)
class TidalDatums:
    xi_mllw: float
    xi_mlw: float
    xi_msl: float
    xi_mhw: float
    xi_mhhw: float
    xi_lowest: float
    xi_highest: float
    sigma0: float

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")

    def is_ordered(self) -> bool:
        seq = (
            self.xi_lowest,
            self.xi_mllw,
            self.xi_mlw,
            self.xi_msl,
            self.xi_mhw,
            self.xi_mhhw,
            self.xi_highest,
        )
        return all(a <= b for a, b in zip(seq, seq[1:]))

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in DATUM_FIELDS}


@dataclass(frozen=True)
class GapPolicy:
    """Gaps up to ``interpolate_max_minutes`` (timestamp difference) are filled linearly."""

    interpolate_max_minutes: int = DEFAULT_MAX_GAP_MINUTES

    @classmethod
    def fail(cls) -> "GapPolicy":
        return cls(interpolate_max_minutes=1)


def _parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    stamp = datetime.fromisoformat(text)
    if stamp.tzinfo is None:
        return stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def format_timestamp(stamp: datetime) -> str:
    return stamp.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def ingest_tide_csv(
    stream: TextIO,
    gap_policy: GapPolicy | None = None,
    *,
    rebase: bool = False,
    site_label: str = "",
    min_samples: int = 1,
    product: str = "unspecified",
) -> TideRecord:
    """Read a ``timestamp,level_m`` CSV into a uniform one-minute record.

    Gaps no longer than the policy allows are filled by linear interpolation;
    longer gaps, unordered timestamps and off-minute stamps raise
    :class:`TideDataError`. ``product`` (predicted/observed) is kept in the
    record metadata.
    """
    policy = gap_policy or GapPolicy()
    reader = csv.reader(row for row in stream if row.strip() and not row.startswith("#"))
    try:
        header = next(reader)
    except StopIteration:
        raise TideDataError("empty tide CSV") from None
    if [h.strip() for h in header[:2]] != ["timestamp", "level_m"]:
        raise TideDataError(f"expected header 'timestamp,level_m', got {','.join(header)!r}")

    minutes: list[int] = []
    values: list[float] = []
    start = None
    for lineno, row in enumerate(reader, start=2):
        if len(row) < 2:
            raise TideDataError(f"line {lineno}: expected two columns")
        stamp = _parse_timestamp(row[0])
        if start is None:
            start = stamp
        offset = (stamp - start).total_seconds() / 60.0
        if offset != int(offset):
            raise TideDataError(f"line {lineno}: timestamp {row[0]} is not on the minute grid")
        offset = int(offset)
        if minutes and offset <= minutes[-1]:
            raise TideDataError(f"line {lineno}: timestamps are not strictly increasing")
        level = float(row[1])
        if not math.isfinite(level):
            raise TideDataError(f"line {lineno}: non-finite level")
        if minutes:
            gap = offset - minutes[-1]
            if gap > max(policy.interpolate_max_minutes, 1):
                raise TideDataError(
                    f"line {lineno}: gap of {gap} minutes exceeds policy "
                    f"({policy.interpolate_max_minutes} minutes)"
                )
        minutes.append(offset)
        values.append(level)

    if start is None:
        raise TideDataError("tide CSV has no data rows")
    grid = np.arange(minutes[-1] + 1)
    levels = np.asarray(values, dtype=np.float64)
    if grid.size != levels.size:
        levels = np.interp(grid, np.asarray(minutes, dtype=np.float64), levels)
    if levels.size < min_samples:
        raise TideDataError(f"record has {levels.size} samples, fewer than {min_samples}")

    record = TideRecord(start, levels, site_label, metadata={"product": product})
    if rebase:
        return record.rebased()
    mean = float(levels.mean())
    if abs(mean) > MSL_TOLERANCE:
        warnings.warn(
            f"record mean is {mean:.3f} m; levels may not be referenced to MSL",
            stacklevel=2,
        )
    return record


def write_tide_csv(record: TideRecord, stream: TextIO) -> None:
    # repr keeps the shortest round-trip form, so re-ingestion is bit-exact.
    stream.write("timestamp,level_m\n")
    start = record.start_epoch
    for i, level in enumerate(record.levels.tolist()):
        stream.write(f"{format_timestamp(start + timedelta(minutes=i))},{level!r}\n")


def tide_to_csv_text(record: TideRecord) -> str:
    buf = io.StringIO()
    write_tide_csv(record, buf)
    return buf.getvalue()


def read_constituents_csv(stream: TextIO) -> list[HarmonicConstituent]:
    reader = csv.DictReader(row for row in stream if row.strip() and not row.startswith("#"))
    expected = {"name", "amplitude_m", "speed_deg_per_hr", "phase_deg"}
    if reader.fieldnames is None or not expected <= set(reader.fieldnames):
        raise TideDataError(
            "constituent CSV needs columns name,amplitude_m,speed_deg_per_hr,phase_deg"
        )
    return [
        HarmonicConstituent(
            row["name"].strip(),
            float(row["amplitude_m"]),
            float(row["speed_deg_per_hr"]),
            float(row["phase_deg"]),
        )
        for row in reader
    ]


def synthesize_tide(
    constituents: Sequence[HarmonicConstituent],
    duration_days: float,
    msl_offset: float = 0.0,
    *,
    start_epoch: datetime = EPOCH_2000,
    site_label: str = "synthetic",
) -> TideRecord:
    """Sum of cosines ``A cos(speed*t + phase)`` sampled every minute, t in hours."""
    if not constituents:
        raise ValueError("at least one constituent is required")
    if duration_days < 1:
        raise ValueError("duration_days must be >= 1")
    n = int(round(duration_days * 1440))
    hours = np.arange(n, dtype=np.float64) / 60.0
    levels = np.full(n, float(msl_offset))
    for c in constituents:
        # reduce in degrees first; keeps the argument small over long records
        angle = np.mod(c.speed * hours + c.phase, 360.0)
        levels += c.amplitude * np.cos(np.deg2rad(angle))
    return TideRecord(
        start_epoch,
        levels,
        site_label,
        metadata={"product": "synthetic", "constituents": ",".join(c.name for c in constituents)},
    )


def find_extrema(levels: np.ndarray, half_window: int = EXTREMUM_HALF_WINDOW):
    """Indices of local highs and lows.

    A high is a sample that is the maximum of the ``±half_window`` neighbourhood
    and strictly greater than every earlier sample in it (earliest of tied
    maxima wins). Samples whose neighbourhood runs off the record are skipped.
    """
    x = np.asarray(levels, dtype=np.float64)
    n = x.shape[0]
    w = 2 * half_window + 1
    if n < w:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty

    centers = np.arange(half_window, n - half_window)

    def _peaks(y):
        around = sliding_max(y, w)
        before = sliding_max(y, half_window)[: centers.size]
        yc = y[centers]
        return centers[(yc == around) & (yc > before)]

    return _peaks(x), _peaks(-x)


def compute_datums(record: TideRecord, min_tidal_days: float = 1.0) -> TidalDatums:
    """Estimate MLLW..MHHW, extremes and the standard deviation of a record.

    The record is cut into consecutive 1490-minute tidal days and the
    trailing partial day is dropped. MHHW/MLLW average each day's higher high
    and lower low; MHW/MLW average each day's mean high and mean low, which
    keeps MHW <= MHHW even when a day holds one or three highs.
    """
    x = record.levels
    n_days = len(x) // TIDAL_DAY_MINUTES
    if n_days < max(1, math.ceil(min_tidal_days)):
        raise TideDataError(
            f"record spans {len(x) / TIDAL_DAY_MINUTES:.2f} tidal days; "
            f"need at least {max(1.0, min_tidal_days)}"
        )
    if n_days < MIN_TIDAL_DAYS:
        warnings.warn(
            f"only {n_days} tidal days; datums from fewer than {MIN_TIDAL_DAYS} are unreliable",
            stacklevel=2,
        )
    highs, lows = find_extrema(x)
    span = n_days * TIDAL_DAY_MINUTES
    highs, lows = highs[highs < span], lows[lows < span]
    if highs.size == 0 or lows.size == 0:
        raise TideDataError("no tidal highs or lows in the complete tidal days")

    def _daily(idx):
        day = idx // TIDAL_DAY_MINUTES
        vals = x[idx]
        extreme_hi = np.full(n_days, -np.inf)
        extreme_lo = np.full(n_days, np.inf)
        np.maximum.at(extreme_hi, day, vals)
        np.minimum.at(extreme_lo, day, vals)
        count = np.bincount(day, minlength=n_days)
        total = np.bincount(day, weights=vals, minlength=n_days)
        has = count > 0
        return extreme_hi[has], extreme_lo[has], total[has] / count[has]

    higher_highs, _, mean_highs = _daily(highs)
    _, lower_lows, mean_lows = _daily(lows)

    return TidalDatums(
        xi_mllw=float(lower_lows.mean()),
        xi_mlw=float(mean_lows.mean()),
        xi_msl=float(x.mean()),
        xi_mhw=float(mean_highs.mean()),
        xi_mhhw=float(higher_highs.mean()),
        xi_lowest=float(x.min()),
        xi_highest=float(x.max()),
        sigma0=float(x.std()),
    )


def write_datums_csv(datums: TidalDatums, stream: TextIO) -> None:
    stream.write("datum,value_m\n")
    for name, value in datums.as_dict().items():
        stream.write(f"{name},{value:.6f}\n")


def read_datums_csv(stream: TextIO) -> TidalDatums:
    reader = csv.DictReader(row for row in stream if row.strip() and not row.startswith("#"))
    values = {row["datum"].strip(): float(row["value_m"]) for row in reader}
    missing = set(DATUM_FIELDS) - set(values)
    if missing:
        raise TideDataError(f"datum report missing {sorted(missing)}")
    return TidalDatums(**{name: values[name] for name in DATUM_FIELDS})


def rows_to_csv(rows: Iterable[tuple[str, float]]) -> str:
    """Small helper for tests and fixtures: build a tide CSV from (timestamp, level) pairs."""
    lines = ["timestamp,level_m"]
    lines.extend(f"{stamp},{level!r}" for stamp, level in rows)
    return "\n".join(lines) + "\n"
