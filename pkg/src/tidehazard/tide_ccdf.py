"""Tide-exceedance CCDFs: Phi_0, Phi_dt, Phi_pattern, Phi_G and the erf form.

Every table-building method slides a window across the tide record one
minute at a time, reduces each window to a single level, and bins those
levels into a cumulative histogram on a fixed grid of left edges. A level
goes into the first bin whose right edge is >= it, so ``phi`` at a left edge
is the fraction of windows whose level is strictly above that edge.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np
from scipy.special import erfc

from . import kernels
from .pattern_extract import WavePattern, proxy_pattern
from .tide_record import TidalDatums, TideRecord

DEFAULT_BIN_WIDTH = 0.01
MASS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class BinSpec:
    """Uniform bins with left edges ``(first_index + i) * width``.

    Edges sit on an integer multiple of the width so tables built with the
    same width share edges exactly.
    """

    first_index: int
    n_bins: int
    width: float = DEFAULT_BIN_WIDTH

    def __post_init__(self):
        if self.n_bins < 1:
            raise ValueError("need at least one bin")
        if not self.width > 0:
            raise ValueError("bin width must be positive")

    @classmethod
    def covering(cls, lo: float, hi: float, width: float = DEFAULT_BIN_WIDTH) -> "BinSpec":
        """Bins from one width below ``lo`` to one width above ``hi``."""
        first = math.floor(lo / width) - 1
        last = math.ceil(hi / width) + 1
        return cls(first, last - first, width)

    @classmethod
    def for_record(
        cls, rec: TideRecord, max_offset: float = 0.0, width: float = DEFAULT_BIN_WIDTH
    ) -> "BinSpec":
        return cls.covering(float(rec.levels.min()) - max_offset, float(rec.levels.max()), width)

    def union(self, other: "BinSpec") -> "BinSpec":
        if other.width != self.width:
            raise ValueError("cannot merge bins of different widths")
        first = min(self.first_index, other.first_index)
        last = max(self.first_index + self.n_bins, other.first_index + other.n_bins)
        return BinSpec(first, last - first, self.width)

    @property
    def left_edges(self) -> np.ndarray:
        return (self.first_index + np.arange(self.n_bins)) * self.width

    @property
    def right_edges(self) -> np.ndarray:
        return (self.first_index + 1 + np.arange(self.n_bins)) * self.width


@dataclass(frozen=True, eq=False)
class CcdfTable:
    bin_left_edges: np.ndarray
    phi: np.ndarray
    pdf: np.ndarray
    n_windows: int
    bin_width: float
    method_tag: str
    counts: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    # (lowest, highest) binned window level, when known
    level_range: tuple[float, float] | None = None

    def __post_init__(self):
        for name in ("bin_left_edges", "phi", "pdf", "counts"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=np.int64 if name == "counts" else np.float64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def right_edge(self) -> float:
        return float(self.bin_left_edges[-1] + self.bin_width)

    def __call__(self, xi_hat):
        return eval_phi(self, xi_hat)


@dataclass(frozen=True)
class GMethodParams:
    """Regression constants for the G method; defaults are the Crescent City values."""

    sigma0: float = 0.638
    alpha: float = 0.17
    beta: float = 0.858
    C: float = 1.044
    alpha_prime: float = 0.056
    beta_prime: float = 1.119
    C_prime: float = 0.707
    xi_ref: float | None = None  # None: use the site's MLLW
    S: float = 0.0
    T_G: int = 7200
    period: float = 20.0
    efold: float = 2880.0

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if not self.T_G > 0 or not self.period > 0 or not self.efold > 0:
            raise ValueError("T_G, period and efold must be positive")


@dataclass(frozen=True)
class MomentSummary:
    xi0: float
    sigma: float


# -- table assembly -----------------------------------------------------------


def _table_from_counts(
    counts, n_windows, bins: BinSpec, tag: str, level_range=None, **meta
) -> CcdfTable:
    counts = np.asarray(counts, dtype=np.int64)
    above = np.cumsum(counts[::-1])[::-1]
    phi = above / n_windows
    pdf = counts / (n_windows * bins.width)
    if level_range is not None:
        level_range = (float(level_range[0]), float(level_range[1]))
    return CcdfTable(
        bins.left_edges, phi, pdf, int(n_windows), bins.width, tag, counts, meta, level_range
    )


def _chunks(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(int(parts), n))
    cuts = np.linspace(0, n, parts + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]


def _binned(
    n_out: int, window_levels: Callable[[int, int], np.ndarray], bins: BinSpec, threads: int
) -> tuple[np.ndarray, tuple[float, float]]:
    """Bin counts of ``window_levels(a, b)`` over start minutes ``[0, n_out)``.

    Start minutes are split into contiguous blocks; per-block integer counts
    are summed, so the result does not depend on the number of threads. Also
    returns the lowest and highest level seen.
    """
    right = bins.right_edges

    def work(span):
        a, b = span
        v = window_levels(a, b)
        return kernels.bin_counts(v, right), float(v.min()), float(v.max())

    spans = _chunks(n_out, threads)
    if len(spans) == 1:
        parts = [work(spans[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            parts = list(pool.map(work, spans))
    counts = np.sum([c for c, _, _ in parts], axis=0)
    return counts, (min(p[1] for p in parts), max(p[2] for p in parts))


# -- builders ----------------------------------------------------------------


def build_phi_dt(
    rec: TideRecord, dt_minutes: int, bins: BinSpec | None = None, *, threads: int = 1
) -> CcdfTable:
    """CCDF of the tide maximum over ``[t0, t0 + dt_minutes]``."""
    dt = int(dt_minutes)
    x = rec.levels
    if dt < 0:
        raise ValueError("dt_minutes must be >= 0")
    if dt >= x.shape[0]:
        raise ValueError(f"window of {dt} minutes is longer than the record ({x.shape[0]})")
    bins = bins or BinSpec.for_record(rec)
    n_out = x.shape[0] - dt

    def window_levels(a, b):
        return kernels.sliding_max(x[a : b + dt], dt + 1)

    counts, span = _binned(n_out, window_levels, bins, threads)
    return _table_from_counts(counts, n_out, bins, f"dt:{dt}", span, dt_minutes=dt)


def build_phi0(rec: TideRecord, bins: BinSpec | None = None, *, threads: int = 1) -> CcdfTable:
    """Occupation CCDF: fraction of minutes with the tide above each edge."""
    if len(rec) == 0:
        raise ValueError("empty record")
    table = build_phi_dt(rec, 0, bins, threads=threads)
    return CcdfTable(
        table.bin_left_edges, table.phi, table.pdf, table.n_windows, table.bin_width,
        "phi0", table.counts, table.metadata, table.level_range,
    )


def pattern_levels(x: np.ndarray, p: WavePattern, a: int, b: int) -> np.ndarray:
    """``max_k(max_{t in I_k} x[t0 + t] - D_k)`` for start minutes ``a <= t0 < b``."""
    n = b - a
    out = np.full(n, -np.inf)
    for (s, t), d in zip(p.intervals, p.offsets):
        width = t - s + 1
        seg = x[a + s : a + s + n + width - 1]
        np.maximum(out, kernels.sliding_max(seg, width) - d, out=out)
    return out


def build_phi_pattern(
    rec: TideRecord, p: WavePattern, bins: BinSpec | None = None, *, threads: int = 1
) -> CcdfTable:
    """CCDF of the pattern level slid across the record."""
    x = rec.levels
    if p.duration >= x.shape[0]:
        raise ValueError(
            f"pattern lasts {p.duration} minutes, longer than the record ({x.shape[0]})"
        )
    bins = bins or BinSpec.for_record(rec, p.max_offset)
    n_out = x.shape[0] - p.duration
    counts, span = _binned(n_out, lambda a, b: pattern_levels(x, p, a, b), bins, threads)
    return _table_from_counts(
        counts, n_out, bins, f"pattern:{p.source_label or p.K}", span,
        K=p.K, duration=p.duration,
    )


def g_offsets(A_G: float, gp: GMethodParams | None = None) -> np.ndarray:
    """Per-minute height deficit ``A_G - eta(t)`` of the proxy tsunami."""
    eta = proxy_pattern(A_G, gp or GMethodParams()).eta
    return A_G - eta


def build_phi_g_direct(
    rec: TideRecord,
    A_G: float,
    gp: GMethodParams | None = None,
    bins: BinSpec | None = None,
    *,
    threads: int = 1,
) -> CcdfTable:
    """CCDF of ``max_{0<=t<=T_G} (tide(t0 + t) - D(t))`` for the decaying proxy."""
    gp = gp or GMethodParams()
    x = rec.levels
    d = g_offsets(A_G, gp)
    span = d.shape[0]  # T_G + 1 samples
    if x.shape[0] < span:
        raise ValueError(f"record shorter than T_G + 1 minutes ({span})")
    bins = bins or BinSpec.for_record(rec, float(d.max()))
    n_out = x.shape[0] - span + 1

    def window_levels(a, b):
        seg = x[a : b + span - 1]
        return kernels.offset_max(seg, d, b - a)

    counts, span = _binned(n_out, window_levels, bins, threads)
    return _table_from_counts(counts, n_out, bins, "g_direct", span, A_G=A_G, T_G=gp.T_G)


# -- closed forms -------------------------------------------------------------


def phi_infinity(xi_hat, datums: TidalDatums):
    """Limit of Phi_dt for unbounded windows: 1 below the highest tide, else 0."""
    out = np.where(np.asarray(xi_hat, dtype=np.float64) < datums.xi_highest, 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def mofjeld_params(A_G: float, gp: GMethodParams, datums: TidalDatums) -> MomentSummary:
    """Regression estimates of the mean and spread of the G-method tide density."""
    if not A_G > 0:
        raise ValueError("A_G must be positive")
    r = A_G / gp.sigma0
    xi0 = gp.C * datums.xi_mhhw * math.exp(-gp.alpha * r**gp.beta)
    sigma = gp.sigma0 * (1.0 - gp.C_prime * math.exp(-gp.alpha_prime * r**gp.beta_prime))
    return MomentSummary(xi0, sigma)


def phi_erf(xi_hat, m: MomentSummary):
    """Gaussian CCDF ``(1 - erf((xi_hat - xi0) / (sqrt(2) sigma))) / 2``."""
    if not m.sigma > 0:
        raise ValueError("sigma must be positive for the erf form")
    z = (np.asarray(xi_hat, dtype=np.float64) - m.xi0) / (math.sqrt(2.0) * m.sigma)
    out = 0.5 * erfc(z)
    return float(out) if out.ndim == 0 else out


def g_amplitude(z_mhhw: float, gp: GMethodParams, datums: TidalDatums) -> float:
    """Proxy amplitude from the QoI simulated at MHHW."""
    xi_ref = datums.xi_mllw if gp.xi_ref is None else gp.xi_ref
    return z_mhhw + xi_ref - (datums.xi_mhhw - gp.S)


def g_zeta0(A_G: float, gp: GMethodParams, datums: TidalDatums) -> float:
    """Mean QoI under the G method, written in terms of the proxy amplitude."""
    xi_ref = datums.xi_mllw if gp.xi_ref is None else gp.xi_ref
    return A_G - xi_ref - gp.S + mofjeld_params(A_G, gp, datums).xi0


def g_exceedance(zeta_hat, z_mhhw: float, gp: GMethodParams, datums: TidalDatums):
    """P[zeta > zeta_hat] from a single MHHW run, closed form."""
    A_G = g_amplitude(z_mhhw, gp, datums)
    m = mofjeld_params(A_G, gp, datums)
    return phi_erf(zeta_hat, MomentSummary(g_zeta0(A_G, gp, datums), m.sigma))


def build_phi_erf(m: MomentSummary, bins: BinSpec | None = None) -> CcdfTable:
    """Tabulate the erf form on bin edges; the default grid spans +-8 sigma."""
    if bins is None:
        bins = BinSpec.covering(m.xi0 - 8 * m.sigma, m.xi0 + 8 * m.sigma)
    phi = np.asarray(phi_erf(bins.left_edges, m))
    nxt = np.asarray(phi_erf(bins.right_edges, m))
    pdf = (phi - nxt) / bins.width
    return CcdfTable(
        bins.left_edges, phi, pdf, 0, bins.width, "g_erf", None,
        {"xi0": m.xi0, "sigma": m.sigma},
    )


# -- table queries ------------------------------------------------------------


def moments(t: CcdfTable) -> MomentSummary:
    """Mean and standard deviation of the binned density (bin centres)."""
    w = t.bin_width
    mass = t.pdf * w
    total = float(mass.sum())
    if abs(total - 1.0) > MASS_TOLERANCE:
        raise ValueError(f"density integrates to {total:.8f}, not 1")
    centers = t.bin_left_edges + 0.5 * w
    xi0 = float(np.dot(centers, mass))
    var = float(np.dot((centers - xi0) ** 2, mass))
    return MomentSummary(xi0, math.sqrt(max(var, 0.0)))


def eval_phi(t: CcdfTable, xi_hat):
    """Linear interpolation between left-edge values; 1 below the table, 0 above.

    When the table knows the range of its binned levels, stages below the
    lowest level give exactly 1 and stages at or above the highest give 0.
    """
    x = np.asarray(xi_hat, dtype=np.float64)
    edges = np.append(t.bin_left_edges, t.right_edge)
    values = np.append(t.phi, 0.0)
    out = np.interp(x, edges, values, left=1.0, right=0.0)
    out = np.where(x < edges[0], 1.0, out)
    if t.level_range is not None:
        lo, hi = t.level_range
        out = np.where(x < lo, 1.0, np.where(x >= hi, 0.0, out))
    return float(out) if out.ndim == 0 else out


# -- Phi-table CSV --------------------------------------------------------------


def write_phi_csv(t: CcdfTable, stream: TextIO, extra: dict | None = None) -> None:
    stream.write(f"# method={t.method_tag}\n")
    stream.write(f"# n_windows={t.n_windows}\n")
    stream.write(f"# bin_width_m={t.bin_width:.6f}\n")
    if t.level_range is not None:
        stream.write(f"# level_min_m={t.level_range[0]!r}\n# level_max_m={t.level_range[1]!r}\n")
    for key, value in (extra or {}).items():
        stream.write(f"# {key}={value}\n")
    stream.write("bin_left_m,phi,pdf_per_m\n")
    for edge, p, d in zip(t.bin_left_edges.tolist(), t.phi.tolist(), t.pdf.tolist()):
        stream.write(f"{edge:.6f},{p:.6f},{d:.6f}\n")


def read_phi_csv(stream: TextIO) -> CcdfTable:
    meta: dict[str, str] = {}
    rows = []
    header_seen = False
    for line in stream:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            continue
        if not header_seen:
            if line.replace(" ", "") != "bin_left_m,phi,pdf_per_m":
                raise ValueError("Phi CSV header must be bin_left_m,phi,pdf_per_m")
            header_seen = True
            continue
        rows.append([float(c) for c in line.split(",")])
    if not rows:
        raise ValueError("Phi CSV has no rows")
    data = np.array(rows)
    if "bin_width_m" in meta:
        width = float(meta["bin_width_m"])
    elif data.shape[0] > 1:
        width = float(data[1, 0] - data[0, 0])
    else:
        raise ValueError("cannot infer bin width from a one-row Phi CSV")
    level_range = None
    if "level_min_m" in meta and "level_max_m" in meta:
        level_range = (float(meta["level_min_m"]), float(meta["level_max_m"]))
    return CcdfTable(
        data[:, 0], data[:, 1], data[:, 2],
        int(meta.get("n_windows", 0)), width, meta.get("method", "unknown"), None, meta,
        level_range,
    )
