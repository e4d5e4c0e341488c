"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N: PASS|FAIL`` line in the terminal summary.
"""

import math
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

from tidehazard import kernels
from tidehazard.hazard_engine import INFIMUM, INTERVAL_SUM, hazard_grid, oracle_phi, psi
from tidehazard.pattern_extract import (
    PROXY_EXTRACT_PARAMS,
    extract_pattern,
    load_aasze02,
    pattern_from_arrays,
    proxy_pattern,
    single_wave,
)
from tidehazard.presets import crescent_city
from tidehazard.stage_response import build_response
from tidehazard.tide_ccdf import (
    BinSpec,
    build_phi0,
    build_phi_dt,
    build_phi_g_direct,
    build_phi_pattern,
    eval_phi,
    g_offsets,
    mofjeld_params,
    moments,
    phi_infinity,
)
from tidehazard.tide_record import EPOCH_2000, TidalDatums, TideRecord, compute_datums, ingest_tide_csv

# (source, A_G, G xi0, G sigma)
MOFJELD_ROWS = [
    ("AASZe03-Proxy", 3.92, 0.45, 0.34),
    ("AASZe01", 1.96, 0.65, 0.27),
    ("AASZe02", 1.50, 0.71, 0.25),
    ("AASZe03", 3.92, 0.45, 0.34),
    ("AASZe08", 0.30, 0.93, 0.20),
    ("KmSZe01", 0.92, 0.80, 0.22),
    ("KrSZe01", 0.50, 0.88, 0.21),
    ("SChSZe01", 0.60, 0.86, 0.21),
    ("TOHe01", 1.66, 0.69, 0.26),
    ("CSZBe01r01", 14.18, 0.09, 0.56),
    ("CSZBe01r02", 12.96, 0.11, 0.55),
    ("CSZBe01r03", 13.31, 0.10, 0.55),
    ("CSZBe01r04", 13.00, 0.11, 0.55),
    ("CSZBe01r05", 11.30, 0.14, 0.53),
    ("CSZBe01r07", 7.78, 0.24, 0.46),
    ("CSZBe01r08", 6.56, 0.29, 0.43),
    ("CSZBe01r10", 2.39, 0.60, 0.29),
    ("CSZBe01r11", 4.79, 0.39, 0.37),
]

PERIOD = 720
RESULTS: dict[int, str] = {}
CC_CSV_ENV = "TIDEHAZARD_CRESCENT_CITY_CSV"


@pytest.fixture(scope="module", autouse=True)
def summary(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    lines = [f"criterion {n}: {RESULTS[n]}" for n in sorted(RESULTS)]
    if reporter is not None:
        reporter.write_sep("-", "acceptance criteria")
        for line in lines:
            reporter.write_line(line)
    else:
        print("\n".join(lines))


@contextmanager
def criterion(n, note=""):
    try:
        yield
    except pytest.skip.Exception:
        RESULTS[n] = f"SKIP {note}".rstrip()
        raise
    except BaseException:
        RESULTS[n] = f"FAIL {note}".rstrip()
        raise
    RESULTS[n] = f"PASS {note}".rstrip()


def record(values):
    return TideRecord(EPOCH_2000, np.asarray(values, dtype=float))


def random_record(rng, n):
    t = np.arange(n)
    x = 0.8 * np.cos(2 * np.pi * t / rng.uniform(500, 900)) + 0.4 * np.cos(
        2 * np.pi * t / rng.uniform(1300, 1600) + rng.uniform(0, 6)
    )
    x = x + rng.normal(0, 0.03, n)
    # coarse rounding creates exact ties with bin edges and between samples
    return record(np.round(x, int(rng.integers(2, 4))))


def random_pattern(rng, max_len):
    k = int(rng.integers(1, 9))
    cuts = np.sort(rng.choice(np.arange(1, max_len), size=2 * k - 1, replace=False))
    bounds = np.concatenate(([0], cuts))
    offsets = np.round(rng.uniform(0, 1.5, k), 3)
    offsets[rng.integers(k)] = 0.0
    return pattern_from_arrays(bounds[0::2], bounds[1::2], offsets)


def random_monotone(rng, domain):
    n = int(rng.integers(2, 12))
    lo, hi = (int(round(v * 100)) for v in domain)
    stages = np.sort(rng.choice(np.arange(lo - 50, hi + 51), size=n, replace=False)) / 100.0
    qois = np.cumsum(rng.uniform(0.01, 2.0, n)) + rng.uniform(-1.0, 3.0)
    return build_response(None, list(zip(stages, qois)), domain=domain)


# -- 1 -----------------------------------------------------------------------------


def test_criterion_1_mofjeld_regression():
    with criterion(1, f"({len(MOFJELD_ROWS)} rows within 0.01 m)"):
        preset = crescent_city()
        start = time.perf_counter()
        worst = 0.0
        for name, amp, xi0, sigma in MOFJELD_ROWS:
            m = mofjeld_params(amp, preset.g_method, preset.datums)
            assert abs(m.xi0 - xi0) <= 0.01 + 1e-9, (name, m)
            assert abs(m.sigma - sigma) <= 0.01 + 1e-9, (name, m)
            worst = max(worst, abs(m.xi0 - xi0), abs(m.sigma - sigma))
        assert time.perf_counter() - start < 0.5
        assert worst <= 0.01 + 1e-9


# -- 2 -----------------------------------------------------------------------------


def test_criterion_2_sinusoid(sinusoid):
    with criterion(2):
        start = time.perf_counter()
        xs = [-0.9, -0.5, 0.0, 0.5, 0.9]
        p0 = build_phi0(sinusoid)
        for x in xs:
            assert abs(eval_phi(p0, x) - math.acos(x) / math.pi) <= 0.01, x
        for dt in (30, 72, 180):
            t = build_phi_dt(sinusoid, dt)
            for x in xs:
                want = min(1.0, eval_phi(p0, x) + dt / PERIOD)
                assert abs(eval_phi(t, x) - want) <= 0.01, (dt, x)
                analytic = min(1.0, math.acos(x) / math.pi + dt / PERIOD)
                assert abs(eval_phi(t, x) - analytic) <= 0.01, (dt, x)
        assert time.perf_counter() - start < 10


# -- 3 -----------------------------------------------------------------------------


def test_criterion_3_oracle_equivalence(mixed_tide):
    with criterion(3, "(51 cases)"):
        start = time.perf_counter()
        rng = np.random.default_rng(31)
        cases = [(record(mixed_tide.levels[:10_000]), load_aasze02())]
        for _ in range(50):
            n = int(rng.integers(800, 4000))
            cases.append((random_record(rng, n), random_pattern(rng, min(n // 2, 360))))
        for rec, p in cases:
            fast = build_phi_pattern(rec, p)
            slow = oracle_phi(rec, p)
            np.testing.assert_array_equal(fast.counts, slow.counts)
            assert fast.n_windows == slow.n_windows
        assert time.perf_counter() - start < 60


# -- 4 -----------------------------------------------------------------------------


def test_criterion_4_single_wave_is_dt(mixed_tide):
    with criterion(4, "(20 widths)"):
        rng = np.random.default_rng(4)
        bins = BinSpec.for_record(mixed_tide)
        for width in rng.choice(np.arange(1, 3000), size=20, replace=False):
            a = build_phi_pattern(mixed_tide, single_wave(int(width)), bins)
            b = build_phi_dt(mixed_tide, int(width), bins)
            np.testing.assert_array_equal(a.counts, b.counts)
            assert a.phi.tobytes() == b.phi.tobytes()


# -- 5 -----------------------------------------------------------------------------


def test_criterion_5_dt_monotone_and_limits(sinusoid, mixed_tide):
    with criterion(5):
        bins = BinSpec.for_record(mixed_tide)
        prev = None
        for dt in (0, 1, 15, 60, 180, 720, 1490, 5000, 20000):
            t = build_phi_dt(mixed_tide, dt, bins)
            if prev is not None:
                assert np.all(prev.phi <= t.phi)
            prev = t
        # periodic record, window >= one period: certain exceedance below the amplitude
        for dt in (PERIOD, PERIOD + 1, 2 * PERIOD):
            t = build_phi_dt(sinusoid, dt)
            assert np.all(t.phi[t.bin_left_edges < 1.0] == 1.0)
            xs = np.linspace(-0.999, 0.999, 101)
            assert np.all(np.asarray(eval_phi(t, xs)) == 1.0)
        # the longest window sees the record maximum: Phi_dt equals Phi_inf
        top = float(mixed_tide.levels.max())
        d = TidalDatums(-1, -1, 0, 1, 1, float(mixed_tide.levels.min()), top, 0.5)
        t = build_phi_dt(mixed_tide, len(mixed_tide) - 1, bins)
        np.testing.assert_array_equal(t.phi, phi_infinity(t.bin_left_edges, d))
        assert eval_phi(t, top - 1e-9) == 1.0 and eval_phi(t, top) == 0.0


# -- 6 -----------------------------------------------------------------------------


def test_criterion_6_proxy_validation(year_tide):
    with criterion(6):
        start = time.perf_counter()
        assert abs(float(year_tide.levels.std()) - 0.638) < 0.005
        A = 3.92
        pattern = extract_pattern(proxy_pattern(A), **PROXY_EXTRACT_PARAMS)
        bins = BinSpec.for_record(year_tide, max(float(g_offsets(A).max()), pattern.max_offset))
        g = build_phi_g_direct(year_tide, A, bins=bins, threads=4)
        p = build_phi_pattern(year_tide, pattern, bins, threads=4)
        assert float(np.max(np.abs(g.phi - p.phi))) <= 0.02
        mg, mp = moments(g), moments(p)
        assert abs(mg.xi0 - mp.xi0) <= 0.02 and abs(mg.sigma - mp.sigma) <= 0.02
        assert time.perf_counter() - start < 120


# -- 7 -----------------------------------------------------------------------------


def test_criterion_7_composition(sinusoid):
    with criterion(7, "(100 monotone + triangle)"):
        phi = build_phi0(sinusoid)
        rng = np.random.default_rng(7)
        domain = (-1.0, 1.0)
        for _ in range(100):
            sr = random_monotone(rng, domain)
            a = psi(sr, phi, mode=INFIMUM).probabilities
            b = psi(sr, phi, mode=INTERVAL_SUM).probabilities
            assert a.size == 35
            assert a.tobytes() == b.tobytes()
        tri = build_response(None, [(-1.0, 1.0), (0.0, 3.0), (1.0, 1.0)], domain=domain)
        got = psi(tri, phi, mode=INTERVAL_SUM)
        level = list(got.levels.levels).index(2.0)
        want = eval_phi(phi, -0.5) - eval_phi(phi, 0.5)
        assert got.probabilities[level] == want
        assert abs(want - 1 / 3) <= 0.01


# -- 8 -----------------------------------------------------------------------------


def test_criterion_8_crescent_city_conditional():
    path = os.environ.get(CC_CSV_ENV)
    if not path:
        RESULTS[8] = f"DECLARED not reproducible without a Crescent City record (set {CC_CSV_ENV})"
        pytest.skip(f"set {CC_CSV_ENV} to a Crescent City minute record")
    with criterion(8, "(user-supplied Crescent City record)"):
        with open(path) as fh:
            rec = ingest_tide_csv(fh, rebase=True)
        preset = crescent_city()
        got = compute_datums(rec)
        for name in ("xi_mllw", "xi_mlw", "xi_msl", "xi_mhw", "xi_mhhw"):
            assert abs(getattr(got, name) - getattr(preset.datums, name)) <= 0.05, name
        m = moments(build_phi_g_direct(rec, 3.92, preset.g_method, threads=4))
        assert abs(m.xi0 - 0.45) <= 0.05 and abs(m.sigma - 0.34) <= 0.05
        mp = moments(build_phi_pattern(rec, load_aasze02(), threads=4))
        assert abs(mp.xi0 - 0.36) <= 0.05 and abs(mp.sigma - 0.37) <= 0.05


# -- 9 -----------------------------------------------------------------------------


def test_criterion_9_thread_reproducibility(sinusoid, mixed_tide, year_tide):
    with criterion(9, "(1, 2, 8 threads)"):
        rng = np.random.default_rng(9)
        small = record(mixed_tide.levels[:10_000])
        pat = random_pattern(rng, 360)
        proxy = extract_pattern(proxy_pattern(3.92), **PROXY_EXTRACT_PARAMS)
        builders = [
            lambda n: build_phi0(sinusoid, threads=n),
            lambda n: build_phi_dt(sinusoid, 72, threads=n),
            lambda n: build_phi_pattern(small, load_aasze02(), threads=n),
            lambda n: build_phi_pattern(small, pat, threads=n),
            lambda n: build_phi_pattern(mixed_tide, single_wave(500), threads=n),
            lambda n: build_phi_dt(mixed_tide, 5000, threads=n),
            lambda n: build_phi_g_direct(year_tide, 3.92, threads=n),
            lambda n: build_phi_pattern(year_tide, proxy, threads=n),
        ]
        for build in builders:
            ref = build(1)
            for n in (2, 8):
                t = build(n)
                assert t.phi.tobytes() == ref.phi.tobytes()
                assert t.pdf.tobytes() == ref.pdf.tobytes()
                assert t.counts.tobytes() == ref.counts.tobytes()
                assert t.level_range == ref.level_range
        phi = build_phi0(sinusoid)
        responses = [random_monotone(rng, (-1.0, 1.0)) for _ in range(100)]
        grids = [hazard_grid(responses, phi, mode=INTERVAL_SUM, threads=n) for n in (1, 2, 8)]
        for g in grids[1:]:
            assert g.probabilities.tobytes() == grids[0].probabilities.tobytes()
        assert kernels.BACKEND in ("numba", "numpy")
