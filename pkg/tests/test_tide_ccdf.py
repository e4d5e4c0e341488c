import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tidehazard.hazard_engine import oracle_phi
from tidehazard.pattern_extract import load_aasze02, pattern_from_arrays, single_wave
from tidehazard.tide_ccdf import (
    BinSpec,
    CcdfTable,
    GMethodParams,
    MomentSummary,
    build_phi0,
    build_phi_dt,
    build_phi_erf,
    build_phi_g_direct,
    build_phi_pattern,
    eval_phi,
    g_offsets,
    moments,
    phi_erf,
    phi_infinity,
    read_phi_csv,
    write_phi_csv,
)
from tidehazard.tide_record import EPOCH_2000, TidalDatums, TideRecord

PERIOD = 720  # minutes, 30 deg/h


def record(values):
    return TideRecord(EPOCH_2000, np.asarray(values, dtype=float))


def arccos_phi(x, a=1.0):
    return math.acos(x / a) / math.pi


def random_record(rng, n):
    t = np.arange(n)
    base = 0.8 * np.cos(2 * np.pi * t / rng.uniform(500, 900)) + 0.3 * np.cos(
        2 * np.pi * t / rng.uniform(1300, 1600) + rng.uniform(0, 6)
    )
    return record(np.round(base + rng.normal(0, 0.05, n), 3))


def random_pattern(rng, k_max=8, max_len=400):
    k = int(rng.integers(1, k_max + 1))
    cuts = np.sort(rng.choice(np.arange(1, max_len), size=2 * k - 1, replace=False))
    bounds = np.concatenate(([0], cuts))
    starts, ends = bounds[0::2], bounds[1::2]
    offsets = np.round(rng.uniform(0, 1.5, k), 3)
    offsets[rng.integers(k)] = 0.0
    return pattern_from_arrays(starts, ends, offsets)


# -- Phi0 / Phi_dt --------------------------------------------------------------


@pytest.mark.parametrize("x", [-0.9, -0.5, 0.0, 0.5, 0.9])
def test_phi0_sinusoid(sinusoid, x):
    assert eval_phi(build_phi0(sinusoid), x) == pytest.approx(arccos_phi(x), abs=0.01)


def test_phi0_at_maximum_is_zero(mixed_tide):
    t = build_phi0(mixed_tide)
    assert eval_phi(t, float(mixed_tide.levels.max())) == 0.0
    assert t.n_windows == len(mixed_tide)
    assert eval_phi(t, float(mixed_tide.levels.min()) - 1e-9) == 1.0


def test_phi0_equals_dt_zero(mixed_tide):
    a, b = build_phi0(mixed_tide), build_phi_dt(mixed_tide, 0)
    np.testing.assert_array_equal(a.counts, b.counts)
    np.testing.assert_array_equal(a.phi, b.phi)
    assert a.method_tag == "phi0"


@pytest.mark.parametrize("dt", [30, 72, 180])
@pytest.mark.parametrize("x", [-0.9, -0.5, 0.0, 0.5, 0.9])
def test_phi_dt_sinusoid(sinusoid, dt, x):
    want = min(1.0, arccos_phi(x) + dt / PERIOD)
    assert eval_phi(build_phi_dt(sinusoid, dt), x) == pytest.approx(want, abs=0.01)


def test_phi_dt_full_period_is_one(sinusoid):
    t = build_phi_dt(sinusoid, PERIOD)
    below = t.bin_left_edges < 1.0 - 1e-6
    assert np.all(t.phi[below] == 1.0)


def test_phi_dt_window_too_long():
    with pytest.raises(ValueError):
        build_phi_dt(record([0.0, 1.0, 2.0]), 3)
    with pytest.raises(ValueError):
        build_phi_dt(record([0.0, 1.0, 2.0]), -1)


def test_phi_dt_monotone_in_dt(mixed_tide):
    bins = BinSpec.for_record(mixed_tide)
    tables = [build_phi_dt(mixed_tide, dt, bins) for dt in (0, 10, 60, 240, 1000)]
    for lo, hi in zip(tables, tables[1:]):
        assert np.all(lo.phi <= hi.phi)


def test_phi_dt_tends_to_phi_infinity(sinusoid):
    # every window of a full period holds a crest at the record maximum
    datums = TidalDatums(-1, -1, 0, 1, 1, -1, float(sinusoid.levels.max()), 0.7)
    t = build_phi_dt(sinusoid, 3 * PERIOD)
    np.testing.assert_array_equal(t.phi, phi_infinity(t.bin_left_edges, datums))


def test_table_invariants(mixed_tide):
    for t in (build_phi0(mixed_tide), build_phi_dt(mixed_tide, 120),
              build_phi_pattern(mixed_tide, load_aasze02())):
        assert t.phi[0] == 1.0
        assert np.all(np.diff(t.phi) <= 0)
        assert np.all((t.phi >= 0) & (t.phi <= 1))
        nxt = np.append(t.phi[1:], 0.0)
        np.testing.assert_allclose(t.pdf, (t.phi - nxt) / t.bin_width, atol=1e-9)


def test_tie_goes_to_bin_with_equal_right_edge():
    bins = BinSpec(0, 10, 0.1)
    edge = float(bins.right_edges[4])
    t = build_phi0(record([edge, edge, edge]), bins)
    assert t.counts[4] == 3


def test_out_of_range_values_go_to_last_bin():
    bins = BinSpec(0, 5, 0.1)
    t = build_phi0(record([0.05, 3.0]), bins)
    assert t.counts[0] == 1 and t.counts[-1] == 1


# -- pattern ----------------------------------------------------------------


def test_pattern_matches_oracle_aasze02(mixed_tide):
    rec = record(mixed_tide.levels[:5000])
    p = load_aasze02()
    a, b = build_phi_pattern(rec, p), oracle_phi(rec, p)
    np.testing.assert_array_equal(a.counts, b.counts)


def test_pattern_matches_oracle_random():
    rng = np.random.default_rng(7)
    for _ in range(8):
        rec = random_record(rng, int(rng.integers(600, 3000)))
        p = random_pattern(rng, max_len=500)
        np.testing.assert_array_equal(
            build_phi_pattern(rec, p).counts, oracle_phi(rec, p).counts
        )


@pytest.mark.parametrize("width", [1, 7, 24, 95])
def test_single_wave_pattern_is_dt(mixed_tide, width):
    bins = BinSpec.for_record(mixed_tide)
    a = build_phi_pattern(mixed_tide, single_wave(width), bins)
    b = build_phi_dt(mixed_tide, width, bins)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert a.n_windows == b.n_windows


def test_dominated_offsets_reduce_to_tallest_wave(mixed_tide):
    p = pattern_from_arrays([0, 84, 372], [42, 124, 396], [10.0, 10.0, 0.0])
    x = mixed_tide.levels[:6000]
    rec = record(x)
    bins = BinSpec.for_record(rec, 10.0)
    n_out = x.size - p.duration
    shifted = record(x[372 : 372 + n_out + 24])
    a = build_phi_pattern(rec, p, bins)
    b = build_phi_dt(shifted, 24, bins)
    np.testing.assert_array_equal(a.counts, b.counts)
    np.testing.assert_array_equal(a.counts, oracle_phi(rec, p, bins).counts)


def test_pattern_between_dt_bounds(mixed_tide):
    p = load_aasze02()
    bins = BinSpec.for_record(mixed_tide, p.max_offset)
    pat = build_phi_pattern(mixed_tide, p, bins)
    upper = build_phi_dt(mixed_tide, p.duration, bins)
    lower = build_phi_dt(mixed_tide, 24, bins)
    assert np.all(pat.phi <= upper.phi)
    slack = (p.duration - 24) / pat.n_windows
    assert np.all(pat.phi >= lower.phi - slack)


def test_pattern_longer_than_record():
    with pytest.raises(ValueError):
        build_phi_pattern(record(np.zeros(100)), load_aasze02())


# -- G method -----------------------------------------------------------------


def test_g_offsets_shape_and_zero_at_start():
    d = g_offsets(3.92)
    assert d.size == 7201 and d[0] == 0.0 and np.all(d >= 0)


def test_g_direct_dominates_phi0(mixed_tide):
    bins = BinSpec.for_record(mixed_tide, 2 * 25.0)
    g = build_phi_g_direct(mixed_tide, 25.0, bins=bins)
    p0 = build_phi0(mixed_tide, bins)
    assert np.all(g.phi >= p0.phi - 7200 / g.n_windows)
    assert g.n_windows == len(mixed_tide) - 7200


def test_g_direct_matches_brute_force(mixed_tide):
    rec = record(mixed_tide.levels[:9000])
    d = g_offsets(1.3)
    bins = BinSpec.for_record(rec, float(d.max()))
    g = build_phi_g_direct(rec, 1.3, bins=bins)
    levels = np.array([np.max(rec.levels[t0 : t0 + 7201] - d) for t0 in range(g.n_windows)])
    idx = np.minimum(np.searchsorted(bins.right_edges, levels, side="left"), bins.n_bins - 1)
    np.testing.assert_array_equal(g.counts, np.bincount(idx, minlength=bins.n_bins))


def test_g_direct_record_too_short():
    with pytest.raises(ValueError):
        build_phi_g_direct(record(np.zeros(7200)), 3.92)
    assert build_phi_g_direct(record(np.zeros(7201)), 3.92).n_windows == 1


# -- closed forms and moments ---------------------------------------------------


def test_phi_infinity_examples():
    d = TidalDatums(-1.13, -0.75, 0.0, 0.77, 0.97, -1.83, 1.50, 0.638)
    assert phi_infinity(1.49, d) == 1.0
    assert phi_infinity(1.50, d) == 0.0
    assert phi_infinity(-10.0, d) == 1.0


def test_phi_erf_examples():
    m = MomentSummary(0.0, 1.0)
    oracle = quad(lambda u: math.exp(-u * u / 2) / math.sqrt(2 * math.pi), 1.0, math.inf)[0]
    assert phi_erf(1.0, m) == pytest.approx(oracle, abs=1e-10)
    assert phi_erf(1.0, m) == pytest.approx(0.15866, abs=1e-4)
    assert phi_erf(0.45, MomentSummary(0.45, 0.34)) == 0.5
    assert phi_erf(1e6, m) == 0.0
    with pytest.raises(ValueError):
        phi_erf(0.0, MomentSummary(0.0, 0.0))


@given(st.floats(-3, 3), st.floats(0.01, 3), st.floats(-10, 10))
def test_phi_erf_symmetry(xi0, sigma, x):
    m = MomentSummary(xi0, sigma)
    assert phi_erf(xi0 - x, m) + phi_erf(xi0 + x, m) == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-1.0, 1.0), st.floats(0.05, 1.0))
@settings(max_examples=50, deadline=None)
def test_gaussian_moment_round_trip(mu, sigma):
    m = moments(build_phi_erf(MomentSummary(mu, sigma)))
    assert m.xi0 == pytest.approx(mu, abs=0.01)
    assert m.sigma == pytest.approx(sigma, abs=0.01)


def test_gaussian_example():
    m = moments(build_phi_erf(MomentSummary(0.3, 0.5)))
    assert m.xi0 == pytest.approx(0.3, abs=0.01) and m.sigma == pytest.approx(0.5, abs=0.01)


def test_point_mass_moments():
    w = 0.01
    edges = np.array([0.685, 0.695, 0.705])
    t = CcdfTable(edges, np.array([1.0, 1.0, 0.0]), np.array([0.0, 1 / w, 0.0]), 1, w, "pt")
    m = moments(t)
    assert m.xi0 == pytest.approx(0.7, abs=1e-12) and m.sigma == 0.0


def test_sinusoid_arcsine_moments(sinusoid):
    m = moments(build_phi0(sinusoid))
    assert m.xi0 == pytest.approx(0.0, abs=0.01)
    assert m.sigma == pytest.approx(1 / math.sqrt(2), abs=0.01)


def test_moments_reject_bad_mass():
    t = CcdfTable(np.array([0.0, 0.01]), np.array([1.0, 0.5]), np.array([50.0, 10.0]), 1, 0.01, "x")
    with pytest.raises(ValueError):
        moments(t)


def test_eval_phi_edges_and_midpoints():
    t = CcdfTable(np.array([0.0, 0.1, 0.2]), np.array([1.0, 0.6, 0.2]),
                  np.array([4.0, 4.0, 2.0]), 10, 0.1, "x")
    assert eval_phi(t, 0.1) == 0.6
    assert eval_phi(t, -5.0) == 1.0
    assert eval_phi(t, 0.15) == pytest.approx(0.4)
    assert eval_phi(t, 0.31) == 0.0
    assert eval_phi(t, 9.0) == 0.0


# -- I/O and threading --------------------------------------------------------------


def test_phi_csv_round_trip(mixed_tide):
    t = build_phi_dt(mixed_tide, 72)
    buf = io.StringIO()
    write_phi_csv(t, buf, {"dt_minutes": 72})
    text = buf.getvalue()
    assert text.startswith("# method=dt:72\n")
    back = read_phi_csv(io.StringIO(text))
    assert back.n_windows == t.n_windows and back.bin_width == t.bin_width
    np.testing.assert_allclose(back.phi, t.phi, atol=5e-7)
    np.testing.assert_allclose(back.bin_left_edges, t.bin_left_edges, atol=5e-7)
    assert back.level_range == t.level_range


def test_phi_csv_bad_header():
    with pytest.raises(ValueError):
        read_phi_csv(io.StringIO("edge,p\n0,1\n"))


@pytest.mark.parametrize("threads", [2, 3, 8])
def test_thread_count_does_not_change_tables(mixed_tide, threads):
    p = load_aasze02()
    for build in (
        lambda n: build_phi_dt(mixed_tide, 72, threads=n),
        lambda n: build_phi_pattern(mixed_tide, p, threads=n),
        lambda n: build_phi_g_direct(mixed_tide, 3.92, threads=n),
    ):
        a, b = build(1), build(threads)
        assert a.phi.tobytes() == b.phi.tobytes()
        assert a.pdf.tobytes() == b.pdf.tobytes()


def test_gmethod_params_validation():
    with pytest.raises(ValueError):
        GMethodParams(sigma0=0.0)
    with pytest.raises(ValueError):
        GMethodParams(T_G=0)
