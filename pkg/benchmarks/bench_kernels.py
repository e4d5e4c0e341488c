"""Compare the numba and numpy kernel backends.

Kernel timings run both backends in one process. End-to-end timings (Phi
tables on a one-year minute record) re-launch this script once per backend,
because the backend is fixed at import time by ``TIDEHAZARD_NO_NUMBA``.

    python benchmarks/bench_kernels.py            # kernels + end-to-end
    python benchmarks/bench_kernels.py --quick    # 60-day record
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from tidehazard import kernels
from tidehazard.pattern_extract import PROXY_EXTRACT_PARAMS, extract_pattern, load_aasze02, proxy_pattern
from tidehazard.tide_ccdf import (
    BinSpec,
    build_phi_dt,
    build_phi_g_direct,
    build_phi_pattern,
    g_offsets,
)
from tidehazard.tide_record import HarmonicConstituent, synthesize_tide

M2, K1 = 28.9841042, 15.0410686


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def tide(days):
    return synthesize_tide(
        [HarmonicConstituent("M2", 0.75, M2, 0.0), HarmonicConstituent("K1", 0.5, K1, 40.0)], days
    )


def kernel_rows(days, repeat):
    x = tide(days).levels
    d = g_offsets(3.92)
    n_out = x.size - d.size + 1
    order = kernels.pruning_order(d)
    right = BinSpec.covering(-5.0, 2.0).right_edges
    backends = [kernels.NUMPY] + ([kernels.NUMBA] if kernels.NUMBA is not None else [])
    rows = []
    for b in backends:
        wmax = b.sliding_max(x, d.size)
        rows.append((b.name, "sliding_max w=7201", best_of(lambda: b.sliding_max(x, 7201), repeat)))
        rows.append((b.name, "sliding_max w=24", best_of(lambda: b.sliding_max(x, 24), repeat)))
        rows.append((
            b.name, "offset_max (proxy)",
            best_of(lambda: b.offset_max(x, d, order, wmax, n_out), repeat),
        ))
        rows.append((b.name, "bin_counts", best_of(lambda: b.bin_counts(x, right), repeat)))
    return rows


def end_to_end(days, repeat, threads):
    rec = tide(days)
    aasze02 = load_aasze02()
    proxy = extract_pattern(proxy_pattern(3.92), **PROXY_EXTRACT_PARAMS)
    bins = BinSpec.for_record(rec, float(g_offsets(3.92).max()))
    cases = {
        "phi_dt 72": lambda: build_phi_dt(rec, 72, bins, threads=threads),
        "phi_pattern AASZe02": lambda: build_phi_pattern(rec, aasze02, bins, threads=threads),
        f"phi_pattern proxy K={proxy.K}": lambda: build_phi_pattern(rec, proxy, bins, threads=threads),
        "phi_g_direct 3.92": lambda: build_phi_g_direct(rec, 3.92, bins=bins, threads=threads),
    }
    return {name: best_of(fn, repeat) for name, fn in cases.items()}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--days", type=float, default=365)
    ap.add_argument("--quick", action="store_true", help="use a 60-day record")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    days = 60 if args.quick else args.days

    if args.child:
        print(json.dumps({"backend": kernels.BACKEND,
                          "times": end_to_end(days, args.repeat, args.threads)}))
        return 0

    print(f"record: {days:g} days of minute data ({int(days * 1440)} samples)")
    print(f"\n{'kernel':<24}{'backend':<9}{'seconds':>10}")
    for backend, name, sec in kernel_rows(days, args.repeat):
        print(f"{name:<24}{backend:<9}{sec:>10.4f}")

    results = {}
    for disable in ("1", "0"):
        env = dict(os.environ, TIDEHAZARD_NO_NUMBA=disable)
        cmd = [sys.executable, __file__, "--child", "--days", str(days),
               "--repeat", str(args.repeat), "--threads", str(args.threads)]
        out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        results[payload["backend"]] = payload["times"]

    print(f"\n{'end to end':<30}" + "".join(f"{b:>10}" for b in results) + f"{'speedup':>10}")
    for name in results["numpy"]:
        row = f"{name:<30}" + "".join(f"{results[b][name]:>10.3f}" for b in results)
        if "numba" in results:
            row += f"{results['numpy'][name] / results['numba'][name]:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
