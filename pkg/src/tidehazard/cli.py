"""Command-line front end.

Every subcommand is a thin wrapper over a library call and writes a
``<output>.manifest.json`` next to its output recording inputs, parameters
and digests; ``tidehazard replay`` re-runs a manifest and checks the digests.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import sys
import warnings
from datetime import datetime
from pathlib import Path

from . import __version__
from .hazard_engine import (
    INFIMUM,
    PSI_MODES,
    compare_fields,
    hazard_grid,
    read_hazard_csv,
    write_diff_csv,
    write_hazard_csv,
)
from .kernels import BACKEND
from .pattern_extract import (
    DEFAULT_MIN_GAP_MINUTES,
    DEFAULT_THRESHOLD_FRACTION,
    WIDTH_RULES,
    WavePattern,
    extract_pattern,
    proxy_pattern,
    read_gauge_csv,
    recommend_dt,
)
from .presets import load_preset
from .stage_response import EXTRAPOLATIONS, LINEAR, read_ztable_csv
from .tide_ccdf import (
    DEFAULT_BIN_WIDTH,
    BinSpec,
    build_phi0,
    build_phi_dt,
    build_phi_erf,
    build_phi_g_direct,
    build_phi_pattern,
    g_offsets,
    mofjeld_params,
    moments,
    read_phi_csv,
    write_phi_csv,
)
from .tide_record import (
    GapPolicy,
    compute_datums,
    ingest_tide_csv,
    read_constituents_csv,
    read_datums_csv,
    synthesize_tide,
    write_datums_csv,
    write_tide_csv,
)

log = logging.getLogger("tidehazard")

PHI_METHODS = ("phi0", "dt", "pattern", "g_direct", "g_erf")


class UsageError(Exception):
    pass


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _emit(text: str, output: str) -> list[Path]:
    if output == "-":
        sys.stdout.write(text)
        return []
    path = Path(output)
    path.write_text(text)
    return [path]


def _read_tide(path: str, args) -> "TideRecord":  # noqa: F821
    with open(path) as fh:
        return ingest_tide_csv(
            fh,
            GapPolicy(args.max_gap),
            rebase=args.rebase,
            site_label=Path(path).stem,
        )


# -- subcommands -----------------------------------------------------------------


def cmd_synth(args) -> tuple[str, list[str]]:
    with open(args.constituents) as fh:
        constituents = read_constituents_csv(fh)
    kwargs = {}
    if args.start:
        kwargs["start_epoch"] = datetime.fromisoformat(args.start.replace("Z", "+00:00"))
    rec = synthesize_tide(constituents, args.days, args.msl_offset, **kwargs)
    buf = io.StringIO()
    write_tide_csv(rec, buf)
    return buf.getvalue(), [args.constituents]


def cmd_datums(args) -> tuple[str, list[str]]:
    rec = _read_tide(args.tide_csv, args)
    datums = compute_datums(rec)
    buf = io.StringIO()
    write_datums_csv(datums, buf)
    return buf.getvalue(), [args.tide_csv]


def _bins_from_args(args, rec=None, max_offset: float = 0.0):
    if args.bin_range:
        lo, hi = args.bin_range
        return BinSpec.covering(lo, hi, args.bin_width)
    if rec is None:
        return None
    return BinSpec.for_record(rec, max_offset, args.bin_width)


def cmd_phi(args) -> tuple[str, list[str]]:
    inputs = []
    method = args.method
    if method != "g_erf":
        if not args.tide_csv:
            raise UsageError(f"--method {method} needs a tide CSV")
        inputs.append(args.tide_csv)
    if method == "dt" and args.dt_min is None:
        raise UsageError("--method dt needs --dt-min")
    if method == "pattern" and not args.pattern_file:
        raise UsageError("--method pattern needs --pattern-file")
    if method in ("g_direct", "g_erf") and args.amp is None:
        raise UsageError(f"--method {method} needs --amp")

    preset = load_preset(args.preset)
    gp = preset.g_method
    extra = {}
    if method == "g_erf":
        m = mofjeld_params(args.amp, gp, preset.datums)
        bins = _bins_from_args(args)
        table = build_phi_erf(m, bins)
        extra = {"A_G_m": f"{args.amp:.6f}", "preset": preset.name}
    else:
        rec = _read_tide(args.tide_csv, args)
        if method == "phi0":
            table = build_phi0(rec, _bins_from_args(args, rec), threads=args.threads)
        elif method == "dt":
            table = build_phi_dt(
                rec, args.dt_min, _bins_from_args(args, rec), threads=args.threads
            )
            extra = {"dt_min": str(args.dt_min)}
        elif method == "pattern":
            inputs.append(args.pattern_file)
            pattern = WavePattern.from_json(Path(args.pattern_file).read_text())
            bins = _bins_from_args(args, rec, pattern.max_offset)
            table = build_phi_pattern(rec, pattern, bins, threads=args.threads)
            extra = {"pattern": pattern.source_label or Path(args.pattern_file).stem}
        else:
            bins = _bins_from_args(args, rec, float(g_offsets(args.amp, gp).max()))
            table = build_phi_g_direct(rec, args.amp, gp, bins, threads=args.threads)
            extra = {"A_G_m": f"{args.amp:.6f}", "preset": preset.name}
    m = moments(table)
    extra["xi0_m"] = f"{m.xi0:.6f}"
    extra["sigma_m"] = f"{m.sigma:.6f}"
    print(f"xi0={m.xi0:.6f} sigma={m.sigma:.6f}", file=sys.stderr)
    buf = io.StringIO()
    write_phi_csv(table, buf, extra)
    return buf.getvalue(), inputs


def cmd_hazard(args) -> tuple[str, list[str]]:
    inputs = [args.ztable, args.phi_csv]
    if args.datums:
        with open(args.datums) as fh:
            datums = read_datums_csv(fh)
        inputs.append(args.datums)
    else:
        datums = load_preset(args.preset).datums
    with open(args.phi_csv) as fh:
        phi = read_phi_csv(fh)
    with open(args.ztable) as fh:
        responses = read_ztable_csv(
            fh,
            extrapolation=args.extrapolation,
            domain=(datums.xi_lowest, datums.xi_highest),
            floor=args.depth_floor,
        )
    if not responses:
        raise UsageError("Z-table has no locations")
    stages = responses[0].stages
    lo, hi = float(phi.bin_left_edges[0]), phi.right_edge
    if stages[0] < lo or stages[-1] > hi:
        log.warning(
            "Z-table stages [%.3f, %.3f] extend beyond the Phi table [%.3f, %.3f]; "
            "Phi is clamped to 1 below and 0 above its range",
            stages[0], stages[-1], lo, hi,
        )
    preset = load_preset(args.preset)
    grid = hazard_grid(responses, phi, preset.levels, args.mode, threads=args.threads)
    buf = io.StringIO()
    write_hazard_csv(grid, buf)
    return buf.getvalue(), inputs


def cmd_compare(args) -> tuple[str, list[str]]:
    with open(args.hazard_a) as fh:
        a = read_hazard_csv(fh)
    with open(args.hazard_b) as fh:
        b = read_hazard_csv(fh)
    summary = compare_fields(a, b)
    print(f"max_diff={summary.max_diff:.6f} min_diff={summary.min_diff:.6f}", file=sys.stderr)
    if args.abs_output:
        buf = io.StringIO()
        write_diff_csv(summary, buf, absolute=True)
        Path(args.abs_output).write_text(buf.getvalue())
    buf = io.StringIO()
    write_diff_csv(summary, buf)
    return buf.getvalue(), [args.hazard_a, args.hazard_b]


def cmd_pattern_extract(args) -> tuple[str, list[str]]:
    inputs = []
    if args.proxy_amp is not None:
        gauge = proxy_pattern(args.proxy_amp, load_preset(args.preset).g_method)
        label = args.source or f"proxy A_G={args.proxy_amp:g}"
    elif args.gauge_csv:
        with open(args.gauge_csv) as fh:
            gauge = read_gauge_csv(fh)
        inputs.append(args.gauge_csv)
        label = args.source or Path(args.gauge_csv).stem
    else:
        raise UsageError("give a gauge CSV or --proxy-amp")
    pattern = extract_pattern(gauge, args.threshold, args.min_gap, args.width_rule, label)
    print(
        f"K={pattern.K} duration={pattern.duration} "
        f"recommended_dt={recommend_dt(pattern, args.near_equal_margin)}",
        file=sys.stderr,
    )
    return pattern.to_json(), inputs


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    code = main(manifest["command"], write_manifest=False)
    if code != 0:
        return code
    ok = True
    for path, digest in manifest["outputs"].items():
        now = _sha256(Path(path))
        same = now == digest
        ok &= same
        print(f"{'ok' if same else 'MISMATCH'} {path}")
    return 0 if ok else 1


COMMANDS = {
    "synth": cmd_synth,
    "datums": cmd_datums,
    "phi": cmd_phi,
    "hazard": cmd_hazard,
    "compare": cmd_compare,
    "pattern-extract": cmd_pattern_extract,
}


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tidehazard",
        description="Tidal-stage uncertainty for tsunami hazard curves.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default="-", help="output file (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--preset", default="crescent_city", help="site preset name or JSON path")

    tide = argparse.ArgumentParser(add_help=False)
    tide.add_argument("--max-gap", type=int, default=120, help="longest gap filled, minutes")
    tide.add_argument("--rebase", action="store_true", help="shift the record to zero mean")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="synthesize a tide from constituents")
    p.add_argument("constituents")
    p.add_argument("--days", type=float, required=True)
    p.add_argument("--msl-offset", type=float, default=0.0)
    p.add_argument("--start", help="ISO-8601 UTC start (default 2000-01-01T00:00:00Z)")

    p = sub.add_parser("datums", parents=[common, tide], help="tidal datums of a record")
    p.add_argument("tide_csv")

    p = sub.add_parser("phi", parents=[common, tide], help="build a Phi table")
    p.add_argument("tide_csv", nargs="?")
    p.add_argument("--method", choices=PHI_METHODS, required=True)
    p.add_argument("--dt-min", type=int)
    p.add_argument("--pattern-file")
    p.add_argument("--amp", type=float, help="proxy amplitude A_G, meters")
    p.add_argument("--bin-width", type=float, default=DEFAULT_BIN_WIDTH)
    p.add_argument("--bin-range", type=float, nargs=2, metavar=("LO", "HI"))

    p = sub.add_parser("hazard", parents=[common], help="hazard curves from Z-table and Phi")
    p.add_argument("ztable")
    p.add_argument("phi_csv")
    p.add_argument("--mode", choices=PSI_MODES, default=INFIMUM)
    p.add_argument("--extrapolation", choices=EXTRAPOLATIONS, default=LINEAR)
    p.add_argument("--depth-floor", type=float, default=None)
    p.add_argument("--datums", help="datum report CSV (default: preset datums)")

    p = sub.add_parser("compare", parents=[common], help="difference of two hazard CSVs")
    p.add_argument("hazard_a")
    p.add_argument("hazard_b")
    p.add_argument("--abs-output", help="also write absolute differences here")

    p = sub.add_parser("pattern-extract", parents=[common], help="square-wave pattern")
    p.add_argument("gauge_csv", nargs="?")
    p.add_argument("--proxy-amp", type=float, help="use the G-method proxy of this amplitude")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD_FRACTION)
    p.add_argument("--min-gap", type=float, default=DEFAULT_MIN_GAP_MINUTES)
    p.add_argument("--width-rule", choices=WIDTH_RULES, default=WIDTH_RULES[0])
    p.add_argument("--near-equal-margin", type=float, default=0.1)
    p.add_argument("--source")

    p = sub.add_parser("replay", help="re-run a manifest and verify output digests")
    p.add_argument("manifest")
    return parser


def _manifest(argv, args, inputs, outputs) -> dict:
    params = {k: v for k, v in vars(args).items() if k != "command"}
    return {
        "command": list(argv),
        "subcommand": args.command,
        "parameters": params,
        "inputs": {p: _sha256(Path(p)) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "version": __version__,
        "backend": BACKEND,
    }


def main(argv=None, *, write_manifest: bool = True) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="tidehazard: %(levelname)s: %(message)s")
    logging.captureWarnings(True)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            return cmd_replay(args)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            text, inputs = COMMANDS[args.command](args)
        outputs = _emit(text, args.output)
        if args.command == "compare" and args.abs_output:
            outputs.append(Path(args.abs_output))
        if write_manifest and outputs:
            manifest = _manifest(argv, args, inputs, outputs)
            Path(f"{outputs[0]}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except (UsageError, ValueError, OSError) as exc:
        print(f"tidehazard: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
