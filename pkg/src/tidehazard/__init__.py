"""Tidal-stage uncertainty in probabilistic tsunami hazard assessment.

Build tide-exceedance CCDFs from a tide record (instantaneous, windowed,
wave-pattern and proxy-tsunami variants), invert per-location stage/QoI
responses, and combine the two into hazard curves.
"""

__version__ = "0.1.0"

from .hazard_engine import (
    DiffSummary,
    ExceedanceLevels,
    GridField,
    HazardCurve,
    compare_fields,
    hazard_grid,
    oracle_phi,
    psi,
)
from .kernels import BACKEND
from .pattern_extract import (
    GaugeSeries,
    WavePattern,
    extract_pattern,
    load_aasze02,
    proxy_pattern,
    recommend_dt,
)
from .stage_response import (
    ExceedanceSet,
    Location,
    StageResponse,
    StageSample,
    build_response,
    eval_Z,
    exceedance_intervals,
    inverse_Z,
)
from .tide_ccdf import (
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
    mofjeld_params,
    moments,
    phi_erf,
    phi_infinity,
)
from .tide_record import (
    GapPolicy,
    HarmonicConstituent,
    TidalDatums,
    TideRecord,
    compute_datums,
    ingest_tide_csv,
    synthesize_tide,
)
