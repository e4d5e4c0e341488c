"""Site presets: datums, G-method constants and default exceedance levels.

Presets are JSON files. Directories listed in ``TIDEHAZARD_PRESET_PATH``
(``os.pathsep``-separated) are searched before the bundled ones, so new
sites need no code change.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .hazard_engine import ExceedanceLevels
from .tide_ccdf import GMethodParams
from .tide_record import TidalDatums

PRESET_PATH_ENV = "TIDEHAZARD_PRESET_PATH"


@dataclass(frozen=True)
class SitePreset:
    name: str
    datums: TidalDatums
    g_method: GMethodParams
    levels: ExceedanceLevels
    stage_levels: tuple[float, ...] = ()


def _from_payload(payload: dict) -> SitePreset:
    datums = TidalDatums(**{k: float(v) for k, v in payload["datums"].items()})
    g = dict(payload.get("g_method", {}))
    xi_ref = g.pop("xi_ref", None)
    if isinstance(xi_ref, str):
        xi_ref = getattr(datums, xi_ref)
    gp = GMethodParams(**g)
    gp = replace(gp, xi_ref=None if xi_ref is None else float(xi_ref))
    levels = ExceedanceLevels(payload["levels"]) if "levels" in payload else ExceedanceLevels()
    return SitePreset(
        payload["name"], datums, gp, levels, tuple(payload.get("stage_levels", ()))
    )


def load_preset(name_or_path: str) -> SitePreset:
    path = Path(name_or_path)
    if path.suffix == ".json" and path.is_file():
        return _from_payload(json.loads(path.read_text()))
    for folder in filter(None, os.environ.get(PRESET_PATH_ENV, "").split(os.pathsep)):
        candidate = Path(folder) / f"{name_or_path}.json"
        if candidate.is_file():
            return _from_payload(json.loads(candidate.read_text()))
    bundled = resources.files("tidehazard").joinpath(f"data/presets/{name_or_path}.json")
    if bundled.is_file():
        return _from_payload(json.loads(bundled.read_text()))
    raise FileNotFoundError(f"no preset named {name_or_path!r}")


def crescent_city() -> SitePreset:
    return load_preset("crescent_city")
