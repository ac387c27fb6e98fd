"""Country to region classification used for labelling communities."""

from __future__ import annotations

import json
from pathlib import Path

EUROPE = "Europe"
PACIFIC_RIM = "Pacific Rim"

_PACIFIC = "AUS BRA CAN CHN IDN IND JPN KOR MEX RUS TWN USA".split()
_EUROPE = (
    "AUT BEL BGR CHE CYP CZE DEU DNK ESP EST FIN FRA GBR GRC HRV HUN IRL ITA "
    "LTU LUX LVA MLT NLD NOR POL PRT ROU SVK SVN SWE TUR"
).split()

#: Regional classification of the 43 WIOD 2016 countries (RoW excluded).
WIOD_REGIONS: dict[str, str] = {
    **{c: PACIFIC_RIM for c in _PACIFIC},
    **{c: EUROPE for c in _EUROPE},
}


def load_region_map(path: str | Path | None) -> dict[str, str]:
    """Region map from a JSON object ``{country: region}``; ``None`` gives the WIOD map."""
    if path is None or str(path) == "wiod":
        return dict(WIOD_REGIONS)
    with open(path, encoding="utf-8") as fh:
        mapping = json.load(fh)
    if not isinstance(mapping, dict):
        raise ValueError(f"{path}: region map must be a JSON object")
    return {str(k): str(v) for k, v in mapping.items()}
