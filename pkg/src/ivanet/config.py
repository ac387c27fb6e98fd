"""Run configuration shared by the library pipeline and the command line."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .hodge import NET
from .ingest import DEFAULT_REL_TOL
from .mapequation import DEFAULT_TELEPORT

STAGE_VERSIONS = {"build": 1, "communities": 1, "decompose": 1, "metrics": 1, "integrate": 1}


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run.

    ``manifests`` lists one table manifest per year; relative paths are taken
    relative to ``base_dir`` (the config file's directory when loaded from
    disk). ``out`` and ``base_dir`` describe where the run happens, not what it
    computes, so they are left out of the hash and of the echoed metadata.
    """

    manifests: tuple[str, ...] = ()
    drop_countries: tuple[str, ...] = ()
    k_min: int = 6500
    k_max: int = 11000
    k_step: int = 500
    size_floor: int = 240
    teleport_prob: float = DEFAULT_TELEPORT
    recorded_teleportation: bool = True
    seeds: int = 10
    rng_seed: int = 0
    hhd_mode: str = NET
    group_mode: str = "aggregate-then-decompose"
    denominator: str = "community"
    log_base: str = "e"
    regions: str = "wiod"
    rel_tol: float = DEFAULT_REL_TOL
    strict: bool = False
    top_links: int = 20
    top_rank: int = 5
    write_edge_lists: bool = True
    detect_unthresholded: bool = False
    out: str = "out"
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "manifests", tuple(self.manifests))
        object.__setattr__(self, "drop_countries", tuple(self.drop_countries))
        if self.k_min > self.k_max or self.k_step < 1:
            raise ValueError("need k_min <= k_max and k_step >= 1")
        if not 0 < self.teleport_prob < 1:
            raise ValueError("teleport_prob must lie in (0, 1)")
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        if self.log_base not in ("e", "10"):
            raise ValueError("log_base must be 'e' or '10'")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("base_dir")
        d["manifests"] = list(self.manifests)
        d["drop_countries"] = list(self.drop_countries)
        return d

    def hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def manifest_paths(self) -> list[Path]:
        return [Path(self.base_dir) / m for m in self.manifests]

    def regions_path(self) -> str | None:
        if self.regions == "wiod":
            return None
        return str(Path(self.base_dir) / self.regions)

    def metadata(self, stage: str, year: int | None = None, **extra) -> dict:
        from . import __version__

        meta = {
            "config": self.to_dict(),
            "config_hash": self.hash(),
            "package_version": __version__,
            "stage": stage,
            "stage_version": STAGE_VERSIONS[stage],
        }
        if year is not None:
            meta["year"] = year
        meta.update(extra)
        return meta

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def load_config(path: str | Path, **overrides) -> RunConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"{path}: unknown config key(s) {sorted(unknown)}")
    raw.setdefault("base_dir", str(path.parent))
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**raw)
