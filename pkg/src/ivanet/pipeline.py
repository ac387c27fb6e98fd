"""Per-year analysis stages and the files they leave behind.

Each stage reads what earlier stages wrote under ``<out>/<year>/`` and writes
its own artifacts there, every one carrying the run metadata. A stamp file per
stage records the config hash it was produced with; a later run with the same
hash skips the stage unless forced.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import export
from .community import (
    CommunityLabel,
    Partition,
    ScanResult,
    active_nodes,
    detect_communities,
    label_regions,
    partition_top_k,
    sankey_links,
    threshold_scan,
)
from .config import STAGE_VERSIONS, RunConfig
from .hodge import (
    HodgeDecomposition,
    bilateral_circulation,
    decompose,
    group_scores,
    rank_circulation,
    rank_potentials,
)
from .ingest import IOTable, drop_regions, load_io_table, validate_accounting
from .integration import MODES, IntegrationReport, community_integration
from .leontief import build_gvan, build_ivan, build_leontief, threshold_top_k
from .metrics import strength_fit, structural_report
from .network import FlowNetwork
from .regions import load_region_map

logger = logging.getLogger(__name__)

STAGES = ("build", "communities", "decompose", "metrics", "integrate")


class MissingArtifactError(FileNotFoundError):
    """A stage needs output of an earlier stage that is not there."""


# ---------------------------------------------------------------------------
# in-memory analysis


def build_networks(table: IOTable) -> tuple[FlowNetwork, FlowNetwork]:
    gvan = build_gvan(build_leontief(table))
    return gvan, build_ivan(gvan, table.n_sectors)


@dataclass(frozen=True)
class Detection:
    """Threshold scan plus the partition used downstream."""

    scan: ScanResult
    k: int
    fallback: bool
    partition: Partition
    active: np.ndarray
    labels: list[CommunityLabel]
    large: list[int]


def detect(ivan: FlowNetwork, config: RunConfig, regions: dict[str, str]) -> Detection:
    """Scan thresholds and partition the network cut at the selected k.

    Without any k giving two large communities the cut at ``k_max`` is used and
    the result is flagged as a fallback.
    """
    opts = dict(teleport_prob=config.teleport_prob, seeds=config.seeds,
                rng_seed=config.rng_seed, recorded=config.recorded_teleportation)
    scan = threshold_scan(ivan, config.k_min, config.k_max, config.k_step, config.size_floor, **opts)
    fallback = scan.selected_k is None
    k = config.k_max if fallback else scan.selected_k
    if fallback:
        logger.warning("no k in [%d, %d] gives two communities above %d nodes; using k=%d",
                       config.k_min, config.k_max, config.size_floor, k)
    part, active = partition_top_k(ivan, k, **opts)
    labels = label_regions(part, regions)
    large = [int(c) for c, s in enumerate(part.sizes) if s > config.size_floor]
    return Detection(scan, k, fallback, part, active, labels, large)


def community_network(ivan: FlowNetwork, members: Sequence[tuple[str, str]]) -> FlowNetwork:
    index = ivan.index_of()
    return ivan.subnetwork(np.array([index[m] for m in members], dtype=int))


@dataclass
class YearAnalysis:
    year: int
    gvan: FlowNetwork
    ivan: FlowNetwork
    detection: Detection
    decompositions: dict[int, HodgeDecomposition] = field(default_factory=dict)
    reports: list[IntegrationReport] = field(default_factory=list)


def analyze_year(table: IOTable, config: RunConfig) -> YearAnalysis:
    """Build, scan, detect, decompose each large community and index it."""
    regions = load_region_map(config.regions_path())
    if config.drop_countries:
        table = drop_regions(table, [c for c in config.drop_countries if c in table.countries])
    gvan, ivan = build_networks(table)
    det = detect(ivan, config, regions)
    result = YearAnalysis(table.year, gvan, ivan, det)
    for c in det.large:
        members = det.partition.member_nodes(c)
        d = decompose(community_network(ivan, members))
        result.decompositions[c] = d
        result.reports += community_integration(
            ivan, gvan, members, MODES, config.denominator, table.year, c,
            det.labels[c].dominant_region, decomp=d,
        )
    return result


# ---------------------------------------------------------------------------
# file-backed stages


def manifest_year(path: str | Path) -> int:
    with open(path, encoding="utf-8") as fh:
        return int(json.load(fh)["year"])


class YearStage:
    """Paths and stamp bookkeeping for one year of one run."""

    def __init__(self, config: RunConfig, year: int, force: bool = False):
        self.config = config
        self.year = year
        self.force = force
        self.dir = Path(config.out) / str(year)

    def path(self, *parts: str) -> Path:
        return self.dir.joinpath(*parts)

    def meta(self, stage: str, **extra) -> dict:
        return self.config.metadata(stage, self.year, **extra)

    def _stamp(self, stage: str) -> Path:
        return self.path(f".{stage}.stamp")

    def fresh(self, stage: str) -> bool:
        if self.force:
            return False
        try:
            stamp = json.loads(self._stamp(stage).read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return False
        if stamp.get("config_hash") != self.config.hash():
            return False
        if stamp.get("stage_version") != STAGE_VERSIONS[stage]:
            return False
        return all(self.path(p).exists() for p in stamp.get("outputs", []))

    def mark(self, stage: str, outputs: Sequence[Path]) -> None:
        rel = sorted(str(Path(p).relative_to(self.dir)) for p in outputs)
        stamp = {"config_hash": self.config.hash(), "stage_version": STAGE_VERSIONS[stage], "outputs": rel}
        export.atomic_write_text(self._stamp(stage), export.canonical_json(stamp) + "\n")

    def require(self, *parts: str) -> Path:
        p = self.path(*parts)
        if not p.exists():
            raise MissingArtifactError(f"{p} is missing; run the earlier stage first")
        return p


def stage_build(st: YearStage, manifest: Path) -> list[Path]:
    cfg = st.config
    table = load_io_table(manifest, rel_tol=cfg.rel_tol, strict=cfg.strict)
    if table.year != st.year:
        raise ValueError(f"{manifest}: year {table.year} does not match {st.year}")
    dropped = [c for c in cfg.drop_countries if c in table.countries]
    if dropped:
        table = drop_regions(table, dropped, cfg.rel_tol)
    report = validate_accounting(table, cfg.rel_tol)
    system = build_leontief(table)
    gvan = build_gvan(system)
    ivan = build_ivan(gvan, table.n_sectors)
    meta = st.meta("build")
    outputs = [
        export.save_network(st.path("gvan.npz"), gvan, meta),
        export.save_network(st.path("ivan.npz"), ivan, meta),
    ]
    if cfg.write_edge_lists:
        outputs.append(export.write_edge_list(st.path("gvan_edges.csv"), gvan, meta))
        outputs.append(export.write_edge_list(st.path("ivan_edges.csv"), ivan, meta))
    summary = {
        "countries": list(table.countries),
        "sectors": list(table.sectors),
        "dropped_countries": dropped,
        "n_nodes": gvan.n,
        "gvan_links": gvan.link_count(),
        "ivan_links": ivan.link_count(),
        "spectral_radius_bound": system.spectral_radius,
        "clamped_negative": gvan.meta["clamped_negative"],
        "accounting": {
            "passed": report.passed,
            "max_row_residual": report.max_row_residual,
            "max_col_residual": report.max_col_residual,
        },
    }
    outputs.append(export.write_json(st.path("build.json"), summary, meta))
    return outputs


def _load_ivan(st: YearStage) -> FlowNetwork:
    return export.load_network(st.require("ivan.npz"))


def _load_gvan(st: YearStage) -> FlowNetwork:
    return export.load_network(st.require("gvan.npz"))


def stage_communities(st: YearStage) -> list[Path]:
    cfg = st.config
    ivan = _load_ivan(st)
    regions = load_region_map(cfg.regions_path())
    det = detect(ivan, cfg, regions)
    meta = st.meta("communities", k=det.k, fallback=det.fallback)
    summary = {
        "selected_k": det.scan.selected_k,
        "used_k": det.k,
        "fallback": det.fallback,
        "selection_rule": det.scan.rule,
        "size_floor": cfg.size_floor,
        "n_active": int(det.active.size),
        "codelength": det.partition.codelength,
        "large_communities": det.large,
        "communities": [
            {
                "community": lab.community,
                "size": lab.size,
                "dominant_region": lab.dominant_region,
                "purity": lab.purity,
                "region_counts": lab.region_counts,
            }
            for lab in det.labels
        ],
    }
    if cfg.detect_unthresholded:
        whole = ivan.subnetwork(active_nodes(ivan))
        p = detect_communities(whole, cfg.teleport_prob, cfg.seeds, cfg.rng_seed, cfg.recorded_teleportation)
        summary["unthresholded"] = {
            "n_communities": p.n_communities,
            "sizes": p.sizes.tolist(),
            "codelength": p.codelength,
        }
    return [
        export.write_scan(st.path("scan.csv"), det.scan, meta),
        export.write_partition(st.path("partition.csv"), det.partition, meta),
        export.write_json(st.path("communities.json"), summary, meta),
    ]


def _communities(st: YearStage) -> tuple[dict, list[tuple[str, str]], np.ndarray]:
    with open(st.require("communities.json"), encoding="utf-8") as fh:
        summary = json.load(fh)
    nodes, assignment = export.read_partition(st.require("partition.csv"))
    return summary, nodes, assignment


def _members(nodes, assignment, c: int) -> list[tuple[str, str]]:
    return [n for n, a in zip(nodes, assignment.tolist()) if a == c]


def stage_decompose(st: YearStage) -> list[Path]:
    cfg = st.config
    ivan = _load_ivan(st)
    summary, nodes, assignment = _communities(st)
    outputs = []
    for c in summary["large_communities"]:
        sub = community_network(ivan, _members(nodes, assignment, c))
        d = decompose(sub)
        bilateral = bilateral_circulation(sub)
        meta = st.meta("decompose", community=c, hodge_residual=d.residual, components=int(d.components.max(initial=-1)) + 1)
        cdir = f"community_{c}"
        outputs.append(export.save_decomposition(st.path(cdir, "decomposition.npz"), d, meta))
        outputs.append(export.write_potentials(
            st.path(cdir, "potentials_node.csv"), d.labels(), d.phi, d.circular_strength(), meta))
        rankings = {"node": {**rank_potentials(d, cfg.top_rank), "circulation": rank_circulation(d, cfg.top_rank)}}
        for by in ("country", "sector"):
            g = group_scores(sub, by, cfg.group_mode)
            outputs.append(export.write_potentials(
                st.path(cdir, f"potentials_{by}.csv"), g.labels, g.phi, g.circular_strength,
                dict(meta, group_by=by, group_mode=g.mode)))
            rankings[by] = {**rank_potentials(g, cfg.top_rank), "circulation": rank_circulation(g, cfg.top_rank)}
        outputs.append(export.write_circular_edges(st.path(cdir, "circular_edges.csv"), d, bilateral, meta))
        outputs.append(export.write_top_circular_gexf(st.path(cdir, "top_circular.gexf"), d, cfg.top_links, meta))
        outputs.append(export.write_top_circular_dot(st.path(cdir, "top_circular.dot"), d, cfg.top_links, meta))
        outputs.append(export.write_json(st.path(cdir, "rankings.json"), rankings, meta))
    return outputs


def stage_metrics(st: YearStage) -> list[Path]:
    cfg = st.config
    ivan = _load_ivan(st)
    summary, nodes, assignment = _communities(st)
    k = summary["used_k"]
    cut = ivan if k >= np.count_nonzero(ivan.weights) else threshold_top_k(ivan, k)
    cut = cut.subnetwork(active_nodes(cut), kind="ivan-cut")
    reports = {
        "ivan": structural_report(ivan).to_dict(),
        "ivan_cut": dict(structural_report(cut).to_dict(), k=k),
        "communities": {
            str(c): structural_report(community_network(ivan, _members(nodes, assignment, c))).to_dict()
            for c in summary["large_communities"]
        },
    }
    fit = strength_fit(ivan, cfg.log_base)
    reports["strength_fit"] = {
        "log_base": cfg.log_base,
        "mu_in": fit.mu_in,
        "sigma_in": fit.sigma_in,
        "mu_out": fit.mu_out,
        "sigma_out": fit.sigma_out,
        "all_bases": {
            d: {b: {"mu": f.mu, "sigma": f.sigma, "n_positive": f.n_positive} for b, f in fits.items()}
            for d, fits in fit.fits.items()
        },
    }
    meta = st.meta("metrics")
    rows = []
    for direction in ("in", "out"):
        s, p = fit.ccdf(direction)
        rows += [(direction, a, b) for a, b in zip(s.tolist(), p.tolist())]
    return [
        export.write_json(st.path("metrics.json"), reports, meta),
        export.write_csv(st.path("strength_ccdf.csv"), ["direction", "strength", "ccdf"], rows, meta),
    ]


def stage_integrate(st: YearStage) -> list[Path]:
    cfg = st.config
    ivan, gvan = _load_ivan(st), _load_gvan(st)
    summary, nodes, assignment = _communities(st)
    labels = {c["community"]: c for c in summary["communities"]}
    rows = []
    for c in summary["large_communities"]:
        decomp = export.load_decomposition(st.require(f"community_{c}", "decomposition.npz"))
        reps = community_integration(
            ivan, gvan, _members(nodes, assignment, c), MODES, cfg.denominator, st.year, c,
            labels[c]["dominant_region"], decomp=decomp,
        )
        for r in reps:
            rows.append({
                "community": c,
                "region_label": r.region,
                "purity": labels[c]["purity"],
                "size": labels[c]["size"],
                "mode": r.mode,
                "E": r.E,
                "numerator": r.numerator,
                "denominator": r.denominator,
                "E_k": r.E_k,
            })
    payload = {"used_k": summary["used_k"], "fallback": summary["fallback"], "reports": rows}
    return [export.write_json(st.path("integration.json"), payload, st.meta("integrate"))]


STAGE_FUNCS = {
    "communities": stage_communities,
    "decompose": stage_decompose,
    "metrics": stage_metrics,
    "integrate": stage_integrate,
}


@dataclass(frozen=True)
class YearOutcome:
    manifest: str
    year: int | None
    ok: bool
    ran: tuple[str, ...] = ()
    skipped: tuple[str, ...] = ()
    error: str | None = None


def run_year(config: RunConfig, manifest: str, stages: Sequence[str], force: bool = False) -> YearOutcome:
    """Run ``stages`` in order for one year; stops at the first failing stage."""
    ran, skipped = [], []
    year = None
    try:
        year = manifest_year(manifest)
        st = YearStage(config, year, force)
        for stage in stages:
            if st.fresh(stage):
                skipped.append(stage)
                continue
            logger.info("%d: %s", year, stage)
            if stage == "build":
                outputs = stage_build(st, Path(manifest))
            else:
                outputs = STAGE_FUNCS[stage](st)
            st.mark(stage, outputs)
            ran.append(stage)
    except Exception as exc:  # one bad year must not stop the others
        logger.error("%s failed: %s: %s", year if year is not None else manifest, type(exc).__name__, exc)
        return YearOutcome(str(manifest), year, False, tuple(ran), tuple(skipped), f"{type(exc).__name__}: {exc}")
    return YearOutcome(str(manifest), year, True, tuple(ran), tuple(skipped))


# ---------------------------------------------------------------------------
# cross-year outputs


def write_sankey(config: RunConfig, years: Sequence[int]) -> Path:
    """Node overlaps between communities of consecutive successful years."""
    out = Path(config.out)
    parts = {}
    for y in sorted(years):
        st = YearStage(config, y)
        if st.path("partition.csv").exists():
            nodes, assignment = export.read_partition(st.path("partition.csv"))
            parts[y] = Partition(assignment, float("nan"), np.zeros(0), np.zeros(0), tuple(nodes))
    ys = sorted(parts)
    pairs = [
        {"year_a": a, "year_b": b, "links": sankey_links(parts[a], parts[b])}
        for a, b in zip(ys, ys[1:])
    ]
    return export.write_json(out / "sankey.json", {"pairs": pairs},
                             config.metadata("communities", years=ys))


def write_integration_tables(config: RunConfig, years: Sequence[int]) -> list[Path]:
    """Time-series and sectoral CSVs assembled from each year's integration file."""
    out = Path(config.out)
    series, sectoral, per_year = [], [], {}
    for y in sorted(years):
        path = YearStage(config, y).path("integration.json")
        if not path.exists():
            continue
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        per_year[y] = {
            "used_k": data["used_k"],
            "fallback": data["fallback"],
            "communities": sorted({(r["community"], r["size"], r["region_label"], r["purity"]) for r in data["reports"]}),
        }
        for r in data["reports"]:
            series.append((y, r["community"], r["region_label"], r["E"], r["mode"], r["numerator"], r["denominator"]))
            for sector, e in r["E_k"].items():
                sectoral.append((y, r["community"], sector, e, r["mode"]))
    meta = config.metadata("integrate", years=sorted(per_year), per_year=per_year)
    return [
        export.write_csv(out / "integration.csv",
                         ["year", "community", "region_label", "E", "mode", "numerator", "denominator"],
                         series, meta),
        export.write_csv(out / "sectoral.csv", ["year", "community", "sector", "E_k", "mode"], sectoral, meta),
    ]
