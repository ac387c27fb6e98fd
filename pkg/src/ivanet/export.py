"""File writers and readers for every artifact the pipeline produces.

CSV files start with one ``# meta: {...}`` comment line holding the run
metadata as canonical JSON; ``pandas.read_csv(path, comment="#")`` skips it.
All writes go through a temporary file and an atomic rename.
"""

from __future__ import annotations

import csv
import io
import json
import os
import zipfile
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .community import Partition, ScanResult
from .hodge import HodgeDecomposition
from .network import FlowNetwork


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serialisable")


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], meta: dict | None = None) -> Path:
    buf = io.StringIO()
    if meta is not None:
        buf.write(f"# meta: {canonical_json(meta)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return atomic_write_text(path, buf.getvalue())


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def read_csv(path) -> tuple[dict | None, list[dict]]:
    """Metadata (if any) and rows as dicts of strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    meta = None
    if lines and lines[0].startswith("# meta: "):
        meta = json.loads(lines[0][len("# meta: "):])
        lines = lines[1:]
    return meta, list(csv.DictReader(lines))


def write_json(path, obj, meta: dict | None = None) -> Path:
    payload = {"metadata": meta, **obj} if meta is not None else obj
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


# ---------------------------------------------------------------------------
# networks


def write_edge_list(path, network: FlowNetwork, meta: dict | None = None) -> Path:
    i, j = np.nonzero(network.weights)
    rows = (
        (*network.nodes[a], *network.nodes[b], network.weights[a, b])
        for a, b in zip(i.tolist(), j.tolist())
    )
    return write_csv(
        path,
        ["source_country", "source_sector", "target_country", "target_sector", "weight"],
        rows,
        meta,
    )


def read_edge_list(path, nodes: Sequence[tuple[str, str]] | None = None, kind: str = "subnetwork") -> FlowNetwork:
    _, rows = read_csv(path)
    if nodes is None:
        seen: dict = {}
        for r in rows:
            seen.setdefault((r["source_country"], r["source_sector"]), None)
            seen.setdefault((r["target_country"], r["target_sector"]), None)
        nodes = list(seen)
    index = {tuple(n): k for k, n in enumerate(nodes)}
    W = np.zeros((len(nodes), len(nodes)))
    for r in rows:
        a = index[(r["source_country"], r["source_sector"])]
        b = index[(r["target_country"], r["target_sector"])]
        W[a, b] = float(r["weight"])
    return FlowNetwork(tuple(tuple(n) for n in nodes), W, kind)


def savez_stable(path, **arrays) -> Path:
    """Compressed ``.npz`` with fixed entry timestamps, so equal data gives equal bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    with zipfile.ZipFile(tmp, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(arrays):
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            with zf.open(info, "w", force_zip64=True) as fh:
                np.lib.format.write_array(fh, np.asanyarray(arrays[name]), allow_pickle=False)
    os.replace(tmp, path)
    return path


def save_network(path, network: FlowNetwork, run_meta: dict | None = None) -> Path:
    return savez_stable(
        path,
        weights=network.weights,
        nodes=np.array(network.nodes, dtype=str).reshape(-1, 2),
        kind=np.array(network.kind),
        meta=np.array(canonical_json(network.meta)),
        run_meta=np.array(canonical_json(run_meta or {})),
    )


def read_run_meta(path) -> dict:
    """Run metadata stored in a cache written by this module."""
    with np.load(path, allow_pickle=False) as data:
        return json.loads(str(data["run_meta"])) if "run_meta" in data.files else {}


def load_network(path) -> FlowNetwork:
    with np.load(path, allow_pickle=False) as data:
        nodes = tuple((str(c), str(s)) for c, s in data["nodes"])
        return FlowNetwork(nodes, data["weights"], str(data["kind"]), json.loads(str(data["meta"])))


def save_decomposition(path, decomp: HodgeDecomposition, run_meta: dict | None = None) -> Path:
    return savez_stable(
        path,
        nodes=np.array(decomp.nodes, dtype=str).reshape(-1, 2),
        phi=decomp.phi,
        weights=decomp.weights,
        net_flow=decomp.net_flow,
        potential_flow=decomp.potential_flow,
        circular=decomp.circular,
        components=decomp.components,
        meta=np.array(canonical_json(decomp.meta)),
        run_meta=np.array(canonical_json(run_meta or {})),
    )


def load_decomposition(path) -> HodgeDecomposition:
    with np.load(path, allow_pickle=False) as d:
        return HodgeDecomposition(
            nodes=tuple((str(c), str(s)) for c, s in d["nodes"]),
            phi=d["phi"],
            weights=d["weights"],
            net_flow=d["net_flow"],
            potential_flow=d["potential_flow"],
            circular=d["circular"],
            components=d["components"],
            meta=json.loads(str(d["meta"])),
        )


def _gexf(nodes: list[tuple[str, dict]], edges: list[tuple[str, str, float]], description: str) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://gexf.net/1.3" version="1.3">',
        f"  <meta><description>{escape(description)}</description></meta>",
        '  <graph defaultedgetype="directed" mode="static">',
        '    <attributes class="node">',
        '      <attribute id="size" title="size" type="double"/>',
        '      <attribute id="degree" title="degree" type="integer"/>',
        "    </attributes>",
        "    <nodes>",
    ]
    for label, attrs in nodes:
        out.append(
            f"      <node id={quoteattr(label)} label={quoteattr(label)}><attvalues>"
            f'<attvalue for="size" value="{attrs["size"]!r}"/>'
            f'<attvalue for="degree" value="{attrs["degree"]}"/>'
            "</attvalues></node>"
        )
    out.append("    </nodes>")
    out.append("    <edges>")
    for k, (s, t, w) in enumerate(edges):
        out.append(
            f'      <edge id="{k}" source={quoteattr(s)} target={quoteattr(t)} weight="{w!r}"/>'
        )
    out += ["    </edges>", "  </graph>", "</gexf>", ""]
    return "\n".join(out)


def _sized_nodes(labels: list[str], edges: list[tuple[str, str, float]]) -> list[tuple[str, dict]]:
    degree = {l: 0 for l in labels}
    for s, t, _ in edges:
        degree[s] += 1
        degree[t] += 1
    used = [l for l in labels if degree[l] > 0]
    return [(l, {"degree": degree[l], "size": float(np.sqrt(degree[l]))}) for l in used]


def write_gexf(path, network: FlowNetwork, meta: dict | None = None) -> Path:
    labels = network.labels
    i, j = np.nonzero(network.weights)
    edges = [(labels[a], labels[b], float(network.weights[a, b])) for a, b in zip(i.tolist(), j.tolist())]
    nodes = _sized_nodes(labels, edges)
    return atomic_write_text(path, _gexf(nodes, edges, canonical_json(meta or {})))


def top_circular_graph(decomp: HodgeDecomposition, k: int = 20):
    """Nodes (with size = sqrt(degree)) and the ``k`` largest circular links."""
    from .hodge import top_circular_links

    labels = decomp.labels()
    edges = [(labels[a], labels[b], w) for a, b, w in top_circular_links(decomp, k)]
    return _sized_nodes(labels, edges), edges


def write_top_circular_gexf(path, decomp: HodgeDecomposition, k: int = 20, meta: dict | None = None) -> Path:
    nodes, edges = top_circular_graph(decomp, k)
    return atomic_write_text(path, _gexf(nodes, edges, canonical_json(meta or {})))


def write_top_circular_dot(path, decomp: HodgeDecomposition, k: int = 20, meta: dict | None = None) -> Path:
    nodes, edges = top_circular_graph(decomp, k)
    lines = [f"// meta: {canonical_json(meta or {})}", "digraph circulation {"]
    for label, attrs in nodes:
        lines.append(f'  "{label}" [width={attrs["size"]!r}, degree={attrs["degree"]}];')
    for s, t, w in edges:
        lines.append(f'  "{s}" -> "{t}" [weight={w!r}, penwidth={float(np.sqrt(w))!r}];')
    lines += ["}", ""]
    return atomic_write_text(path, "\n".join(lines))


# ---------------------------------------------------------------------------
# communities


def write_partition(path, partition: Partition, meta: dict | None = None) -> Path:
    sizes = partition.sizes
    rows = (
        (c, s, int(m), int(sizes[m]))
        for (c, s), m in zip(partition.nodes, partition.assignment.tolist())
    )
    return write_csv(path, ["node_country", "node_sector", "community_id", "community_size"], rows, meta)


def read_partition(path) -> tuple[list[tuple[str, str]], np.ndarray]:
    _, rows = read_csv(path)
    nodes = [(r["node_country"], r["node_sector"]) for r in rows]
    return nodes, np.array([int(r["community_id"]) for r in rows], dtype=np.int64)


def write_scan(path, scan: ScanResult, meta: dict | None = None) -> Path:
    meta = dict(meta or {}, selected_k=scan.selected_k, selection_rule=scan.rule, size_floor=scan.size_floor)
    rows = ((p.k, p.num_large, p.codelength) for p in scan.points)
    return write_csv(path, ["k", "num_large_communities", "codelength"], rows, meta)


def write_potentials(path, labels, phi, strength, meta: dict | None = None) -> Path:
    rows = sorted(zip(labels, phi, strength), key=lambda r: (-r[1], r[0]))
    return write_csv(path, ["group_label", "phi", "circular_strength"], rows, meta)


def write_circular_edges(path, decomp: HodgeDecomposition, bilateral: np.ndarray, meta: dict | None = None) -> Path:
    labels = decomp.labels()
    C = decomp.circular
    pairs = np.argwhere(np.triu((decomp.weights > 0), k=1))
    rows = []
    for a, b in pairs.tolist():
        if C[a, b] >= 0:
            s, t = a, b
        else:
            s, t = b, a
        rows.append((labels[s], labels[t], abs(float(C[a, b])), float(bilateral[a, b])))
    return write_csv(path, ["source", "target", "circular_flow", "bilateral_circulation"], rows, meta)
