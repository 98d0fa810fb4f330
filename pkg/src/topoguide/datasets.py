"""Synthetic topology generators and GraphML ingestion."""
from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import asdict, dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np
from scipy.spatial import Delaunay, QhullError

from .errors import ConfigError, FormatError, GenerationError, ValidationError
from .graph import Graph

log = logging.getLogger(__name__)

MAX_RETRIES = 200


@dataclass
class DatasetSpec:
    kind: str = "community-small"
    count: int = 200
    n_min: int = 12
    n_max: int = 20
    p_in: float = 0.7
    p_out: float = 0.05
    seed: int = 0
    path: str | None = None
    pad_to: int | None = None

    def __post_init__(self):
        if self.kind not in ("community-small", "planar", "file"):
            raise ConfigError(f"unknown dataset kind {self.kind!r}")
        if self.count <= 0:
            raise ConfigError("count must be positive")
        if self.kind != "file" and not 1 <= self.n_min <= self.n_max:
            raise ConfigError("need 1 <= n_min <= n_max")
        if self.kind == "community-small" and not (0 <= self.p_out < self.p_in <= 1):
            raise ConfigError("community-small needs 0 <= p_out < p_in <= 1")
        if self.kind == "file" and not self.path:
            raise ConfigError("file datasets need a path")

    def to_dict(self) -> dict:
        return asdict(self)


def pad_graph(g: Graph, n: int) -> Graph:
    """Append inactive nodes (class ``a - 1``) up to ``n`` nodes."""
    if n < g.n:
        raise ConfigError(f"cannot pad a {g.n}-node graph to {n}")
    if n == g.n:
        return g
    nodes = np.concatenate([g.node_class, np.full(n - g.n, g.a - 1)])
    return Graph.from_edges(n, g.edges(), g.a, g.b, node_class=nodes)


def _is_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = [0]
    while frontier:
        nxt = np.nonzero(adj[frontier].any(0) & ~seen)[0]
        seen[nxt] = True
        frontier = list(nxt)
    return bool(seen.all())


def gen_community_small(spec: DatasetSpec, rng: np.random.Generator | None = None,
                        counters: dict | None = None) -> list[Graph]:
    """Two equal planted communities per graph; regenerated until connected."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    pad = spec.pad_to or spec.n_max
    graphs, retries = [], 0
    for _ in range(spec.count):
        n = int(rng.integers(spec.n_min, spec.n_max + 1))
        side = np.arange(n) < n // 2
        same = side[:, None] == side[None, :]
        prob = np.where(same, spec.p_in, spec.p_out)
        for attempt in range(MAX_RETRIES):
            upper = np.triu(rng.random((n, n)) < prob, 1)
            adj = upper | upper.T
            if _is_connected(adj):
                break
            retries += 1
        else:
            raise GenerationError(f"no connected community graph after {MAX_RETRIES} tries")
        g = Graph.from_matrix(np.zeros(n, dtype=np.int64), adj.astype(np.int64), 2, 2)
        graphs.append(pad_graph(g, pad))
    if counters is not None:
        counters["regenerations"] = counters.get("regenerations", 0) + retries
    return graphs


def delaunay_graph(points: np.ndarray) -> Graph:
    tri = Delaunay(points)
    edges = set()
    for s in tri.simplices:
        for i in range(3):
            u, v = sorted((int(s[i]), int(s[(i + 1) % 3])))
            edges.add((u, v))
    return Graph.from_edges(len(points), sorted(edges), 2, 2)


def is_planar(g: Graph) -> bool:
    return nx.check_planarity(to_networkx(g))[0]


def gen_planar(spec: DatasetSpec, rng: np.random.Generator | None = None,
               counters: dict | None = None) -> list[Graph]:
    """Delaunay triangulations of uniform random points in the unit square."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    if spec.n_min < 4:
        raise ConfigError("planar graphs need at least 4 nodes")
    pad = spec.pad_to or spec.n_max
    graphs, retries = [], 0
    for _ in range(spec.count):
        n = int(rng.integers(spec.n_min, spec.n_max + 1))
        for attempt in range(MAX_RETRIES):
            try:
                g = delaunay_graph(rng.random((n, 2)))
            except QhullError:
                retries += 1
                continue
            break
        else:
            raise GenerationError("degenerate point sets on every attempt")
        if not is_planar(g):  # pragma: no cover - Delaunay output is planar
            raise GenerationError("triangulation failed the planarity check")
        graphs.append(pad_graph(g, pad))
    if counters is not None:
        counters["regenerations"] = counters.get("regenerations", 0) + retries
    return graphs


def generate(spec: DatasetSpec, counters: dict | None = None) -> list[Graph]:
    if spec.kind == "community-small":
        return gen_community_small(spec, counters=counters)
    if spec.kind == "planar":
        return gen_planar(spec, counters=counters)
    from .io import load_dataset
    return load_dataset(spec.path)


# -- networkx / GraphML ---------------------------------------------------------------

def to_networkx(g: Graph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(g.active_nodes())
    act = g.active_mask
    G.add_edges_from((u, v) for u, v, _ in g.edges() if act[u] and act[v])
    return G


@dataclass
class TopologyRecord:
    graph: Graph
    ids: list = field(default_factory=list)   # original node id of node i
    warnings: list = field(default_factory=list)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def read_graphml(path) -> list[TopologyRecord]:
    """Structural GraphML subset: nodes and edges, attributes ignored.

    Multi-edges collapse, self-loops are dropped with a warning, and node ids are
    remapped to ``0..n-1`` in document order.
    """
    path = Path(path)
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise FormatError(f"malformed GraphML in {path}: {exc.msg}", line=exc.position[0]) from None
    records = []
    for gel in (el for el in root.iter() if _local(el.tag) == "graph"):
        ids, index, warnings = [], {}, []
        for nel in gel:
            if _local(nel.tag) != "node":
                continue
            nid = nel.get("id")
            if nid is None:
                raise ValidationError(f"{path}: node without id")
            if nid in index:
                raise ValidationError(f"{path}: duplicate node id {nid!r}")
            index[nid] = len(ids)
            ids.append(nid)
        edges = set()
        for eel in gel:
            if _local(eel.tag) != "edge":
                continue
            s, t = eel.get("source"), eel.get("target")
            if s not in index or t not in index:
                raise ValidationError(f"{path}: edge references unknown node ({s!r}, {t!r})")
            if s == t:
                warnings.append(f"dropped self-loop at node {s!r}")
                log.warning("%s: dropped self-loop at node %r", path, s)
                continue
            u, v = sorted((index[s], index[t]))
            edges.add((u, v))
        g = Graph.from_edges(len(ids), sorted(edges), 2, 2)
        records.append(TopologyRecord(g, ids, warnings))
    return records


def load_graphml(path) -> list[Graph]:
    """Graphs from a GraphML file, or from every ``*.graphml`` file in a directory."""
    path = Path(path)
    files = sorted(path.glob("*.graphml")) if path.is_dir() else [path]
    return [r.graph for f in files for r in read_graphml(f)]


def export_graphml(path, graphs, ids=None) -> None:
    ns = "http://graphml.graphdrawing.org/xmlns"
    root = ET.Element("graphml", xmlns=ns)
    for k, g in enumerate(graphs):
        gel = ET.SubElement(root, "graph", id=f"G{k}", edgedefault="undirected")
        names = ids[k] if ids is not None else [f"n{i}" for i in range(g.n)]
        act = g.active_mask
        for v in g.active_nodes():
            ET.SubElement(gel, "node", id=str(names[v]))
        for u, v, _ in g.edges():
            if act[u] and act[v]:
                ET.SubElement(gel, "edge", source=str(names[u]), target=str(names[v]))
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)
