"""Weighted graphs with a vertex measure, scalar fields, balls and generators.

Vertices carry string ids. Internally every graph assigns dense indices in
sorted id order, so all matrices built from a graph are deterministic.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError


class WeightedGraph:
    """Immutable undirected graph with edge weights and a vertex measure.

    Args:
        mu: mapping from vertex id to its (positive) measure.
        edges: iterable of ``(u, v, w)`` triples, each undirected edge once.
        check_connected: reject disconnected graphs (the default).
    """

    def __init__(
        self,
        mu: Mapping[str, float],
        edges: Iterable[tuple[str, str, float]],
        check_connected: bool = True,
    ):
        ids = sorted(mu)
        if not ids:
            raise ValidationError("graph has no vertices")
        index = {v: i for i, v in enumerate(ids)}
        mu_arr = np.array([float(mu[v]) for v in ids])
        if not np.all(np.isfinite(mu_arr)) or np.any(mu_arr <= 0):
            bad = ids[int(np.argmin(np.where(np.isfinite(mu_arr), mu_arr, -np.inf)))]
            raise ValidationError(f"vertex {bad!r} has nonpositive measure mu")

        seen = set()
        rows, cols, ws = [], [], []
        for u, v, w in edges:
            if u not in index or v not in index:
                missing = u if u not in index else v
                raise ValidationError(f"edge references unknown vertex {missing!r}")
            if u == v:
                raise ValidationError(f"self-loop at vertex {u!r}")
            w = float(w)
            if not np.isfinite(w) or w <= 0:
                raise ValidationError(f"edge ({u!r}, {v!r}) has nonpositive weight {w}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValidationError(f"duplicate edge ({key[0]!r}, {key[1]!r})")
            seen.add(key)
            i, j = index[u], index[v]
            rows += [i, j]
            cols += [j, i]
            ws += [w, w]

        n = len(ids)
        # csr sorts column indices per row, which fixes the summation order
        adj = sp.csr_matrix((ws, (rows, cols)), shape=(n, n))
        adj.sort_indices()
        adj.data.flags.writeable = False
        mu_arr.flags.writeable = False

        self._ids = tuple(ids)
        self._index = index
        self._mu = mu_arr
        self._adj = adj
        self._cache: dict = {}  # derived read-only data, e.g. spectra keyed by vertex subset
        if check_connected and not self.is_connected():
            raise ValidationError("graph is disconnected")

    # basic accessors

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def mu(self) -> np.ndarray:
        return self._mu

    @property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric sparse weight matrix, rows in canonical order."""
        return self._adj

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, v: object) -> bool:
        return v in self._index

    def __repr__(self) -> str:
        return f"WeightedGraph(|V|={len(self)}, |E|={self.num_edges})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self._ids == other._ids
            and np.array_equal(self._mu, other._mu)
            and self.edge_list() == other.edge_list()
        )

    __hash__ = None  # type: ignore[assignment]

    def index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise ValidationError(f"unknown vertex {v!r}") from None

    @property
    def num_edges(self) -> int:
        return self._adj.nnz // 2

    @cached_property
    def src(self) -> np.ndarray:
        """Source index of every directed edge, aligned with ``dst`` and ``weights``."""
        return np.repeat(np.arange(len(self)), np.diff(self._adj.indptr))

    @property
    def dst(self) -> np.ndarray:
        return self._adj.indices

    @property
    def weights(self) -> np.ndarray:
        return self._adj.data

    @cached_property
    def degree(self) -> np.ndarray:
        """Weighted degree m(x) = sum of incident edge weights."""
        return np.bincount(self.src, weights=self.weights, minlength=len(self))

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Sparse matrix of the mu-Laplacian, (Lf)(x) = sum_y w_xy (f(y) - f(x)) / mu(x)."""
        inv_mu = sp.diags(1.0 / self._mu)
        return (inv_mu @ (self._adj - sp.diags(self.degree))).tocsr()

    def neighbors(self, v: str) -> list[str]:
        i = self.index(v)
        lo, hi = self._adj.indptr[i], self._adj.indptr[i + 1]
        return [self._ids[j] for j in self._adj.indices[lo:hi]]

    def weight(self, u: str, v: str) -> float:
        return float(self._adj[self.index(u), self.index(v)])

    def edge_list(self) -> list[tuple[str, str, float]]:
        """Each undirected edge once, as ``(u, v, w)`` with ``u < v``, sorted."""
        out = []
        for i, j, w in zip(self.src, self.dst, self.weights):
            if i < j:
                out.append((self._ids[i], self._ids[j], float(w)))
        return out

    def hop_distances(self, center: str) -> np.ndarray:
        """Breadth-first hop distances from ``center``; -1 marks unreachable vertices."""
        start = self.index(center)
        dist = np.full(len(self), -1, dtype=int)
        dist[start] = 0
        queue = deque([start])
        indptr, indices = self._adj.indptr, self._adj.indices
        while queue:
            i = queue.popleft()
            for j in indices[indptr[i] : indptr[i + 1]]:
                if dist[j] < 0:
                    dist[j] = dist[i] + 1
                    queue.append(j)
        return dist

    def is_connected(self) -> bool:
        return bool(np.all(self.hop_distances(self._ids[0]) >= 0))

    def subgraph(self, vertices: Sequence[str]) -> "WeightedGraph":
        """Induced subgraph keeping the original measure on the kept vertices."""
        keep = set(vertices)
        mu = {v: float(self._mu[self.index(v)]) for v in keep}
        edges = [(u, v, w) for u, v, w in self.edge_list() if u in keep and v in keep]
        return WeightedGraph(mu, edges, check_connected=False)


@dataclass(frozen=True)
class ScalarField:
    """Real function on vertex ids; vertices not listed take ``default``."""

    values: Mapping[str, float] = field(default_factory=dict)
    default: float = 0.0

    def __post_init__(self):
        vals = {str(k): float(v) for k, v in self.values.items()}
        if not all(np.isfinite(v) for v in vals.values()) or not np.isfinite(self.default):
            raise ValidationError("scalar field values must be finite")
        object.__setattr__(self, "values", vals)

    def __call__(self, v: str) -> float:
        return self.values.get(v, self.default)

    def to_array(self, g: WeightedGraph) -> np.ndarray:
        unknown = set(self.values) - set(g.ids)
        if unknown:
            raise ValidationError(f"field references unknown vertex {sorted(unknown)[0]!r}")
        return np.array([self.values.get(v, self.default) for v in g.ids])

    @classmethod
    def from_array(cls, g: WeightedGraph, arr: np.ndarray, default: float = 0.0) -> "ScalarField":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (len(g),):
            raise ValidationError(f"expected {len(g)} values, got shape {arr.shape}")
        return cls(dict(zip(g.ids, arr.tolist())), default)

    def is_positive(self) -> bool:
        return self.default > 0 and all(v > 0 for v in self.values.values())


FieldLike = Union[ScalarField, Mapping[str, float], np.ndarray, Sequence[float]]


def as_array(g: WeightedGraph, f: FieldLike) -> np.ndarray:
    """Dense array of ``f`` over ``g`` in canonical vertex order."""
    if isinstance(f, ScalarField):
        return f.to_array(g)
    if isinstance(f, Mapping):
        return ScalarField(f).to_array(g)
    arr = np.asarray(f, dtype=float)
    if arr.shape != (len(g),):
        raise ValidationError(f"expected {len(g)} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("scalar field values must be finite")
    return arr


@dataclass(frozen=True)
class ExhaustionPlan:
    """Balls of increasing radius about ``center``; radii step by at least one."""

    center: str
    radii: tuple[int, ...]

    def __post_init__(self):
        radii = tuple(int(r) for r in self.radii)
        if not radii:
            raise ValidationError("exhaustion plan needs at least one radius")
        if radii[0] < 0:
            raise ValidationError("radii must be nonnegative")
        if any(b < a + 1 for a, b in zip(radii, radii[1:])):
            raise ValidationError("radii must increase by at least 1")
        object.__setattr__(self, "radii", radii)


# ---------------------------------------------------------------- stats, balls


def graph_stats(g: WeightedGraph) -> dict:
    """Vertex and edge counts, minimal edge weight and D_mu = max_x m(x)/mu(x)."""
    return {
        "num_vertices": len(g),
        "num_edges": g.num_edges,
        "omega_min": float(g.weights.min()) if g.num_edges else None,
        "D_mu": float(np.max(g.degree / g.mu)),
    }


def ball(g: WeightedGraph, center: str, radius: int) -> tuple[str, ...]:
    """Vertices within ``radius`` hops of ``center``, in canonical order."""
    if radius < 0:
        raise ValidationError("radius must be nonnegative")
    dist = g.hop_distances(center)
    return tuple(v for v, d in zip(g.ids, dist) if 0 <= d <= radius)


def interior_boundary(g: WeightedGraph, U: Iterable[str]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split ``U`` into vertices with all neighbours in ``U`` and the rest."""
    members = set(U)
    for v in members:
        if v not in g:
            raise ValidationError(f"vertex {v!r} of U is not in the graph")
    inside = np.zeros(len(g), dtype=bool)
    inside[[g.index(v) for v in members]] = True
    # a vertex is interior iff it has no neighbour outside U
    outside_nbrs = np.bincount(g.src, weights=(~inside[g.dst]).astype(float), minlength=len(g))
    interior = tuple(v for i, v in enumerate(g.ids) if inside[i] and outside_nbrs[i] == 0)
    boundary = tuple(v for i, v in enumerate(g.ids) if inside[i] and outside_nbrs[i] > 0)
    return interior, boundary


# ---------------------------------------------------------------- JSON i/o


def parse_graph(text: str) -> WeightedGraph:
    """Build a validated graph from the JSON document format."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or "vertices" not in doc:
        raise ValidationError("graph document needs a 'vertices' list")
    mu: dict[str, float] = {}
    for rec in doc["vertices"]:
        try:
            vid = str(rec["id"])
            m = rec.get("mu", 1.0)
        except (TypeError, KeyError):
            raise ValidationError("each vertex needs an 'id'") from None
        if vid in mu:
            raise ValidationError(f"duplicate vertex id {vid!r}")
        if not isinstance(m, (int, float)) or isinstance(m, bool):
            raise ValidationError(f"vertex {vid!r} has non-numeric mu")
        if m <= 0:
            raise ValidationError(f"vertex {vid!r} has nonpositive measure mu")
        mu[vid] = float(m)
    edges = []
    for rec in doc.get("edges", []):
        try:
            u, v, w = str(rec["u"]), str(rec["v"]), rec.get("w", 1.0)
        except (TypeError, KeyError):
            raise ValidationError("each edge needs 'u' and 'v'") from None
        if not isinstance(w, (int, float)) or isinstance(w, bool):
            raise ValidationError(f"edge ({u!r}, {v!r}) has non-numeric weight")
        edges.append((u, v, w))
    return WeightedGraph(mu, edges)


def graph_to_dict(g: WeightedGraph) -> dict:
    return {
        "vertices": [{"id": v, "mu": float(m)} for v, m in zip(g.ids, g.mu)],
        "edges": [{"u": u, "v": v, "w": w} for u, v, w in g.edge_list()],
    }


def dump_graph(g: WeightedGraph) -> str:
    return json.dumps(graph_to_dict(g), indent=1)


def parse_field(text: str) -> ScalarField:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError("field document must be an object")
    values = doc.get("values", {})
    if not isinstance(values, dict):
        raise ValidationError("'values' must be an object")
    try:
        return ScalarField(values, float(doc.get("default", 0.0)))
    except (TypeError, ValueError):
        raise ValidationError("field values must be numbers") from None


def dump_field(f: ScalarField) -> str:
    return json.dumps({"values": dict(f.values), "default": f.default}, indent=1)


# ---------------------------------------------------------------- generators

FAMILIES = ("path", "cycle", "complete", "star", "hypercube", "lattice_ball")


def _labels(n: int) -> list[str]:
    width = len(str(n - 1))
    return [str(i).zfill(width) for i in range(n)]


def generate(family: str, *, n: int | None = None, dim: int | None = None,
             radius: int | None = None, omega: float = 1.0, mu: float = 1.0) -> WeightedGraph:
    """Deterministic standard graphs with uniform weight ``omega`` and measure ``mu``.

    ``path``, ``cycle`` and ``complete`` take ``n`` vertices, ``star`` takes ``n``
    leaves, ``hypercube`` takes ``dim`` and ``lattice_ball`` takes ``dim`` and
    ``radius`` (the hop ball about the origin of the integer lattice).
    """

    def need(name, value, minimum):
        if value is None or int(value) != value or value < minimum:
            raise ValidationError(f"{family} needs integer {name} >= {minimum}")
        return int(value)

    if family == "path":
        n = need("n", n, 1)
        ids = _labels(n)
        pairs = list(zip(ids, ids[1:]))
    elif family == "cycle":
        n = need("n", n, 3)
        ids = _labels(n)
        pairs = list(zip(ids, ids[1:])) + [(ids[-1], ids[0])]
    elif family == "complete":
        n = need("n", n, 1)
        ids = _labels(n)
        pairs = list(itertools.combinations(ids, 2))
    elif family == "star":
        n = need("n", n, 1)
        ids = _labels(n + 1)
        pairs = [(ids[0], leaf) for leaf in ids[1:]]
    elif family == "hypercube":
        d = need("dim", dim, 1)
        ids = ["".join(bits) for bits in itertools.product("01", repeat=d)]
        pairs = [
            (a, a[:k] + ("1" if a[k] == "0" else "0") + a[k + 1 :])
            for a in ids
            for k in range(d)
            if a[k] == "0"
        ]
    elif family == "lattice_ball":
        d = need("dim", dim, 1)
        r = need("radius", radius, 0)
        pts = [p for p in itertools.product(range(-r, r + 1), repeat=d) if sum(map(abs, p)) <= r]
        name = {p: ",".join(map(str, p)) for p in pts}
        ids = list(name.values())
        pairs = []
        for p in pts:
            for k in range(d):
                q = p[:k] + (p[k] + 1,) + p[k + 1 :]
                if q in name:
                    pairs.append((name[p], name[q]))
    else:
        raise ValidationError(f"unknown family {family!r}; expected one of {FAMILIES}")

    if omega <= 0 or mu <= 0:
        raise ValidationError("omega and mu must be positive")
    return WeightedGraph({v: mu for v in ids}, [(u, v, omega) for u, v in pairs])


def random_graph(n: int, seed: int, extra_edge_prob: float = 0.2,
                 weight_range=(0.5, 2.0), mu_range=(0.5, 2.0),
                 mu_mode: str = "random") -> WeightedGraph:
    """Random connected graph: a random tree plus independent extra edges.

    ``mu_mode`` is ``"random"``, ``"unit"`` or ``"degree"`` (normalized Laplacian).
    """
    rng = np.random.default_rng(seed)
    ids = _labels(n)
    edges = {}
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges[(j, i)] = rng.uniform(*weight_range)
    for i, j in itertools.combinations(range(n), 2):
        if (i, j) not in edges and rng.random() < extra_edge_prob:
            edges[(i, j)] = rng.uniform(*weight_range)
    edge_list = [(ids[i], ids[j], w) for (i, j), w in sorted(edges.items())]
    if mu_mode == "unit":
        mu = {v: 1.0 for v in ids}
    elif mu_mode == "degree":
        deg = dict.fromkeys(ids, 0.0)
        for u, v, w in edge_list:
            deg[u] += w
            deg[v] += w
        mu = {v: (deg[v] if deg[v] > 0 else 1.0) for v in ids}
    else:
        mu = {v: float(rng.uniform(*mu_range)) for v in ids}
    return WeightedGraph(mu, edge_list)
