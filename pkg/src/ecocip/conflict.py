"""Column-pair conflicts and their edge clique cover compression.

Two columns conflict when their Hamming distance falls outside
``[rho, upper]``.  Conflicting pairs form the edges of a graph; every clique
of that graph can replace its pairwise ``x_i + x_j <= 1`` rows with a single
``sum x_i <= 1`` row, so a small edge clique cover gives a small model.
"""

from __future__ import annotations

import heapq
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .codebook import Codebook
from .errors import FormatError, InvalidPartitionError, PreconditionError, SizeLimitError

_CHUNK_ENTRIES = 1 << 24


@dataclass
class PairClassification:
    """Split of all column pairs into feasible and infeasible sets.

    ``infeasible`` holds 0-based ``(i, j)`` pairs with ``i < j`` in
    lexicographic order.  ``upper`` is ``None`` when the upper distance bound
    is inactive.
    """

    k: int
    rho: int
    upper: float | None
    n_columns: int
    infeasible: np.ndarray
    n_pairs_total: int = 0
    n_feasible: int = 0

    def __post_init__(self):
        self.infeasible = np.asarray(self.infeasible, dtype=np.int64).reshape(-1, 2)
        self.n_pairs_total = self.n_columns * (self.n_columns - 1) // 2
        self.n_feasible = self.n_pairs_total - len(self.infeasible)

    @property
    def n_infeasible(self) -> int:
        return len(self.infeasible)


def classify_pairs(M: Codebook, rho: int, upper: float | None = None) -> PairClassification:
    """Classify every column pair of ``M`` against the band ``[rho, upper]``.

    Distances come from ``2 d(i, j) = k - <M_i, M_j>``, evaluated in row
    blocks so that only the upper triangle is ever materialized.
    """
    if rho < 1:
        raise PreconditionError("rho must be >= 1")
    if upper is not None and upper < rho:
        raise PreconditionError(f"upper ({upper}) must be >= rho ({rho}) or inactive")
    cols = np.ascontiguousarray(M.entries.T, dtype=np.float32)
    n, k = cols.shape
    lo2 = 2 * rho
    hi2 = None if upper is None else 2 * upper
    block = max(1, _CHUNK_ENTRIES // max(n, 1))
    found = []
    for start in range(0, n, block):
        stop = min(n, start + block)
        gram = cols[start:stop] @ cols[start:].T
        d2 = k - gram
        bad = d2 < lo2
        if hi2 is not None:
            bad |= d2 > hi2
        # only j > i within the block's upper triangle
        bad &= np.arange(start, n)[None, :] > np.arange(start, stop)[:, None]
        r, c = np.nonzero(bad)
        if r.size:
            found.append(np.column_stack([r + start, c + start]))
    infeasible = np.vstack(found) if found else np.empty((0, 2), dtype=np.int64)
    return PairClassification(M.k, rho, upper, n, infeasible)


def infeasible_count_closed_form(k: int, rho: int) -> int:
    """``|S_inf|`` for the canonical exhaustive code with no upper bound.

    Canonical columns are the non-zero vectors of ``{0,1}^(k-1)``; each has
    ``C(k-1, d)`` partners at distance ``d`` among all ``2^(k-1)`` vectors, and
    removing the zero vector leaves ``(2^(k-2) - 1) C(k-1, d)`` unordered pairs.
    """
    if k > 40:
        raise SizeLimitError(f"closed form is guarded to k <= 40 (got k={k})")
    if k < 3 or not 1 <= rho <= k - 1:
        raise PreconditionError(f"need k >= 3 and 1 <= rho <= k-1; got k={k}, rho={rho}")
    return (2 ** (k - 2) - 1) * sum(math.comb(k - 1, d) for d in range(1, rho))


# ---------------------------------------------------------------------------
# graphs


@dataclass
class ConflictGraph:
    """Undirected simple graph on ``n_nodes`` nodes, edges as ``(u, v)``, ``u < v``."""

    n_nodes: int
    edges: np.ndarray
    _adj: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("conflict graphs have no self-loops")
            e = np.sort(e, axis=1)
            e = np.unique(e, axis=0)
            if e.min() < 0 or e.max() >= self.n_nodes:
                raise ValueError("edge endpoint out of range")
        self.edges = e

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> list[set[int]]:
        if self._adj is None:
            adj: list[set[int]] = [set() for _ in range(self.n_nodes)]
            for u, v in self.edges.tolist():
                adj[u].add(v)
                adj[v].add(u)
            self._adj = adj
        return self._adj

    def neighbors(self, node: int) -> set[int]:
        return self.adjacency()[node]

    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)

    def edge_codes(self) -> np.ndarray:
        return self.edges[:, 0] * self.n_nodes + self.edges[:, 1]


def build_graph(pc: PairClassification) -> ConflictGraph:
    return ConflictGraph(pc.n_columns, pc.infeasible)


@dataclass
class CliqueCover:
    """Cliques (sorted node tuples, size >= 2) covering every graph edge."""

    cliques: list[tuple[int, ...]]
    source: dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.cliques)

    @property
    def size(self) -> int:
        return len(self.cliques)


def _remove_contained(cliques: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Drop cliques that are subsets of another (duplicates keep the first)."""
    order = sorted(range(len(cliques)), key=lambda i: (-len(cliques[i]), i))
    index: dict[int, list[int]] = {}
    kept: set[int] = set()
    for i in order:
        clique = cliques[i]
        # any kept superset must contain the node with the shortest kept list
        pivot = min(clique, key=lambda v: len(index.get(v, ())))
        members = set(clique)
        if any(members.issubset(cliques[j]) for j in index.get(pivot, ())):
            continue
        kept.add(i)
        for v in clique:
            index.setdefault(v, []).append(i)
    return [cliques[i] for i in range(len(cliques)) if i in kept]


def edge_clique_cover(G: ConflictGraph, seed=0) -> CliqueCover:
    """Greedy edge-driven clique cover.

    While uncovered edges remain, take the uncovered edge whose endpoints have
    the largest combined uncovered degree (ties: lowest indices), then grow it
    by the common neighbour that covers most uncovered edges (ties: lowest
    index) until no common neighbour is left.  The heuristic is deterministic;
    ``seed`` is only recorded.
    """
    adj = G.adjacency()
    unc = [set(a) for a in adj]
    deg = [len(a) for a in unc]
    heap = [(-(deg[u] + deg[v]), u, v) for u, v in G.edges.tolist()]
    heapq.heapify(heap)
    cliques: list[tuple[int, ...]] = []
    while heap:
        key, u, v = heapq.heappop(heap)
        if v not in unc[u]:
            continue
        current = deg[u] + deg[v]
        if -key != current:
            # degrees only shrink, so a stale key is an over-estimate
            heapq.heappush(heap, (-current, u, v))
            continue
        clique = [u, v]
        unc[u].discard(v)
        unc[v].discard(u)
        deg[u] -= 1
        deg[v] -= 1
        cand = adj[u] & adj[v]
        gain = {c: (c in unc[u]) + (c in unc[v]) for c in cand}
        while cand:
            best = min(cand, key=lambda c: (-gain[c], c))
            cand.discard(best)
            for m in clique:
                if m in unc[best]:
                    unc[best].discard(m)
                    unc[m].discard(best)
                    deg[best] -= 1
                    deg[m] -= 1
            clique.append(best)
            cand &= adj[best]
            ub = unc[best]
            for c in cand:
                if c in ub:
                    gain[c] += 1
        cliques.append(tuple(sorted(clique)))
    cliques = _remove_contained(cliques)
    return CliqueCover(cliques, {"heuristic": "greedy-edge-growth", "seed": seed, "n_edges": G.n_edges})


def cover_pairs(cover: CliqueCover) -> np.ndarray:
    """All node pairs ``(u, v)``, ``u < v``, spanned by the cover's cliques."""
    chunks = []
    by_size: dict[int, list[tuple[int, ...]]] = {}
    for c in cover.cliques:
        by_size.setdefault(len(c), []).append(c)
    for size, group in by_size.items():
        if size < 2:
            continue
        arr = np.sort(np.asarray(group, dtype=np.int64), axis=1)
        a, b = np.triu_indices(size, 1)
        chunks.append(np.column_stack([arr[:, a].ravel(), arr[:, b].ravel()]))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.vstack(chunks)


@dataclass(frozen=True)
class CoverViolation:
    kind: str
    indices: tuple
    message: str


def validate_cover(G: ConflictGraph, cover: CliqueCover) -> list[CoverViolation]:
    """Check completeness, edge coverage and non-containment of a cover."""
    out: list[CoverViolation] = []
    n = G.n_nodes
    for t, c in enumerate(cover.cliques):
        if len(c) < 2:
            out.append(CoverViolation("too-small", (t,), f"clique {t} has fewer than 2 nodes"))
        if len(set(c)) != len(c):
            out.append(CoverViolation("repeated-node", (t,), f"clique {t} repeats a node"))
        if any(not 0 <= v < n for v in c):
            out.append(CoverViolation("node-out-of-range", (t,), f"clique {t} names a node outside the graph"))
    if out:
        return out
    edge_codes = np.sort(G.edge_codes())
    for t, c in enumerate(cover.cliques):
        arr = np.asarray(sorted(c), dtype=np.int64)
        a, b = np.triu_indices(len(arr), 1)
        codes = arr[a] * n + arr[b]
        pos = np.searchsorted(edge_codes, codes)
        pos = np.minimum(pos, max(len(edge_codes) - 1, 0))
        hit = edge_codes[pos] == codes if len(edge_codes) else np.zeros(len(codes), bool)
        for miss in np.flatnonzero(~hit)[:5].tolist():
            u, v = int(arr[a[miss]]), int(arr[b[miss]])
            out.append(CoverViolation("not-a-clique", (t, u, v), f"clique {t} uses non-edge ({u},{v})"))
    pairs = cover_pairs(cover)
    covered = np.unique(pairs[:, 0] * n + pairs[:, 1]) if len(pairs) else np.empty(0, np.int64)
    missing = np.setdiff1d(edge_codes, covered, assume_unique=True)
    for code in missing.tolist():
        u, v = divmod(code, n)
        out.append(CoverViolation("uncovered-edge", (u, v), f"uncovered edge ({u},{v})"))
    sets = [frozenset(c) for c in cover.cliques]
    index: dict[int, list[int]] = {}
    for t, s in enumerate(sets):
        for v in s:
            index.setdefault(v, []).append(t)
    for t, s in enumerate(sets):
        pivot = min(s, key=lambda v: len(index[v]))
        for other in index[pivot]:
            if other != t and s <= sets[other] and (s != sets[other] or t > other):
                out.append(CoverViolation("contained", (t, other), f"clique {t} is contained in clique {other}"))
                break
    return out


# ---------------------------------------------------------------------------
# distributed covers


def _mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on uint64 arrays."""
    x = x.astype(np.uint64)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return x


def partition_edges(G: ConflictGraph, m: int, seed=0) -> list[ConflictGraph]:
    """Split the edges of ``G`` into ``m`` edge-disjoint subgraphs.

    Edges are ordered by a seeded 64-bit hash of their endpoint code and dealt
    round-robin, so every part is non-empty and the split is reproducible.
    Each part keeps the full node set.
    """
    if not 1 <= m <= max(G.n_edges, 1):
        raise PreconditionError(f"need 1 <= m <= {G.n_edges}; got m={m}")
    if m == 1:
        return [G]
    salt = _mix64(np.array([int(seed) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))[0]
    with np.errstate(over="ignore"):
        keys = _mix64(G.edge_codes().astype(np.uint64) ^ salt)
    order = np.argsort(keys, kind="stable")
    return [ConflictGraph(G.n_nodes, G.edges[order[p::m]]) for p in range(m)]


def merge_covers(parts: list[CliqueCover], G: ConflictGraph) -> CliqueCover:
    """Union of per-part covers; raises if the union is not a cover of ``G``."""
    seen = set()
    cliques = []
    for part in parts:
        for c in part.cliques:
            key = tuple(sorted(c))
            if key not in seen:
                seen.add(key)
                cliques.append(key)
    merged = CliqueCover(cliques, {"heuristic": "merged", "parts": len(parts)})
    problems = validate_cover(G, merged)
    if problems:
        raise InvalidPartitionError(f"merged cover is invalid: {problems[0].message} ({len(problems)} issues)")
    return merged


def cover_in_parts(G: ConflictGraph, m: int, seed=0, workers: int = 1) -> CliqueCover:
    """Cover ``G`` by covering ``m`` edge-disjoint parts and merging."""
    parts = partition_edges(G, m, seed)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            covers = list(pool.map(lambda g: edge_clique_cover(g, seed), parts))
    else:
        covers = [edge_clique_cover(g, seed) for g in parts]
    merged = merge_covers(covers, G)
    merged.source.update({"seed": seed, "part_sizes": [len(c) for c in covers]})
    return merged


# ---------------------------------------------------------------------------
# I/O


def write_edge_list(G: ConflictGraph, path) -> None:
    lines = [f"# nodes {G.n_nodes}"]
    lines.extend(f"{u + 1} {v + 1}" for u, v in G.edges.tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path, n_nodes: int | None = None) -> ConflictGraph:
    edges = []
    declared = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            parts = s[1:].split()
            if len(parts) == 2 and parts[0] == "nodes":
                declared = int(parts[1])
            continue
        fields = s.split()
        if len(fields) != 2:
            raise FormatError(f"line {lineno}: expected 'i j', got {s!r}")
        try:
            u, v = int(fields[0]), int(fields[1])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: node ids must be integers") from exc
        if u < 1 or v < 1:
            raise FormatError(f"line {lineno}: node ids are 1-based")
        edges.append((u - 1, v - 1))
    top = max((max(e) for e in edges), default=-1) + 1
    n = n_nodes or declared or top
    return ConflictGraph(max(n, top), np.array(edges, dtype=np.int64).reshape(-1, 2))


def cover_to_json(cover: CliqueCover) -> str:
    doc = {"cliques": [[v + 1 for v in c] for c in cover.cliques], "source": cover.source}
    return json.dumps(doc, sort_keys=True) + "\n"


def cover_from_json(text: str) -> CliqueCover:
    try:
        doc = json.loads(text)
        cliques = [tuple(sorted(int(v) - 1 for v in c)) for c in doc["cliques"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid clique cover JSON: {exc}") from exc
    return CliqueCover(cliques, doc.get("source") or {})
