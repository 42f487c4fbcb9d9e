"""Directed-graph storage and the statistics the limit theory predicts.

Graphs are immutable dual-CSR structures (forward and reverse adjacency), so
strongly connected components, joint degrees, and truncated in/out-component
exploration all run without re-deriving either direction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


class EdgeListFormatError(ValueError):
    """Malformed edge-list input; carries the offending line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def _csr_from_pairs(n: int, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((b, a))
    a, b = a[order], b[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, a + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, b.astype(np.int64, copy=False)


@dataclass(frozen=True)
class Digraph:
    n: int
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    arc_count: int

    @classmethod
    def from_arcs(cls, n: int, src, dst) -> "Digraph":
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.shape != dst.shape:
            raise ValueError("source and destination arrays differ in length")
        if src.size:
            if src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n:
                raise ValueError("vertex id out of range")
            if np.any(src == dst):
                raise ValueError("self-loops are not allowed")
        out_indptr, out_indices = _csr_from_pairs(n, src, dst)
        if src.size:
            flat = src * n + dst
            flat.sort()
            if np.any(flat[1:] == flat[:-1]):
                raise ValueError("duplicate arcs are not allowed")
        in_indptr, in_indices = _csr_from_pairs(n, dst, src)
        for arr in (out_indptr, out_indices, in_indptr, in_indices):
            arr.flags.writeable = False
        return cls(n=n, out_indptr=out_indptr, out_indices=out_indices,
                   in_indptr=in_indptr, in_indices=in_indices, arc_count=int(src.size))

    def out_neighbors(self, i: int) -> np.ndarray:
        return self.out_indices[self.out_indptr[i]:self.out_indptr[i + 1]]

    def in_neighbors(self, i: int) -> np.ndarray:
        return self.in_indices[self.in_indptr[i]:self.in_indptr[i + 1]]

    def arcs(self) -> tuple[np.ndarray, np.ndarray]:
        """(src, dst) arrays sorted by (src, dst)."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.out_indptr))
        return src, self.out_indices

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.out_indptr)

    def in_degrees(self) -> np.ndarray:
        return np.diff(self.in_indptr)


# ---------------------------------------------------------------------------
# Edge-list files


def write_edge_list(g: Digraph, path, header: dict | None = None) -> None:
    """Text format: '# key=value' headers, then one 'i<TAB>j' line per arc."""
    src, dst = g.arcs()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n}\n")
        for key, value in (header or {}).items():
            fh.write(f"# {key}={value}\n")
        for i, j in zip(src, dst):
            fh.write(f"{i}\t{j}\n")


def read_edge_list(path) -> tuple[Digraph, dict]:
    """Parse an edge-list file; returns the graph and its header fields."""
    header: dict[str, str] = {}
    src: list[int] = []
    dst: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    header[key.strip()] = value.strip()
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EdgeListFormatError(f"expected 'i<TAB>j', got {line!r}", lineno)
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListFormatError(f"non-integer vertex id in {line!r}", lineno) from None
            src.append(i)
            dst.append(j)
    if "n" not in header:
        raise EdgeListFormatError("missing '# n=...' header", 1)
    try:
        n = int(header["n"])
    except ValueError:
        raise EdgeListFormatError(f"bad n header: {header['n']!r}", 1) from None
    try:
        g = Digraph.from_arcs(n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64))
    except ValueError as exc:
        raise EdgeListFormatError(str(exc), 1) from None
    return g, header


# ---------------------------------------------------------------------------
# Strongly connected components


def _scc_labels(g: Digraph) -> np.ndarray:
    src, dst = g.arcs()
    adj = csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(g.n, g.n))
    _, labels = connected_components(adj, directed=True, connection="strong")
    return labels


def largest_scc(g: Digraph) -> tuple[int, np.ndarray]:
    """(size, sorted members) of a largest SCC; ties go to the component
    containing the smallest vertex id."""
    if g.n == 0:
        return 0, np.empty(0, dtype=np.int64)
    labels = _scc_labels(g)
    sizes = np.bincount(labels)
    best = sizes.max()
    # first vertex whose component has maximal size => smallest min member id
    winner = labels[np.flatnonzero(sizes[labels] == best)[0]]
    members = np.flatnonzero(labels == winner).astype(np.int64)
    return int(best), members


@dataclass(frozen=True)
class DegreeTable:
    """Joint (in-degree, out-degree) histogram."""

    joint: dict[tuple[int, int], int]
    n: int

    def in_marginal(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for (k, _), c in self.joint.items():
            out[k] = out.get(k, 0) + c
        return out

    def out_marginal(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for (_, l), c in self.joint.items():
            out[l] = out.get(l, 0) + c
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("in_degree,out_degree,count\n")
            for (k, l), c in sorted(self.joint.items()):
                fh.write(f"{k},{l},{c}\n")


def joint_degree_table(g: Digraph) -> DegreeTable:
    pairs = np.column_stack((g.in_degrees(), g.out_degrees()))
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)
    joint = {(int(k), int(l)): int(c) for (k, l), c in zip(uniq, counts)}
    return DegreeTable(joint=joint, n=g.n)


def arcs_per_vertex(g: Digraph) -> float:
    if g.n < 1:
        raise ValueError("graph must have at least one vertex")
    return g.arc_count / g.n


# ---------------------------------------------------------------------------
# Truncated in/out-component exploration


def _truncated_reach_count(indptr: np.ndarray, indices: np.ndarray, start: int,
                           cap: int, mark: np.ndarray, stamp: int) -> int:
    """Vertices reachable from `start`, counting stops once it hits `cap`.

    `mark`/`stamp` implement reusable visited flags across calls.
    """
    mark[start] = stamp
    count = 1
    if count >= cap:
        return count
    queue = deque((start,))
    while queue:
        v = queue.popleft()
        for w in indices[indptr[v]:indptr[v + 1]]:
            if mark[w] != stamp:
                mark[w] = stamp
                count += 1
                if count >= cap:
                    return count
                queue.append(w)
    return count


def _multi_source_reach(indptr: np.ndarray, indices: np.ndarray, sources: np.ndarray,
                        n: int) -> np.ndarray:
    """Boolean mask of vertices reachable from the source set."""
    seen = np.zeros(n, dtype=bool)
    seen[sources] = True
    frontier = sources
    while frontier.size:
        nxt = []
        for v in frontier:
            nxt.append(indices[indptr[v]:indptr[v + 1]])
        if not nxt:
            break
        cand = np.concatenate(nxt)
        cand = cand[~seen[cand]]
        if cand.size == 0:
            break
        cand = np.unique(cand)
        seen[cand] = True
        frontier = cand
    return seen


def both_components_ge_k_counts(g: Digraph, k_max: int) -> np.ndarray:
    """Per-vertex min(|in-component|, |out-component|) truncated at k_max.

    From these, the fraction with both components >= k follows for every
    k <= k_max.  Vertices connected to a large SCC inherit its size bound, so
    only vertices off that component need explicit truncated search.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    n = g.n
    out_ge = np.zeros(n, dtype=np.int64)
    in_ge = np.zeros(n, dtype=np.int64)
    todo_out = np.arange(n)
    todo_in = np.arange(n)
    size, members = largest_scc(g)
    if size >= k_max and size > 1:
        reaches_core = _multi_source_reach(g.in_indptr, g.in_indices, members, n)
        reached_from_core = _multi_source_reach(g.out_indptr, g.out_indices, members, n)
        out_ge[reaches_core] = k_max
        in_ge[reached_from_core] = k_max
        todo_out = np.flatnonzero(~reaches_core)
        todo_in = np.flatnonzero(~reached_from_core)
    mark = np.zeros(n, dtype=np.int64)
    stamp = 0
    for v in todo_out:
        stamp += 1
        out_ge[v] = _truncated_reach_count(g.out_indptr, g.out_indices, int(v), k_max, mark, stamp)
    for v in todo_in:
        stamp += 1
        in_ge[v] = _truncated_reach_count(g.in_indptr, g.in_indices, int(v), k_max, mark, stamp)
    return np.minimum(out_ge, in_ge)


def fraction_both_components_ge_k(g: Digraph, k: int) -> float:
    """Fraction of vertices whose in- and out-components both have >= k
    vertices (components include the vertex itself)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return 1.0
    counts = both_components_ge_k_counts(g, k)
    return float(np.count_nonzero(counts >= k)) / g.n
