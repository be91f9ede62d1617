"""Hypergraphs, their duals, and the lattice families used throughout the package.

Qubits (or classical spins, for a dual) live on vertices; each hyperedge is a
set of vertex indices. Hyperedges are stored canonically as strictly
increasing tuples, but the order of the hyperedge list is preserved since it
labels the vertices of the dual.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx

from .errors import HypergraphError
from .gf2 import BitMatrix, BitVector, kernel_basis, rank


@dataclass(frozen=True)
class Hypergraph:
    n_vertices: int
    edges: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n_vertices < 0:
            raise HypergraphError(f"n_vertices must be non-negative, got {self.n_vertices}")
        canonical = []
        for k, edge in enumerate(self.edges):
            if len(edge) == 0:
                raise HypergraphError(f"edge {k} is empty")
            for v in edge:
                if not 0 <= v < self.n_vertices:
                    raise HypergraphError(
                        f"edge {k} has vertex index {v} out of range for n={self.n_vertices}"
                    )
            srt = tuple(sorted(int(v) for v in edge))
            if len(set(srt)) != len(srt):
                raise HypergraphError(f"edge {k} repeats a vertex: {list(edge)}")
            canonical.append(srt)
        object.__setattr__(self, "edges", tuple(canonical))

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[Iterable[int]]) -> Hypergraph:
        return cls(n_vertices, tuple(tuple(e) for e in edges))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for edge in self.edges:
            for v in edge:
                deg[v] += 1
        return deg

    def isolated_vertices(self) -> list[int]:
        return [v for v, d in enumerate(self.degrees()) if d == 0]

    def duplicate_edges(self) -> list[tuple[int, ...]]:
        """Hyperedges that occur more than once (each listed once)."""
        counts = Counter(self.edges)
        return sorted(e for e, c in counts.items() if c > 1)

    def validation_report(self) -> dict:
        return {
            "n": self.n_vertices,
            "n_edges": self.n_edges,
            "duplicate_edges": [list(e) for e in self.duplicate_edges()],
            "isolated_vertices": self.isolated_vertices(),
        }

    def canonical_form(self) -> tuple[int, tuple[tuple[int, ...], ...]]:
        """Order-insensitive form used for equality up to hyperedge order."""
        return self.n_vertices, tuple(sorted(self.edges))

    def merge_duplicates(self) -> Hypergraph:
        seen: set[tuple[int, ...]] = set()
        kept = []
        for e in self.edges:
            if e not in seen:
                seen.add(e)
                kept.append(e)
        return Hypergraph(self.n_vertices, tuple(kept))

    def is_isomorphic(self, other: Hypergraph) -> bool:
        """Isomorphism via the vertex/hyperedge incidence graph."""
        if (self.n_vertices, self.n_edges) != (other.n_vertices, other.n_edges):
            return False
        return nx.is_isomorphic(
            _incidence_graph(self), _incidence_graph(other), node_match=lambda a, b: a["kind"] == b["kind"]
        )

    @cached_property
    def incidence_matrix(self) -> BitMatrix:
        return incidence(self)

    def to_document(self) -> dict:
        return {"n": self.n_vertices, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_document(cls, doc: object) -> Hypergraph:
        if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
            raise HypergraphError("hypergraph document needs fields 'n' and 'edges'")
        n = doc["n"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise HypergraphError(f"'n' must be an integer, got {n!r}")
        edges = doc["edges"]
        if not isinstance(edges, list):
            raise HypergraphError("'edges' must be an array of integer arrays")
        for k, e in enumerate(edges):
            if not isinstance(e, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in e):
                raise HypergraphError(f"edge {k} must be an array of integers, got {e!r}")
        return cls.from_edges(n, edges)


def _incidence_graph(h: Hypergraph) -> nx.MultiGraph:
    g = nx.Graph()
    g.add_nodes_from((("v", i) for i in range(h.n_vertices)), kind="v")
    g.add_nodes_from((("e", k) for k in range(h.n_edges)), kind="e")
    g.add_edges_from((("e", k), ("v", v)) for k, e in enumerate(h.edges) for v in e)
    return g


def read_hypergraph(path: str | Path) -> Hypergraph:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise HypergraphError(f"{path}: not a valid hypergraph document ({exc})") from exc
    return Hypergraph.from_document(doc)


def write_hypergraph(h: Hypergraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(h.to_document(), fh)
        fh.write("\n")


def dual(h: Hypergraph) -> Hypergraph:
    """Swap vertices and hyperedges.

    Dual vertex ``m`` stands for hyperedge ``m`` of ``h``; dual hyperedge ``i``
    collects the dual vertices whose hyperedges contain vertex ``i``.
    """
    isolated = h.isolated_vertices()
    if isolated:
        raise HypergraphError(
            f"vertices {isolated} belong to no hyperedge; their dual hyperedges would be empty"
        )
    members: list[list[int]] = [[] for _ in range(h.n_vertices)]
    for m, edge in enumerate(h.edges):
        for v in edge:
            members[v].append(m)
    return Hypergraph(h.n_edges, tuple(tuple(ms) for ms in members))


def incidence(h: Hypergraph) -> BitMatrix:
    """Rows are hyperedge indicator vectors over the vertices."""
    rows = [BitVector.from_indices(h.n_vertices, e) for e in h.edges]
    return BitMatrix.from_rows(rows, h.n_vertices)


@dataclass(frozen=True)
class StabilizerSpec:
    """X-type supports (one per hyperedge) and Z-type supports (kernel basis)."""

    x_type: tuple[BitVector, ...]
    z_type: tuple[BitVector, ...]
    m: int
    k: int

    def z_support_sizes(self) -> list[int]:
        return [z.popcount() for z in self.z_type]


def stabilizer_spec(h: Hypergraph) -> StabilizerSpec:
    inc = incidence(h)
    m = rank(inc)
    return StabilizerSpec(
        x_type=tuple(inc.row_vectors()),
        z_type=tuple(kernel_basis(inc)),
        m=m,
        k=h.n_vertices - m,
    )


def ghz_ring(n: int) -> Hypergraph:
    """Cycle of ``n`` two-vertex hyperedges ``{i, i+1 mod n}``."""
    if n < 2:
        raise HypergraphError(f"ghz_ring needs n >= 2, got {n}")
    return Hypergraph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def ising_ring(n: int) -> Hypergraph:
    """Nearest-neighbour periodic chain of ``n`` spins."""
    return ghz_ring(n)


@dataclass(frozen=True)
class LogicalOps:
    """Non-contractible loop operators of the toric code.

    ``t_x1``/``t_x2`` run on the dual lattice (commute with plaquettes),
    ``t_z1``/``t_z2`` on the primal lattice (commute with stars). ``t_z1``
    anticommutes with ``t_x2`` and ``t_z2`` with ``t_x1``. ``plaquettes`` are
    the local Z-type generators.
    """

    t_x1: BitVector
    t_x2: BitVector
    t_z1: BitVector
    t_z2: BitVector
    plaquettes: tuple[BitVector, ...]


def _torus_site(L: int, x: int, y: int) -> int:
    return (x % L) * L + (y % L)


def _h_edge(L: int, x: int, y: int) -> int:
    # lattice edge (x, y) -- (x + 1, y)
    return 2 * _torus_site(L, x, y)


def _v_edge(L: int, x: int, y: int) -> int:
    # lattice edge (x, y) -- (x, y + 1)
    return 2 * _torus_site(L, x, y) + 1


def toric_code(L: int) -> tuple[Hypergraph, LogicalOps]:
    """Toric code on an ``L × L`` torus: qubits on lattice edges, one hyperedge per vertex star."""
    if L < 2:
        raise HypergraphError(f"toric_code needs L >= 2, got {L}")
    n = 2 * L * L
    stars = []
    plaquettes = []
    for x in range(L):
        for y in range(L):
            stars.append((_h_edge(L, x, y), _h_edge(L, x - 1, y), _v_edge(L, x, y), _v_edge(L, x, y - 1)))
            plaquettes.append(
                BitVector.from_indices(
                    n, (_h_edge(L, x, y), _h_edge(L, x, y + 1), _v_edge(L, x, y), _v_edge(L, x + 1, y))
                )
            )
    ops = LogicalOps(
        t_x1=BitVector.from_indices(n, (_v_edge(L, x, 0) for x in range(L))),
        t_x2=BitVector.from_indices(n, (_h_edge(L, 0, y) for y in range(L))),
        t_z1=BitVector.from_indices(n, (_h_edge(L, x, 0) for x in range(L))),
        t_z2=BitVector.from_indices(n, (_v_edge(L, 0, y) for y in range(L))),
        plaquettes=tuple(plaquettes),
    )
    return Hypergraph.from_edges(n, stars), ops


def ising_square(L: int) -> Hypergraph:
    """Nearest-neighbour bonds of an ``L × L`` periodic square lattice (2L² bonds).

    At ``L = 2`` every bond appears twice; the duplicates are kept.
    """
    if L < 2:
        raise HypergraphError(f"ising_square needs L >= 2, got {L}")
    bonds = []
    for x in range(L):
        for y in range(L):
            s = _torus_site(L, x, y)
            bonds.append((s, _torus_site(L, x + 1, y)))
            bonds.append((s, _torus_site(L, x, y + 1)))
    return Hypergraph.from_edges(L * L, bonds)


def identify_family(h: Hypergraph) -> tuple[str, int] | None:
    """Return ``("ghz_ring", n)`` or ``("toric_code", L)`` when ``h`` equals that builder's output."""
    n = h.n_vertices
    if n >= 2 and h.n_edges == n and h == ghz_ring(n):
        return "ghz_ring", n
    half = n // 2
    L = int(round(half**0.5))
    if L >= 2 and 2 * L * L == n and h == toric_code(L)[0]:
        return "toric_code", L
    return None


def random_hypergraph(
    rng, max_vertices: int = 10, max_edges: int = 10, max_edge_size: int | None = None
) -> Hypergraph:
    """Random hypergraph with non-empty hyperedges and no isolated vertices."""
    n = int(rng.integers(1, max_vertices + 1))
    n_edges = int(rng.integers(1, max_edges + 1))
    max_size = n if max_edge_size is None else min(n, max_edge_size)
    edges: list[Sequence[int]] = []
    for _ in range(n_edges):
        size = int(rng.integers(1, max_size + 1))
        edges.append(sorted(rng.choice(n, size=size, replace=False).tolist()))
    covered = {v for e in edges for v in e}
    for v in range(n):
        if v not in covered:
            k = int(rng.integers(0, len(edges)))
            edges[k] = sorted(set(edges[k]) | {v})
    return Hypergraph.from_edges(n, edges)
