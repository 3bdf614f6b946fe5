"""Simple undirected graphs with a canonical oriented-edge ordering.

Everything downstream (NB-matrix rows/columns, edge vectors) is indexed by
``Graph.oriented_edges``: all ordered pairs ``(source, target)`` of adjacent
nodes, sorted lexicographically.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    """Invalid graph input or a graph outside an operation's domain."""


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class DisconnectedGraphError(GraphError):
    pass


class TooSmallGraphError(GraphError):
    pass


class ParseError(GraphError):
    pass


class CycleGraphError(GraphError):
    """Raised where a cycle graph is a degenerate case; carries its period."""

    def __init__(self, message: str, period: int):
        super().__init__(message)
        self.period = period


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple connected graph on nodes ``0..n-1``.

    ``labels[i]`` is the label node ``i`` carried in the input document.
    """

    n: int
    adjacency: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...] = field(default=())

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, edges: Iterable[Sequence[int]]) -> "Graph":
        """Validate an edge list and densify its labels to ``0..n-1``.

        Labels are mapped in increasing order, so an input already using
        ``0..n-1`` keeps its ids.
        """
        pairs = []
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise SelfLoopError(f"self-loop at node {u}")
            pairs.append((u, v))
        seen = set()
        for u, v in pairs:
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DuplicateEdgeError(f"duplicate edge {key[0]}-{key[1]}")
            seen.add(key)
        labels = sorted({x for p in pairs for x in p})
        if len(labels) < 2:
            raise TooSmallGraphError("a graph needs at least 2 nodes")
        index = {lab: i for i, lab in enumerate(labels)}
        adj: list[set[int]] = [set() for _ in labels]
        for u, v in pairs:
            adj[index[u]].add(index[v])
            adj[index[v]].add(index[u])
        g = cls(len(labels), tuple(tuple(sorted(a)) for a in adj), tuple(labels))
        if not g._connected():
            raise DisconnectedGraphError("graph is disconnected")
        return g

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(self.n)))

    def _connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for w in self.adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    # -- basic data ---------------------------------------------------------

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Undirected edges ``(u, v)`` with ``u < v`` in lexicographic order."""
        return tuple((u, v) for u in range(self.n) for v in self.adjacency[u] if u < v)

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @cached_property
    def oriented_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, v) for u in range(self.n) for v in self.adjacency[u])

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.oriented_edges)}

    @cached_property
    def src(self) -> np.ndarray:
        return np.array([e[0] for e in self.oriented_edges], dtype=np.int64)

    @cached_property
    def dst(self) -> np.ndarray:
        return np.array([e[1] for e in self.oriented_edges], dtype=np.int64)

    @cached_property
    def rev(self) -> np.ndarray:
        """``rev[e]`` is the index of the reversal of oriented edge ``e``."""
        idx = self.edge_index
        return np.array([idx[(v, u)] for u, v in self.oriented_edges], dtype=np.int64)

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        """Indices of oriented edges leaving each node, in canonical order."""
        out: list[list[int]] = [[] for _ in range(self.n)]
        for i, (u, _) in enumerate(self.oriented_edges):
            out[u].append(i)
        return tuple(tuple(o) for o in out)

    @cached_property
    def in_edges(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for i, (_, v) in enumerate(self.oriented_edges):
            inc[v].append(i)
        return tuple(tuple(o) for o in inc)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        return a

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edge_index

    @property
    def min_degree(self) -> int:
        return int(self.degrees.min())

    @property
    def is_md2(self) -> bool:
        return self.min_degree >= 2

    @property
    def is_tree(self) -> bool:
        return self.m == self.n - 1

    @property
    def is_cycle_graph(self) -> bool:
        return self.m == self.n and bool(np.all(self.degrees == 2))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.adjacency == other.adjacency

    def __hash__(self) -> int:
        return hash(self.adjacency)

    # -- derived graphs -------------------------------------------------------

    def subgraph(self, nodes: Iterable[int]) -> tuple["Graph", tuple[int, ...]]:
        """Induced subgraph, relabelled to ``0..k-1`` in increasing node order.

        Returns the subgraph and the tuple mapping its nodes back to ``self``.
        """
        keep = tuple(sorted(set(nodes)))
        pos = {u: i for i, u in enumerate(keep)}
        adj = tuple(
            tuple(sorted(pos[w] for w in self.adjacency[u] if w in pos)) for u in keep
        )
        sub = Graph(len(keep), adj, tuple(self.labels[u] for u in keep))
        if sub.n < 2 or not sub._connected():
            raise GraphError("induced subgraph is not a connected graph")
        return sub, keep

    def with_node(self, neighbors: Iterable[int]) -> "Graph":
        """Return the graph with a new node ``n`` joined to ``neighbors``."""
        nbrs = sorted(set(int(x) for x in neighbors))
        if not nbrs:
            raise GraphError("new node needs at least one neighbor")
        bad = [x for x in nbrs if not 0 <= x < self.n]
        if bad:
            raise GraphError(f"unknown node ids {bad}")
        adj = [list(a) for a in self.adjacency]
        for x in nbrs:
            adj[x].append(self.n)
        adj.append(nbrs)
        return Graph(self.n + 1, tuple(tuple(sorted(a)) for a in adj))

    def to_edgelist(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in self.edges)


# -- loading ---------------------------------------------------------------


def parse_edgelist(text: str) -> list[tuple[int, int]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected two node ids, got {line!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError(f"line {lineno}: node ids must be integers") from None
    return pairs


def load_graph(text: str) -> Graph:
    """Parse an edge-list document into a validated :class:`Graph`.

    One edge per line as two whitespace-separated integers; blank lines and
    lines starting with ``#`` are skipped.
    """
    return Graph.from_edges(parse_edgelist(text))


def read_graph(path) -> Graph:
    with open(path) as fh:
        return load_graph(fh.read())


# -- small named families ------------------------------------------------


def path_graph(n: int) -> Graph:
    return Graph.from_edges((i, i + 1) for i in range(n - 1))


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges((i, (i + 1) % n) for i in range(n))


def complete_graph(n: int) -> Graph:
    return Graph.from_edges((i, j) for i in range(n) for j in range(i + 1, n))


def complete_bipartite_graph(a: int, b: int) -> Graph:
    return Graph.from_edges((i, a + j) for i in range(a) for j in range(b))


# -- shell decomposition ---------------------------------------------------


@dataclass(frozen=True)
class ShellLayer:
    nodes: frozenset[int]
    # undirected 1-shell edges removed together with this layer
    edges: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class ShellDecomposition:
    layers: tuple[ShellLayer, ...]
    two_core_nodes: frozenset[int]
    s1: int
    n1: int

    @property
    def shell_nodes(self) -> frozenset[int]:
        return frozenset().union(*(layer.nodes for layer in self.layers))

    def layer_of(self) -> dict[int, int]:
        """Map each 1-shell node to its 1-based layer number."""
        return {u: i + 1 for i, layer in enumerate(self.layers) for u in layer.nodes}


def shell_decomposition(g: Graph) -> ShellDecomposition:
    """Peel degree-1 nodes layer by layer until only the 2-core is left.

    Layer ``r`` holds the nodes of degree one after layers ``1..r-1`` are
    removed, together with their remaining incident edges. When the last two
    nodes of a tree are both of degree one they are peeled in the same layer
    and share their edge.
    """
    deg = g.degrees.copy()
    alive = np.ones(g.n, dtype=bool)
    layers = []
    frontier = [u for u in range(g.n) if deg[u] == 1]
    while frontier:
        nodes = frozenset(frontier)
        edges = set()
        for u in frontier:
            for w in g.adjacency[u]:
                if alive[w]:
                    edges.add((min(u, w), max(u, w)))
        for u in frontier:
            alive[u] = False
        nxt = set()
        for u, w in edges:
            for x in (u, w):
                if alive[x]:
                    deg[x] -= 1
                    if deg[x] <= 1:
                        nxt.add(x)
        # a node may drop to degree 0 when its last neighbors leave together
        layers.append(ShellLayer(nodes, frozenset(edges)))
        frontier = sorted(x for x in nxt if alive[x])
    core = frozenset(int(u) for u in np.flatnonzero(alive))
    s1 = g.n - len(core)
    n1 = int(np.sum(g.degrees == 1))
    return ShellDecomposition(tuple(layers), core, s1, n1)


def two_core(g: Graph) -> tuple[Graph, tuple[int, ...]] | None:
    """The 2-core as a relabelled graph plus node map, or ``None`` for trees."""
    core = shell_decomposition(g).two_core_nodes
    if not core:
        return None
    if len(core) == g.n:
        return g, tuple(range(g.n))
    return g.subgraph(core)


# -- cycles --------------------------------------------------------------------


@dataclass(frozen=True)
class CycleBasis:
    spanning_tree: frozenset[tuple[int, int]]
    # node sequences; cycle i starts with the non-tree edge (u, v), u < v
    fundamental_cycles: tuple[tuple[int, ...], ...]
    parities: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.fundamental_cycles)


def bfs_tree(g: Graph, root: int = 0) -> tuple[list[int], list[int]]:
    """BFS parents and depths, neighbors visited in sorted order."""
    parent = [-1] * g.n
    depth = [-1] * g.n
    depth[root] = 0
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in g.adjacency[u]:
            if depth[w] < 0:
                depth[w] = depth[u] + 1
                parent[w] = u
                queue.append(w)
    return parent, depth


def cycle_basis(g: Graph) -> CycleBasis:
    """Fundamental cycles of the BFS spanning tree rooted at node 0.

    Each cycle is listed as ``u, v, ..., `` walking the non-tree edge from its
    lower endpoint ``u`` to ``v`` and returning to ``u`` through the tree.
    """
    parent, depth = bfs_tree(g)
    tree = frozenset((min(u, p), max(u, p)) for u, p in enumerate(parent) if p >= 0)
    cycles = []
    for u, v in g.edges:
        if (u, v) in tree:
            continue
        # tree path v -> lca -> u
        a, b = v, u
        up_a, up_b = [a], [b]
        while a != b:
            if depth[a] >= depth[b]:
                a = parent[a]
                up_a.append(a)
            else:
                b = parent[b]
                up_b.append(b)
        path = up_a + up_b[-2::-1]  # v ... lca ... u
        cycles.append(tuple([u] + path[:-1]))
    parities = tuple("even" if len(c) % 2 == 0 else "odd" for c in cycles)
    return CycleBasis(tree, tuple(cycles), parities)


def is_bipartite(g: Graph) -> tuple[bool, tuple[int, ...] | None]:
    """2-color by BFS; returns ``(True, colors)`` or ``(False, None)``."""
    color = [-1] * g.n
    color[0] = 0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w in g.adjacency[u]:
            if color[w] < 0:
                color[w] = 1 - color[u]
                queue.append(w)
            elif color[w] == color[u]:
                return False, None
    return True, tuple(color)


def nb_period(g: Graph) -> int:
    """gcd of the lengths of all NB-cycles of ``g``.

    Computed as the period of the directed graph whose vertices are the
    oriented edges of the 2-core and whose arcs are the non-backtracking
    transitions. Nodes of the 1-shell lie on no NB-cycle, so they are peeled
    first.
    """
    core = two_core(g)
    if core is None:
        raise GraphError("trees have no NB-cycles; the period is undefined")
    h, _ = core
    if h.is_cycle_graph:
        raise CycleGraphError(
            f"cycle graph C_{h.n}: two disjoint NB-cycles of period {h.n}", h.n
        )
    level = [-1] * (2 * h.m)
    level[0] = 0
    queue = deque([0])
    period = 0
    while queue:
        e = queue.popleft()
        i, j = h.oriented_edges[e]
        for f in h.out_edges[j]:
            if h.dst[f] == i:
                continue
            if level[f] < 0:
                level[f] = level[e] + 1
                queue.append(f)
            else:
                period = math.gcd(period, abs(level[e] + 1 - level[f]))
    return period
