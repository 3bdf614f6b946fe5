"""Pendants, collars and bracelets, and the unit eigenvalues they carry.

All detection runs on md2 graphs (pass the 2-core). Nodes of degree larger
than two are *anchors*; the rest of the graph splits into maximal chains of
degree-2 nodes running between anchors:

* a chain that returns to its own anchor closes a cycle: odd length gives a
  pendant, even length a collar with a single anchor;
* two chains of equal length between the same two anchors form a collar;
* two equal-length loops at one anchor form a bracelet.

A cycle graph has no anchors and is reported as one whole-graph motif.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .graph import Graph, GraphError
from .linalg import numerical_rank
from .nbmatrix import NBOperator, apply, into

LEAK_TOL = 1e-10
ROOT_TOL = 1e-6


@dataclass(frozen=True)
class Motif:
    kind: str  # "pendant" | "collar" | "bracelet"
    # nodes at labels 0..r-1 around the motif; a bracelet repeats its anchor at r/2
    order: tuple[int, ...]
    anchors: tuple[int, ...]
    whole_graph: bool = False

    @property
    def size(self) -> int:
        return len(self.order)

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.order)))

    def oriented_edges(self) -> list[tuple[int, int]]:
        r = self.size
        out = []
        for i in range(r):
            a, b = self.order[i], self.order[(i + 1) % r]
            out += [(a, b), (b, a)]
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "size": self.size,
            "nodes": list(self.order),
            "anchors": list(self.anchors),
            "whole_graph": self.whole_graph,
        }


def _chains(g: Graph) -> list[tuple[int, ...]]:
    """Maximal anchor-to-anchor chains, each listed once as a node sequence."""
    anchors = {u for u in range(g.n) if g.degrees[u] > 2}
    seen: set[frozenset] = set()
    chains = []
    for a in sorted(anchors):
        for w in g.adjacency[a]:
            path = [a]
            prev, cur = a, w
            while cur not in anchors:
                path.append(cur)
                nxt = [x for x in g.adjacency[cur] if x != prev]
                prev, cur = cur, nxt[0]
            path.append(cur)
            key = frozenset(frozenset(p) for p in zip(path, path[1:]))
            if key in seen:
                continue
            seen.add(key)
            if path[-1] < path[0]:
                path.reverse()
            chains.append(tuple(path))
    return chains


def _walk_cycle(g: Graph) -> tuple[int, ...]:
    """Nodes of a cycle graph in traversal order, starting at 0."""
    order = [0, g.adjacency[0][0]]
    while len(order) < g.n:
        order.append(next(x for x in g.adjacency[order[-1]] if x != order[-2]))
    return tuple(order)


def find_motifs(g: Graph) -> list[Motif]:
    """Every pendant, collar and bracelet of an md2 graph."""
    if not g.is_md2:
        raise GraphError("motif detection needs an md2 graph; peel to the 2-core first")
    if g.is_cycle_graph:
        kind = "pendant" if g.n % 2 else "collar"
        return [Motif(kind, _walk_cycle(g), (), whole_graph=True)]
    chains = _chains(g)
    loops = [c for c in chains if c[0] == c[-1]]
    bridges = [c for c in chains if c[0] != c[-1]]
    motifs = []
    for c in loops:
        r = len(c) - 1
        motifs.append(Motif("pendant" if r % 2 else "collar", c[:-1], (c[0],)))
    for c1, c2 in combinations(loops, 2):
        if c1[0] == c2[0] and len(c1) == len(c2):
            motifs.append(Motif("bracelet", c1[:-1] + c2[:-1], (c1[0],)))
    for c1, c2 in combinations(bridges, 2):
        if (c1[0], c1[-1]) == (c2[0], c2[-1]) and len(c1) == len(c2) and len(c1) > 2:
            order = c1 + tuple(reversed(c2[1:-1]))
            motifs.append(Motif("collar", order, (c1[0], c1[-1])))
    motifs.sort(key=lambda m: (m.size, m.kind, m.order))
    return motifs


def is_root_of_unity(lam: complex, r: int, tol: float = ROOT_TOL) -> bool:
    return abs(lam ** r - 1) < tol


def root_order(lam: complex, max_order: int, tol: float = ROOT_TOL) -> int | None:
    """Smallest ``r <= max_order`` with ``|lam^r - 1| < tol``."""
    for r in range(1, max_order + 1):
        if abs(lam ** r - 1) < tol:
            return r
    return None


def motif_eigenvector(g: Graph, motif: Motif, lam: complex) -> np.ndarray:
    """Eigenvector of ``lam`` supported on the motif's oriented edges.

    With nodes labelled ``0..r-1`` around the motif, forward edges carry
    ``lam^{-i}`` on ``i -> i+1`` and backward edges ``-lam^{i+1}`` on
    ``i+1 -> i``; the sum into label ``i`` is then ``lam^{1-i}(1 - lam^{2i})``,
    which vanishes at the anchors (labels ``0`` and ``r/2``).
    """
    r = motif.size
    if abs(lam * lam - 1) < ROOT_TOL:
        raise ValueError("lambda must not be +1 or -1")
    if not is_root_of_unity(lam, r):
        raise ValueError(f"lambda is not an r-th root of unity for r = {r}")
    lam = complex(lam)
    v = np.zeros(2 * g.m, dtype=complex)
    for i in range(r):
        a, b = motif.order[i], motif.order[(i + 1) % r]
        v[g.edge_index[(a, b)]] = lam ** (-i)
        v[g.edge_index[(b, a)]] = -(lam ** (i + 1))
    return v


@dataclass
class LeakReport:
    leaky: bool
    nodes: list[int]

    def __bool__(self) -> bool:
        return self.leaky


def is_leaky(g: Graph, v, tol: float = LEAK_TOL) -> LeakReport:
    """``v`` leaks via ``k`` when ``(d_k - 2) * into(k)`` is nonzero."""
    v = np.asarray(v)
    flow = into(g, v)
    leak = [int(k) for k in range(g.n) if g.degrees[k] != 2 and abs(flow[k]) > tol]
    return LeakReport(bool(leak), leak)


def nonzero_cycle(g: Graph, v, tol: float = 1e-10) -> list[int] | None:
    """Follow nonzero entries of an eigenvector backwards until an edge repeats.

    Starting from the largest entry ``i -> j``, repeatedly step to the largest
    ``k -> i`` with ``k != j``. Returns the node sequence of the closed
    non-backtracking walk found, or ``None`` if the walk dies out.
    """
    v = np.asarray(v)
    e = int(np.argmax(np.abs(v)))
    if abs(v[e]) <= tol:
        return None
    visited: dict[int, int] = {}
    walk = []
    while e not in visited:
        visited[e] = len(walk)
        walk.append(e)
        i, j = g.oriented_edges[e]
        cands = [f for f in g.in_edges[i] if g.src[f] != j and abs(v[f]) > tol]
        if not cands:
            return None
        e = max(cands, key=lambda f: abs(v[f]))
    loop = walk[visited[e]:]
    # walk was built backwards in time; reverse to forward order
    loop.reverse()
    return [int(g.src[f]) for f in loop]


@dataclass
class OrderPrediction:
    order: int
    motif_count: int  # motifs of size exactly `order`
    candidate_count: int  # motifs whose size is a multiple of `order`
    independent_gm: int  # rank of their eigenvectors at exp(2 pi i / order)
    kinds: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "motif_count": self.motif_count,
            "candidate_count": self.candidate_count,
            "independent_gm": self.independent_gm,
            "kinds": dict(sorted(self.kinds.items())),
        }


@dataclass
class UnitPrediction:
    motifs: list[Motif]
    orders: dict[int, OrderPrediction]
    cycle_graph: bool = False

    def gm(self, order: int) -> int:
        p = self.orders.get(order)
        return p.independent_gm if p else 0

    def to_dict(self) -> dict:
        return {
            "cycle_graph": self.cycle_graph,
            "motifs": [m.to_dict() for m in self.motifs],
            "orders": [self.orders[q].to_dict() for q in sorted(self.orders)],
        }


def _divisors(r: int) -> list[int]:
    return [q for q in range(3, r + 1) if r % q == 0]


def predict_unit_spectrum(g: Graph, motifs: list[Motif] | None = None) -> UnitPrediction:
    """Predicted geometric multiplicity of each complex root of unity.

    A primitive ``q``-th root (``q >= 3``) is carried by every motif whose
    size is a multiple of ``q``. All primitive ``q``-th roots are Galois
    conjugate, so one prediction per order suffices. The authoritative value
    is the rank of the candidate eigenvectors; overlapping motifs can make
    it smaller than the count.
    """
    if motifs is None:
        motifs = find_motifs(g)
    if g.is_cycle_graph:
        orders = {
            q: OrderPrediction(q, int(q == g.n), 1, 2, {motifs[0].kind: 1})
            for q in _divisors(g.n)
        }
        return UnitPrediction(motifs, orders, cycle_graph=True)
    orders = {}
    for q in sorted({q for m in motifs for q in _divisors(m.size)}):
        lam = cmath.exp(2j * math.pi / q)
        cands = [m for m in motifs if m.size % q == 0]
        kinds: dict[str, int] = {}
        for m in cands:
            kinds[m.kind] = kinds.get(m.kind, 0) + 1
        vecs = np.array([motif_eigenvector(g, m, lam) for m in cands]).T
        rank = numerical_rank(vecs).rank
        exact = sum(1 for m in motifs if m.size == q)
        orders[q] = OrderPrediction(q, exact, len(cands), rank, kinds)
    return UnitPrediction(motifs, orders)


def verify_motif_eigenvector(g: Graph, motif: Motif, lam: complex) -> float:
    v = motif_eigenvector(g, motif, lam)
    return float(np.linalg.norm(apply(NBOperator(g), v) - lam * v))
