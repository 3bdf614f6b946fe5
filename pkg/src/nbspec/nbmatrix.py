"""The non-backtracking matrix and its relatives.

``B[k->l, i->j] = 1`` iff ``j == k`` and ``i != l``. Two representations are
kept side by side: matrix-free ``apply*`` functions that run in ``O(m)``
using the graph's ``src``/``dst``/``rev`` arrays, and explicit integer
matrices used for exact arithmetic and for the dense eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce

import numpy as np
import scipy.sparse as sp

from .graph import Graph, GraphError, shell_decomposition


class NBOperator:
    """NB-matrix of a graph, built once and shared read-only."""

    def __init__(self, g: Graph):
        self.graph = g
        rows, cols = [], []
        for col, (i, j) in enumerate(g.oriented_edges):
            for row in g.out_edges[j]:
                if g.dst[row] != i:
                    rows.append(row)
                    cols.append(col)
        dim = 2 * g.m
        self.sparse = sp.csr_matrix(
            (np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(dim, dim)
        )

    @property
    def dim(self) -> int:
        return 2 * self.graph.m

    @cached_property
    def dense(self) -> np.ndarray:
        return self.sparse.toarray()

    def __matmul__(self, v):
        return apply(self, v)

    def __repr__(self) -> str:
        return f"NBOperator(dim={self.dim}, nnz={self.sparse.nnz})"


def build(g: Graph) -> NBOperator:
    return NBOperator(g)


def _check(B: NBOperator, v) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] != B.dim:
        raise ValueError(f"vector of length {v.shape[0]} does not match dimension {B.dim}")
    return v


def into(g: Graph, v: np.ndarray) -> np.ndarray:
    """Per node ``k``: sum of ``v`` over oriented edges ``i -> k``."""
    out = np.zeros((g.n,) + v.shape[1:], dtype=np.result_type(v, np.float64))
    np.add.at(out, g.dst, v)
    return out


def from_(g: Graph, v: np.ndarray) -> np.ndarray:
    """Per node ``k``: sum of ``v`` over oriented edges ``k -> i``."""
    out = np.zeros((g.n,) + v.shape[1:], dtype=np.result_type(v, np.float64))
    np.add.at(out, g.src, v)
    return out


def _into_exact(g: Graph, v: np.ndarray) -> np.ndarray:
    out = np.zeros((g.n,) + v.shape[1:], dtype=v.dtype)
    np.add.at(out, g.dst, v)
    return out


def _from_exact(g: Graph, v: np.ndarray) -> np.ndarray:
    out = np.zeros((g.n,) + v.shape[1:], dtype=v.dtype)
    np.add.at(out, g.src, v)
    return out


def apply(B: NBOperator, v) -> np.ndarray:
    """``(Bv)[k->l] = into(k) - v[l->k]``. Integer input stays integer."""
    v = _check(B, v)
    g = B.graph
    return _into_exact(g, v)[g.src] - v[g.rev]


def apply_adjoint(B: NBOperator, v) -> np.ndarray:
    """``(B^T v)[i->j] = from(j) - v[j->i]``."""
    v = _check(B, v)
    g = B.graph
    return _from_exact(g, v)[g.dst] - v[g.rev]


def apply_BtB(B: NBOperator, v) -> np.ndarray:
    """``(B*Bv)[k->l] = (d_l - 2) into(l) + v[k->l]``."""
    v = _check(B, v)
    g = B.graph
    d = (g.degrees - 2).reshape((-1,) + (1,) * (v.ndim - 1))
    return (d * _into_exact(g, v))[g.dst] + v


def apply_BBt(B: NBOperator, v) -> np.ndarray:
    """``(BB*v)[k->l] = (d_k - 2) from(k) + v[k->l]``."""
    v = _check(B, v)
    g = B.graph
    d = (g.degrees - 2).reshape((-1,) + (1,) * (v.ndim - 1))
    return (d * _from_exact(g, v))[g.src] + v


def apply_P(g: Graph, v) -> np.ndarray:
    """Edge reversal: ``(Pv)[i->j] = v[j->i]``."""
    return np.asarray(v)[g.rev]


def p_matrix(g: Graph) -> np.ndarray:
    dim = 2 * g.m
    p = np.zeros((dim, dim), dtype=np.int64)
    p[np.arange(dim), g.rev] = 1
    return p


def indicator(g: Graph, u: int, v: int, dtype=np.int64) -> np.ndarray:
    """Characteristic vector of oriented edge ``u -> v``."""
    x = np.zeros(2 * g.m, dtype=dtype)
    x[g.edge_index[(u, v)]] = 1
    return x


# -- inverse -----------------------------------------------------------------


def _require_md2(g: Graph, what: str):
    if not g.is_md2:
        s1 = shell_decomposition(g).s1
        raise GraphError(f"{what}: B is singular, the 1-shell is nonempty ({s1} nodes)")


def inverse_scaled(B: NBOperator) -> tuple[np.ndarray, int]:
    """Closed-form inverse as an integer matrix ``N`` and scale ``L``.

    ``B^{-1} = N / L`` with ``L`` the lcm of ``d - 1`` over all nodes, so that
    ``B @ N == L * I`` can be checked in exact integer arithmetic.
    """
    g = B.graph
    _require_md2(g, "inverse")
    L = reduce(math.lcm, (int(d) - 1 for d in g.degrees), 1)
    dim = B.dim
    N = np.zeros((dim, dim), dtype=np.int64)
    for col, (l, j) in enumerate(g.oriented_edges):
        # nonzero entries have column source l equal to row target l
        s = L // (int(g.degrees[l]) - 1)
        for row in g.in_edges[l]:
            k = g.src[row]
            N[row, col] = s * (2 - int(g.degrees[l])) if k == j else s
    return N, L


def inverse(B: NBOperator, exact: bool = False):
    """``B^{-1}_{k->l, i->j} = delta_il / (d_l - 1) * (1 - delta_kj (d_l - 1))``.

    Returns floats, or a nested list of :class:`fractions.Fraction` when
    ``exact`` is set. Raises :class:`GraphError` unless the graph is md2.
    """
    N, L = inverse_scaled(B)
    if exact:
        return [[Fraction(int(x), L) for x in row] for row in N]
    return N / L


# -- walks -----------------------------------------------------------------

WALK_ORACLE_MAX_NODES = 10


def matrix_power_exact(B: NBOperator, p: int) -> np.ndarray:
    """``B^p`` with Python-int entries, safe from overflow."""
    M = B.dense.astype(object)
    out = np.eye(B.dim, dtype=np.int64).astype(object)
    for _ in range(p):
        out = M.dot(out)
    return out


def nb_walk_count(g: Graph, e_start: int, e_end: int, p: int) -> int:
    """Count NB-walks of ``p + 1`` edges starting with ``e_start``, ending with ``e_end``.

    Plain depth-first enumeration, meant as an oracle for ``(B^p)[e_end, e_start]``.
    """
    if g.n > WALK_ORACLE_MAX_NODES:
        raise GraphError(f"walk oracle limited to n <= {WALK_ORACLE_MAX_NODES}")
    if p < 0:
        raise ValueError("p must be nonnegative")
    target = g.oriented_edges[e_end]

    def count(edge: tuple[int, int], steps: int) -> int:
        if steps == 0:
            return int(edge == target)
        i, j = edge
        return sum(count((j, k), steps - 1) for k in g.adjacency[j] if k != i)

    return count(g.oriented_edges[e_start], p)


# -- companion form ----------------------------------------------------------


def reduced_companion(g: Graph) -> np.ndarray:
    """The ``2n x 2n`` matrix ``[[A, I - D], [I, 0]]``.

    Its characteristic polynomial is ``det(x^2 I - x A + (D - I))``; by the
    Ihara-Bass identity the NB-spectrum is this spectrum together with
    ``m - n`` extra copies of each of ``+1`` and ``-1`` (removed copies when
    ``m < n``). See ``docs/companion.md`` for the derivation.
    """
    n = g.n
    A = g.adjacency_matrix().astype(float)
    K = np.zeros((2 * n, 2 * n))
    K[:n, :n] = A
    K[:n, n:] = np.eye(n) - np.diag(g.degrees.astype(float))
    K[n:, :n] = np.eye(n)
    return K


# -- node addition -----------------------------------------------------------


@dataclass(frozen=True)
class AdditionBlocks:
    """Block form of the NB-matrix after adding node ``c = host.n``.

    Rows/columns of ``Bc`` list the host's oriented edges first (host order),
    then the ``2d`` new edges: ``s -> c`` for each neighbor ``s`` in
    increasing order, then ``c -> s`` in the same order.
    """

    host: Graph
    grown: Graph
    neighbors: tuple[int, ...]
    B: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    X: np.ndarray

    @property
    def d(self) -> int:
        return len(self.neighbors)

    @property
    def Bc(self) -> np.ndarray:
        return np.block([[self.B, self.D], [self.E, self.F]])

    @cached_property
    def x_columns(self) -> np.ndarray:
        """Host oriented edges ``i -> j`` with ``j`` adjacent to ``c``."""
        return np.flatnonzero(np.isin(self.host.dst, self.neighbors))

    def x_closed_form(self) -> np.ndarray:
        """``X[k->l, i->j] = a_ck a_cj (1 - delta_jk)``."""
        h = self.host
        in_c = np.zeros(h.n, dtype=bool)
        in_c[list(self.neighbors)] = True
        rows = in_c[h.src][:, None]
        cols = in_c[h.dst][None, :]
        differ = h.src[:, None] != h.dst[None, :]
        return (rows & cols & differ).astype(np.int64)


def addition_blocks(g: Graph, neighbors_of_c) -> AdditionBlocks:
    nbrs = tuple(sorted(set(int(x) for x in neighbors_of_c)))
    gc = g.with_node(nbrs)
    c = g.n
    order = [gc.edge_index[e] for e in g.oriented_edges]
    order += [gc.edge_index[(s, c)] for s in nbrs]
    order += [gc.edge_index[(c, s)] for s in nbrs]
    full = NBOperator(gc).dense[np.ix_(order, order)]
    k = 2 * g.m
    B, D, E, F = full[:k, :k], full[:k, k:], full[k:, :k], full[k:, k:]
    X = D @ F @ E
    return AdditionBlocks(g, gc, nbrs, B, D, E, F, X)


# -- export --------------------------------------------------------------------


def dump_coo(B: NBOperator) -> str:
    """Coordinate text: one ``row col value`` line per nonzero, row-major."""
    coo = B.sparse.tocoo()
    order = np.lexsort((coo.col, coo.row))
    return "".join(
        f"{coo.row[i]} {coo.col[i]} {coo.data[i]}\n" for i in order
    )
