"""How the Perron eigenvalue moves when a node is attached to a graph.

Adding node ``c`` with neighbors ``N(c)`` to a host ``G`` produces ``G^c``
whose NB-matrix has the block form ``[[B, D], [E, F]]`` (see
:func:`nbspec.nbmatrix.addition_blocks`). Eliminating the ``2d`` new edges
gives, for ``t`` outside the host spectrum,

    det(B^c - tI) = t^{2d} det(B - tI) det(I + Y(t) X / t^2),

with ``Y(t) = (B - tI)^{-1}`` and ``X = D F E``. For ``t`` above the host's
Perron eigenvalue ``lam`` the largest eigenvalue of the positive matrix
``-Y(t) X`` decreases in ``t``; its negative ``y(t)`` meets ``-t^2`` exactly
once, at the new Perron eigenvalue ``lam_c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg as la
from .graph import CycleGraphError, Graph, GraphError, is_bipartite
from .nbmatrix import AdditionBlocks, NBOperator, addition_blocks, apply, into

EPS_GAP = 1e-6
NEAR_EIG = 1e-8


class BipartiteHostError(GraphError):
    """Bipartite hosts carry ``-lam`` as a second leading eigenvalue."""


@dataclass
class PerronPair:
    value: float
    right: np.ndarray  # positive, unit 2-norm
    left: np.ndarray  # P @ right, scaled so left @ right == 1
    iterations: int
    residual: float


def _check_host(g: Graph) -> None:
    if not g.is_md2:
        raise GraphError("the host must be md2 (minimum degree 2)")
    if g.is_cycle_graph:
        raise CycleGraphError("a cycle graph has rho = 1 and no unique Perron vector", g.n)
    if is_bipartite(g)[0]:
        raise BipartiteHostError(
            "bipartite host: -rho is also an eigenvalue; use the leading-eigenvalue report"
        )


def perron(g: Graph, tol: float = 1e-12, max_iter: int = 100_000) -> PerronPair:
    """Perron eigenpair by power iteration on ``B + I``.

    The shift keeps the iteration convergent when ``B`` has several
    eigenvalues of modulus ``rho`` (period larger than one): only ``rho + 1``
    attains the spectral radius of ``B + I``.
    """
    _check_host(g)
    op = NBOperator(g)
    x = np.full(op.dim, 1 / math.sqrt(op.dim))
    lam = 0.0
    for it in range(1, max_iter + 1):
        bx = apply(op, x)
        lam = float(x @ bx)
        res = float(np.linalg.norm(bx - lam * x))
        if res <= tol:
            break
        y = bx + x
        x = y / np.linalg.norm(y)
    else:
        raise la.LinAlgFailure(f"power iteration stalled at residual {res:.3g}")
    left = x[g.rev]
    left = left / (left @ x)
    return PerronPair(lam, x, left, it, res)


def nb_centrality(g: Graph, pair: PerronPair) -> np.ndarray:
    """Per node: the Perron vector summed over incoming edges."""
    return into(g, pair.right)


# -- the resolvent Y(t) = (B - tI)^{-1} -----------------------------------------


class Resolvent:
    """Apply ``(B - tI)^{-1}`` by LU, by eigendecomposition, or as a Neumann series."""

    def __init__(self, g: Graph):
        self.graph = g
        self.B = NBOperator(g).dense.astype(float)

    @cached_property
    def eigen(self) -> la.EigenDecomposition:
        return la.eig(self.B, left=True)

    def _guard(self, t: complex) -> None:
        gap = np.min(np.abs(self.eigen.eigenvalues - t))
        if gap < NEAR_EIG:
            raise la.LinAlgFailure(f"t = {t} lies within {gap:.2g} of an eigenvalue")

    def solve(self, t: complex, w) -> np.ndarray:
        self._guard(t)
        A = self.B - t * np.eye(self.B.shape[0])
        return la.solve(A, np.asarray(w))

    def spectral(self, t: complex, w) -> np.ndarray:
        """``sum_i v_i^R v_i^L w / (lam_i - t)``; needs a diagonalizable ``B``."""
        self._guard(t)
        e = self.eigen
        w = np.asarray(w)
        scale = 1 / (e.eigenvalues - t)
        if w.ndim > 1:
            scale = scale[:, None]
        return e.right @ (scale * (e.left @ w))

    def neumann(self, t: complex, w, terms: int = 400) -> np.ndarray:
        """``-sum_k B^k w / t^{k+1}``, convergent for ``|t| > rho``."""
        w = np.asarray(w, dtype=complex)
        out = np.zeros_like(w)
        term = w / t
        for _ in range(terms):
            out -= term
            term = self.B @ term / t
        return out


# -- probe -----------------------------------------------------------------------


@dataclass
class YValue:
    t: float
    y: float
    lower: float  # Collatz-Wielandt bounds on rho(-Y(t)X)
    upper: float
    iterations: int


@dataclass
class PerturbationProbe:
    host: Graph
    blocks: AdditionBlocks
    pair: PerronPair
    resolvent: Resolvent = field(repr=False)

    @property
    def lam(self) -> float:
        return self.pair.value

    @property
    def d(self) -> int:
        return self.blocks.d

    def yx_block(self, t: float) -> np.ndarray:
        """The nonzero columns of ``Y(t) X`` restricted to their own rows.

        ``X`` vanishes outside the columns ``J`` (edges into ``N(c)``), so the
        nonzero spectrum of ``Y(t) X`` is that of ``(Y(t) X)[J, J]``.
        """
        J = self.blocks.x_columns
        X = self.blocks.X.astype(float)
        W = self.resolvent.solve(t, X[:, J])
        return W[J, :]

    def y(self, t: float, tol: float = 1e-13, max_iter: int = 10_000) -> YValue:
        """``y(t) = -rho(-Y(t) X)`` for ``t > lam``.

        ``-Y(t) X`` restricted to ``J`` is entrywise positive, so its
        spectral radius is pinned between the Collatz-Wielandt bounds
        ``min_i (Mx)_i / x_i`` and ``max_i (Mx)_i / x_i``.
        """
        if t <= self.lam + 0.0:
            raise ValueError(f"y(t) is defined for t > lambda = {self.lam}")
        if self.d == 1:
            return YValue(t, 0.0, 0.0, 0.0, 0)
        M = -self.yx_block(t)
        if np.any(M < -1e-12 * np.abs(M).max()):
            raise la.LinAlgFailure("-Y(t)X has negative entries; t is not above lambda")
        M = np.clip(M, 0, None)
        x = np.ones(M.shape[0])
        lo, hi = 0.0, math.inf
        for it in range(1, max_iter + 1):
            mx = M @ x
            ratio = mx / x
            lo, hi = float(ratio.min()), float(ratio.max())
            if hi - lo <= tol * hi:
                break
            x = mx / mx.max()
        else:
            rho = float(np.max(np.abs(np.linalg.eigvals(M))))
            return YValue(t, -rho, rho, rho, it)
        return YValue(t, -(lo + hi) / 2, lo, hi, it)

    def f(self, t: float) -> float:
        """``y(t) + t^2``; its single zero above ``lam`` is ``lam_c``."""
        return self.y(t).y + t * t

    @cached_property
    def lambda_c(self) -> float:
        return find_lambda_c(self)

    @cached_property
    def lambda_c_direct(self) -> float:
        """Largest real eigenvalue of ``B^c`` from a dense eigensolve."""
        w = la.eigvals(self.blocks.Bc.astype(float))
        return float(w[np.argmax(np.where(np.abs(w.imag) < 1e-9, w.real, -np.inf))].real)

    @cached_property
    def alpha(self) -> np.ndarray:
        """``alpha_ij = v_i^L X v_j^R`` over the host eigenbasis, Perron first."""
        e = self.resolvent.eigen
        k = perron_index(e.eigenvalues, self.lam)
        order = [k] + [i for i in range(len(e.eigenvalues)) if i != k]
        X = self.blocks.X.astype(float)
        return e.left[order] @ X @ e.right[:, order]

    @property
    def alpha11(self) -> float:
        return float(self.alpha[0, 0].real)

    def to_dict(self) -> dict:
        return {
            "host_n": self.host.n,
            "host_m": self.host.m,
            "neighbors": list(self.blocks.neighbors),
            "d": self.d,
            "lambda": self.lam,
            "lambda_c": self.lambda_c,
            "lambda_c_direct": self.lambda_c_direct,
            "eigen_drop": self.lambda_c - self.lam,
            "alpha11": self.alpha11,
            "f_at_lambda_c": self.f(self.lambda_c) if self.d > 1 else 0.0,
        }


def perron_index(values: np.ndarray, lam: float) -> int:
    return int(np.argmin(np.abs(values - lam)))


def make_probe(g: Graph, neighbors) -> PerturbationProbe:
    nbrs = sorted(set(int(s) for s in neighbors))
    if not nbrs:
        raise GraphError("the new node needs at least one neighbor")
    if any(s < 0 or s >= g.n for s in nbrs):
        raise GraphError(f"neighbors must be host nodes 0..{g.n - 1}")
    pair = perron(g)
    return PerturbationProbe(g, addition_blocks(g, nbrs), pair, Resolvent(g))


def find_lambda_c(probe: PerturbationProbe, eps_gap: float = EPS_GAP,
                  xtol: float = 1e-15) -> float:
    """Zero of ``f(t) = y(t) + t^2`` above ``lam``, by bracketing and bisection.

    A degree-one attachment adds no cycle, so ``lam_c = lam``.
    """
    lam = probe.lam
    if probe.d == 1:
        return lam
    lo = lam + eps_gap
    shrink = 0
    while probe.f(lo) >= 0:
        # root hides closer than eps_gap to lam
        shrink += 1
        if shrink > 30:
            return lo
        lo = lam + eps_gap * 2.0 ** -shrink
    cap = 2.0 ** 20 * (1 + lam)
    k = 0
    hi = lam + 1.0
    while probe.f(hi) <= 0:
        k += 1
        hi = lam + 2.0 ** k
        if hi > cap:
            raise la.LinAlgFailure("no sign change of y(t) + t^2 below the bracket cap")
    while hi - lo > xtol * hi:
        mid = (lo + hi) / 2
        if not lo < mid < hi:
            break
        if probe.f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def sign_changes(probe: PerturbationProbe, t_max: float, samples: int = 200) -> int:
    """Number of sign changes of ``f`` on a grid over ``(lam, t_max]``."""
    ts = probe.lam + (t_max - probe.lam) * np.geomspace(1e-5, 1, samples)
    vals = np.sign([probe.f(t) for t in ts])
    return int(np.count_nonzero(vals[1:] != vals[:-1]))


def determinant_identity_residual(probe: PerturbationProbe, t: complex) -> float:
    """Relative gap in ``det(B^c - tI) = t^{2d} det(B - tI) det(I + Y(t)X/t^2)``."""
    Bc = probe.blocks.Bc.astype(float)
    B = probe.resolvent.B
    X = probe.blocks.X.astype(float)
    lhs = la.determinant(Bc - t * np.eye(Bc.shape[0]))
    YX = probe.resolvent.solve(t, X)
    rhs = (
        la.Determinant.of_scalar(t ** (2 * probe.d))
        * la.determinant(B - t * np.eye(B.shape[0]))
        * la.determinant(np.eye(B.shape[0]) + YX / t ** 2)
    )
    return la.relative_difference(lhs, rhs)


# -- Gershgorin disks ----------------------------------------------------------


@dataclass
class DiskSet:
    t: float
    centers: np.ndarray
    radii: np.ndarray

    def contains(self, z: complex) -> bool:
        return bool(np.any(np.abs(z - self.centers) <= self.radii * (1 + 1e-12) + 1e-12))

    @property
    def first_isolated(self) -> bool:
        """Perron disk (index 0) disjoint from every other disk."""
        gap = np.abs(self.centers[1:] - self.centers[0])
        return bool(np.all(gap > self.radii[1:] + self.radii[0]))

    @property
    def reach(self) -> float:
        """``max |center| + radius``: every eigenvalue of ``H`` lies within it."""
        return float(np.max(np.abs(self.centers) + self.radii))

    def rows(self):
        for i, (c, r) in enumerate(zip(self.centers, self.radii)):
            yield (self.t, i, float(c.real), float(c.imag), float(r))


def gershgorin(probe: PerturbationProbe, t: float) -> DiskSet:
    """Disks of ``H(t) = T L X R T``, ``T = diag((lam_i - t)^{-1/2})``.

    ``H(t)`` is similar to ``Y(t) X``; the Perron eigenvalue comes first.
    """
    e = probe.resolvent.eigen
    k = perron_index(e.eigenvalues, probe.lam)
    lam = np.concatenate([[e.eigenvalues[k]], np.delete(e.eigenvalues, k)])
    T = 1 / np.sqrt(lam - t + 0j)
    H = T[:, None] * probe.alpha * T[None, :]
    centers = np.diag(H).copy()
    radii = np.abs(H).sum(axis=1) - np.abs(centers)
    return DiskSet(t, centers, radii)


@dataclass
class GershgorinTrace:
    disks: list[DiskSet]
    y_in_union: list[bool]
    near_isolated: bool  # Perron disk isolated at the closest sample to lam
    far_t: float  # sample where every disk lies within t^2 of the origin
    far_ok: bool

    def csv_rows(self):
        for ds in self.disks:
            yield from ds.rows()


def gershgorin_trace(probe: PerturbationProbe, ts=None) -> GershgorinTrace:
    """Disks near ``lam`` (shrinking offsets) and at a large ``t``.

    The large ``t`` doubles until every disk lies inside radius ``t^2``.
    """
    lam = probe.lam
    if ts is None:
        ts = [lam + 10.0 ** -k for k in range(1, 7)]
    disks = [gershgorin(probe, t) for t in ts]
    inside = [ds.contains(probe.y(ds.t).y) for ds in disks]
    near = min(disks, key=lambda ds: ds.t)
    t = max(2 * lam, lam + 1)
    far = gershgorin(probe, t)
    while far.reach > t * t and t < 2.0 ** 20 * (1 + lam):
        t *= 2
        far = gershgorin(probe, t)
    disks.append(far)
    inside.append(far.contains(probe.y(t).y))
    return GershgorinTrace(disks, inside, near.first_isolated, t, far.reach <= t * t)


def attach_spectrum_zeros(probe: PerturbationProbe) -> np.ndarray:
    """Spectrum of ``B^c`` with the coupling ``D`` removed.

    Without ``D`` the block matrix is triangular: the host spectrum plus the
    ``2d`` eigenvalues of the nilpotent block ``F``, all zero.
    """
    b = probe.blocks
    M = np.block([[b.B, np.zeros_like(b.D)], [b.E, b.F]]).astype(float)
    return la.eigvals(M)
