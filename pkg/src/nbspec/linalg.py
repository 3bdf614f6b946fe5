"""Dense kernels: eigendecomposition, numerical rank, determinants, solves.

These wrap LAPACK through scipy. The NB-matrices handled here are small
(a few thousand rows at most) and well scaled, so plain dense routines are
the right tool.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

EPS_RANK = 1e-8
DELTA_CLUSTER = 1e-6
EIG_RESIDUAL = 1e-8
MAX_DIM = 2000


class LinAlgFailure(ArithmeticError):
    """Numerical failure: non-convergence, singular system, size cap."""


@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray  # sorted by decreasing modulus, ties by argument
    right: np.ndarray  # columns, unit 2-norm
    residuals: np.ndarray  # ||A v - lambda v|| per pair
    left: np.ndarray | None = None  # rows, scaled so left[i] @ right[:, i] == 1

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _sort_key(values: np.ndarray) -> np.ndarray:
    # round so that ties in modulus are not broken by roundoff
    mod = np.round(np.abs(values), 9)
    arg = np.round(np.angle(values), 9)
    return np.lexsort((arg, -mod))


def eig(A, left: bool = False, max_dim: int = MAX_DIM) -> EigenDecomposition:
    """Eigenpairs of a dense (non-symmetric) matrix.

    LAPACK ``geev``: balancing, Hessenberg reduction, shifted QR. When
    ``left`` is set the left eigenvectors are the rows of the inverse of the
    right eigenvector matrix, which makes them binormalized even inside
    repeated eigenvalues; this requires a diagonalizable input.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("eig needs a square matrix")
    if A.shape[0] > max_dim:
        raise LinAlgFailure(f"dimension {A.shape[0]} exceeds the dense cap {max_dim}")
    if A.shape[0] == 0:
        empty = np.zeros(0, dtype=complex)
        return EigenDecomposition(empty, np.zeros((0, 0), complex), np.zeros(0))
    try:
        w, v = sla.eig(A.astype(complex) if np.iscomplexobj(A) else A.astype(float))
    except sla.LinAlgError as exc:
        raise LinAlgFailure(f"eigensolver did not converge: {exc}") from exc
    w = w.astype(complex)
    v = v.astype(complex)
    order = _sort_key(w)
    w, v = w[order], v[:, order]
    res = np.linalg.norm(A @ v - v * w, axis=0)
    lft = None
    if left:
        try:
            lft = np.linalg.inv(v)
        except np.linalg.LinAlgError as exc:
            raise LinAlgFailure("eigenvector matrix is singular (defective input)") from exc
    return EigenDecomposition(w, v, res, lft)


def eigvals(A, max_dim: int = MAX_DIM) -> np.ndarray:
    A = np.asarray(A)
    if A.shape[0] > max_dim:
        raise LinAlgFailure(f"dimension {A.shape[0]} exceeds the dense cap {max_dim}")
    if A.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    w = sla.eigvals(A).astype(complex)
    return w[_sort_key(w)]


@dataclass
class RankReport:
    singular_values: np.ndarray
    rank: int
    nullity: int
    null_space: np.ndarray  # orthonormal columns


def numerical_rank(A, eps_rank: float = EPS_RANK) -> RankReport:
    """Rank as the number of singular values above ``eps_rank * s_max``."""
    A = np.asarray(A)
    if A.size == 0:
        return RankReport(np.zeros(0), 0, A.shape[1] if A.ndim == 2 else 0,
                          np.eye(A.shape[1] if A.ndim == 2 else 0))
    _, s, vh = np.linalg.svd(A)
    cutoff = eps_rank * s[0] if s.size and s[0] > 0 else 0.0
    rank = int(np.sum(s > cutoff)) if s.size and s[0] > 0 else 0
    nullity = A.shape[1] - rank
    basis = vh[rank:].conj().T
    return RankReport(s, rank, nullity, basis)


def null_space(A, dim: int) -> tuple[np.ndarray, float]:
    """The ``dim`` right singular vectors of smallest singular value.

    Returns the orthonormal basis and the largest singular value discarded
    into it, a bound on ``||A x||`` over the returned unit vectors.
    """
    A = np.asarray(A)
    _, s, vh = np.linalg.svd(A)
    n = A.shape[1]
    if dim == 0:
        return np.zeros((n, 0), dtype=vh.dtype), 0.0
    s_full = np.concatenate([s, np.zeros(n - s.size)])
    return vh[n - dim:].conj().T, float(s_full[n - dim])


def _lu(A):
    # exact singularity is detected from the factor itself
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(A, check_finite=True)


def solve(A, b) -> np.ndarray:
    A = np.asarray(A)
    b = np.asarray(b)
    try:
        lu, piv = _lu(A)
    except (sla.LinAlgError, ValueError) as exc:
        raise LinAlgFailure(f"solve failed: {exc}") from exc
    if np.any(np.diag(lu) == 0):
        raise LinAlgFailure("matrix is singular")
    x = sla.lu_solve((lu, piv), b)
    scale = np.linalg.norm(A, 2) * max(np.linalg.norm(x), np.finfo(float).tiny)
    if np.linalg.norm(A @ x - b) > 1e-10 * scale:
        raise LinAlgFailure("matrix is singular to working precision")
    return x


@dataclass(frozen=True)
class Determinant:
    """``mantissa * 2**exponent``; a singular matrix has exponent ``-inf``."""

    mantissa: complex
    exponent: float

    @property
    def is_zero(self) -> bool:
        return self.exponent == -math.inf

    @property
    def value(self) -> complex:
        if self.is_zero:
            return 0j
        return self.mantissa * 2.0 ** self.exponent

    def __mul__(self, other: "Determinant") -> "Determinant":
        if self.is_zero or other.is_zero:
            return Determinant(0j, -math.inf)
        return _normalize(self.mantissa * other.mantissa, self.exponent + other.exponent)

    @classmethod
    def of_scalar(cls, z: complex) -> "Determinant":
        if z == 0:
            return cls(0j, -math.inf)
        return _normalize(complex(z), 0)


def _normalize(mant: complex, exp: float) -> Determinant:
    mag, e = math.frexp(abs(mant))
    if mag == 0:
        return Determinant(0j, -math.inf)
    return Determinant(mant / abs(mant) * mag, exp + e)


def determinant(A) -> Determinant:
    """LU determinant with partial pivoting, accumulated without overflow."""
    A = np.asarray(A)
    if A.shape[0] == 0:
        return Determinant(1 + 0j, 0)
    lu, piv = _lu(A)
    diag = np.diag(lu).astype(complex)
    if np.any(diag == 0):
        return Determinant(0j, -math.inf)
    sign = -1.0 if np.count_nonzero(piv != np.arange(len(piv))) % 2 else 1.0
    mant, exp = complex(sign), 0
    for u in diag:
        m, e = math.frexp(abs(u))
        mant *= (u / abs(u)) * m
        exp += e
        mm, ee = math.frexp(abs(mant))
        mant = mant / abs(mant) * mm
        exp += ee
    return Determinant(mant, exp)


def relative_difference(a: Determinant, b: Determinant) -> float:
    """``|a - b| / max(|a|, |b|)`` evaluated on the common exponent."""
    if a.is_zero and b.is_zero:
        return 0.0
    if a.is_zero or b.is_zero:
        return 1.0
    top = max(a.exponent, b.exponent)
    x = a.mantissa * 2.0 ** (a.exponent - top)
    y = b.mantissa * 2.0 ** (b.exponent - top)
    return abs(x - y) / max(abs(x), abs(y))


@dataclass
class Cluster:
    centroid: complex
    members: np.ndarray  # indices into the clustered array

    @property
    def count(self) -> int:
        return len(self.members)


def cluster_eigenvalues(values, delta: float = DELTA_CLUSTER) -> list[Cluster]:
    """Single-linkage clusters: values closer than ``delta`` share a cluster.

    Clusters come back ordered like the input (first member's position).
    """
    values = np.asarray(values, dtype=complex)
    n = len(values)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order = np.argsort(values.real, kind="stable")
    for a_pos in range(n):
        a = order[a_pos]
        for b_pos in range(a_pos + 1, n):
            b = order[b_pos]
            if values[b].real - values[a].real > delta:
                break
            if abs(values[a] - values[b]) <= delta:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = [
        Cluster(complex(values[idx].mean()), np.array(idx)) for idx in groups.values()
    ]
    clusters.sort(key=lambda c: c.members[0])
    return clusters


def match_multisets(a, b, tol: float) -> tuple[bool, float]:
    """Pair two equal-size multisets by minimum total distance.

    Returns whether every matched pair is within ``tol`` and the largest
    matched distance.
    """
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return False, math.inf
    if a.size == 0:
        return True, 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    worst = float(cost[rows, cols].max())
    return worst <= tol, worst
