"""Spectral pipeline for the NB-matrix.

``compute_spectrum`` is the workhorse: a dense eigensolve of the full
``2m x 2m`` matrix, clustered into eigenvalues with algebraic multiplicity
(cluster size) and geometric multiplicity (nullity of ``B - lambda I``),
cross-checked against the ``2n x 2n`` companion route. The remaining
functions build on the report.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import linalg as la
from .graph import (
    CycleGraphError,
    Graph,
    GraphError,
    cycle_basis,
    is_bipartite,
    nb_period,
    shell_decomposition,
    two_core,
)
from .motifs import (
    ROOT_TOL,
    UnitPrediction,
    find_motifs,
    is_leaky,
    predict_unit_spectrum,
    root_order,
)
from .nbmatrix import NBOperator, apply, indicator, p_matrix, reduced_companion

TAU_BAND = 1e-6
# |lambda| - 1 deviations below this are plain roundoff and not flagged
_UNIT_NOISE = 1e-10
INNER_LOW = 1e-8


@dataclass(frozen=True)
class Tolerances:
    eps_rank: float = la.EPS_RANK
    delta_cluster: float = la.DELTA_CLUSTER
    tau_band: float = TAU_BAND
    max_dim: int = la.MAX_DIM

    def __post_init__(self):
        if min(self.eps_rank, self.delta_cluster, self.tau_band) <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_dim < 2:
            raise ValueError("max_dim must be at least 2")


def classify(lam: complex, rho: float, tau_band: float = TAU_BAND) -> str:
    """Magnitude class: ``inner``, ``unit``, ``outer`` or ``leading``.

    The unit band is checked before the leading test, so every eigenvalue of
    a cycle graph (where ``rho == 1``) is ``unit``.
    """
    r = abs(lam)
    if r < 1 - tau_band:
        return "inner"
    if abs(r - 1) <= tau_band:
        return "unit"
    if rho > 0 and abs(rho - r) <= tau_band * rho:
        return "leading"
    return "outer"


@dataclass
class ClusterInfo:
    centroid: complex
    am: int
    gm: int
    cls: str
    members: np.ndarray  # eigenvalues in this cluster
    flagged: bool = False  # inside the unit band but visibly off the circle
    order: int | None = None  # root-of-unity order for unit clusters

    @property
    def defective(self) -> bool:
        return self.gm < self.am

    def to_dict(self) -> dict:
        return {
            "centroid": _cplx(self.centroid),
            "am": self.am,
            "gm": self.gm,
            "class": self.cls,
            "flagged": self.flagged,
            "root_order": self.order,
        }


@dataclass
class LedgerRow:
    key: str
    predicted: object
    observed: object
    # advisory rows (motif predictions, conjectures) never fail verification
    advisory: bool = False
    note: str = ""

    @property
    def match(self) -> bool:
        return self.predicted == self.observed

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "predicted": self.predicted,
            "observed": self.observed,
            "match": self.match,
            "advisory": self.advisory,
            "note": self.note,
        }


@dataclass
class SpectrumReport:
    graph: Graph
    tolerances: Tolerances
    eigenvalues: np.ndarray
    clusters: list[ClusterInfo]
    rho: float
    nu: int | None
    companion_agrees: bool
    companion_residual: float
    ledger: list[LedgerRow] = field(default_factory=list)
    prediction: UnitPrediction | None = None

    @property
    def diagonalizable(self) -> bool:
        return all(not c.defective for c in self.clusters)

    @property
    def defective(self) -> list[ClusterInfo]:
        return [c for c in self.clusters if c.defective]

    def cluster_near(self, lam: complex, tol: float | None = None) -> ClusterInfo | None:
        tol = self.tolerances.delta_cluster * 10 if tol is None else tol
        best = min(self.clusters, key=lambda c: abs(c.centroid - lam), default=None)
        if best is not None and abs(best.centroid - lam) <= tol:
            return best
        return None

    def am(self, lam: complex) -> int:
        c = self.cluster_near(lam)
        return c.am if c else 0

    def gm(self, lam: complex) -> int:
        c = self.cluster_near(lam)
        return c.gm if c else 0

    def by_class(self, cls: str) -> list[ClusterInfo]:
        return [c for c in self.clusters if c.cls == cls]

    @property
    def discrepancies(self) -> list[LedgerRow]:
        return [r for r in self.ledger if r.key.startswith("unit.order") and not r.match]

    def to_dict(self) -> dict:
        g = self.graph
        sh = shell_decomposition(g)
        return {
            "n": g.n,
            "m": g.m,
            "s1": sh.s1,
            "n1": sh.n1,
            "rho": self.rho,
            "nu": self.nu,
            "diagonalizable": self.diagonalizable,
            "defective": [c.to_dict() for c in self.defective],
            "companion_agrees": self.companion_agrees,
            "companion_residual": self.companion_residual,
            "clusters": [c.to_dict() for c in self.clusters],
            "ledger": [r.to_dict() for r in self.ledger],
            "discrepancies": [r.to_dict() for r in self.discrepancies],
            "tolerances": {
                "eps_rank": self.tolerances.eps_rank,
                "delta_cluster": self.tolerances.delta_cluster,
                "tau_band": self.tolerances.tau_band,
            },
        }

    def csv_rows(self) -> list[tuple[float, float, str, int, int]]:
        """One ``(re, im, class, am, gm)`` row per eigenvalue."""
        rows = []
        for c in self.clusters:
            for z in c.members:
                rows.append((float(z.real), float(z.imag), c.cls, c.am, c.gm))
        return rows


def _cplx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


# -- the two spectral routes ------------------------------------------------


def companion_spectrum(g: Graph, max_dim: int = la.MAX_DIM) -> np.ndarray:
    """NB-spectrum via the companion matrix plus ``m - n`` copies of ``+-1``."""
    w = la.eigvals(reduced_companion(g), max_dim=max_dim)
    k = g.m - g.n
    if k >= 0:
        w = np.concatenate([w, np.ones(k), -np.ones(k)])
    else:
        w = list(w)
        for target in (1.0, -1.0):
            for _ in range(-k):
                w.pop(int(np.argmin(np.abs(np.asarray(w) - target))))
        w = np.asarray(w)
    return w[la._sort_key(w)]


def _companion_check(g: Graph, w: np.ndarray, tol: Tolerances) -> tuple[bool, float]:
    """Compare the dense spectrum with the companion route on the 2-core.

    The 1-shell only adds zeros, and those sit in Jordan blocks of the
    companion matrix that a dense solver smears out to ``eps**(1/k)``.
    The check therefore drops the ``2 s1`` smallest eigenvalues of ``B`` and
    compares the rest with the companion spectrum of the 2-core.
    """
    core = two_core(g)
    k = 2 * shell_decomposition(g).s1
    small = np.argsort(np.abs(w), kind="stable")
    zeros, rest = w[small[:k]], w[small[k:]]
    zero_gap = float(np.max(np.abs(zeros), initial=0.0))
    if core is None:
        return zero_gap <= tol.delta_cluster, zero_gap
    ok, resid = la.match_multisets(rest, companion_spectrum(core[0], tol.max_dim),
                                   tol.delta_cluster)
    return ok and zero_gap <= tol.delta_cluster, max(resid, zero_gap)


def _period_or_none(g: Graph) -> int | None:
    try:
        return nb_period(g)
    except CycleGraphError as exc:
        return exc.period
    except GraphError:
        return None


def compute_spectrum(g: Graph, tol: Tolerances | None = None) -> SpectrumReport:
    tol = tol or Tolerances()
    B = NBOperator(g).dense.astype(float)
    dim = B.shape[0]
    w = la.eigvals(B, max_dim=tol.max_dim)
    rho = float(np.max(np.abs(w))) if w.size else 0.0
    eye = np.eye(dim)
    clusters = []
    for c in la.cluster_eigenvalues(w, tol.delta_cluster):
        lam = c.centroid
        gm = la.numerical_rank(B - lam * eye, tol.eps_rank).nullity
        cls = classify(lam, rho, tol.tau_band)
        info = ClusterInfo(lam, c.count, gm, cls, w[c.members])
        if cls == "unit":
            info.flagged = abs(abs(lam) - 1) > _UNIT_NOISE
            info.order = root_order(lam, dim)
        clusters.append(info)
    clusters.sort(key=lambda c: (-round(abs(c.centroid), 9), round(cmath.phase(c.centroid), 9)))

    agrees, resid = _companion_check(g, w, tol)
    report = SpectrumReport(g, tol, w, clusters, rho, _period_or_none(g), agrees, resid)
    _fill_ledger(report)
    return report


# -- ledger ------------------------------------------------------------------


def _fill_ledger(rep: SpectrumReport) -> None:
    g = rep.graph
    sh = shell_decomposition(g)
    rows = rep.ledger
    tree = not sh.two_core_nodes
    rows.append(LedgerRow("zero.gm", sh.n1, rep.gm(0)))
    rows.append(LedgerRow("zero.am", 2 * g.m if tree else 2 * sh.s1, rep.am(0)))
    inner = [c for c in rep.clusters if INNER_LOW < abs(c.centroid) < 1 - TAU_BAND]
    rows.append(LedgerRow("inner.nonzero", 0, len(inner)))
    non_root = [c for c in rep.by_class("unit") if c.order is None]
    rows.append(LedgerRow("unit.non_root", 0, len(non_root)))
    defective_unit = [c for c in rep.by_class("unit") if c.defective]
    rows.append(LedgerRow("unit.defective", 0, len(defective_unit)))
    if tree:
        return
    core, _ = two_core(g)
    bip = is_bipartite(g)[0]
    if g.m > g.n:
        p1, m1 = g.m - g.n + 1, g.m - g.n + int(bip)
    else:
        # the 2-core is a single cycle C_k: every k-th root twice
        k = core.n
        p1, m1 = 2, 2 * int(k % 2 == 0)
    rows.append(LedgerRow("plus1.gm", p1, rep.gm(1)))
    rows.append(LedgerRow("plus1.am", p1, rep.am(1)))
    rows.append(LedgerRow("minus1.gm", m1, rep.gm(-1)))
    rows.append(LedgerRow("minus1.am", m1, rep.am(-1)))

    pred = predict_unit_spectrum(core)
    rep.prediction = pred
    observed: dict[int, set[int]] = {}
    for c in rep.by_class("unit"):
        if c.order is not None and c.order >= 3:
            observed.setdefault(c.order, set()).add(c.gm)
    for q in sorted(set(pred.orders) | set(observed)):
        obs = observed.get(q, {0})
        value = obs.pop() if len(obs) == 1 else sorted(obs)
        p = pred.orders.get(q)
        note = ""
        if p is not None:
            note = f"{p.motif_count} motif(s) of size {q}, {p.candidate_count} candidate(s)"
        rows.append(LedgerRow(f"unit.order.{q}", pred.gm(q), value, advisory=True, note=note))

    if g.m > g.n:
        outer_multi = [c for c in rep.by_class("outer") if c.am > 1]
        rows.append(LedgerRow(
            "outer.simple", 0, len(outer_multi), advisory=True,
            note="conjecture: outer eigenvalues are simple",
        ))
        leading = rep.by_class("leading")
        rows.append(LedgerRow("leading.count", rep.nu, len(leading)))
        rows.append(LedgerRow("leading.simple", len(leading),
                              sum(1 for c in leading if c.am == c.gm == 1)))


def table1_pass(rep: SpectrumReport) -> bool:
    return all(r.match for r in rep.ledger if not r.advisory)


# -- kernel ---------------------------------------------------------------------


@dataclass
class KernelReport:
    basis: list[np.ndarray]  # one characteristic vector per degree-1 node
    gm0: int
    am0: int
    observed_gm0: int
    observed_am0: int
    layer_failures: list[tuple[int, tuple[int, int]]]

    @property
    def ok(self) -> bool:
        return (
            self.gm0 == self.observed_gm0
            and self.am0 == self.observed_am0
            and not self.layer_failures
        )


def layer_kernel_failures(g: Graph) -> list[tuple[int, tuple[int, int]]]:
    """Outward 1-shell edges ``e`` of layer ``l`` with ``B^l chi^e != 0``.

    Exact integer arithmetic; an empty list confirms the layer structure.
    """
    op = NBOperator(g)
    sh = shell_decomposition(g)
    bad = []
    for ell, layer in enumerate(sh.layers, 1):
        for a, b in sorted(layer.edges):
            for x, y in ((a, b), (b, a)):
                if y not in layer.nodes:
                    continue
                v = indicator(g, x, y)
                for _ in range(ell):
                    v = apply(op, v)
                if np.any(v):
                    bad.append((ell, (x, y)))
    return bad


def kernel_report(g: Graph, tol: Tolerances | None = None,
                  report: SpectrumReport | None = None) -> KernelReport:
    sh = shell_decomposition(g)
    leaves = [k for k in range(g.n) if g.degrees[k] == 1]
    basis = [indicator(g, g.adjacency[k][0], k) for k in leaves]
    am0 = 2 * g.m if not sh.two_core_nodes else 2 * sh.s1
    rep = report or compute_spectrum(g, tol)
    return KernelReport(basis, sh.n1, am0, rep.gm(0), rep.am(0), layer_kernel_failures(g))


# -- lambda = +1 / -1 ----------------------------------------------------------


def _cycle_edges(cycle: tuple[int, ...]) -> list[tuple[int, int]]:
    return list(zip(cycle, cycle[1:] + cycle[:1]))


def eig1_basis(g: Graph) -> list[np.ndarray]:
    """One integer flow vector per fundamental cycle, each with ``Bv = v``.

    ``v = sum over cycle edges u -> w of chi^{u->w} - chi^{w->u}``.
    """
    vecs = []
    for cyc in cycle_basis(g).fundamental_cycles:
        v = np.zeros(2 * g.m, dtype=np.int64)
        for u, w in _cycle_edges(cyc):
            v[g.edge_index[(u, w)]] += 1
            v[g.edge_index[(w, u)]] -= 1
        vecs.append(v)
    return vecs


def kirchhoff_residual(g: Graph, v: np.ndarray) -> int:
    """Largest violation of zero net inflow per node and ``v[k->l] = -v[l->k]``."""
    from .nbmatrix import _into_exact

    flow = np.abs(_into_exact(g, v)).max()
    anti = np.abs(v + v[g.rev]).max()
    return int(max(flow, anti))


@dataclass
class MinusOneBasis:
    null_space: np.ndarray  # orthonormal columns spanning ker(B + I)
    constructive: list[np.ndarray]  # alternating vectors on even fundamental cycles
    expected_dim: int
    constructive_rank: int

    @property
    def dim(self) -> int:
        return self.null_space.shape[1]


def expected_minus1(g: Graph) -> int:
    bip = is_bipartite(g)[0]
    if g.m > g.n:
        return g.m - g.n + int(bip)
    core = two_core(g)
    if core is None:
        return 0
    return 2 * int(core[0].n % 2 == 0)


def eig_minus1_basis(g: Graph, eps_rank: float = la.EPS_RANK) -> MinusOneBasis:
    B = NBOperator(g).dense.astype(float)
    ns = la.numerical_rank(B + np.eye(B.shape[0]), eps_rank).null_space
    cons = []
    for cyc, par in zip(*(lambda cb: (cb.fundamental_cycles, cb.parities))(cycle_basis(g))):
        if par != "even":
            continue
        v = np.zeros(2 * g.m, dtype=np.int64)
        for i, (u, w) in enumerate(_cycle_edges(cyc)):
            s = 1 if i % 2 == 0 else -1
            v[g.edge_index[(u, w)]] = s
            v[g.edge_index[(w, u)]] = s
        cons.append(v)
    rank = la.numerical_rank(np.array(cons, dtype=float).T).rank if cons else 0
    return MinusOneBasis(ns, cons, expected_minus1(g), rank)


# -- Ihara-Bass ------------------------------------------------------------------


@dataclass
class IharaBassCheck:
    samples: list[complex]
    residuals: list[float]
    skipped: list[complex]

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)


def _power(d: la.Determinant, k: int) -> la.Determinant:
    out = la.Determinant(1 + 0j, 0)
    for _ in range(k):
        out = out * d
    return out


def ihara_bass_sides(g: Graph, t: complex) -> tuple[la.Determinant, la.Determinant]:
    """Both sides of the Ihara-Bass identity at ``t``.

    ``det(I - tB) = (1 - t^2)^{m-n} det(I - tA + t^2 (D - I))``. For
    ``m < n`` the factor moves to the left side so no negative power appears.
    """
    B = NBOperator(g).dense
    A = g.adjacency_matrix()
    D = np.diag(g.degrees)
    lhs = la.determinant(np.eye(B.shape[0]) - t * B)
    rhs = la.determinant(np.eye(g.n) - t * A + t * t * (D - np.eye(g.n)))
    k = g.m - g.n
    factor = la.Determinant.of_scalar(1 - t * t)
    if k >= 0:
        rhs = rhs * _power(factor, k)
    else:
        lhs = lhs * _power(factor, -k)
    return lhs, rhs


def verify_ihara_bass(g: Graph, sample_ts=None, n_samples: int = 20, seed: int = 0,
                      margin: float = 1e-3) -> IharaBassCheck:
    """Relative residual of the Ihara-Bass identity at sample points.

    Default samples lie on the circle ``|t| = 0.5 / max(1, d_max - 1)``, inside
    the disk where ``I - tB`` is comfortably invertible. Samples within
    ``margin`` of a reciprocal eigenvalue are skipped.
    """
    if sample_ts is None:
        rng = np.random.default_rng(seed)
        radius = 0.5 / max(1, int(g.degrees.max()) - 1)
        sample_ts = radius * np.exp(2j * np.pi * rng.random(n_samples))
    w = la.eigvals(NBOperator(g).dense.astype(float))
    w = w[np.abs(w) > 1e-12]
    used, res, skipped = [], [], []
    for t in sample_ts:
        t = complex(t)
        if w.size and np.min(np.abs(1 - t * w)) < margin:
            skipped.append(t)
            continue
        lhs, rhs = ihara_bass_sides(g, t)
        used.append(t)
        res.append(la.relative_difference(lhs, rhs))
    return IharaBassCheck(used, res, skipped)


# -- diagonalizability / leading ----------------------------------------------


@dataclass
class DiagonalizabilityReport:
    diagonalizable: bool
    defective: list[ClusterInfo]
    clusters: list[ClusterInfo]
    one_shell_empty: bool
    zero_am: tuple[int, int]  # (predicted, observed)
    zero_gm: tuple[int, int]

    @property
    def conjecture(self) -> str:
        """Whether this graph agrees with 'diagonalizable iff empty 1-shell'."""
        return "corroborated" if self.diagonalizable == self.one_shell_empty else "violated"

    def to_dict(self) -> dict:
        return {
            "diagonalizable": self.diagonalizable,
            "one_shell_empty": self.one_shell_empty,
            "conjecture": self.conjecture,
            "defective": [c.to_dict() for c in self.defective],
            "zero_am": list(self.zero_am),
            "zero_gm": list(self.zero_gm),
        }


def diagonalizability_report(g: Graph, tol: Tolerances | None = None,
                             report: SpectrumReport | None = None) -> DiagonalizabilityReport:
    rep = report or compute_spectrum(g, tol)
    sh = shell_decomposition(g)
    am0 = 2 * g.m if not sh.two_core_nodes else 2 * sh.s1
    return DiagonalizabilityReport(
        rep.diagonalizable,
        rep.defective,
        rep.clusters,
        sh.s1 == 0,
        (am0, rep.am(0)),
        (sh.n1, rep.gm(0)),
    )


@dataclass
class LeadingReport:
    rho: float
    nu: int
    leading: list[ClusterInfo]
    expected: list[complex]
    cycle_graph: bool = False
    max_deviation: float = 0.0

    @property
    def ok(self) -> bool:
        if self.cycle_graph:
            return abs(self.rho - 1) <= TAU_BAND
        return (
            len(self.leading) == self.nu
            and all(c.am == 1 and c.gm == 1 for c in self.leading)
            and self.max_deviation <= la.DELTA_CLUSTER
        )

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "nu": self.nu,
            "cycle_graph": self.cycle_graph,
            "leading": [c.to_dict() for c in self.leading],
            "expected": [_cplx(z) for z in self.expected],
            "max_deviation": self.max_deviation,
            "ok": self.ok,
        }


def leading_report(g: Graph, tol: Tolerances | None = None,
                   report: SpectrumReport | None = None) -> LeadingReport:
    """Leading eigenvalues against ``rho * exp(2 pi i k / nu)``, each simple.

    A graph whose 2-core is a cycle is the degenerate case ``rho = 1``, where
    every nonzero eigenvalue is leading.
    """
    core = two_core(g)
    if core is None:
        raise GraphError("trees have no leading eigenvalues (B is nilpotent)")
    rep = report or compute_spectrum(g, tol)
    if core[0].is_cycle_graph:
        lead = [c for c in rep.clusters if abs(c.centroid) > INNER_LOW]
        return LeadingReport(rep.rho, core[0].n, lead, [], cycle_graph=True)
    nu = nb_period(g)
    expected = [rep.rho * cmath.exp(2j * math.pi * k / nu) for k in range(nu)]
    lead = rep.by_class("leading")
    dev = 0.0
    for z in expected:
        dev = max(dev, min((abs(c.centroid - z) for c in lead), default=math.inf))
    return LeadingReport(rep.rho, nu, lead, expected, max_deviation=dev)


# -- eigenvectors ---------------------------------------------------------------


def cluster_basis(B: np.ndarray, c: ClusterInfo) -> tuple[np.ndarray, float]:
    """Orthonormal eigenvectors for a cluster: the ``gm`` smallest singular
    directions of ``B - centroid I``."""
    return la.null_space(B - c.centroid * np.eye(B.shape[0]), c.gm)


def eigenpairs(rep: SpectrumReport):
    """Yield ``(cluster, basis)`` with an orthonormal eigenbasis per cluster."""
    B = NBOperator(rep.graph).dense.astype(float)
    for c in rep.clusters:
        basis, _ = cluster_basis(B, c)
        yield c, basis


@dataclass
class UnitStructureCheck:
    """Root-of-unity and leakiness checks over every cluster."""

    non_root_units: list[complex]
    defective_units: list[complex]
    leaky_units: list[complex]
    nonleaky_nonunits: list[complex]
    max_order: int

    @property
    def ok(self) -> bool:
        return not (self.non_root_units or self.defective_units
                    or self.leaky_units or self.nonleaky_nonunits)


def unit_structure_check(rep: SpectrumReport, leak_tol: float = 1e-8) -> UnitStructureCheck:
    """Needs an md2 graph: on a nonempty 1-shell the leaf edges leak trivially."""
    g = rep.graph
    if not g.is_md2:
        raise GraphError("unit structure check needs an md2 graph; peel to the 2-core first")
    out = UnitStructureCheck([], [], [], [], 2 * g.m)
    for c, basis in eigenpairs(rep):
        if abs(c.centroid) <= INNER_LOW:
            continue
        if c.cls == "unit":
            if root_order(c.centroid, 2 * g.m, ROOT_TOL) is None:
                out.non_root_units.append(c.centroid)
            if c.defective:
                out.defective_units.append(c.centroid)
            if any(is_leaky(g, basis[:, j], leak_tol) for j in range(basis.shape[1])):
                out.leaky_units.append(c.centroid)
        else:
            if any(not is_leaky(g, basis[:, j], leak_tol) for j in range(basis.shape[1])):
                out.nonleaky_nonunits.append(c.centroid)
    return out


def lift_eigenvector(g: Graph, core_nodes, v_core: np.ndarray, core: Graph,
                     lam: complex) -> np.ndarray:
    """Extend an eigenvector of the 2-core to ``g`` (``lam != 0``).

    Inward 1-shell edges (towards the core) get 0; an outward edge
    ``j -> i`` gets ``(sum of v[k -> j], k != i) / lam``, filled layer by
    layer moving away from the core.
    """
    if lam == 0:
        raise ValueError("only nonzero eigenvalues lift")
    v = np.zeros(2 * g.m, dtype=complex)
    for e, (a, b) in enumerate(core.oriented_edges):
        v[g.edge_index[(core_nodes[a], core_nodes[b])]] = v_core[e]
    layer = shell_decomposition(g).layer_of()
    depth = {u: math.inf for u in core_nodes}
    depth.update(layer)
    # outward edges j -> i have depth[i] < depth[j]; fill from the core out
    outward = sorted(
        ((j, i) for j, i in g.oriented_edges if depth[i] < depth[j]),
        key=lambda e: -depth[e[0]],
    )
    for j, i in outward:
        s = sum(v[g.edge_index[(k, j)]] for k in g.adjacency[j] if k != i)
        v[g.edge_index[(j, i)]] = s / lam
    return v


# -- block diagonalization --------------------------------------------------


@dataclass
class DiagonalizationBlocks:
    Q: np.ndarray
    R: np.ndarray
    V: np.ndarray  # diagonal entries for Q
    U: np.ndarray  # diagonal entries for R
    residuals: dict[str, float]
    non_simple: list[complex]  # non-unit clusters normalized via a symmetric square root

    def reconstruct(self, P: np.ndarray) -> np.ndarray:
        return (self.Q * self.V) @ self.Q.T @ P + (self.R * self.U) @ self.R.conj().T


class DefectiveError(GraphError):
    def __init__(self, message, defective):
        super().__init__(message)
        self.defective = defective


def assemble_diagonalization(g: Graph, tol: Tolerances | None = None,
                             report: SpectrumReport | None = None) -> DiagonalizationBlocks:
    """``B = Q V Q^T P + R U R^*``.

    ``R`` holds orthonormal eigenvectors of the unit eigenvalues; ``Q`` the
    others, scaled so that ``Q^T P Q = I``. Inside a repeated non-unit
    eigenvalue the block ``M = V^T P V`` is complex symmetric and the basis is
    multiplied by ``M^{-1/2}`` (the principal root, itself symmetric).
    """
    rep = report or compute_spectrum(g, tol)
    if not rep.diagonalizable:
        raise DefectiveError(
            "B is not diagonalizable; defective clusters: "
            + ", ".join(f"{c.centroid:.6g} (AM {c.am}, GM {c.gm})" for c in rep.defective),
            rep.defective,
        )
    B = NBOperator(g).dense.astype(float)
    P = p_matrix(g).astype(float)
    qs, rs, vs, us, non_simple = [], [], [], [], []
    for c, basis in eigenpairs(rep):
        if c.cls == "unit":
            rs.append(basis)
            us += [c.centroid] * basis.shape[1]
        else:
            M = basis.T @ P @ basis
            if basis.shape[1] == 1:
                C = np.array([[1 / np.sqrt(M[0, 0] + 0j)]])
            else:
                non_simple.append(c.centroid)
                C = np.linalg.inv(sla.sqrtm(M))
            qs.append(basis @ C)
            vs += [c.centroid] * basis.shape[1]
    dim = B.shape[0]
    Q = np.hstack(qs) if qs else np.zeros((dim, 0), complex)
    R = np.hstack(rs) if rs else np.zeros((dim, 0), complex)
    blocks = DiagonalizationBlocks(Q, R, np.array(vs, complex), np.array(us, complex), {},
                                   non_simple)
    nb = np.linalg.norm(B, 2)
    r = blocks.residuals
    r["QtPQ"] = float(np.abs(Q.T @ P @ Q - np.eye(Q.shape[1])).max(initial=0))
    r["RstarR"] = float(np.abs(R.conj().T @ R - np.eye(R.shape[1])).max(initial=0))
    r["QtPR"] = float(np.abs(Q.T @ P @ R).max(initial=0))
    r["RstarQ"] = float(np.abs(R.conj().T @ Q).max(initial=0))
    r["reconstruction"] = float(np.linalg.norm(blocks.reconstruct(P) - B, 2) / nb)
    return blocks


def left_eigenvector_residual(g: Graph, v: np.ndarray, lam: complex) -> float:
    """``|| (v^T P) B - lam v^T P ||`` relative to ``||v||``."""
    B = NBOperator(g).dense
    row = v[g.rev]
    return float(np.linalg.norm(row @ B - lam * row) / np.linalg.norm(v))


def complex_laplacian_nullity(g: Graph, eps_rank: float = la.EPS_RANK) -> int:
    """Nullity of ``2I - D - iA``: the Ihara-Bass node factor at ``t = 1/i``.

    Its nullity equals GM(i), i.e. the number of independent collars of
    size 4 when no other motif carries fourth roots.
    """
    A = g.adjacency_matrix()
    D = np.diag(g.degrees)
    return la.numerical_rank(2 * np.eye(g.n) - D - 1j * A, eps_rank).nullity
