"""``nbspec`` command line.

Exit codes: 0 success, 1 a verified invariant failed, 2 invalid input or
unmet precondition, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import corpus
from . import linalg as la
from .graph import Graph, GraphError, shell_decomposition, two_core
from .motifs import find_motifs
from .nbmatrix import NBOperator, matrix_power_exact, nb_walk_count
from .perturbation import gershgorin_trace, make_probe
from .serialize import csv_text, document, dumps, write_atomic
from .spectrum import (
    Tolerances,
    compute_spectrum,
    diagonalizability_report,
    layer_kernel_failures,
    leading_report,
    verify_ihara_bass,
)

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
WALKS_MAX_NODES = 8
WALKS_MAX_POWER = 6
IHARA_BASS_TOL = 1e-8
PEEL_TOL = 1e-6


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str
    output: str | None
    tolerances: Tolerances
    seed: int
    which: str | None = None
    attach: tuple[int, ...] = ()


def _emit(cfg: RunConfig, text: str, path: str | None = None) -> None:
    path = path or cfg.output
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


def _summary(rep) -> dict:
    return {
        "am0": rep.am(0), "gm0": rep.gm(0),
        "am_plus1": rep.am(1), "gm_plus1": rep.gm(1),
        "am_minus1": rep.am(-1), "gm_minus1": rep.gm(-1),
    }


def cmd_analyze(cfg: RunConfig, g: Graph) -> int:
    rep = compute_spectrum(g, cfg.tolerances)
    sh = shell_decomposition(g)
    core = two_core(g)
    body = {
        "graph": {"n": g.n, "m": g.m, "labels": list(g.labels)},
        "shell": {
            "s1": sh.s1,
            "n1": sh.n1,
            "layers": [sorted(layer.nodes) for layer in sh.layers],
            "two_core": sorted(sh.two_core_nodes),
        },
        "summary": _summary(rep),
        "spectrum": rep.to_dict(),
        "diagonalizability": diagonalizability_report(g, report=rep).to_dict(),
    }
    if core is None:
        body["motifs"] = []
        body["unit_prediction"] = None
        body["leading"] = None
    else:
        cg, nodes = core
        body["motifs"] = [_relabel(m.to_dict(), nodes) for m in find_motifs(cg)]
        body["unit_prediction"] = rep.prediction.to_dict() if rep.prediction else None
        if body["unit_prediction"]:
            for m in body["unit_prediction"]["motifs"]:
                _relabel(m, nodes)
        body["leading"] = leading_report(g, report=rep).to_dict()
    _emit(cfg, dumps(document("analyze", body)))
    return EXIT_OK


def _relabel(d: dict, nodes) -> dict:
    # motif node ids refer to the 2-core; report them in the graph's ids
    d["nodes"] = [int(nodes[u]) for u in d["nodes"]]
    d["anchors"] = [int(nodes[u]) for u in d["anchors"]]
    return d


def cmd_spectrum(cfg: RunConfig, g: Graph) -> int:
    rep = compute_spectrum(g, cfg.tolerances)
    _emit(cfg, csv_text(("re", "im", "class", "am", "gm"), rep.csv_rows()))
    return EXIT_OK


def _check(name: str, passed: bool, **measured) -> dict:
    return {"name": name, "pass": bool(passed), **measured}


def verify_checks(which: str, g: Graph, tol: Tolerances, seed: int) -> list[dict]:
    if which == "ihara-bass":
        res = verify_ihara_bass(g, n_samples=20, seed=seed)
        return [_check("ihara-bass", res.max_residual <= IHARA_BASS_TOL,
                       max_residual=res.max_residual, samples=len(res.samples),
                       skipped=len(res.skipped), tolerance=IHARA_BASS_TOL)]
    if which == "table1":
        rep = compute_spectrum(g, tol)
        checks = [
            _check(r.key, r.match or r.advisory, predicted=r.predicted, observed=r.observed,
                   advisory=r.advisory)
            for r in rep.ledger
        ]
        checks.append(_check("companion", rep.companion_agrees,
                             max_residual=rep.companion_residual))
        return checks
    if which == "walks":
        if g.n > WALKS_MAX_NODES:
            raise GraphError(f"walk verification is limited to n <= {WALKS_MAX_NODES}")
        op = NBOperator(g)
        checks = []
        for p in range(WALKS_MAX_POWER + 1):
            Bp = matrix_power_exact(op, p)
            bad = sum(
                1
                for a in range(op.dim)
                for b in range(op.dim)
                if nb_walk_count(g, a, b, p) != Bp[b, a]
            )
            checks.append(_check(f"walks.p{p}", bad == 0, mismatches=bad))
        return checks
    if which == "peel":
        sh = shell_decomposition(g)
        full = compute_spectrum(g, tol).eigenvalues
        core = two_core(g)
        if core is None:
            expected = np.zeros(2 * g.m, dtype=complex)
        else:
            inner = compute_spectrum(core[0], tol).eigenvalues
            expected = np.concatenate([inner, np.zeros(2 * sh.s1)])
        ok, worst = la.match_multisets(full, expected, PEEL_TOL)
        bad = layer_kernel_failures(g)
        return [
            _check("peel.spectrum", ok, max_residual=worst, zeros_added=2 * sh.s1),
            _check("peel.layer_kernels", not bad, failures=[[ell, list(e)] for ell, e in bad]),
        ]
    raise ValueError(f"unknown verification {which!r}")


def cmd_verify(cfg: RunConfig, g: Graph) -> int:
    checks = verify_checks(cfg.which, g, cfg.tolerances, cfg.seed)
    passed = all(c["pass"] for c in checks)
    _emit(cfg, dumps(document("verify", {"which": cfg.which, "pass": passed, "checks": checks})))
    return EXIT_OK if passed else EXIT_FAILED


def cmd_perturb(cfg: RunConfig, g: Graph) -> int:
    if not cfg.attach:
        raise GraphError("perturb needs --attach with at least one node")
    probe = make_probe(g, cfg.attach)
    body = probe.to_dict()
    rows = []
    if probe.d > 1:
        trace = gershgorin_trace(probe)
        rows = list(trace.csv_rows())
        body["gershgorin"] = {
            "perron_disk_isolated": trace.near_isolated,
            "y_in_disks": trace.y_in_union,
            "far_t": trace.far_t,
            "far_within_t_squared": trace.far_ok,
        }
    disks = csv_text(("t", "i", "center_re", "center_im", "radius"), rows)
    if cfg.output:
        out = Path(cfg.output)
        disk_path = out.with_name(out.stem + ".disks.csv")
        body["disk_csv"] = disk_path.name
        write_atomic(disk_path, disks)
    else:
        body["disks"] = [list(r) for r in rows]
    _emit(cfg, dumps(document("perturb", body)))
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "perturb": cmd_perturb,
}


def _attach(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("--attach takes comma-separated node ids") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nbspec", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--input", required=True,
                   help="edge-list file, or the name of a bundled graph (e.g. karate)")
    p.add_argument("--output", help="write here instead of stdout")
    p.add_argument("--which", choices=["ihara-bass", "table1", "walks", "peel"],
                   help="invariant suite for verify")
    p.add_argument("--attach", type=_attach, default=(), help="neighbors of the new node, e.g. 0,2")
    p.add_argument("--tol-rank", type=float, default=la.EPS_RANK,
                   help="relative singular-value cutoff for ranks")
    p.add_argument("--tol-cluster", type=float, default=la.DELTA_CLUSTER,
                   help="distance below which eigenvalues share a cluster")
    p.add_argument("--tol-band", type=float, default=1e-6,
                   help="relative band for |lambda| = 1 and |lambda| = rho")
    p.add_argument("--max-dim", type=int, default=la.MAX_DIM,
                   help="largest 2m accepted by the dense eigensolver")
    p.add_argument("--seed", type=int, default=0, help="seed for Ihara-Bass sample points")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify" and not args.which:
            raise ValueError("verify needs --which")
        cfg = RunConfig(
            command=args.command,
            input=args.input,
            output=args.output,
            tolerances=Tolerances(args.tol_rank, args.tol_cluster, args.tol_band, args.max_dim),
            seed=args.seed,
            which=args.which,
            attach=args.attach,
        )
        g = corpus.resolve(args.input)
        return COMMANDS[args.command](cfg, g)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        # numpy's LinAlgError is a ValueError, so this must come first
        print(f"nbspec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as exc:
        print(f"nbspec: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
