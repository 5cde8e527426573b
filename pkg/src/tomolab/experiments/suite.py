"""Subcommand runners: each maps a config and a root stream to a list of reports."""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..estimators import pauli_tomography, random_basis_tomography
from ..linalg import DensityMatrix, matrix_from_json, matrix_to_json, random_density_matrix, trace_distance
from ..measurements import SimulatedState
from ..randomness import RngStream
from . import acceptance
from .checks import (
    check_chi2,
    check_haar_moments,
    check_overlaps,
    check_rank_r,
    check_second_moments,
    check_variance_cap,
)
from .config import ExperimentConfig
from .report import INFO, ExperimentReport, verdict
from .risk import run_risk_curve, run_scaling_fit
from .shadows import run_packing, run_shadow_discrimination, run_shadows
from .tables import run_lower_bound_table, run_property_rows

PROPERTY_INSTANCES = 1000


def run_moments(cfg: ExperimentConfig, stream: RngStream) -> ExperimentReport:
    rep = ExperimentReport("moments", cfg.to_json())
    check_haar_moments(rep, cfg, stream.child(0))
    check_second_moments(rep, cfg, stream.child(1))
    check_rank_r(rep, cfg, stream.child(2))
    return rep


def run_chi2(cfg: ExperimentConfig, stream: RngStream) -> ExperimentReport:
    rep = ExperimentReport("chi2", cfg.to_json())
    check_chi2(rep, cfg, stream)
    return rep


def run_bound_suite(cfg: ExperimentConfig, stream: RngStream) -> ExperimentReport:
    """Every Monte Carlo versus closed-form check, one row per (claim, parameters) cell."""
    rep = ExperimentReport("bounds", cfg.to_json())
    check_haar_moments(rep, cfg, stream.child(0))
    check_chi2(rep, cfg, stream.child(1))
    check_second_moments(rep, cfg, stream.child(2))
    check_rank_r(rep, cfg, stream.child(3))
    check_overlaps(rep, cfg, stream.child(4))
    check_variance_cap(rep, cfg, stream.child(5))
    run_property_rows(rep, PROPERTY_INSTANCES, stream.child(6))
    return rep


def run_tomography(cfg: ExperimentConfig, stream: RngStream, out_dir: Optional[Path] = None) -> ExperimentReport:
    """One estimation run on a state read from ``state_file`` (matrix JSON) or drawn at random."""
    if cfg.state_file:
        rho = DensityMatrix(matrix_from_json(json.loads(Path(cfg.state_file).read_text()))).matrix
    else:
        d = int(cfg.d_list[0])
        rho = random_density_matrix(d, stream.child(0).generator()).matrix
    d = rho.shape[0]
    src = SimulatedState(rho)
    if cfg.method == "random-basis":
        est = random_basis_tomography(src, d, cfg.n, stream.child(1), project=cfg.project)
        theory = (d * d + d - 1 - float(np.trace(rho @ rho).real)) / cfg.n
        params = {"method": cfg.method, "d": d, "n": est.n_used}
    else:
        q = d.bit_length() - 1
        if 2**q != d:
            raise ValueError("Pauli tomography needs d a power of two")
        est = pauli_tomography(src, q, cfg.n, stream.child(1), project=cfg.project)
        theory = d / cfg.n
        params = {"method": cfg.method, "d": d, "n": est.n_used}
    rep = ExperimentReport("tomography", cfg.to_json())
    fro = float(np.linalg.norm(est.raw - rho) ** 2)
    extras = {"trace_distance": trace_distance(est.raw, rho), "trace": float(np.trace(est.raw).real)}
    rep.add("tomography.single-run", f"risk-{cfg.method}", params, fro, theory, float("nan"), INFO, extras)
    doc = {"raw": matrix_to_json(est.raw), "n_used": est.n_used, "truth": matrix_to_json(rho)}
    if est.projected is not None:
        doc["projected"] = matrix_to_json(est.projected.matrix)
    rep.summary = {"estimate": doc}
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "estimate.json").write_text(json.dumps(doc) + "\n")
    return rep


def run_selftest(cfg: ExperimentConfig, stream: RngStream) -> ExperimentReport:
    """Run the acceptance criteria; the slow scaling fit only with ``include_scaling``."""
    rep = ExperimentReport("selftest", cfg.to_json())
    for res in acceptance.run_all(stream.seed, include_scaling=cfg.include_scaling):
        rep.add(f"criterion.{res.index}", f"acceptance-{res.index}", {"title": res.title}, float(res.passed), 1.0,
                float("nan"), verdict(res.passed), {"seconds": res.seconds})
        print(res.line(), flush=True)
    return rep


def _risk(cfg, stream, out_dir):
    return [run_risk_curve(cfg.kind, cfg, stream)]


def _scaling(cfg, stream, out_dir):
    return [run_scaling_fit(cfg.kind, cfg.scaling_eps, cfg.d_list, cfg, stream)]


RUNNERS: dict[str, Callable] = {
    "risk": _risk,
    "scaling": _scaling,
    "bounds": lambda cfg, st, out: [run_bound_suite(cfg, st)],
    "moments": lambda cfg, st, out: [run_moments(cfg, st)],
    "chi2": lambda cfg, st, out: [run_chi2(cfg, st)],
    "packing": lambda cfg, st, out: [run_packing(cfg, st, out)],
    "shadows": lambda cfg, st, out: [run_shadows(cfg, st)],
    "discriminate": lambda cfg, st, out: [
        run_shadow_discrimination(cfg.discriminate_d, cfg.discriminate_m, cfg.discriminate_eps, cfg, st)
    ],
    "tables": lambda cfg, st, out: [run_lower_bound_table(cfg, st)],
    "tomography": lambda cfg, st, out: [run_tomography(cfg, st, out)],
    "selftest": lambda cfg, st, out: [run_selftest(cfg, st)],
}


def run(name: str, cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> list[ExperimentReport]:
    if name not in RUNNERS:
        raise KeyError(f"unknown experiment {name!r}")
    stream = RngStream(int(cfg.seed))
    t0 = time.perf_counter()
    reports = RUNNERS[name](cfg, stream, out_dir)
    elapsed = time.perf_counter() - t0
    for r in reports:
        r.wall_clock = elapsed / len(reports)
    return reports
