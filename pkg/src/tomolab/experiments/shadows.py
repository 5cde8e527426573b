"""Shadow-estimation end-to-end runs, packing construction and the discrimination demo."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .. import infotheory as it
from ..estimators import (
    collect_shadow,
    observable_errors,
    shadow_bernstein_plan,
    shadow_sample_mean,
    shadow_sample_plan,
    two_outcome_plan,
    two_outcome_shadow_tomography,
)
from ..linalg import random_density_matrix
from ..measurements import SimulatedState
from ..packing import (
    build_chi2_constrained_packing,
    build_rank_r_packing,
    build_shadow_packing,
    build_trace_packing,
    shadow_gap,
    shadow_instance,
    verify_packing,
)
from ..randomness import RngStream, haar_unitaries, random_observables, random_povm
from .config import ExperimentConfig
from .report import FAIL, INFO, VACUOUS, ExperimentReport, verdict
from .risk import parallel_map


def _shadow_trial(args):
    d, m, n, seed, path = args
    st = RngStream(seed, path)
    rho = random_density_matrix(d, st.child(0).generator()).matrix
    obs = random_observables(d, m, st.child(1))
    sketch = collect_shadow(SimulatedState(rho), d, n, st.child(2))
    return float(observable_errors(shadow_sample_mean(sketch, obs), obs, rho).max())


def _two_outcome_trial(args):
    d, m, eps, seed, path = args
    st = RngStream(seed, path)
    rho = random_density_matrix(d, st.child(0).generator()).matrix
    obs = random_observables(d, m, st.child(1))
    est = two_outcome_shadow_tomography(SimulatedState(rho), obs, eps, st.child(2))
    return float(observable_errors(est, obs, rho).max())


def shadow_success(d: int, m: int, eps: float, n: int, trials: int, stream: RngStream, workers: int = 1) -> np.ndarray:
    """Max-over-observables error of the sample-mean estimator, one entry per trial."""
    items = [(d, m, n, stream.seed, stream.child(t).path) for t in range(trials)]
    return np.array(parallel_map(_shadow_trial, items, workers))


def two_outcome_success(d: int, m: int, eps: float, trials: int, stream: RngStream, workers: int = 1) -> np.ndarray:
    items = [(d, m, eps, stream.seed, stream.child(t).path) for t in range(trials)]
    return np.array(parallel_map(_two_outcome_trial, items, workers))


def run_shadows(cfg: ExperimentConfig, stream: RngStream) -> ExperimentReport:
    rep = ExperimentReport("shadows", cfg.to_json())
    d, m, eps, trials = cfg.shadow_d, cfg.n_observables, cfg.shadow_eps, cfg.shadow_trials
    need = math.ceil(2 * trials / 3)
    plans = [("bernstein", cfg.shadow_n or shadow_bernstein_plan(d, m, eps)), ("const12", shadow_sample_plan(d, m, eps))]
    for pi, (label, n) in enumerate(plans):
        errs = shadow_success(d, m, eps, n, trials, stream.child(pi), cfg.workers)
        wins = int((errs <= eps).sum())
        rep.add("shadow.sample-mean", "shadow-sample-mean", {"d": d, "M": m, "eps": eps, "n": n, "plan": label, "trials": trials},
                wins, need, float("nan"), verdict(wins >= need), {"median_max_error": float(np.median(errs))})
    d2, m2 = cfg.two_outcome_d, cfg.two_outcome_m
    errs = two_outcome_success(d2, m2, eps, trials, stream.child(10), cfg.workers)
    wins = int((errs <= eps).sum())
    rep.add("shadow.two-outcome", "shadow-two-outcome",
            {"d": d2, "M": m2, "eps": eps, "n": m2 * two_outcome_plan(m2, eps), "plan": "c0=3ln(3M)", "trials": trials},
            wins, need, float("nan"), verdict(wins >= need), {"median_max_error": float(np.median(errs))})
    return rep


# -- packings --------------------------------------------------------------------

def _packing_row(rep, claim, anchor, res, params, extras=None):
    ver = verify_packing(res, extras.pop("povms", None) if extras else None)
    ok = ver["ok"] and not res.exhausted
    extras = {**(extras or {}), "draws": res.n_draws, "rejected": res.n_rejected, "exhausted": res.exhausted}
    key = "min_distance" if "min_distance" in ver else "max_overlap"
    rep.add(claim, anchor, params, ver[key], res.constraints[0].threshold, float("nan"), verdict(ok), extras)
    return ver


def run_packing(cfg: ExperimentConfig, stream: RngStream, out_dir: Optional[Path] = None) -> ExperimentReport:
    rep = ExperimentReport("packing", cfg.to_json())
    d, eps, n = cfg.packing_d, cfg.packing_eps, cfg.packing_n
    blobs = {}

    res = build_trace_packing(d, eps, n, cfg.max_draws, stream.child(0))
    _packing_row(rep, "packing.trace", "packing-trace", res, {"d": d, "eps": eps, "N": n})
    blobs["trace"] = res

    # acceptance rate against the union bound 1 − N e^{−d²/32}
    probe_n = 3
    rate_runs = [build_trace_packing(d, eps, probe_n, None, stream.child(1, k)) for k in range(200)]
    draws = sum(r.n_draws for r in rate_runs)
    accepted = sum(r.size - 1 for r in rate_runs)
    rate = accepted / max(1, draws - len(rate_runs))
    floor = 1 - probe_n * math.exp(-d * d / 32)
    se = math.sqrt(max(floor * (1 - floor), 1e-12) / max(1, draws - len(rate_runs)))
    rep.add("packing.acceptance-rate", "packing-rate", {"d": d, "eps": eps, "N": probe_n}, rate, floor, se,
            verdict(rate >= floor - cfg.tol_se * se))

    res = build_shadow_packing(d, cfg.shadow_packing_n, cfg.max_draws, stream.child(2))
    _packing_row(rep, "packing.shadow", "packing-shadow", res, {"d": d, "eps": "", "N": cfg.shadow_packing_n})
    blobs["shadow"] = res
    if res.size:
        g, diag = shadow_gap(res.unitaries, eps)
        off = g[~np.eye(res.size, dtype=bool)]
        rep.add("packing.shadow-gap-diagonal", "shadow-gap", {"d": d, "eps": eps, "N": res.size},
                float(np.abs(diag - (0.5 + eps / 2)).max()), 0.0, float("nan"),
                verdict(np.abs(diag - (0.5 + eps / 2)).max() <= cfg.tol_exact))
        rep.add("packing.shadow-gap-offdiagonal", "shadow-gap", {"d": d, "eps": eps, "N": res.size},
                float(off.max()) if off.size else 0.0, 0.5 + eps / 6, float("nan"),
                verdict(off.size == 0 or off.max() <= 0.5 + eps / 6 + cfg.tol_exact))

    rd, rr, rnu, rn = cfg.rank_r_packing
    res = build_rank_r_packing(int(rd), int(rr), float(rnu), int(rn), cfg.max_draws, stream.child(3))
    _packing_row(rep, "packing.rank-r", "packing-rank-r", res, {"d": int(rd), "eps": "", "N": int(rn), "r": int(rr), "nu": rnu})
    blobs["rank_r"] = res

    mset = cfg.chi2_packing_m
    povms = [random_povm(d, 2, stream.child(4, k)) for k in range(mset)]
    default_tau = it.Chi2TailParams(eps, d).threshold(mset)
    res = build_chi2_constrained_packing(d, eps, cfg.chi2_packing_n, povms, None, cfg.max_draws, stream.child(5))
    ver = verify_packing(res, povms)
    cap = res.constraints[1]
    rep.add("packing.chi2-default-cap", "packing-chi2", {"d": d, "eps": eps, "N": cfg.chi2_packing_n, "m": mset},
            ver["max_chi2"], default_tau, float("nan"), VACUOUS if cap.vacuous else verdict(ver["ok"]),
            {"cap_rejections": cap.rejections, "draws": res.n_draws})
    # empirical 90th percentile cap: acceptance ≈ 0.9^m times the trace-only rate
    us = haar_unitaries(d, 4000, stream.child(6))
    fs = np.stack([it.f_chi2_batch(eps, p, us) for p in povms])
    tau90 = float(np.quantile(fs, 0.9))
    joint = float(np.mean((fs <= tau90).all(axis=0)))
    res = build_chi2_constrained_packing(d, eps, cfg.chi2_packing_n, povms, tau90, cfg.max_draws, stream.child(7))
    ver = verify_packing(res, povms)
    trace_rate = rate if rate > 0 else 1.0
    observed = res.size / res.n_draws
    predicted = 0.9**mset * trace_rate
    se = math.sqrt(predicted * (1 - predicted) / res.n_draws)
    rep.add("packing.chi2-q90-cap", "packing-chi2", {"d": d, "eps": eps, "N": cfg.chi2_packing_n, "m": mset},
            observed, predicted, se, verdict(ver["ok"] and observed >= predicted - cfg.tol_se * se - 0.05),
            {"tau": tau90, "joint_pass_rate": joint, "draws": res.n_draws})
    blobs["chi2"] = res

    # saturation in d = 2: the packing number is small, so the budget runs out
    res = build_trace_packing(2, 0.9, 200, 20_000, stream.child(8))
    rep.add("packing.saturation", "packing-trace", {"d": 2, "eps": 0.9, "N": 200}, float(res.size), 200.0,
            float("nan"), INFO, {"exhausted": res.exhausted, "draws": res.n_draws})

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, r in blobs.items():
            (out / f"packing_{name}.json").write_text(json.dumps(r.to_json()) + "\n")
    return rep


# -- discrimination ------------------------------------------------------------------

def _discriminate_trial(args):
    unitaries, eps, n, seed, path = args
    st = RngStream(seed, path)
    gen = st.child(0).generator()
    obs, states = shadow_instance(unitaries, eps)
    m = len(obs)
    x = int(gen.integers(m))
    if n == 0:
        return int(gen.integers(m)) == x
    sketch = collect_shadow(SimulatedState(states[x]), unitaries.shape[-1], n, st.child(1))
    est = shadow_sample_mean(sketch, obs)
    profiles = np.einsum("iab,jba->ij", states, obs).real
    guess = int(np.argmin(np.abs(profiles - est).max(axis=1)))
    return guess == x


def discrimination_plan(d: int, m: int, eps: float) -> int:
    """Shots for ε/12-accurate estimates: 12 d ln M / (ε/12)²."""
    return shadow_sample_plan(d, m, eps / 12)


def run_shadow_discrimination(d: int, m_states: int, eps: float, cfg: ExperimentConfig, stream: RngStream) -> ExperimentReport:
    rep = ExperimentReport("discriminate", {"d": d, "m_states": m_states, "eps": eps, **cfg.to_json()})
    res = build_shadow_packing(d, m_states, cfg.max_draws, stream.child(0))
    if res.exhausted:
        rep.add("discriminate.packing", "packing-shadow", {"d": d, "M": m_states, "eps": eps, "n": ""},
                float(res.size), float(m_states), float("nan"), FAIL, {"draws": res.n_draws})
        return rep
    g, diag = shadow_gap(res.unitaries, eps)
    off = g[~np.eye(m_states, dtype=bool)]
    rep.add("discriminate.gap-diagonal", "shadow-gap", {"d": d, "M": m_states, "eps": eps, "n": ""},
            float(np.abs(diag - (0.5 + eps / 2)).max()), 0.0, float("nan"),
            verdict(np.abs(diag - (0.5 + eps / 2)).max() <= cfg.tol_exact))
    rep.add("discriminate.gap-offdiagonal", "shadow-gap", {"d": d, "M": m_states, "eps": eps, "n": ""},
            float(off.max()), 0.5 + eps / 6, float("nan"), verdict(off.max() <= 0.5 + eps / 6 + cfg.tol_exact))
    planned = discrimination_plan(d, m_states, eps)
    ns = cfg.discriminate_n if cfg.discriminate_n is not None else [0, planned]
    for ni, n in enumerate(ns):
        n = int(n)
        items = [(res.unitaries, eps, n, stream.seed, stream.child(1, ni, t).path) for t in range(cfg.discriminate_trials)]
        acc = float(np.mean(parallel_map(_discriminate_trial, items, cfg.workers)))
        params = {"d": d, "M": m_states, "eps": eps, "n": n}
        if n == 0:
            se = math.sqrt((1 / m_states) * (1 - 1 / m_states) / cfg.discriminate_trials)
            rep.add("discriminate.chance", "shadow-discrimination", params, acc, 1 / m_states, se, INFO)
        elif n >= planned:
            rep.add("discriminate.accuracy", "shadow-discrimination", params, acc, 0.9, float("nan"), verdict(acc >= 0.9))
        else:
            rep.add("discriminate.accuracy", "shadow-discrimination", params, acc, float("nan"), float("nan"), INFO)
    return rep
