"""Risk curves and sample-complexity scaling fits for the two tomography schemes."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from ..estimators import PauliShots, RandomBasisShots, pauli_tomography, random_basis_tomography
from ..linalg import TomolabError, random_density_matrix, trace_distance
from ..measurements import SimulatedState
from ..randomness import RngStream
from .config import ExperimentConfig
from .report import ExperimentReport, verdict

# accepted fitted exponents of n* against d
SCALING_WINDOWS = {"random-basis": (2.5, 3.5), "pauli": (3.4, 4.6)}
# threshold guesses from the semicircle estimate ‖E‖₁ ≈ 0.85 d^{3/2} ‖E‖_F / d
GUESS_CONST = 0.72


class BisectionBudgetError(TomolabError):
    pass


def parallel_map(fn: Callable, items: list, workers: int) -> list:
    """Ordered map; results are gathered by index, so worker count never changes output."""
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _risk_trial(args):
    kind, rho, size, n, seed, path = args
    src = SimulatedState(rho)
    stream = RngStream(seed, path)
    if kind == "random-basis":
        est = random_basis_tomography(src, rho.shape[0], n, stream).raw
    else:
        est = pauli_tomography(src, size, n, stream).raw
    diff = est - rho
    return float(np.linalg.norm(diff) ** 2), trace_distance(est, rho)


def _mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else float("nan")


def risk_cell(kind: str, rho: np.ndarray, size: int, n: int, trials: int, stream: RngStream, workers: int = 1):
    """Frobenius risk and trace-distance risk over independent repetitions.

    ``size`` is d for random-basis and q for Pauli; ``n`` is shots or rounds.
    """
    items = [(kind, rho, size, n, stream.seed, stream.child(t).path) for t in range(trials)]
    out = np.array(parallel_map(_risk_trial, items, workers))
    fro, fro_se = _mean_se(out[:, 0])
    td, _ = _mean_se(out[:, 1])
    return fro, fro_se, td


def random_basis_risk(d: int, n: int, purity: float) -> float:
    return (d * d + d - 1 - purity) / n


def pauli_risk(rho: np.ndarray, s: int) -> float:
    """Σ_i (1 − Tr(P_iρ)²)/(ds) over non-identity Paulis, which equals (d − Tr ρ²)/s."""
    d = rho.shape[0]
    return (d - float(np.trace(rho @ rho).real)) / s


def run_risk_curve(kind: str, cfg: ExperimentConfig, stream: RngStream) -> ExperimentReport:
    rep = ExperimentReport(f"risk-{kind}", {"kind": kind, **cfg.to_json()})
    if kind == "random-basis":
        for di, d in enumerate(cfg.d_list):
            d = int(d)
            for k in range(cfg.states_per_cell):
                rho = random_density_matrix(d, stream.child(0, di, k).generator()).matrix
                purity = float(np.trace(rho @ rho).real)
                prev = None
                for ni, n in enumerate(cfg.n_grid):
                    fro, se, td = risk_cell(kind, rho, d, n, cfg.trials, stream.child(1, di, k, ni), cfg.workers)
                    theory = random_basis_risk(d, n, purity)
                    params = {"d": d, "n": n, "state": k, "trials": cfg.trials}
                    rep.add("risk.random-basis.identity", "risk-random-basis", params, fro, theory, se,
                            verdict(abs(fro - theory) <= cfg.tol_se_risk * se), {"ratio": fro / theory, "td_risk": td})
                    if prev is not None and n == 2 * prev[0]:
                        ratio = fro / prev[1]
                        # delta-method se; the 15% window only binds once trials make it resolvable
                        rse = ratio * np.hypot(se / fro, prev[2] / prev[1])
                        tol = max(0.15 * 0.5, cfg.tol_se_risk * rse)
                        rep.add("risk.random-basis.doubling", "risk-random-basis", {**params, "n": f"{prev[0]}->{n}"},
                                ratio, 0.5, rse, verdict(abs(ratio - 0.5) <= tol))
                    prev = (n, fro, se)
    elif kind == "pauli":
        for qi, q in enumerate(cfg.q_list):
            q = int(q)
            d = 2**q
            states = [("mixed", np.eye(d, dtype=complex) / d)]
            for k in range(cfg.states_per_cell):
                states.append((f"random-{k}", random_density_matrix(d, stream.child(0, qi, k).generator()).matrix))
            for si, s in enumerate(cfg.s_grid):
                for k, (label, rho) in enumerate(states):
                    fro, se, td = risk_cell(kind, rho, q, s, cfg.trials, stream.child(1, qi, si, k), cfg.workers)
                    params = {"q": q, "d": d, "s": s, "state": label, "trials": cfg.trials}
                    exact = pauli_risk(rho, s)
                    rep.add("risk.pauli.bound", "risk-pauli", params, fro, d / s, se,
                            verdict(fro <= d / s + cfg.tol_se_risk * se), {"exact": exact, "td_risk": td})
                    if label == "mixed":
                        rel = abs(fro / exact - 1)
                        rep.add("risk.pauli.mixed-exact", "risk-pauli", params, fro, exact, se,
                                verdict(rel <= cfg.tol_rel), {"exact": exact, "td_risk": td})
    else:
        raise ValueError(f"unknown tomography kind {kind!r}")
    return rep


# -- scaling ------------------------------------------------------------------

@dataclass
class ThresholdSearch:
    n_star: int
    probes: int
    converged: bool
    history: list


def find_threshold(measure: Callable[[int], float], guess: int, eps: float, budget: int, rtol: float) -> ThresholdSearch:
    """Smallest n with measure(n) ≤ eps by geometric bracketing then integer bisection.

    Raises when the bracket cannot be found within ``budget`` probes; if the
    refinement runs out of probes the upper end of the bracket is returned.
    """
    history = []

    def probe(n):
        v = measure(n)
        history.append((n, v))
        return v <= eps

    n = max(1, int(guess))
    if probe(n):
        hi = n
        lo = None
        while lo is None:
            if hi == 1:
                return ThresholdSearch(1, len(history), True, history)
            if len(history) >= budget:
                raise BisectionBudgetError("budget exhausted while bracketing from above")
            cand = max(1, hi // 2)
            if probe(cand):
                hi = cand
            else:
                lo = cand
    else:
        lo, hi = n, None
        while hi is None:
            if len(history) >= budget:
                raise BisectionBudgetError("budget exhausted while bracketing from below")
            cand = lo * 2
            if probe(cand):
                hi = cand
            else:
                lo = cand
    while hi - lo > max(1, rtol * hi):
        if len(history) >= budget:
            return ThresholdSearch(hi, len(history), False, history)
        mid = (lo + hi) // 2
        if probe(mid):
            hi = mid
        else:
            lo = mid
    return ThresholdSearch(hi, len(history), True, history)


def threshold_for(kind: str, d: int, eps: float, cfg: ExperimentConfig, stream: RngStream) -> tuple[ThresholdSearch, int]:
    """Bisect n* for one dimension; returns the search and the sample-count multiplier."""
    rho = random_density_matrix(d, stream.child(0).generator()).matrix
    src = SimulatedState(rho)
    if kind == "random-basis":
        shots = [RandomBasisShots(src, d, stream.child(1, t)) for t in range(cfg.scaling_trials)]
        guess = GUESS_CONST * d**3 / eps**2
        mult = 1
    else:
        q = int(round(math.log2(d)))
        if 2**q != d:
            raise ValueError("Pauli scaling needs d a power of two")
        shots = [PauliShots(src, q, stream.child(1, t)) for t in range(cfg.scaling_trials)]
        guess = GUESS_CONST * d**2 / eps**2
        mult = d * d - 1

    def measure(n):
        return float(np.median([trace_distance(s.estimate(n), rho) for s in shots]))

    return find_threshold(measure, math.ceil(guess), eps, cfg.bisect_probes, cfg.bisect_rtol), mult


def fit_slope(ds, ns) -> dict:
    res = stats.linregress(np.log(ds), np.log(ns))
    dof = len(ds) - 2
    half = stats.t.ppf(0.975, dof) * res.stderr if dof > 0 else float("nan")
    return {"slope": float(res.slope), "stderr": float(res.stderr), "ci_low": float(res.slope - half),
            "ci_high": float(res.slope + half), "intercept": float(res.intercept)}


def run_scaling_fit(kind: str, eps: float, d_list, cfg: ExperimentConfig, stream: RngStream) -> ExperimentReport:
    d_list = [int(d) for d in d_list]
    if len(d_list) < 3:
        raise ValueError("a scaling fit needs at least three dimensions")
    rep = ExperimentReport(f"scaling-{kind}", {"kind": kind, "eps": eps, "d_list": d_list, **cfg.to_json()})
    totals = []
    for di, d in enumerate(d_list):
        search, mult = threshold_for(kind, d, eps, cfg, stream.child(di))
        total = search.n_star * mult
        totals.append(total)
        rep.add(f"scaling.{kind}.threshold", f"scaling-{kind}", {"d": d, "eps": eps, "trials": cfg.scaling_trials},
                float(total), GUESS_CONST * d ** (3 if kind == "random-basis" else 4) / eps**2, float("nan"),
                verdict(search.converged), {"probes": search.probes, "n_star": search.n_star})
    fit = fit_slope(d_list, totals)
    lo, hi = SCALING_WINDOWS[kind]
    rep.add(f"scaling.{kind}.slope", f"scaling-{kind}", {"d": d_list, "eps": eps, "trials": cfg.scaling_trials},
            fit["slope"], (lo + hi) / 2, fit["stderr"], verdict(lo <= fit["slope"] <= hi),
            {"ci_low": fit["ci_low"], "ci_high": fit["ci_high"], "window": [lo, hi]})
    rep.summary = {"fit": fit, "thresholds": dict(zip(map(str, d_list), totals))}
    if cfg.eps_ratio_d:
        d = int(cfg.eps_ratio_d)
        if kind == "pauli" and 2 ** int(round(math.log2(d))) != d:
            return rep
        a, mult = threshold_for(kind, d, eps, cfg, stream.child(100))
        b, _ = threshold_for(kind, d, 2 * eps, cfg, stream.child(101))
        ratio = a.n_star / b.n_star
        rep.add(f"scaling.{kind}.eps-ratio", f"scaling-{kind}", {"d": d, "eps": f"{eps}/{2 * eps}", "trials": cfg.scaling_trials},
                ratio, 4.0, float("nan"), verdict(3 <= ratio <= 5), {"n_eps": a.n_star * mult, "n_2eps": b.n_star * mult})
    return rep

