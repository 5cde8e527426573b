"""The ten acceptance criteria as callable checks.

Each ``criterion_k`` returns a :class:`CriterionResult` with a pass flag and the
numbers it was judged on. Parameters default to the stated sizes and
tolerances; ``tests/test_acceptance.py`` and ``tomolab selftest`` both call
these functions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import infotheory as it
from ..estimators import shadow_bernstein_plan
from ..linalg import Projector, random_density_matrix
from ..packing import build_shadow_packing, build_trace_packing, shadow_gap, verify_packing
from ..randomness import RngStream, haar_unitaries, random_povm
from .checks import haar_moment_estimates, tail_check, variance_cap
from .config import ExperimentConfig
from .report import ExperimentReport
from .risk import pauli_risk, random_basis_risk, risk_cell, run_scaling_fit
from .shadows import shadow_success
from .tables import property_suite

DEFAULT_SEED = 20240601


@dataclass
class CriterionResult:
    index: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.index:2d}: {self.title} ({self.seconds:.1f}s)"


def _timed(index: int, title: str, fn: Callable[[], tuple[bool, dict]]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    return CriterionResult(index, title, bool(ok), detail, time.perf_counter() - t0)


def criterion_1(seed: int = DEFAULT_SEED, d_list=(2, 4, 8), samples: int = 100_000, tol: float = 0.01) -> CriterionResult:
    def run():
        detail, ok = {}, True
        for d in d_list:
            t0 = time.perf_counter()
            half = max(1, d // 2)
            worst = {}
            for ci, (r1, r2) in enumerate(sorted({(half, half), (1, half)})):
                mc = haar_moment_estimates(d, r1, r2, samples, RngStream(seed, (1, d, ci)))
                p1, p2 = Projector.coordinate(d, range(r1)), Projector.coordinate(d, range(r2))
                worst[f"second_{r1}_{r2}"] = float(np.abs(mc["second"].mean - it.haar_second_moment_exact(p1, p2)).max())
                worst[f"first_{r2}"] = float(np.abs(mc["first"].mean - it.haar_first_moment_exact(p2)).max())
                worst["pair"] = max(worst.get("pair", 0.0), float(np.abs(mc["pair"].mean).max()))
                worst["mixed_off"] = max(worst.get("mixed_off", 0.0), float(np.abs(mc["mixed_off"].mean).max()))
                worst["mixed_diag"] = max(worst.get("mixed_diag", 0.0),
                                          float(np.abs(mc["mixed_diag"].mean - it.haar_mixed_moment_exact(0, 0, d)).max()))
            secs = time.perf_counter() - t0
            detail[d] = {**worst, "seconds": secs}
            ok &= max(worst.values()) <= tol and secs < 60
        return ok, detail

    return _timed(1, "Haar moment closed forms match Monte Carlo", run)


def criterion_2(seed: int = DEFAULT_SEED, cells=((2, 50), (4, 100), (8, 200)), states: int = 3, reps: int = 200,
                se_mult: float = 3.0) -> CriterionResult:
    def run():
        detail, ok = {}, True
        for d, n in cells:
            for k in range(states):
                rho = random_density_matrix(d, RngStream(seed, (2, d, k)).generator()).matrix
                theory = random_basis_risk(d, n, float(np.trace(rho @ rho).real))
                emp, se, _ = risk_cell("random-basis", rho, d, n, reps, RngStream(seed, (2, d, k, 1)))
                good = abs(emp - theory) <= se_mult * se
                ok &= good
                detail[f"d={d},n={n},state={k}"] = {"empirical": emp, "theory": theory, "se": se, "z": (emp - theory) / se}
        return ok, detail

    return _timed(2, "random-basis risk identity", run)


def criterion_3(seed: int = DEFAULT_SEED, cells=((1, 50), (2, 50), (2, 200)), states: int = 3, reps: int = 200,
                mixed_reps: int = 2000, se_mult: float = 3.0, rel: float = 0.1) -> CriterionResult:
    def run():
        detail, ok = {}, True
        for q, s in cells:
            d = 2**q
            for k in range(states):
                rho = random_density_matrix(d, RngStream(seed, (3, q, s, k)).generator()).matrix
                emp, se, _ = risk_cell("pauli", rho, q, s, reps, RngStream(seed, (3, q, s, k, 1)))
                good = emp <= d / s + se_mult * se
                ok &= good
                detail[f"q={q},s={s},state={k}"] = {"empirical": emp, "bound": d / s, "se": se}
            mixed = np.eye(d, dtype=complex) / d
            emp, se, _ = risk_cell("pauli", mixed, q, s, mixed_reps, RngStream(seed, (3, q, s, 99)))
            exact = pauli_risk(mixed, s)
            good = abs(emp / exact - 1) <= rel
            ok &= good
            detail[f"q={q},s={s},mixed"] = {"empirical": emp, "exact": exact, "relative_error": abs(emp / exact - 1)}
        return ok, detail

    return _timed(3, "Pauli tomography risk", run)


def criterion_4(seed: int = DEFAULT_SEED, d_list=(4, 8), eps_list=(0.3, 0.5), povms: int = 50, samples: int = 10_000,
                se_mult: float = 5.0) -> CriterionResult:
    def run():
        detail, violations = {}, 0
        for d in d_list:
            us = haar_unitaries(d, samples, RngStream(seed, (4, d)))
            for eps in eps_list:
                for ell in sorted({2, d}):
                    bound = it.expected_chi2_bound(eps, d, ell)
                    worst_z, worst_sup, v = -math.inf, 0.0, 0
                    for p in range(povms):
                        m = random_povm(d, ell, RngStream(seed, (4, d, ell, p)))
                        f = it.f_chi2_batch(eps, m, us)
                        mean, se = f.mean(), f.std(ddof=1) / math.sqrt(len(f))
                        v += mean > bound + se_mult * se
                        v += int((f > eps**2 + 1e-12).sum())
                        worst_z = max(worst_z, float((mean - bound) / se))
                        worst_sup = max(worst_sup, float(f.max()))
                    violations += v
                    detail[f"d={d},eps={eps},ell={ell}"] = {"bound": bound, "max_z_over_bound": worst_z,
                                                             "max_f": worst_sup, "eps2": eps**2, "violations": v}
        return violations == 0, detail

    return _timed(4, "chi-square mean bound and sup bound", run)


def criterion_5(seed: int = DEFAULT_SEED, d_list=(2, 4, 8), n_obs: int = 20, shots: int = 100_000,
                se_mult: float = 3.0) -> CriterionResult:
    def run():
        detail, ok = {}, True
        for d in d_list:
            rows = variance_cap(d, shots, n_obs, RngStream(seed, (5, d)))
            z = [(v - b) / se for v, b, se in rows]
            good = all(v <= b + se_mult * se for v, b, se in rows)
            ok &= good
            detail[d] = {"max_z": float(max(z)), "max_ratio": float(max(v / b for v, b, _ in rows))}
        return ok, detail

    return _timed(5, "shadow variance cap", run)


def criterion_6(seed: int = DEFAULT_SEED, d: int = 8, m: int = 50, eps: float = 0.2, trials: int = 30,
                need: int = 20) -> CriterionResult:
    def run():
        n = shadow_bernstein_plan(d, m, eps)
        errs = shadow_success(d, m, eps, n, trials, RngStream(seed, (6,)))
        wins = int((errs <= eps).sum())
        return wins >= need, {"n": n, "successes": wins, "trials": trials, "median_max_error": float(np.median(errs))}

    return _timed(6, "shadow sample-mean end-to-end", run)


def criterion_7(seed: int = DEFAULT_SEED, d: int = 8, eps: float = 0.5, n_trace: int = 50, n_shadow: int = 20,
                gap_eps=(0.2, 0.5, 0.9), tol: float = 1e-9) -> CriterionResult:
    def run():
        tp = build_trace_packing(d, eps, n_trace, rng=RngStream(seed, (7, 0)))
        tv = verify_packing(tp)
        sp = build_shadow_packing(d, n_shadow, rng=RngStream(seed, (7, 1)))
        sv = verify_packing(sp)
        gap_ok, gaps = True, {}
        for e in gap_eps:
            g, diag = shadow_gap(sp.unitaries, e)
            off = g[~np.eye(sp.size, dtype=bool)]
            dev = float(np.abs(diag - (0.5 + e / 2)).max())
            gap_ok &= dev <= tol and off.max() <= 0.5 + e / 6 + tol
            gaps[e] = {"diag_dev": dev, "max_off": float(off.max()), "cap": 0.5 + e / 6}
        ok = (not tp.exhausted and tv["ok"] and tp.size == n_trace and not sp.exhausted and sv["ok"]
              and sp.size == n_shadow and gap_ok)
        return ok, {"trace": {"draws": tp.n_draws, "min_distance": tv["min_distance"], "pairs": tv["pairs"]},
                    "shadow": {"draws": sp.n_draws, "max_overlap": sv["max_overlap"]}, "gap": gaps}

    return _timed(7, "packing construction and verification", run)


def criterion_8(seed: int = DEFAULT_SEED, d: int = 16, r: int = 8, t: float = 0.5, trials: int = 10_000,
                se_mult: float = 5.0) -> CriterionResult:
    def run():
        rep = ExperimentReport("tmp", {})
        ok = tail_check(rep, d, r, r, t, trials, RngStream(seed, (8,)), se_mult)
        return ok, {row.claim_id: {"frequency": row.empirical, "bound": row.theory} for row in rep.rows}

    return _timed(8, "overlap concentration tails", run)


def criterion_9(seed: int = DEFAULT_SEED, eps: float = 0.3, rb_dims=(2, 4, 8, 16), pauli_dims=(2, 4, 8)) -> CriterionResult:
    def run():
        cfg = ExperimentConfig(seed=seed, eps_ratio_d=None)
        rb = run_scaling_fit("random-basis", eps, rb_dims, cfg, RngStream(seed, (9, 0)))
        pa = run_scaling_fit("pauli", eps, pauli_dims, cfg, RngStream(seed, (9, 1)))
        s_rb, s_pa = rb.summary["fit"]["slope"], pa.summary["fit"]["slope"]
        ok = 2.5 <= s_rb <= 3.5 and 3.4 <= s_pa <= 4.6
        return ok, {"random_basis": rb.summary, "pauli": pa.summary}

    return _timed(9, "sample-complexity scaling fits", run)


def criterion_10(seed: int = DEFAULT_SEED, instances: int = 1000) -> CriterionResult:
    def run():
        res = property_suite(instances, RngStream(seed, (10,)))
        return sum(res["violations"].values()) == 0, res

    return _timed(10, "information-theory property suite", run)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_all(seed: int = DEFAULT_SEED, include_scaling: bool = True) -> list[CriterionResult]:
    out = []
    for fn in CRITERIA:
        if fn is criterion_9 and not include_scaling:
            continue
        out.append(fn(seed))
    return out
