"""Numerical lower-bound tables and the discrete information-theory property suite."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .. import infotheory as it
from ..randomness import RngStream
from .config import ExperimentConfig
from .report import INFO, ExperimentReport, verdict


def run_lower_bound_table(cfg: ExperimentConfig, stream: RngStream = None) -> ExperimentReport:
    rep = ExperimentReport("tables", cfg.to_json())
    for d, eps in itertools.product(cfg.table_d, cfg.table_eps):
        d, eps = int(d), float(eps)
        cases = [("full-rank", None, None, None, None)]
        cases += [("full-rank", int(ell), None, None, None) for ell in cfg.table_ell]
        cases += [("full-rank", None, float(lm), None, None) for lm in cfg.table_log_m if lm]
        cases += [("full-rank", int(ell), float(lm), None, None) for ell in cfg.table_ell for lm in cfg.table_log_m if lm]
        if eps < 1 / 8:
            cases += [("rank-r", None, None, int(r), None) for r in cfg.table_r if 3 * int(r) <= d]
            cases += [("rank-r", int(ell), None, int(r), None) for ell in cfg.table_ell for r in cfg.table_r if 3 * int(r) <= d]
        if d % 2 == 0 and d >= 4:
            cases += [("shadow", None, float(lm), None, int(mo)) for mo in cfg.table_observables for lm in cfg.table_log_m]
        for mode, ell, log_m, r, mo in cases:
            lb = it.sample_lower_bound(d, eps, ell, log_m, mode, r, n_observables=mo)
            params = {"d": d, "eps": eps, "mode": mode, "ell": "inf" if ell is None else ell,
                      "log_m": "" if log_m is None else log_m, "r": "" if r is None else r,
                      "M": "" if mo is None else mo}
            rep.add(f"table.{lb.claim}", f"lower-bound-{lb.claim}", params, lb.value, lb.scaling, float("nan"), INFO,
                    {"label": lb.label, "bits_per_copy": lb.per_copy_information, "bits_needed": lb.required_information})
    _scaling_rows(rep, cfg)
    return rep


def _scaling_rows(rep: ExperimentReport, cfg: ExperimentConfig) -> None:
    """Check that each threshold follows its scaling law between two large dimensions."""
    d1, d2 = (int(x) for x in cfg.scaling_pair)
    eps = 0.01
    cases = [
        ("full-rank", dict()),
        ("full-rank", dict(ell=2)),
        ("full-rank", dict(log_m=4.6)),
        ("rank-r", dict(r=2)),
        ("shadow", dict(n_observables=1000)),
    ]
    for mode, kw in cases:
        a = it.sample_lower_bound(d1, eps, mode=mode, **kw)
        b = it.sample_lower_bound(d2, eps, mode=mode, **kw)
        got, want = b.value / a.value, b.scaling / a.scaling
        params = {"d": f"{d1}->{d2}", "eps": eps, "mode": mode, **{k: v for k, v in kw.items()}}
        rep.add(f"table.scaling.{a.claim}", f"lower-bound-{a.claim}", params, got, want, float("nan"),
                verdict(abs(got / want - 1) <= cfg.tol_ratio))
    a = it.sample_lower_bound(d1, eps)
    b = it.sample_lower_bound(d1, eps / 2)
    rep.add("table.scaling.eps", "lower-bound-nonadaptive-arbitrary", {"d": d1, "eps": f"{eps}->{eps / 2}", "mode": "full-rank"},
            b.value / a.value, 4.0, float("nan"), verdict(abs(b.value / a.value - 4) <= 1e-9))


# -- property suite -----------------------------------------------------------------

def _dirichlet(gen, k, sparse=False):
    alpha = 0.3 if sparse else 1.0
    p = gen.dirichlet(np.full(k, alpha))
    return p / p.sum()


def property_suite(instances: int, stream: RngStream, tol: float = 1e-9) -> dict:
    """Count violations of KL ≤ χ²/ln 2, the χ² bound on MI, the chain rule and subadditivity."""
    gen = stream.generator()
    out = {"kl-chi2": 0, "mi-chi2-bound": 0, "chain-rule": 0, "subadditivity": 0, "mi-entropy": 0}
    worst = dict.fromkeys(out, 0.0)
    for _ in range(instances):
        k = int(gen.integers(2, 7))
        p = _dirichlet(gen, k, sparse=bool(gen.integers(2)))
        q = _dirichlet(gen, k)
        gap = it.kl_divergence(p, q) - it.chi2_divergence(p, q) / math.log(2)
        worst["kl-chi2"] = max(worst["kl-chi2"], gap)
        out["kl-chi2"] += gap > tol

        nx, ny = int(gen.integers(2, 6)), int(gen.integers(2, 6))
        j = _dirichlet(gen, nx * ny, sparse=bool(gen.integers(2))).reshape(nx, ny)
        mi = it.mutual_information(j)
        qy = _dirichlet(gen, ny)
        gap = mi - it.mi_chi2_upper_bound(j, qy)
        worst["mi-chi2-bound"] = max(worst["mi-chi2-bound"], gap)
        out["mi-chi2-bound"] += gap > tol
        hx, hy, hxy = it.entropy(j.sum(1)), it.entropy(j.sum(0)), it.entropy(j)
        gap = max(abs(mi - (hx + hy - hxy)), mi - min(hx, hy))
        worst["mi-entropy"] = max(worst["mi-entropy"], gap)
        out["mi-entropy"] += gap > tol

        n1, n2 = int(gen.integers(2, 4)), int(gen.integers(2, 4))
        j3 = _dirichlet(gen, nx * n1 * n2).reshape(nx, n1, n2)
        lhs = it.mutual_information(j3.reshape(nx, -1))
        rhs = it.mutual_information(j3.sum(2)) + it.conditional_mutual_information(j3, given_axis=1)
        worst["chain-rule"] = max(worst["chain-rule"], abs(lhs - rhs))
        out["chain-rule"] += abs(lhs - rhs) > tol

        # y_1..y_3 conditionally independent given x
        px = _dirichlet(gen, nx)
        chans = [np.array([_dirichlet(gen, 2 + i) for _ in range(nx)]) for i in range(3)]
        joint = np.einsum("x,xa,xb,xc->xabc", px, *chans)
        whole = it.mutual_information(joint.reshape(nx, -1))
        parts = sum(it.mutual_information(px[:, None] * c) for c in chans)
        worst["subadditivity"] = max(worst["subadditivity"], whole - parts)
        out["subadditivity"] += whole - parts > tol
    return {"violations": out, "worst_gap": worst, "instances": instances}


def run_property_rows(rep: ExperimentReport, instances: int, stream: RngStream) -> dict:
    res = property_suite(instances, stream)
    for name, count in res["violations"].items():
        rep.add(f"info.{name}", f"info-{name}", {"instances": instances}, float(count), 0.0, float("nan"),
                verdict(count == 0), {"worst_gap": res["worst_gap"][name]})
    return res
