"""Monte Carlo versus closed-form checks for the moment and χ² identities.

Each function appends rows to a report and never raises on a failed check:
a violated inequality is a ``fail`` verdict, not an exception.
"""

from __future__ import annotations

import math

import numpy as np

from .. import infotheory as it
from ..ensembles import rank_r_matrix
from ..estimators import collect_shadow, shadow_single_values
from ..linalg import Projector, dagger, random_density_matrix
from ..measurements import SimulatedState
from ..packing import overlap_samples, overlap_tail_bounds
from ..randomness import RngStream, haar_unitaries, random_observables, random_povm
from .config import ExperimentConfig
from .report import VACUOUS, ExperimentReport, verdict

CHUNK = 10_000


def _chunks(total: int, size: int = CHUNK):
    start = 0
    k = 0
    while start < total:
        yield k, min(size, total - start)
        start += size
        k += 1


class _Moments:
    """Streaming mean and per-entry standard error of complex arrays."""

    def __init__(self):
        self.n = 0
        self.s = 0.0
        self.s2 = 0.0

    def add(self, total, total_sq, count):
        self.s = self.s + total
        self.s2 = self.s2 + total_sq
        self.n += count

    @property
    def mean(self):
        return self.s / self.n

    @property
    def se(self):
        var = np.clip(self.s2 / self.n - np.abs(self.mean) ** 2, 0, None)
        return np.sqrt(var / self.n)


def haar_moment_estimates(d: int, r1: int, r2: int, samples: int, stream: RngStream) -> dict:
    """Monte Carlo first, second and odd Haar moments for coordinate projectors."""
    first, second, pair, mixed_d, mixed_o = (_Moments() for _ in range(5))
    j = 1 if d > 1 else 0
    for k, size in _chunks(samples):
        u = haar_unitaries(d, size, stream.child(k))
        a = u[:, :, :r1] @ dagger(u[:, :, :r1])
        b = u[:, :, :r2] @ dagger(u[:, :, :r2])
        first.add(b.sum(0), (np.abs(b) ** 2).sum(0), size)
        af, bf = a.reshape(size, -1), b.reshape(size, -1)
        tot = (af.T @ bf).reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
        sq = ((np.abs(af) ** 2).T @ (np.abs(bf) ** 2)).reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
        second.add(tot, sq, size)
        p = np.einsum("ta,tb->tab", u[:, :, 0], u[:, :, j]).reshape(size, -1)
        pair.add(p.sum(0), (np.abs(p) ** 2).sum(0), size)
        md = np.einsum("ta,tb->tab", u[:, :, 0], u[:, :, 0].conj())
        mo = np.einsum("ta,tb->tab", u[:, :, 0], u[:, :, j].conj())
        mixed_d.add(md.sum(0), (np.abs(md) ** 2).sum(0), size)
        mixed_o.add(mo.sum(0), (np.abs(mo) ** 2).sum(0), size)
    return {"first": first, "second": second, "pair": pair, "mixed_diag": mixed_d, "mixed_off": mixed_o, "j": j}


def check_haar_moments(rep: ExperimentReport, cfg: ExperimentConfig, stream: RngStream) -> None:
    tol = cfg.tol_abs
    for di, d in enumerate(cfg.d_list):
        d = int(d)
        half = max(1, d // 2)
        for ci, (r1, r2) in enumerate(sorted({(half, half), (1, half)})):
            mc = haar_moment_estimates(d, r1, r2, cfg.mc_samples, stream.child(di, ci))
            p1, p2 = Projector.coordinate(d, range(r1)), Projector.coordinate(d, range(r2))
            params = {"d": d, "r1": r1, "r2": r2, "samples": cfg.mc_samples}
            if ci == 0:
                err = np.abs(mc["first"].mean - it.haar_first_moment_exact(p2)).max()
                rep.add("haar.first-moment", "haar-first-moment", {**params, "r1": r2}, float(err), 0.0,
                        float(mc["first"].se.max()), verdict(err <= tol), {"tolerance": tol})
                odd = [
                    ("haar.pair-moment", np.abs(mc["pair"].mean - it.haar_pair_moment_exact(0, mc["j"], d)).max(), mc["pair"]),
                    ("haar.mixed-moment-diag", np.abs(mc["mixed_diag"].mean - it.haar_mixed_moment_exact(0, 0, d)).max(), mc["mixed_diag"]),
                    ("haar.mixed-moment-off", np.abs(mc["mixed_off"].mean - it.haar_mixed_moment_exact(0, mc["j"], d)).max(), mc["mixed_off"]),
                ]
                for cid, e, m in odd:
                    rep.add(cid, "haar-odd-moments", {"d": d, "i": 0, "j": mc["j"], "samples": cfg.mc_samples},
                            float(e), 0.0, float(m.se.max()), verdict(e <= tol), {"tolerance": tol})
            err = np.abs(mc["second"].mean - it.haar_second_moment_exact(p1, p2)).max()
            rep.add("haar.second-moment", "haar-second-moment", params, float(err), 0.0,
                    float(mc["second"].se.max()), verdict(err <= tol), {"tolerance": tol})


def _ell_values(cfg: ExperimentConfig, d: int) -> list[int]:
    out = []
    for ell in cfg.ell_list:
        v = d if ell == "d" else int(ell)
        if v not in out:
            out.append(v)
    return out


def check_chi2(rep: ExperimentReport, cfg: ExperimentConfig, stream: RngStream, d_list=None) -> None:
    """Haar mean of the χ² functional against its bound, its exact value and the sup bound."""
    d_list = [d for d in (d_list or cfg.d_list) if int(d) % 2 == 0]
    for di, d in enumerate(d_list):
        d = int(d)
        us = haar_unitaries(d, cfg.chi2_samples, stream.child(di, 0))
        for ei, eps in enumerate(cfg.eps_list):
            for ell in _ell_values(cfg, d):
                bound = it.expected_chi2_bound(eps, d, ell)
                worst = 0.0
                all_f = []
                for p in range(cfg.povms_per_cell):
                    m = random_povm(d, ell, stream.child(di, 1, ell, p))
                    f = it.f_chi2_batch(eps, m, us)
                    mean, se = float(f.mean()), float(f.std(ddof=1) / math.sqrt(len(f)))
                    exact = it.f_chi2_mean_exact(eps, m)
                    params = {"d": d, "eps": eps, "ell": ell, "povm": p, "samples": len(f)}
                    rep.add("chi2.mean-bound", "chi2-mean-bound", params, mean, bound, se,
                            verdict(mean <= bound + cfg.tol_se * se), {"exact_mean": exact})
                    rep.add("chi2.exact-mean", "chi2-exact-mean", params, mean, exact, se,
                            verdict(abs(mean - exact) <= cfg.tol_se * se))
                    worst = max(worst, float(f.max()))
                    all_f.append(f)
                params = {"d": d, "eps": eps, "ell": ell, "povm": "all", "samples": cfg.chi2_samples}
                rep.add("chi2.sup-bound", "chi2-sup-bound", params, worst, eps**2, float("nan"),
                        verdict(worst <= eps**2 + 1e-12))
                tail = it.Chi2TailParams(eps, d, None)
                thr = tail.threshold(1)
                freq = float(np.mean(np.concatenate(all_f) > thr))
                v = VACUOUS if tail.is_vacuous(1) else verdict(freq <= 1 / 3)
                rep.add("chi2.tail", "chi2-tail", params, freq, tail.tail(thr - tail.alpha), float("nan"), v,
                        {"threshold": thr, "q90": float(np.quantile(np.concatenate(all_f), 0.9))})


def _projector_overlaps(us: np.ndarray, ms: np.ndarray) -> np.ndarray:
    """Tr(M_k U Q U†) for each unitary (rows) and operator (columns)."""
    d = us.shape[-1]
    half = us[:, :, : d // 2]
    proj = (half @ dagger(half)).reshape(len(us), -1)
    return (proj @ np.swapaxes(ms, -1, -2).reshape(len(ms), -1).T).real


def check_second_moments(rep: ExperimentReport, cfg: ExperimentConfig, stream: RngStream) -> None:
    """E Tr(Mρ)² against the exact identity and its upper bound, for 𝟙/2 and random rank-1 M."""
    for di, d in enumerate(cfg.d_list):
        d = int(d)
        if d % 2:
            continue
        gen = stream.child(di, 0).generator()
        phis = haar_unitaries(d, cfg.observables_per_d, gen)[:, :, 0]
        ms = np.concatenate([np.eye(d)[None] / 2, np.einsum("ma,mb->mab", phis, phis.conj())])
        sums = np.zeros((len(cfg.eps_list), len(ms)))
        sq = np.zeros_like(sums)
        for k, size in _chunks(cfg.mc_samples):
            ov = _projector_overlaps(haar_unitaries(d, size, stream.child(di, 1, k)), ms)
            w = np.einsum("maa->m", ms).real / d
            for ei, eps in enumerate(cfg.eps_list):
                x = ((2 * eps / d) * ov + (1 - eps) * w) ** 2
                sums[ei] += x.sum(0)
                sq[ei] += (x**2).sum(0)
        n = cfg.mc_samples
        for ei, eps in enumerate(cfg.eps_list):
            for mi, m in enumerate(ms):
                mean = sums[ei, mi] / n
                se = math.sqrt(max(sq[ei, mi] / n - mean**2, 0) / n)
                bound = it.second_moment_bound(m, eps, d)
                exact = it.second_moment_exact(m, eps, d)
                label = "half-identity" if mi == 0 else f"rank1-{mi - 1}"
                params = {"d": d, "eps": eps, "M": label, "samples": n}
                rep.add("moment.second-bound", "second-moment-bound", params, mean, bound, se,
                        verdict(mean <= bound + cfg.tol_se * se), {"exact": exact})
                ok = abs(mean - exact) <= cfg.tol_se * se + 1e-12
                rep.add("moment.second-exact", "second-moment-bound", params, mean, exact, se, verdict(ok))


def check_rank_r(rep: ExperimentReport, cfg: ExperimentConfig, stream: RngStream) -> None:
    for ci, (d, r, nu) in enumerate(cfg.rank_r_cells):
        d, r, nu = int(d), int(r), float(nu)
        k = d - r
        ms = random_observables(d, cfg.observables_per_d, stream.child(ci, 0))
        s1 = np.zeros(len(ms))
        s2 = np.zeros(len(ms))
        s4 = np.zeros(len(ms))
        for b, size in _chunks(cfg.mc_samples):
            us = np.tile(np.eye(d, dtype=complex), (size, 1, 1))
            us[:, :k, :k] = haar_unitaries(k, size, stream.child(ci, 1, b))
            sig = rank_r_matrix(nu, r, us).reshape(size, -1)
            x = (sig @ np.swapaxes(ms, -1, -2).reshape(len(ms), -1).T).real
            s1 += x.sum(0)
            s2 += (x**2).sum(0)
            s4 += (x**4).sum(0)
        n = cfg.mc_samples
        for mi, m in enumerate(ms):
            params = {"d": d, "r": r, "nu": nu, "M": mi, "samples": n}
            mean = s1[mi] / n
            se1 = math.sqrt(max(s2[mi] / n - mean**2, 0) / n)
            w = it.rank_r_first_moment(m, nu, r, d)
            rep.add("rank-r.first-moment", "rank-r-first-moment", params, mean, w, se1,
                    verdict(abs(mean - w) <= cfg.tol_se * se1 + 1e-12))
            m2 = s2[mi] / n
            se2 = math.sqrt(max(s4[mi] / n - m2**2, 0) / n)
            bound = it.rank_r_second_moment_bound(m, nu, r, d)
            exact = it.rank_r_second_moment_exact(m, nu, r, d)
            rep.add("rank-r.second-bound", "rank-r-second-moment", params, m2, bound, se2,
                    verdict(m2 <= bound + cfg.tol_se * se2), {"exact": exact})
            rep.add("rank-r.second-exact", "rank-r-second-moment", params, m2, exact, se2,
                    verdict(abs(m2 - exact) <= cfg.tol_se * se2 + 1e-12))


def check_overlaps(rep: ExperimentReport, cfg: ExperimentConfig, stream: RngStream) -> None:
    d, r = 8, 4
    x = overlap_samples(d, r, r, cfg.tail_trials, stream.child(0))
    mean, se = float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))
    rep.add("overlap.mean", "overlap-mean", {"d": d, "r1": r, "r2": r, "t": "", "trials": len(x)},
            mean, r * r / d, se, verdict(abs(mean - r * r / d) <= cfg.tol_se * se))
    tail_check(rep, cfg.tail_d, cfg.tail_rank, cfg.tail_rank, cfg.tail_t, cfg.tail_trials, stream.child(1), cfg.tol_se)


def tail_check(rep, d, r1, r2, t, trials, stream, se_mult) -> bool:
    x = overlap_samples(d, r1, r2, trials, stream)
    centre = r1 * r2 / d
    lo_f = float(np.mean(x <= (1 - t) * centre))
    hi_f = float(np.mean(x >= (1 + t) * centre))
    lo_b, hi_b = overlap_tail_bounds(r1, r2, t)
    ok = True
    for cid, f, b in (("overlap.lower-tail", lo_f, lo_b), ("overlap.upper-tail", hi_f, hi_b)):
        se = math.sqrt(b * (1 - b) / trials)
        good = f <= b + se_mult * se
        ok &= good
        rep.add(cid, "overlap-tails", {"d": d, "r1": r1, "r2": r2, "t": t, "trials": trials}, f, b, se, verdict(good))
    return ok


def variance_cap(d: int, shots: int, n_obs: int, stream: RngStream) -> list[tuple[float, float, float]]:
    """(empirical Var Tr(Xρ̂), 3 Tr X², standard error) for random signed X."""
    rho = random_density_matrix(d, stream.child(0).generator())
    sketch = collect_shadow(SimulatedState(rho), d, shots, stream.child(1))
    xs = random_observables(d, n_obs, stream.child(2), signed=True)
    vals = shadow_single_values(sketch, xs, signed=True)
    out = []
    for i, x in enumerate(xs):
        v = vals[:, i]
        c = v - v.mean()
        var = float((c**2).sum() / (len(v) - 1))
        m4 = float((c**4).mean())
        se = math.sqrt(max(m4 - var**2, 0) / len(v))
        out.append((var, 3 * float(np.trace(x @ x).real), se))
    return out


def check_variance_cap(rep: ExperimentReport, cfg: ExperimentConfig, stream: RngStream) -> None:
    for di, d in enumerate(cfg.d_list):
        d = int(d)
        for i, (var, bound, se) in enumerate(variance_cap(d, cfg.shadow_shots, cfg.observables_per_d, stream.child(di))):
            rep.add("shadow.variance-cap", "shadow-variance-cap", {"d": d, "X": i, "shots": cfg.shadow_shots},
                    var, bound, se, verdict(var <= bound + cfg.tol_se_risk * se))

