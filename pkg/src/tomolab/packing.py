"""Rejection-sampling packings of the hard ensembles and overlap concentration.

Existence arguments become greedy samplers: Haar candidates are drawn in
fixed-size batches from derived streams and accepted one by one against the
committed prefix, so the output depends only on the seed. Every result is
re-verified pairwise before it is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .ensembles import perturbed_matrix, rank_r_matrix
from .infotheory import Chi2TailParams, f_chi2_batch
from .linalg import DimensionMismatch, Projector, TomolabError, as_matrix, dagger, matrix_to_json
from .measurements import Povm
from .randomness import RngLike, RngStream, as_stream, haar_unitaries

DRAW_BATCH = 64
DRAWS_PER_TARGET = 10_000
MAX_PACKING = 1000


@dataclass
class Constraint:
    """One acceptance rule and how often it fired."""

    name: str
    threshold: float
    rejections: int = 0
    vacuous: bool = False
    note: str = ""

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "threshold": self.threshold,
            "rejections": self.rejections,
            "vacuous": self.vacuous,
            "note": self.note,
        }


@dataclass
class PackingResult:
    unitaries: np.ndarray
    eps: float
    d: int
    n_target: int
    n_draws: int
    n_rejected: int
    exhausted: bool
    constraints: list[Constraint] = field(default_factory=list)
    kind: str = "trace"
    params: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.unitaries)

    @property
    def acceptance_rate(self) -> float:
        return self.size / self.n_draws if self.n_draws else 0.0

    @property
    def dominant_constraint(self) -> Optional[str]:
        fired = [c for c in self.constraints if c.rejections]
        if not fired:
            return None
        return max(fired, key=lambda c: c.rejections).name

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "eps": self.eps,
            "n_target": self.n_target,
            "size": self.size,
            "n_draws": self.n_draws,
            "n_rejected": self.n_rejected,
            "exhausted": self.exhausted,
            "dominant_constraint": self.dominant_constraint,
            "constraints": [c.to_json() for c in self.constraints],
            "params": self.params,
        }

    def to_json(self) -> dict:
        out = self.summary()
        out["unitaries"] = [matrix_to_json(u) for u in self.unitaries]
        return out


def projector_overlap(p, u, q) -> float:
    """Tr(P U Q U†)."""
    pm, qm, um = as_matrix(p), as_matrix(q), as_matrix(u)
    if not pm.shape == qm.shape == um.shape:
        raise DimensionMismatch("P, U and Q must share a dimension")
    return float(np.trace(pm @ um @ qm @ dagger(um)).real)


def overlap_samples(d: int, r1: int, r2: int, trials: int, rng: RngLike) -> np.ndarray:
    """Tr(P U Q U†) for coordinate projectors P, Q of ranks r1, r2 and Haar U.

    Equals the squared Frobenius norm of the top-left r1×r2 block of U.
    """
    if not (1 <= r1 <= d and 1 <= r2 <= d):
        raise ValueError("ranks must lie in [1, d]")
    u = haar_unitaries(d, trials, rng)
    return (np.abs(u[:, :r1, :r2]) ** 2).sum(axis=(1, 2))


def overlap_tail_bounds(r1: int, r2: int, t: float) -> tuple[float, float]:
    """(exp(-r1 r2 t²/2), exp(-r1 r2 t²/4)) for the lower and upper tail."""
    return math.exp(-r1 * r2 * t * t / 2), math.exp(-r1 * r2 * t * t / 4)


def overlap_tail_empirical(d: int, r1: int, r2: int, t: float, trials: int, rng: RngLike) -> tuple[float, float]:
    """Frequencies of overlap ≤ (1-t) r1 r2/d and ≥ (1+t) r1 r2/d."""
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    x = overlap_samples(d, r1, r2, trials, rng)
    mean = r1 * r2 / d
    lower = float(np.mean(x <= (1 - t) * mean))
    upper = float(np.mean(x >= (1 + t) * mean))
    return lower, upper


# -- greedy sampler ------------------------------------------------------------

def _trace_distances(cand: np.ndarray, accepted: np.ndarray) -> np.ndarray:
    if len(accepted) == 0:
        return np.empty(0)
    diff = accepted - cand
    return np.abs(np.linalg.eigvalsh(diff)).sum(axis=-1)


def _greedy(
    draw: Callable[[RngStream, int], np.ndarray],
    states: Callable[[np.ndarray], np.ndarray],
    checks: Sequence[tuple[Constraint, Callable]],
    n_target: int,
    max_draws: int,
    rng: RngLike,
):
    """Accept candidates that pass every check, in draw order.

    Each check is ``(constraint, fn)`` with ``fn(u, state, accepted_u, accepted_states)``
    returning True when the candidate is acceptable. Checks run in order and the
    first failing one is charged the rejection.
    """
    stream = as_stream(rng)
    acc_u: list[np.ndarray] = []
    acc_s: list[np.ndarray] = []
    draws = rejected = 0
    batch_no = 0
    while len(acc_u) < n_target and draws < max_draws:
        size = min(DRAW_BATCH, max_draws - draws)
        us = draw(stream.child(batch_no), size)
        ss = states(us)
        batch_no += 1
        for k in range(size):
            if len(acc_u) >= n_target:
                break
            draws += 1
            ok = True
            for con, fn in checks:
                if not fn(us[k], ss[k], acc_u, acc_s):
                    con.rejections += 1
                    ok = False
                    break
            if ok:
                acc_u.append(us[k])
                acc_s.append(ss[k])
            else:
                rejected += 1
    stack = np.array(acc_u) if acc_u else np.empty((0, 0, 0), dtype=complex)
    return stack, draws, rejected


def _separation_check(threshold: float):
    def fn(u, s, acc_u, acc_s):
        if not acc_s:
            return True
        return bool(_trace_distances(s, np.array(acc_s)).min() > threshold)

    return fn


def _default_budget(n_target: int, max_draws: Optional[int]) -> int:
    if n_target < 1:
        raise ValueError("n_target must be at least 1")
    if n_target > MAX_PACKING:
        raise ValueError(f"n_target is capped at {MAX_PACKING}")
    return DRAWS_PER_TARGET * n_target if max_draws is None else int(max_draws)


def build_trace_packing(d: int, eps: float, n_target: int, max_draws: Optional[int] = None, rng: RngLike = 0) -> PackingResult:
    """Perturbed states pairwise more than ε/2 apart in trace norm."""
    if d < 2 or d % 2:
        raise TomolabError(f"d must be even and >= 2, got {d}")
    budget = _default_budget(n_target, max_draws)
    sep = Constraint("trace-separation", eps / 2)
    us, draws, rej = _greedy(
        lambda st, k: haar_unitaries(d, k, st),
        lambda us: perturbed_matrix(eps, us),
        [(sep, _separation_check(eps / 2))],
        n_target, budget, rng,
    )
    return PackingResult(us, eps, d, n_target, draws, rej, len(us) < n_target, [sep], "trace")


def build_chi2_constrained_packing(
    d: int,
    eps: float,
    n_target: int,
    povms: Sequence[Povm],
    tau: Optional[float] = None,
    max_draws: Optional[int] = None,
    rng: RngLike = 0,
) -> PackingResult:
    """Trace packing whose members also keep the χ² functional ≤ tau for each POVM.

    ``tau=None`` uses the tail-bound threshold for m = len(povms) settings.
    A cap at or above ε² can never reject and is marked vacuous.
    """
    if d < 2 or d % 2:
        raise TomolabError(f"d must be even and >= 2, got {d}")
    povms = list(povms)
    if not povms:
        raise ValueError("need at least one POVM")
    if any(m.dim != d for m in povms):
        raise DimensionMismatch("POVM dimension does not match d")
    if tau is None:
        tau = Chi2TailParams(eps, d).threshold(len(povms))
    if tau <= 0:
        raise ValueError("tau must be positive")
    budget = _default_budget(n_target, max_draws)
    sep = Constraint("trace-separation", eps / 2)
    cap = Constraint("chi2-cap", float(tau))
    if tau >= eps**2:
        cap.vacuous = True
        cap.note = "cap is at or above the sup bound eps^2, so it can never reject"

    def chi2_ok(u, s, acc_u, acc_s):
        return all(f_chi2_batch(eps, m, u[None])[0] <= tau for m in povms)

    us, draws, rej = _greedy(
        lambda st, k: haar_unitaries(d, k, st),
        lambda us: perturbed_matrix(eps, us),
        [(sep, _separation_check(eps / 2)), (cap, chi2_ok)],
        n_target, budget, rng,
    )
    res = PackingResult(us, eps, d, n_target, draws, rej, len(us) < n_target, [sep, cap], "chi2")
    res.params = {"tau": float(tau), "m": len(povms)}
    return res


def shadow_overlaps(unitaries: np.ndarray) -> np.ndarray:
    """Matrix of Tr(U_i Q U_i† U_j Q U_j†) with Q the half projector."""
    d = unitaries.shape[-1]
    half = unitaries[:, :, : d // 2]
    g = np.einsum("iak,jal->ijkl", half.conj(), half)
    return (np.abs(g) ** 2).sum(axis=(2, 3))


def build_shadow_packing(d: int, n_target: int, max_draws: Optional[int] = None, rng: RngLike = 0) -> PackingResult:
    """Rotated half projectors with pairwise overlap at most d/3."""
    if d < 2 or d % 2:
        raise TomolabError(f"d must be even and >= 2, got {d}")
    budget = _default_budget(n_target, max_draws)
    cap = Constraint("overlap-cap", d / 3)

    def ok(u, s, acc_u, acc_s):
        if not acc_u:
            return True
        half = u[:, : d // 2]
        others = np.array(acc_u)[:, :, : d // 2]
        g = np.einsum("ak,jal->jkl", half.conj(), others)
        return bool((np.abs(g) ** 2).sum(axis=(1, 2)).max() <= d / 3)

    us, draws, rej = _greedy(
        lambda st, k: haar_unitaries(d, k, st),
        lambda us: us,
        [(cap, ok)],
        n_target, budget, rng,
    )
    return PackingResult(us, 0.0, d, n_target, draws, rej, len(us) < n_target, [cap], "shadow")


def build_rank_r_packing(
    d: int, r: int, nu: float, n_target: int, max_draws: Optional[int] = None, rng: RngLike = 0
) -> PackingResult:
    """Rank-r states pairwise more than √ν/4 apart; U rotates the first d-r coordinates."""
    if d < 3 or not 1 <= r or 3 * r > d:
        raise TomolabError(f"need d >= 3 and 1 <= r <= d/3, got r={r}, d={d}")
    if not 0 <= nu <= 1:
        raise TomolabError("nu must lie in [0, 1]")
    budget = _default_budget(n_target, max_draws)
    thr = math.sqrt(nu) / 4
    sep = Constraint("trace-separation", thr)
    k = d - r

    def draw(st, size):
        out = np.tile(np.eye(d, dtype=complex), (size, 1, 1))
        out[:, :k, :k] = haar_unitaries(k, size, st)
        return out

    us, draws, rej = _greedy(
        draw,
        lambda us: rank_r_matrix(nu, r, us),
        [(sep, _separation_check(thr))],
        n_target, budget, rng,
    )
    res = PackingResult(us, 0.0, d, n_target, draws, rej, len(us) < n_target, [sep], "rank-r")
    res.params = {"r": r, "nu": nu}
    return res


# -- independent re-verification ----------------------------------------------

def pairwise_trace_distances(states: np.ndarray) -> np.ndarray:
    """Upper-triangle trace distances ‖ρ_i − ρ_j‖₁, i < j, as a flat vector."""
    n = len(states)
    i, j = np.triu_indices(n, 1)
    if len(i) == 0:
        return np.empty(0)
    return np.abs(np.linalg.eigvalsh(states[i] - states[j])).sum(axis=-1)


def verify_packing(res: PackingResult, povms: Optional[Sequence[Povm]] = None) -> dict:
    """Recompute every pairwise constraint from scratch and report the extremes."""
    us = res.unitaries
    out: dict = {"size": res.size, "pairs": res.size * (res.size - 1) // 2}
    if res.kind in ("trace", "chi2"):
        dist = pairwise_trace_distances(perturbed_matrix(res.eps, us)) if res.size else np.empty(0)
        out["min_distance"] = float(dist.min()) if dist.size else math.inf
        out["ok"] = bool(np.all(dist > res.eps / 2))
        if res.kind == "chi2":
            tau = res.params["tau"]
            worst = max((float(f_chi2_batch(res.eps, m, us).max()) for m in (povms or [])), default=0.0) if res.size else 0.0
            out["max_chi2"] = worst
            out["ok"] = out["ok"] and worst <= tau
    elif res.kind == "shadow":
        ov = shadow_overlaps(us)
        off = ov[~np.eye(res.size, dtype=bool)]
        out["max_overlap"] = float(off.max()) if off.size else 0.0
        out["self_overlap"] = np.diag(ov).tolist()
        out["ok"] = bool(np.all(off <= res.d / 3))
    elif res.kind == "rank-r":
        nu, r = res.params["nu"], res.params["r"]
        dist = pairwise_trace_distances(rank_r_matrix(nu, r, us))
        out["min_distance"] = float(dist.min()) if dist.size else math.inf
        out["ok"] = bool(np.all(dist > math.sqrt(nu) / 4))
    else:
        raise TomolabError(f"unknown packing kind {res.kind!r}")
    return out


def shadow_instance(unitaries: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Observables O_i = U_i Q U_i† and states ρ_i = (1-ε)𝟙/d + (2ε/d) O_i."""
    d = unitaries.shape[-1]
    half = unitaries[:, :, : d // 2]
    obs = half @ dagger(half)
    return obs, perturbed_matrix(eps, unitaries)


def shadow_gap(unitaries: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Table G[i, j] = Tr(O_j ρ_i), plus the diagonal for convenience."""
    obs, states = shadow_instance(unitaries, eps)
    g = np.einsum("iab,jba->ij", states, obs).real
    return g, np.diag(g).copy()


def projector(d: int, rank: int) -> Projector:
    return Projector.coordinate(d, range(rank))
