"""Tomography and shadow estimators built on single-copy measurements.

Shots are generated in fixed-size blocks, each from its own derived stream
(block ``b`` uses ``stream.child(b, 0)`` for unitaries and ``child(b, 1)`` for
outcomes). A run with fewer shots is therefore an exact prefix of a longer run
on the same stream, which the bisection search relies on, and any record can
be regenerated from its seed path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .linalg import DensityMatrix, DimensionMismatch, TomolabError, hermitize, project_to_density
from .measurements import Povm, binary_pauli_povm, measure_bases, measure_repeated, pauli_operators
from .randomness import RngLike, RngStream, as_stream, haar_unitaries

SHOT_BLOCK = 256
# frozen after calibration, see the notes on empirical constants
SHADOW_PLAN_CONST = 12.0
OBSERVABLE_TOL = 1e-9


@dataclass
class TomographyEstimate:
    raw: np.ndarray
    n_used: int
    projected: Optional[DensityMatrix] = None

    def project(self) -> DensityMatrix:
        if self.projected is None:
            self.projected = project_to_density(self.raw)
        return self.projected


def single_shot_estimator(u, j: int, d: int) -> np.ndarray:
    """(d+1) U|j⟩⟨j|U† − 𝟙."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (d, d):
        raise DimensionMismatch(f"unitary must be {d}×{d}")
    if not 0 <= j < d:
        raise IndexError(f"outcome {j} out of range for d={d}")
    v = u[:, j]
    return (d + 1) * np.outer(v, v.conj()) - np.eye(d)


def _estimate_from_sum(outer_sum: np.ndarray, n: int) -> np.ndarray:
    d = outer_sum.shape[0]
    return hermitize((d + 1) * outer_sum / n - np.eye(d))


class RandomBasisShots:
    """Rotated-basis records for one stream, generated lazily block by block.

    Full-block sums Σ u u† are cached, so estimates at many sample sizes on the
    same stream cost one pass plus at most one partial block each.
    """

    def __init__(self, source, d: int, stream: RngStream, block: int = SHOT_BLOCK):
        if getattr(source, "dim", d) != d:
            raise DimensionMismatch("source dimension does not match d")
        self.source, self.d, self.stream, self.block = source, d, stream, block
        self._sums: dict[int, np.ndarray] = {}

    def unitaries(self, b: int, count: int) -> np.ndarray:
        return haar_unitaries(self.d, count, self.stream.child(b, 0))

    def records(self, b: int, count: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
        """(vectors U_k|j_k⟩, outcomes j_k) for the first ``count`` shots of block b."""
        count = self.block if count is None else count
        us = self.unitaries(b, count)
        js = np.asarray(measure_bases(self.source, us, self.stream.child(b, 1)), dtype=int)
        return us[np.arange(count), :, js], js

    def _block_sum(self, b: int) -> np.ndarray:
        if b not in self._sums:
            v, _ = self.records(b)
            self._sums[b] = v.T @ v.conj()
        return self._sums[b]

    def outer_sum(self, n: int) -> np.ndarray:
        full, rest = divmod(n, self.block)
        total = np.zeros((self.d, self.d), dtype=complex)
        for b in range(full):
            total += self._block_sum(b)
        if rest:
            v, _ = self.records(full, rest)
            total += v.T @ v.conj()
        return total

    def estimate(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be at least 1")
        return _estimate_from_sum(self.outer_sum(n), n)

    def all_records(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        full, rest = divmod(n, self.block)
        parts = [self.records(b) for b in range(full)]
        if rest:
            parts.append(self.records(full, rest))
        if not parts:
            return np.empty((0, self.d), dtype=complex), np.empty(0, dtype=int)
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def random_basis_tomography(source, d: int, n: int, rng: RngLike, *, project: bool = False) -> TomographyEstimate:
    """Average of single-shot estimators over n Haar rotated-basis measurements.

    Unbiased, with E‖ρ̂ − ρ‖_F² = (d² + d − 1 − Tr ρ²)/n exactly.
    """
    est = TomographyEstimate(RandomBasisShots(source, d, as_stream(rng)).estimate(n), n)
    if project:
        est.project()
    return est


class PauliShots:
    """Round-structured Pauli measurements: each round measures every non-identity Pauli once."""

    def __init__(self, source, q: int, stream: RngStream, block: int = SHOT_BLOCK):
        self.paulis = np.array(pauli_operators(q))
        self.d = 2**q
        if getattr(source, "dim", self.d) != self.d:
            raise DimensionMismatch("source dimension does not match 2^q")
        self.povms = [binary_pauli_povm(p) for p in self.paulis[1:]]
        self.source, self.stream, self.block = source, stream, block
        self._sums: dict[int, np.ndarray] = {}

    def signs(self, b: int, count: int) -> np.ndarray:
        """(count, d²−1) table of ±1 outcomes for block b."""
        cols = [
            measure_repeated(self.source, m, count, self.stream.child(b, i))
            for i, m in enumerate(self.povms)
        ]
        return 1 - 2 * np.stack(cols, axis=1)

    def _block_sum(self, b: int) -> np.ndarray:
        if b not in self._sums:
            self._sums[b] = self.signs(b, self.block).sum(axis=0)
        return self._sums[b]

    def coefficient_means(self, s: int) -> np.ndarray:
        full, rest = divmod(s, self.block)
        total = np.zeros(len(self.povms))
        for b in range(full):
            total += self._block_sum(b)
        if rest:
            total += self.signs(full, rest).sum(axis=0)
        return total / s

    def estimate(self, s: int) -> np.ndarray:
        if s < 1:
            raise ValueError("s must be at least 1")
        mu = np.concatenate([[1.0], self.coefficient_means(s)])
        return hermitize(np.einsum("i,iab->ab", mu, self.paulis) / self.d)


def pauli_tomography(source, q: int, s: int, rng: RngLike, *, project: bool = False) -> TomographyEstimate:
    """ρ̂ = (1/d) Σ μ_i P_i with μ_i the mean of s ±1 outcomes and μ_𝟙 = 1.

    Uses s·(d²−1) samples; E‖ρ̂ − ρ‖_F² = Σ_i (1 − Tr(P_iρ)²)/(ds) ≤ d/s.
    """
    if q < 1:
        raise ValueError("q must be at least 1")
    shots = PauliShots(source, q, as_stream(rng))
    est = TomographyEstimate(shots.estimate(s), s * (shots.d**2 - 1))
    if project:
        est.project()
    return est


# -- classical shadows --------------------------------------------------------

@dataclass
class ShadowSketch:
    """Records (U_k|j_k⟩, j_k) plus the stream that regenerates each U_k."""

    d: int
    vectors: np.ndarray = field(repr=False)
    outcomes: np.ndarray = field(repr=False)
    seed: Optional[int] = None
    path: tuple = ()
    block: int = SHOT_BLOCK

    def __post_init__(self):
        self.outcomes = np.asarray(self.outcomes, dtype=int)
        if self.vectors.shape != (len(self.outcomes), self.d):
            raise DimensionMismatch("vectors must have shape (n, d)")
        if len(self.outcomes) and (self.outcomes.min() < 0 or self.outcomes.max() >= self.d):
            raise TomolabError("outcome index out of range")

    @property
    def n(self) -> int:
        return len(self.outcomes)

    def stream(self) -> RngStream:
        if self.seed is None:
            raise TomolabError("sketch carries no seed provenance")
        return RngStream(self.seed, self.path)

    def unitary(self, k: int) -> np.ndarray:
        """Regenerate U_k from its block stream."""
        b, i = divmod(k, self.block)
        return haar_unitaries(self.d, i + 1, self.stream().child(b, 0))[i]

    def head(self, n: int) -> "ShadowSketch":
        return ShadowSketch(self.d, self.vectors[:n], self.outcomes[:n], self.seed, self.path, self.block)

    def to_jsonl(self, fh) -> None:
        """Header line, then one ``{"path", "index", "outcome"}`` record per shot."""
        fh.write(json.dumps({"d": self.d, "n": self.n, "seed": self.seed, "block": self.block}) + "\n")
        for k, j in enumerate(self.outcomes):
            b, i = divmod(k, self.block)
            rec = {"path": list(self.path) + [b, 0], "index": i, "outcome": int(j)}
            fh.write(json.dumps(rec) + "\n")

    @classmethod
    def from_jsonl(cls, fh) -> "ShadowSketch":
        header = json.loads(fh.readline())
        d, seed, block = int(header["d"]), header["seed"], int(header["block"])
        if seed is None:
            raise TomolabError("cannot rebuild a sketch without seed provenance")
        recs = [json.loads(line) for line in fh if line.strip()]
        by_path: dict[tuple, int] = {}
        for r in recs:
            key = tuple(r["path"])
            by_path[key] = max(by_path.get(key, 0), r["index"] + 1)
        cache = {p: haar_unitaries(d, c, RngStream(seed, p)) for p, c in by_path.items()}
        js = np.array([r["outcome"] for r in recs], dtype=int)
        vecs = np.array([cache[tuple(r["path"])][r["index"], :, r["outcome"]] for r in recs]).reshape(len(recs), d)
        base = tuple(recs[0]["path"][:-2]) if recs else ()
        return cls(d, vecs, js, seed, base, block)


def collect_shadow(source, d: int, n: int, rng: RngLike) -> ShadowSketch:
    if n < 1:
        raise ValueError("n must be at least 1")
    stream = as_stream(rng)
    shots = RandomBasisShots(source, d, stream)
    vecs, js = shots.all_records(n)
    return ShadowSketch(d, vecs, js, stream.seed, stream.path, shots.block)


def _check_observables(observables, d: int, lo: float = 0.0) -> np.ndarray:
    obs = np.asarray(observables, dtype=complex)
    if obs.ndim == 2:
        obs = obs[None]
    if obs.shape[1:] != (d, d):
        raise DimensionMismatch(f"observables must be {d}×{d}")
    if np.abs(obs - np.conj(np.swapaxes(obs, -1, -2))).max() > OBSERVABLE_TOL:
        raise TomolabError("observables must be Hermitian")
    vals = np.linalg.eigvalsh(obs)
    if vals.min() < lo - OBSERVABLE_TOL or vals.max() > 1 + OBSERVABLE_TOL:
        raise TomolabError(f"observables must satisfy {lo:g}·𝟙 ⪯ O ⪯ 𝟙")
    return obs


def shadow_single_values(sketch: ShadowSketch, observables, *, signed: bool = False) -> np.ndarray:
    """(n, M) table of Tr(O_i ρ̂(U_k, j_k)) = (d+1)⟨u_k|O_i|u_k⟩ − Tr O_i."""
    d = sketch.d
    obs = _check_observables(observables, d, -1.0 if signed else 0.0)
    v = sketch.vectors
    quad = np.einsum("na,mab,nb->nm", v.conj(), obs, v).real
    return (d + 1) * quad - np.einsum("maa->m", obs).real


def _means_from_vectors(v: np.ndarray, obs: np.ndarray, d: int) -> np.ndarray:
    s = v.T @ v.conj() / len(v)
    return (d + 1) * np.einsum("mab,ba->m", obs, s).real - np.einsum("maa->m", obs).real


def shadow_sample_mean(sketch: ShadowSketch, observables) -> np.ndarray:
    """Sample mean of Tr(O_i ρ̂) over the sketch, one value per observable."""
    obs = _check_observables(observables, sketch.d)
    if sketch.n == 0:
        raise ValueError("empty sketch")
    return _means_from_vectors(sketch.vectors, obs, sketch.d)


def shadow_median_of_means(sketch: ShadowSketch, observables, k_groups: int) -> np.ndarray:
    """Median over k contiguous group means; a trailing remainder is dropped."""
    obs = _check_observables(observables, sketch.d)
    if not 1 <= k_groups <= sketch.n:
        raise ValueError("k_groups must lie in [1, n]")
    size = sketch.n // k_groups
    groups = [
        _means_from_vectors(sketch.vectors[g * size:(g + 1) * size], obs, sketch.d)
        for g in range(k_groups)
    ]
    return np.median(np.array(groups), axis=0)


def two_outcome_constant(n_observables: int) -> float:
    """c₀ = 3 ln(3M): per-observable repetitions are ⌈c₀/ε²⌉."""
    return 3 * math.log(3 * n_observables)


def two_outcome_plan(n_observables: int, eps: float, c0: Optional[float] = None) -> int:
    if n_observables < 1 or eps <= 0:
        raise ValueError("need M >= 1 and eps > 0")
    c0 = two_outcome_constant(n_observables) if c0 is None else c0
    return math.ceil(c0 / eps**2)


def two_outcome_shadow_tomography(source, observables, eps: float, rng: RngLike, *, c0: Optional[float] = None) -> np.ndarray:
    """Measure {O_i, 𝟙 − O_i} a planned number of times each; return the frequencies of O_i."""
    d = source.dim
    obs = _check_observables(observables, d)
    reps = two_outcome_plan(len(obs), eps, c0)
    stream = as_stream(rng)
    eye = np.eye(d)
    out = np.empty(len(obs))
    for i, o in enumerate(obs):
        povm = Povm([o, eye - o], check=False)
        z = measure_repeated(source, povm, reps, stream.child(i))
        out[i] = np.mean(np.asarray(z) == 0)
    return out


def bernstein_sample_plan(eps: float, delta: float, sigma2: float, k_bound: float) -> int:
    """Smallest n with n ≥ 2(σ² + Kε/3) ln(2/δ)/ε²."""
    if eps <= 0 or sigma2 < 0 or k_bound < 0 or not 0 < delta <= 1:
        raise ValueError("need eps > 0, sigma2 >= 0, k_bound >= 0 and 0 < delta <= 1")
    return max(1, math.ceil(2 * (sigma2 + k_bound * eps / 3) * math.log(2 / delta) / eps**2))


def shadow_bernstein_plan(d: int, n_observables: int, eps: float) -> int:
    """Bernstein plan with σ² = 3d, K = d + 1 and δ = 1/(3M)."""
    return bernstein_sample_plan(eps, 1 / (3 * n_observables), 3 * d, d + 1)


def shadow_sample_plan(d: int, n_observables: int, eps: float, const: float = SHADOW_PLAN_CONST) -> int:
    """⌈const · d · ln M / ε²⌉ with the empirically frozen constant."""
    return math.ceil(const * d * math.log(max(n_observables, 2)) / eps**2)


def observable_errors(estimates: np.ndarray, observables: Sequence[np.ndarray], rho) -> np.ndarray:
    truth = np.einsum("mab,ba->m", np.asarray(observables), np.asarray(rho)).real
    return np.abs(np.asarray(estimates) - truth)
