"""Divergences, mutual information, Haar-moment closed forms and bound calculators.

Entropies and mutual information are in bits. The χ² divergence carries no
logarithm, so the conversion KL ≤ χ²/ln 2 shows up wherever the two meet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ensembles import half_projector
from .linalg import DimensionMismatch, Projector, TomolabError, as_matrix, hermitize, swap_operator
from .measurements import Povm

PMF_TOL = 1e-9
# universal constants of the χ² tail bound: alpha = c ε²/d, tail exp(-C d² t / ε²)
TAIL_C = 2.0
TAIL_BIG_C = 1.0 / 768.0
# packing rate: N ≤ exp(d²/32) states survive the union bound
PACKING_RATE = 1.0 / 32.0


class SupportError(TomolabError, ValueError):
    pass


def as_pmf(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise TomolabError("a PMF must be a non-empty vector")
    if p.min() < -PMF_TOL or abs(p.sum() - 1.0) > PMF_TOL:
        raise TomolabError("PMF entries must be nonnegative and sum to 1")
    return np.clip(p, 0.0, None)


def as_joint(j) -> np.ndarray:
    j = np.asarray(j, dtype=float)
    if j.ndim < 2:
        raise TomolabError("a joint PMF needs at least two axes")
    if j.min() < -PMF_TOL or abs(j.sum() - 1.0) > PMF_TOL:
        raise TomolabError("joint PMF entries must be nonnegative and sum to 1")
    return np.clip(j, 0.0, None)


def entropy(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def kl_divergence(p, q) -> float:
    """D_KL(p‖q) in bits; +inf when supp(p) ⊄ supp(q)."""
    p, q = as_pmf(p), as_pmf(q)
    if p.shape != q.shape:
        raise DimensionMismatch("distributions live on different sample spaces")
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return max(0.0, float((p[mask] * np.log2(p[mask] / q[mask])).sum()))


def chi2_divergence(p, q) -> float:
    """Σ q (p/q - 1)²; outcomes with p = q = 0 contribute nothing."""
    p, q = as_pmf(p), as_pmf(q)
    if p.shape != q.shape:
        raise DimensionMismatch("distributions live on different sample spaces")
    if np.any((q == 0) & (p > 0)):
        raise SupportError("supp(p) is not contained in supp(q)")
    mask = q > 0
    return max(0.0, float((p[mask] ** 2 / q[mask]).sum() - 1.0))


def mutual_information(j) -> float:
    """I(x:y) = E_x D_KL(p_{y|x} ‖ p_y) for a 2-d joint table indexed [x, y]."""
    j = as_joint(j)
    if j.ndim != 2:
        j = j.reshape(j.shape[0], -1)
    px = j.sum(axis=1)
    py = j.sum(axis=0)
    total = 0.0
    for x in np.nonzero(px > 0)[0]:
        total += px[x] * kl_divergence(j[x] / px[x], py)
    return max(0.0, total)


def conditional_mutual_information(j, given_axis: int = 1) -> float:
    """I(x : y | g) for a 3-d table indexed [x, g, y] (or [x, y, g] with ``given_axis=2``).

    Computed as E_g I(x:y | g=g) on the conditioned tables.
    """
    j = as_joint(j)
    if j.ndim != 3:
        raise TomolabError("conditional MI expects a 3-d joint table")
    if given_axis == 2:
        j = np.swapaxes(j, 1, 2)
    elif given_axis != 1:
        raise ValueError("given_axis must be 1 or 2")
    pg = j.sum(axis=(0, 2))
    total = 0.0
    for g in np.nonzero(pg > 0)[0]:
        total += pg[g] * mutual_information(j[:, g, :] / pg[g])
    return total


def mi_chi2_upper_bound(j, q) -> float:
    """(1/ln 2) E_x D_χ²(p_{y|x} ‖ q), an upper bound on I(x:y)."""
    j = as_joint(j)
    if j.ndim != 2:
        j = j.reshape(j.shape[0], -1)
    q = as_pmf(q)
    if q.shape[0] != j.shape[1]:
        raise DimensionMismatch("q must live on the outcome space of y")
    px = j.sum(axis=1)
    total = 0.0
    for x in np.nonzero(px > 0)[0]:
        total += px[x] * chi2_divergence(j[x] / px[x], q)
    return total / math.log(2)


def fano_required_mi(n_states: int, p_error: float) -> float:
    """Mutual information (bits) needed to decode one of N uniform messages with error p_e."""
    if n_states < 2:
        raise ValueError("need at least two states")
    if not 0.0 <= p_error < 1.0:
        raise ValueError("p_error must lie in [0, 1)")
    return (1.0 - p_error) * math.log2(n_states) - 1.0


# -- χ² functional of the perturbed ensemble ---------------------------------

def _check_even(d: int):
    if d < 2 or d % 2:
        raise TomolabError(f"d must be even and >= 2, got {d}")


def f_chi2_batch(eps: float, m: Povm, unitaries: np.ndarray) -> np.ndarray:
    """D_χ²(p_{z|U} ‖ w) for each unitary in a (n, d, d) stack.

    ``w(z) = Tr(M_z)/d`` is the Haar-averaged outcome distribution, used in
    closed form rather than estimated.
    """
    d = m.dim
    _check_even(d)
    u = np.asarray(unitaries, dtype=complex)
    if u.ndim == 2:
        u = u[None]
    if u.shape[1:] != (d, d):
        raise DimensionMismatch("unitaries and POVM have different dimensions")
    w = m.weights()
    if np.any((w <= 0)):
        zero = np.nonzero(w <= 0)[0]
        # Tr M_z = 0 forces M_z = 0, so p(z) = 0 as well and the term drops out
        if np.any(np.abs(m.elements[zero]).max(axis=(1, 2)) > 1e-12):
            raise SupportError("an outcome has w(z) = 0 but nonzero probability")
    keep = w > 0
    elems = m.elements[keep]
    half = u[:, :, : d // 2]
    # overlap[n, z] = Tr(M_z U Q U†) = Σ_{k<d/2} ⟨u_k| M_z |u_k⟩
    mh = np.einsum("zij,njk->nzik", elems, half)
    overlap = np.einsum("nik,nzik->nz", half.conj(), mh).real
    wk = w[keep]
    p = (2 * eps / d) * overlap + (1 - eps) * wk
    return np.clip(((p - wk) ** 2 / wk).sum(axis=1), 0.0, None)


def f_chi2(eps: float, d: int, m: Povm, u) -> float:
    if m.dim != d:
        raise DimensionMismatch(f"POVM is {m.dim}-dimensional, expected {d}")
    return float(f_chi2_batch(eps, m, np.asarray(u))[0])


def f_chi2_mean_exact(eps: float, m: Povm) -> float:
    """Exact Haar mean of the χ² functional.

    Σ_z ε² (Tr M_z² - d w_z²) / (d (d²-1) w_z), from the exact second moment of
    Tr(M ρ_{ε,U}).
    """
    d = m.dim
    _check_even(d)
    w = m.weights()
    tr_sq = np.einsum("zij,zji->z", m.elements, m.elements).real
    keep = w > 0
    terms = (tr_sq[keep] - d * w[keep] ** 2) / w[keep]
    return float(eps**2 * terms.sum() / (d * (d * d - 1)))


def expected_chi2_bound(eps: float, d: int, ell: Optional[int]) -> float:
    """ε²/(d+1) · min{1, ℓ/(d-1)}; ``ell=None`` means unbounded outcomes."""
    if d < 2:
        raise ValueError("d must be at least 2")
    factor = 1.0 if ell is None else min(1.0, ell / (d - 1))
    return eps**2 / (d + 1) * factor


@dataclass(frozen=True)
class Chi2TailParams:
    """Constants of the sub-exponential tail of the χ² functional."""

    eps: float
    d: int
    ell: Optional[int] = None
    c: float = TAIL_C
    big_c: float = TAIL_BIG_C

    @property
    def alpha(self) -> float:
        if self.ell is None:
            return self.c * self.eps**2 / self.d
        return 4 * self.ell * self.eps**2 / (3 * self.d**2)

    def tail(self, t: float) -> float:
        """Upper bound on Pr[F > alpha + t]."""
        return math.exp(-self.big_c * self.d**2 * t / self.eps**2)

    def threshold(self, m_settings: int) -> float:
        """alpha + ε² ln(3m)/(C d²): F stays below this for all m settings w.p. ≥ 2/3."""
        return self.alpha + self.eps**2 * math.log(3 * m_settings) / (self.big_c * self.d**2)

    def is_vacuous(self, m_settings: int) -> bool:
        """True when the threshold exceeds the trivial cap ε², so it can never bind."""
        return self.threshold(m_settings) >= self.eps**2


def empirical_tail(values, thresholds) -> np.ndarray:
    """Fraction of ``values`` strictly above each threshold."""
    v = np.sort(np.asarray(values, dtype=float))
    t = np.asarray(thresholds, dtype=float)
    return 1.0 - np.searchsorted(v, t, side="right") / v.size


# -- moments of Tr(M ρ) over the hard ensembles ------------------------------

def _check_effect(m_element, d: int) -> np.ndarray:
    m = hermitize(as_matrix(m_element))
    if m.shape != (d, d):
        raise DimensionMismatch(f"operator must be {d}×{d}")
    vals = np.linalg.eigvalsh(m)
    if vals.min() < -1e-9 or vals.max() > 1 + 1e-9:
        raise TomolabError("operator must satisfy 0 ⪯ M ⪯ 𝟙")
    return m


def second_moment_exact(m_element, eps: float, d: int) -> float:
    """E_U Tr(M ρ_{ε,U})² = w² + ε²(Tr M² - d w²)/(d(d²-1))."""
    _check_even(d)
    m = _check_effect(m_element, d)
    w = np.trace(m).real / d
    return float(w**2 + eps**2 * (np.trace(m @ m).real - d * w**2) / (d * (d * d - 1)))


def second_moment_bound(m_element, eps: float, d: int) -> float:
    """w²(1 + ε²/(d+1) · min{1, 1/(w(d-1))}) with w = Tr(M)/d."""
    _check_even(d)
    m = _check_effect(m_element, d)
    w = np.trace(m).real / d
    if w <= 0:
        return 0.0
    return float(w**2 * (1 + eps**2 / (d + 1) * min(1.0, 1.0 / (w * (d - 1)))))


def _rank_r_parts(m_element, nu: float, r: int, d: int):
    if d < 3 or not 1 <= r or 3 * r > d:
        raise TomolabError(f"need d >= 3 and 1 <= r <= d/3, got r={r}, d={d}")
    if not 0.0 <= nu <= 1.0:
        raise TomolabError("nu must lie in [0, 1]")
    m = _check_effect(m_element, d)
    k = d - r
    g1 = np.zeros((d, d))
    g1[:k, :k] = np.eye(k)
    g0 = np.eye(d) - g1
    tr0 = np.trace(m @ g0).real
    tr1 = np.trace(m @ g1).real
    mg1 = m @ g1
    tr11 = np.trace(mg1 @ mg1).real
    tr10 = np.trace(mg1 @ m @ g0).real
    return m, k, tr0, tr1, tr11, tr10


def rank_r_first_moment(m_element, nu: float, r: int, d: int) -> float:
    """w = (1-ν)/r tr(MΓ₀) + ν/(d-r) tr(MΓ₁), the Haar mean of Tr(M σ_{ν,U})."""
    _, k, tr0, tr1, _, _ = _rank_r_parts(m_element, nu, r, d)
    return float((1 - nu) / r * tr0 + nu / k * tr1)


def rank_r_second_moment_exact(m_element, nu: float, r: int, d: int) -> float:
    """Exact Haar mean of Tr(M σ_{ν,U})², before any bounding step."""
    _, k, tr0, tr1, tr11, tr10 = _rank_r_parts(m_element, nu, r, d)
    if k * k == 1:
        raise TomolabError("block dimension must exceed 1")
    out = (1 - nu) ** 2 / r**2 * tr0**2
    out += 2 * nu * (1 - nu) / (r * k) * tr0 * tr1
    out += 2 * nu * (1 - nu) / (r**2 * k) * tr10
    out += nu**2 / (r * k * (k * k - 1)) * ((r * k - 1) * tr1**2 + (k - r) * tr11)
    return float(out)


def rank_r_second_moment_bound(m_element, nu: float, r: int, d: int) -> float:
    """w² + 2ν²/(d-r)⁴ tr(MΓ₁)² + 3ν²/(r(d-r)²) tr((MΓ₁)²) + 2ν(1-ν)/(r²(d-r)) tr(MΓ₁MΓ₀)."""
    _, k, tr0, tr1, tr11, tr10 = _rank_r_parts(m_element, nu, r, d)
    w = (1 - nu) / r * tr0 + nu / k * tr1
    return float(
        w**2
        + 2 * nu**2 / k**4 * tr1**2
        + 3 * nu**2 / (r * k**2) * tr11
        + 2 * nu * (1 - nu) / (r**2 * k) * tr10
    )


# -- Haar twirls ---------------------------------------------------------------

def haar_first_moment_exact(q) -> np.ndarray:
    """E U Q U† = (r/d) 𝟙 for a rank-r projector Q."""
    q = q if isinstance(q, Projector) else Projector(q)
    return np.eye(q.dim, dtype=complex) * (q.rank / q.dim)


def haar_second_moment_exact(p1, p2) -> np.ndarray:
    """E U⊗U (Π₁⊗Π₂) U†⊗U† for projectors with im Π₁ ⊆ im Π₂.

    Equals r₁/(d(d²-1)) [(r₂d - 1) 𝟙 + (d - r₂) W] with W the swap.
    """
    p1 = p1 if isinstance(p1, Projector) else Projector(p1)
    p2 = p2 if isinstance(p2, Projector) else Projector(p2)
    d = p1.dim
    if p2.dim != d:
        raise DimensionMismatch("projectors act on different spaces")
    if d < 2:
        raise TomolabError("d must be at least 2")
    if np.linalg.norm(p2.matrix @ p1.matrix - p1.matrix) > 1e-8:
        raise TomolabError("image of the first projector is not inside the second")
    r1, r2 = p1.rank, p2.rank
    coef = r1 / (d * (d * d - 1))
    return coef * ((r2 * d - 1) * np.eye(d * d) + (d - r2) * swap_operator(d))


def haar_mixed_moment_exact(i: int, j: int, d: int) -> np.ndarray:
    """E U|i⟩⟨j|U† = δ_ij 𝟙/d (0-based basis labels)."""
    return np.eye(d, dtype=complex) / d if i == j else np.zeros((d, d), dtype=complex)


def haar_pair_moment_exact(i: int, j: int, d: int) -> np.ndarray:
    """E U|i⟩ ⊗ U|j⟩ = 0: the global phase makes every odd-in-U² term vanish."""
    return np.zeros(d * d, dtype=complex)


def perturbed_twirl_exact(d: int) -> np.ndarray:
    """E (U Q_{d/2} U†)^{⊗2} = ((d²-2) 𝟙 + d W) / (4(d²-1))."""
    q = half_projector(d)
    return haar_second_moment_exact(q, q)


# -- sample-complexity lower bounds ------------------------------------------

@dataclass(frozen=True)
class LowerBound:
    """A constant-explicit sample threshold plus its leading-order scaling law."""

    value: float
    scaling: float
    claim: str
    label: str
    per_copy_information: float
    required_information: float

    def __float__(self) -> float:
        return float(self.value)


def sample_lower_bound(
    d: int,
    eps: float,
    ell: Optional[int] = None,
    log_m: Optional[float] = None,
    mode: str = "full-rank",
    r: Optional[int] = None,
    *,
    n_observables: Optional[int] = None,
    p_error: float = 1 / 3,
    packing_rate: float = PACKING_RATE,
) -> LowerBound:
    """Samples needed so that n · (information per copy) reaches the Fano threshold.

    ``log_m`` is the natural log of the number of allowed measurement settings;
    giving it switches to the adaptive, finite-settings bound. ``mode`` is one
    of ``full-rank``, ``rank-r`` or ``shadow`` (the last needs
    ``n_observables``). The packing size is exp(packing_rate · d²) for the
    full-rank ensemble and exp(packing_rate · r d) for the rank-r one.
    """
    if d < 2 or not 0 < eps < 1:
        raise ValueError("need d >= 2 and 0 < eps < 1")
    if ell is not None and ell < 1:
        raise ValueError("ell must be positive")
    ln2 = math.log(2)

    def fano(log2_n: float) -> float:
        return (1 - p_error) * log2_n - 1.0

    if mode == "full-rank":
        if r is not None or n_observables is not None:
            raise ValueError("full-rank mode takes neither r nor n_observables")
        required = fano(packing_rate * d * d / ln2)
        if log_m is None:
            per_copy = expected_chi2_bound(eps, d, ell) / ln2
            if ell is None:
                claim, scaling = "nonadaptive-arbitrary", d**3 / eps**2
                label = "nonadaptive single-copy, arbitrary outcomes: Omega(d^3/eps^2)"
            else:
                claim, scaling = "nonadaptive-l-outcome", d**4 / (ell * eps**2)
                label = "nonadaptive single-copy, l outcomes: Omega(d^4/(l eps^2))"
        else:
            tail = Chi2TailParams(eps, d, ell)
            per_copy = (tail.alpha + eps**2 * (math.log(3) + log_m) / (tail.big_c * d * d)) / ln2
            if ell is None:
                claim = "adaptive-m-settings"
                scaling = d**3 / (eps**2 * (1 + log_m / d))
                label = "adaptive, m settings: Omega(d^3/((1+log m/d) eps^2))"
            else:
                claim = "adaptive-l-outcome-m-settings"
                scaling = d**4 / ((ell + log_m) * eps**2)
                label = "adaptive, l outcomes, m settings: Omega(d^4/((l+log m) eps^2))"
    elif mode == "rank-r":
        if r is None or not 1 <= r or 3 * r > d or d < 3:
            raise ValueError("rank-r mode needs 1 <= r <= d/3 and d >= 3")
        if log_m is not None or n_observables is not None:
            raise ValueError("rank-r mode is nonadaptive and takes no log_m/n_observables")
        if eps >= 1 / 8:
            raise ValueError("rank-r bound needs eps < 1/8")
        nu = 64 * eps**2
        required = fano(packing_rate * r * d / ln2)
        if ell is None:
            per_copy = 4 * nu / (r * ln2)
            claim, scaling = "rank-r-arbitrary", r * r * d / eps**2
            label = "rank-r nonadaptive, arbitrary outcomes: Omega(r^2 d/eps^2)"
        else:
            per_copy = 4 * nu * ell / (r * (d - r) * ln2)
            claim, scaling = "rank-r-l-outcome", r * r * d * d / (ell * eps**2)
            label = "rank-r nonadaptive, l outcomes: Omega(r^2 d^2/(l eps^2))"
    elif mode == "shadow":
        if n_observables is None or n_observables < 2:
            raise ValueError("shadow mode needs n_observables >= 2")
        if d < 4 or d % 2:
            raise ValueError("shadow mode needs an even d >= 4")
        lm = 0.0 if log_m is None else log_m
        log2_n = min(math.log2(n_observables), packing_rate * d * d / ln2)
        required = fano(log2_n)
        tail = Chi2TailParams(eps, d)
        per_copy = (tail.alpha + eps**2 * (math.log(3) + lm) / (tail.big_c * d * d)) / ln2
        claim = "shadow-m-settings"
        scaling = d * min(d * d, math.log(n_observables)) / (eps**2 * (1 + lm / d))
        label = "shadow tomography, m settings: Omega(d min{d^2, log M}/((1+log m/d) eps^2))"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    value = max(0.0, required) / per_copy
    return LowerBound(value, scaling, claim, label, per_copy, required)
