"""Hard-instance state families.

Two families are provided:

* the perturbed maximally mixed state
  ``(2ε/d)·U Q U† + (1-ε)·𝟙/d`` with ``Q`` the projector onto the first d/2
  basis vectors, and
* the rank-r family ``U (1/r Σ_i |ψ_i⟩⟨ψ_i|) U†`` where
  ``|ψ_i⟩ = √(1-ν)|d+1-i⟩ + √ν|i⟩`` and ``U`` only rotates the first d-r
  coordinates.

Basis labels follow the 1-based convention of the formulas above in the public
arguments (``i``), and are 0-based internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DensityMatrix, Projector, TomolabError, dagger, hermitize, is_unitary


def half_projector(d: int) -> np.ndarray:
    """Q_{d/2}: projector onto the first d/2 standard basis vectors."""
    if d % 2:
        raise TomolabError(f"d must be even, got {d}")
    q = np.zeros((d, d), dtype=complex)
    q[: d // 2, : d // 2] = np.eye(d // 2)
    return q


@dataclass(frozen=True, eq=False)
class PerturbedEnsembleParams:
    eps: float
    d: int
    u: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise TomolabError(f"d must be even and >= 2, got {self.d}")
        if not 0.0 <= self.eps < 1.0:
            raise TomolabError(f"eps must lie in [0, 1), got {self.eps}")
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (self.d, self.d) or not is_unitary(u):
            raise TomolabError("u must be a d×d unitary")
        object.__setattr__(self, "u", u)


def perturbed_matrix(eps: float, u: np.ndarray) -> np.ndarray:
    """Unvalidated array form of the perturbed state, also for stacks of unitaries."""
    d = u.shape[-1]
    half = u[..., :, : d // 2]
    rot_q = half @ dagger(half)
    return (2 * eps / d) * rot_q + ((1 - eps) / d) * np.eye(d)


def perturbed_state(p: PerturbedEnsembleParams) -> DensityMatrix:
    return DensityMatrix(hermitize(perturbed_matrix(p.eps, p.u)))


def gamma_projectors(d: int, r: int) -> tuple[Projector, Projector]:
    """(Γ₀, Γ₁) with Γ₁ on the first d-r coordinates and Γ₀ = 𝟙 - Γ₁."""
    if not 1 <= r < d:
        raise TomolabError(f"need 1 <= r < d, got r={r}, d={d}")
    g1 = Projector.coordinate(d, range(d - r))
    g0 = Projector.coordinate(d, range(d - r, d))
    return g0, g1


def embed_block_unitary(v: np.ndarray, d: int) -> np.ndarray:
    """Direct sum V ⊕ 𝟙 with V acting on the leading coordinates."""
    v = np.asarray(v, dtype=complex)
    k = v.shape[0]
    u = np.eye(d, dtype=complex)
    u[:k, :k] = v
    return u


@dataclass(frozen=True, eq=False)
class RankREnsembleParams:
    nu: float
    r: int
    d: int
    u: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.d < 3:
            raise TomolabError(f"d must be at least 3, got {self.d}")
        if not 1 <= self.r or 3 * self.r > self.d:
            raise TomolabError(f"need 1 <= r <= d/3, got r={self.r}, d={self.d}")
        if not 0.0 <= self.nu <= 1.0:
            raise TomolabError(f"nu must lie in [0, 1], got {self.nu}")
        u = np.asarray(self.u, dtype=complex)
        k = self.d - self.r
        if u.shape == (k, k):
            u = embed_block_unitary(u, self.d)
        if u.shape != (self.d, self.d) or not is_unitary(u):
            raise TomolabError("u must be a (d-r)×(d-r) unitary or its d×d embedding")
        tail = u[k:, :]
        if not np.allclose(tail[:, k:], np.eye(self.r), atol=1e-9) or not np.allclose(tail[:, :k], 0, atol=1e-9):
            raise TomolabError("embedded unitary must act as identity on the last r coordinates")
        object.__setattr__(self, "u", u)


def rank_r_pure_component(nu: float, i: int, d: int) -> np.ndarray:
    """|ψ_{ν,i}⟩ = √(1-ν)|d+1-i⟩ + √ν|i⟩ for 1 <= i <= d/3 (1-based labels)."""
    if not 1 <= i or 3 * i > d:
        raise TomolabError(f"index i={i} out of range for d={d}")
    if not 0.0 <= nu <= 1.0:
        raise TomolabError(f"nu must lie in [0, 1], got {nu}")
    psi = np.zeros(d, dtype=complex)
    psi[d - i] = np.sqrt(1 - nu)
    psi[i - 1] = np.sqrt(nu)
    return psi


def rank_r_base_matrix(nu: float, r: int, d: int) -> np.ndarray:
    """(1/r) Σ_i |ψ_{ν,i}⟩⟨ψ_{ν,i}| before rotation."""
    psis = np.stack([rank_r_pure_component(nu, i, d) for i in range(1, r + 1)])
    return (psis.T @ psis.conj()) / r


def rank_r_matrix(nu: float, r: int, u: np.ndarray) -> np.ndarray:
    """Unvalidated array form; ``u`` may be a stack of embedded d×d unitaries."""
    d = u.shape[-1]
    base = rank_r_base_matrix(nu, r, d)
    return u @ base @ dagger(u)


def rank_r_state(p: RankREnsembleParams) -> DensityMatrix:
    return DensityMatrix(hermitize(rank_r_matrix(p.nu, p.r, p.u)))
