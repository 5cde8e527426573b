"""POVMs, outcome distributions and the single-copy measurement model.

Each copy of the state is measured once and discarded; there is no
post-measurement state. Outcomes are plain indices ``0..m-1``; any semantic
value attached to an outcome (such as ±1 for a Pauli measurement) lives in the
estimator layer.
"""

from __future__ import annotations

import itertools
from typing import Callable, Protocol, Sequence

import numpy as np

from .linalg import (
    PSD_TOL,
    DimensionMismatch,
    TomolabError,
    as_matrix,
    hermitize,
    is_hermitian,
    matrix_from_json,
    matrix_to_json,
)
from .randomness import RngLike, as_generator

COMPLETENESS_TOL = 1e-8
CLAMP_LIMIT = 1e-10
PMF_SUM_TOL = 1e-9
MAX_PAULI_QUBITS = 6


class InvalidPovmError(TomolabError, ValueError):
    pass


class Povm:
    """An ordered list of PSD operators summing to the identity."""

    def __init__(self, elements: Sequence[np.ndarray], *, check: bool = True):
        stack = np.array([np.asarray(e, dtype=complex) for e in elements])
        if stack.ndim != 3 or stack.shape[0] < 1 or stack.shape[1] != stack.shape[2]:
            raise InvalidPovmError("POVM needs at least one square element")
        if check:
            d = stack.shape[1]
            for z, e in enumerate(stack):
                if not is_hermitian(e):
                    raise InvalidPovmError(f"element {z} is not Hermitian")
                if np.linalg.eigvalsh(hermitize(e)).min() < -PSD_TOL:
                    raise InvalidPovmError(f"element {z} is not positive semidefinite")
            gap = np.linalg.norm(stack.sum(axis=0) - np.eye(d))
            if gap > COMPLETENESS_TOL:
                raise InvalidPovmError(f"elements sum to identity only within {gap:.3e}")
        stack = hermitize(stack)
        stack.setflags(write=False)
        self.elements = stack

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def rank(self) -> int:
        """Number of outcomes."""
        return self.elements.shape[0]

    def __len__(self) -> int:
        return self.rank

    @property
    def labels(self) -> range:
        return range(self.rank)

    def weights(self) -> np.ndarray:
        """Tr(M_z)/d, the outcome distribution on the maximally mixed state."""
        return np.einsum("zii->z", self.elements).real / self.dim

    def to_json(self) -> dict:
        return {"d": self.dim, "elements": [matrix_to_json(e) for e in self.elements]}

    @classmethod
    def from_json(cls, obj: dict) -> "Povm":
        povm = cls([matrix_from_json(e) for e in obj["elements"]])
        if "d" in obj and int(obj["d"]) != povm.dim:
            raise DimensionMismatch(f"declared d={obj['d']} but elements are {povm.dim}-dimensional")
        return povm

    def __repr__(self) -> str:
        return f"Povm(d={self.dim}, outcomes={self.rank})"


def _clean_pmf(raw: np.ndarray) -> np.ndarray:
    if raw.min() < -CLAMP_LIMIT:
        raise InvalidPovmError(f"negative outcome probability {raw.min():.3e}")
    probs = np.clip(raw, 0.0, None)
    total = probs.sum(axis=-1, keepdims=True)
    if np.any(np.abs(total - 1.0) > PMF_SUM_TOL):
        raise InvalidPovmError("outcome probabilities do not sum to one")
    return probs / total


def outcome_distribution(m: Povm, rho) -> np.ndarray:
    """p(z) = Tr(M_z ρ), clamped at 0 and renormalized."""
    r = as_matrix(rho)
    if r.shape != (m.dim, m.dim):
        raise DimensionMismatch(f"POVM is {m.dim}-dimensional, state is {r.shape}")
    raw = np.einsum("zij,ji->z", m.elements, r).real
    return _clean_pmf(raw)


def sample_outcome(m: Povm, rho, rng: RngLike) -> int:
    probs = outcome_distribution(m, rho)
    return int(as_generator(rng).choice(len(probs), p=probs))


def sample_outcomes(m: Povm, rho, n: int, rng: RngLike) -> np.ndarray:
    probs = outcome_distribution(m, rho)
    return as_generator(rng).choice(len(probs), size=n, p=probs)


def sample_categorical(probs: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """One draw per row of a (n, m) probability table by inverse-CDF."""
    cdf = np.cumsum(probs, axis=-1)
    u = gen.random(probs.shape[:-1]) * cdf[..., -1]
    idx = (cdf < u[..., None]).sum(axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def rotated_basis_povm(u: np.ndarray) -> Povm:
    """{U|j⟩⟨j|U†}: measure in the basis given by the columns of U."""
    u = np.asarray(u, dtype=complex)
    cols = u.T
    return Povm([np.outer(c, c.conj()) for c in cols])


_SINGLE_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def pauli_operators(q: int) -> list[np.ndarray]:
    """All 4^q Pauli strings over {𝟙, σx, σy, σz}, identity first."""
    if q < 1:
        raise ValueError("q must be at least 1")
    if q > MAX_PAULI_QUBITS:
        raise TomolabError(f"q={q} exceeds the supported maximum of {MAX_PAULI_QUBITS}")
    out = []
    for labels in itertools.product(range(4), repeat=q):
        p = np.array([[1.0 + 0j]])
        for k in labels:
            p = np.kron(p, _SINGLE_PAULIS[k])
        out.append(p)
    return out


def pauli_labels(q: int) -> list[str]:
    return ["".join(s) for s in itertools.product("IXYZ", repeat=q)]


def binary_pauli_povm(p: np.ndarray) -> Povm:
    """{(𝟙+P)/2, (𝟙-P)/2}; outcome 0 means +1 and outcome 1 means -1."""
    p = np.asarray(p, dtype=complex)
    d = p.shape[0]
    if not is_hermitian(p) or np.linalg.norm(p @ p - np.eye(d)) > 1e-9:
        raise InvalidPovmError("P must be a Hermitian involution")
    eye = np.eye(d)
    return Povm([(eye + p) / 2, (eye - p) / 2])


# -- state access -----------------------------------------------------------

class StateSource(Protocol):
    """Single-copy access to an unknown state: one fresh outcome per call."""

    dim: int

    def measure(self, povm: Povm, rng: RngLike) -> int: ...


class SimulatedState:
    """A classically simulated copy source for a known density matrix.

    Besides the one-outcome ``measure`` contract it offers batched fast paths
    that estimators use when available.
    """

    def __init__(self, rho):
        self.rho = hermitize(as_matrix(rho))
        self.dim = self.rho.shape[0]

    def measure(self, povm: Povm, rng: RngLike) -> int:
        return sample_outcome(povm, self.rho, rng)

    def measure_many(self, povm: Povm, count: int, rng: RngLike) -> np.ndarray:
        return sample_outcomes(povm, self.rho, count, rng)

    def measure_bases(self, unitaries: np.ndarray, rng: RngLike) -> np.ndarray:
        """Outcome j for each U in the stack, measuring {U|j⟩⟨j|U†}."""
        gen = as_generator(rng)
        rotated = self.rho @ unitaries
        probs = (unitaries.conj() * rotated).sum(axis=-2).real
        return sample_categorical(np.clip(probs, 0.0, None), gen)

    def expectation(self, op: np.ndarray) -> float:
        return float(np.trace(np.asarray(op) @ self.rho).real)


def measure_bases(source, unitaries: np.ndarray, rng: RngLike) -> np.ndarray:
    """Rotated-basis outcomes from any source, using a batched path if present."""
    if hasattr(source, "measure_bases"):
        return source.measure_bases(unitaries, rng)
    gen = as_generator(rng)
    return np.array([source.measure(rotated_basis_povm(u), gen) for u in unitaries], dtype=int)


def measure_repeated(source, povm: Povm, count: int, rng: RngLike) -> np.ndarray:
    if hasattr(source, "measure_many"):
        return source.measure_many(povm, count, rng)
    gen = as_generator(rng)
    return np.array([source.measure(povm, gen) for _ in range(count)], dtype=int)


AdaptiveStrategy = Callable[[Sequence[int]], Povm]
"""Maps the outcome history y_{<i} to the POVM used on copy i."""


def run_adaptive(strategy: AdaptiveStrategy, source, n: int, rng: RngLike) -> list[int]:
    """Measure ``n`` copies, choosing each POVM from the outcomes so far."""
    gen = as_generator(rng)
    history: list[int] = []
    for _ in range(n):
        povm = strategy(tuple(history))
        history.append(int(source.measure(povm, gen)))
    return history


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def rotated_vectors(unitaries: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    """U_k|j_k⟩ for each record, shape (n, d)."""
    return unitaries[np.arange(len(outcomes)), :, outcomes]

