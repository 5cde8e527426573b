"""Dense complex matrix kernel shared by every other module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The two small
wrapper types, :class:`DensityMatrix` and :class:`Projector`, validate their
invariants once at construction so hot loops can pass raw arrays around.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

HERM_TOL = 1e-9
TRACE_TOL = 1e-9
PSD_TOL = 1e-9


class TomolabError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatch(TomolabError, ValueError):
    pass


class InvalidStateError(TomolabError, ValueError):
    pass


ArrayLike = Union[np.ndarray, "DensityMatrix", "Projector"]


def as_matrix(a: ArrayLike) -> np.ndarray:
    """Return the underlying complex array of ``a``."""
    if isinstance(a, (DensityMatrix, Projector)):
        return a.matrix
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, float(np.linalg.norm(a)))
    return float(np.linalg.norm(a - dagger(a))) <= tol * scale


def hermitize(a: np.ndarray) -> np.ndarray:
    """Symmetrize away round-off: (A + A†)/2."""
    return 0.5 * (a + dagger(a))


def eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition of the symmetrized input."""
    return np.linalg.eigh(hermitize(np.asarray(a, dtype=complex)))


def is_psd(a: np.ndarray, tol: float = PSD_TOL) -> bool:
    if not is_hermitian(a):
        return False
    return bool(np.linalg.eigvalsh(hermitize(a)).min() >= -tol)


def is_unitary(u: np.ndarray, tol: float = 1e-9) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0]))) <= tol


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated d×d quantum state (Hermitian, PSD, unit trace)."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidStateError(f"density matrix must be square, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidStateError("density matrix has non-finite entries")
        if not is_hermitian(m):
            raise InvalidStateError("density matrix is not Hermitian")
        m = hermitize(m)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace is {tr}, expected 1")
        lo = np.linalg.eigvalsh(m).min()
        if lo < -PSD_TOL:
            raise InvalidStateError(f"smallest eigenvalue {lo} is negative")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector P = P² = P† of integer rank."""

    matrix: np.ndarray = field(repr=False)
    rank: int = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"projector must be square, got {m.shape}")
        if not is_hermitian(m):
            raise InvalidStateError("projector is not Hermitian")
        m = hermitize(m)
        scale = max(1.0, float(np.linalg.norm(m)))
        if np.linalg.norm(m @ m - m) > 1e-8 * scale:
            raise InvalidStateError("matrix is not idempotent")
        r = np.trace(m).real
        if abs(r - round(r)) > 1e-8:
            raise InvalidStateError(f"projector trace {r} is not an integer")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "rank", int(round(r)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def coordinate(cls, d: int, indices) -> "Projector":
        """Projector onto the span of the given standard-basis indices (0-based)."""
        diag = np.zeros(d)
        diag[list(indices)] = 1.0
        return cls(np.diag(diag).astype(complex))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def trace_norm(a: ArrayLike) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.abs(np.linalg.eigvalsh(hermitize(as_matrix(a)))).sum())


def trace_distance(a: ArrayLike, b: ArrayLike) -> float:
    """‖a − b‖₁, without the conventional factor 1/2 (range [0, 2] for states)."""
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise DimensionMismatch(f"shapes {ma.shape} and {mb.shape} differ")
    return trace_norm(ma - mb)


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), "fro"))


def operator_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a), 2))


def swap_operator(d: int) -> np.ndarray:
    """The d²×d² permutation W with W(|x⟩⊗|y⟩) = |y⟩⊗|x⟩."""
    if d < 1:
        raise ValueError("d must be positive")
    w = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            w[j * d + i, i * d + j] = 1.0
    return w


def partial_trace_second(ab, d1: int, d2: int) -> np.ndarray:
    """Trace out the second tensor factor of a (d1·d2)×(d1·d2) operator."""
    m = as_matrix(ab)
    if m.shape != (d1 * d2, d1 * d2):
        raise DimensionMismatch(
            f"matrix of shape {m.shape} is not ({d1}*{d2})x({d1}*{d2})")
    return np.einsum("ikjk->ij", m.reshape(d1, d2, d1, d2))


def project_to_density(h) -> DensityMatrix:
    """Clip negative eigenvalues to zero and renormalize to unit trace."""
    m = as_matrix(h)
    if not is_hermitian(m):
        raise InvalidStateError("input is not Hermitian")
    vals, vecs = eigh(m)
    vals = np.clip(vals, 0.0, None)
    total = vals.sum()
    if total <= 0:
        raise InvalidStateError("no positive eigenvalues left after clipping")
    out = (vecs * (vals / total)) @ dagger(vecs)
    return DensityMatrix(hermitize(out))


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Hilbert–Schmidt-random state GG†/Tr(GG†) with G of shape d×rank."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ dagger(g)
    return DensityMatrix(hermitize(m / np.trace(m).real))


# -- matrix JSON: {"d": int, "re": [[...]], "im": [[...]]} ------------------

def matrix_to_json(a) -> dict:
    m = as_matrix(a)
    return {"d": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape or re.ndim != 2:
        raise DimensionMismatch("re/im blocks must be matrices of equal shape")
    d = obj.get("d")
    if d is not None and re.shape[0] != int(d):
        raise DimensionMismatch(f"declared d={d} but matrix has {re.shape[0]} rows")
    m = re + 1j * im
    if not np.all(np.isfinite(m)):
        raise TomolabError("matrix JSON contains non-finite entries")
    return m
