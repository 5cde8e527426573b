"""Seeded, splittable randomness and Haar-random unitaries.

An :class:`RngStream` is an immutable ``(seed, path)`` descriptor. The same
descriptor always yields the same ``numpy`` generator, and child paths give
independent streams (``SeedSequence`` spawn keys), so parallel trials are
reproducible no matter how work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .linalg import TomolabError, dagger

MAX_POVM_RETRIES = 10


@dataclass(frozen=True)
class RngStream:
    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, *index: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(i) for i in index))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))

    def to_json(self) -> dict:
        return {"seed": self.seed, "path": list(self.path)}

    @classmethod
    def from_json(cls, obj: dict) -> "RngStream":
        return cls(int(obj["seed"]), tuple(obj.get("path", ())))


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def as_stream(rng: RngLike) -> RngStream:
    """Coerce to a stream; a bare generator is consumed once to seed a fresh root."""
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    if isinstance(rng, np.random.Generator):
        return RngStream(int(rng.integers(0, 2**63)))
    raise TypeError(f"cannot build a stream from {type(rng).__name__}")


def ginibre(shape, gen: np.random.Generator) -> np.ndarray:
    """Complex Gaussian matrices with E|z|² = 1 per entry.

    Real and imaginary parts are drawn interleaved, so a smaller leading
    dimension yields a prefix of the larger draw from the same generator.
    """
    shape = tuple(np.atleast_1d(shape))
    z = gen.standard_normal(shape + (2,)).view(np.complex128)[..., 0]
    return z / np.sqrt(2.0)


def haar_unitaries(d: int, size: int, rng: RngLike) -> np.ndarray:
    """Stack of ``size`` independent Haar-random d×d unitaries.

    QR of a Ginibre matrix, then each column of Q is multiplied by the phase of
    the matching diagonal entry of R. Without that correction the output is not
    Haar distributed.
    """
    if d < 1:
        raise ValueError("d must be positive")
    gen = as_generator(rng)
    z = ginibre((size, d, d), gen)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phase = diag / np.abs(diag)
    return q * phase[:, None, :]


def haar_unitary(d: int, rng: RngLike) -> np.ndarray:
    return haar_unitaries(d, 1, rng)[0]


def random_povm(d: int, ell: int, rng: RngLike):
    """Random ℓ-outcome POVM {S^{-1/2} G_z G_z† S^{-1/2}} with S = Σ G_z G_z†."""
    from .measurements import Povm

    if d < 1 or ell < 1:
        raise ValueError("need d >= 1 and ell >= 1")
    if ell == 1:
        return Povm([np.eye(d, dtype=complex)])
    gen = as_generator(rng)
    for _ in range(MAX_POVM_RETRIES):
        g = ginibre((ell, d, d), gen)
        parts = g @ dagger(g)
        s = parts.sum(axis=0)
        vals, vecs = np.linalg.eigh(0.5 * (s + dagger(s)))
        if vals.min() <= 1e-12 * max(1.0, vals.max()):
            continue
        s_inv_half = (vecs / np.sqrt(vals)) @ dagger(vecs)
        elems = s_inv_half @ parts @ s_inv_half
        elems = 0.5 * (elems + dagger(elems))
        return Povm(list(elems))
    raise TomolabError(f"random_povm: singular frame operator after {MAX_POVM_RETRIES} draws")


def random_observables(d: int, count: int, rng: RngLike, *, signed: bool = False) -> np.ndarray:
    """Random Hermitian observables V diag(λ) V† with Haar V.

    Eigenvalues are uniform on [0, 1] (so 0 ⪯ O ⪯ 𝟙), or on [-1, 1] when
    ``signed`` is set (so -𝟙 ⪯ X ⪯ 𝟙).
    """
    gen = as_generator(rng)
    v = haar_unitaries(d, count, gen)
    lo = -1.0 if signed else 0.0
    lam = gen.uniform(lo, 1.0, size=(count, d))
    return (v * lam[:, None, :]) @ dagger(v)
