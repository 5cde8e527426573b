import numpy as np
import pytest

from tomolab.infotheory import haar_first_moment_exact
from tomolab.linalg import Projector, dagger, is_unitary
from tomolab.measurements import Povm
from tomolab.randomness import (
    RngStream,
    as_generator,
    as_stream,
    ginibre,
    haar_unitaries,
    haar_unitary,
    random_observables,
    random_povm,
)


def test_streams_are_reproducible_and_independent():
    a = RngStream(7, (1, 2)).generator().random(4)
    b = RngStream(7, (1, 2)).generator().random(4)
    c = RngStream(7, (1, 3)).generator().random(4)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_child_extends_path():
    s = RngStream(3).child(4, 5).child(6)
    assert s.path == (4, 5, 6)
    assert RngStream.from_json(s.to_json()) == s


def test_seed_range():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2**64)
    RngStream(2**64 - 1).generator()


def test_coercions():
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    assert isinstance(as_stream(5), RngStream)
    assert isinstance(as_stream(g), RngStream)
    with pytest.raises(TypeError):
        as_generator("seed")


def test_ginibre_is_prefix_consistent():
    big = ginibre((10, 3, 3), RngStream(1).generator())
    small = ginibre((4, 3, 3), RngStream(1).generator())
    assert np.array_equal(big[:4], small)


def test_ginibre_variance():
    z = ginibre((200_000,), RngStream(2).generator())
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)


def test_haar_unitaries_are_unitary():
    us = haar_unitaries(5, 20, 11)
    assert all(is_unitary(u) for u in us)
    assert np.array_equal(haar_unitary(5, 11), us[0])


def test_haar_phase_distribution():
    # the diagonal phases are uniform only after the R-phase correction
    us = haar_unitaries(2, 20_000, 3)
    assert abs(np.mean(us[:, 0, 0])) < 0.02
    assert np.mean(np.abs(us[:, 0, 0]) ** 2) == pytest.approx(0.5, abs=0.01)


def test_haar_first_moment_monte_carlo():
    d = 4
    q = Projector.coordinate(d, [0])
    us = haar_unitaries(d, 20_000, 9)
    avg = (us @ q.matrix @ dagger(us)).mean(axis=0)
    assert np.abs(avg - haar_first_moment_exact(q)).max() < 0.01


def test_random_povm_is_complete():
    m = random_povm(3, 4, 0)
    assert isinstance(m, Povm)
    assert len(m) == 4
    assert np.allclose(sum(m.elements), np.eye(3))
    assert random_povm(3, 1, 0).elements[0].shape == (3, 3)


def test_random_observables_spectrum():
    obs = random_observables(4, 30, 1)
    vals = np.linalg.eigvalsh(obs)
    assert vals.min() >= -1e-12 and vals.max() <= 1 + 1e-12
    signed = np.linalg.eigvalsh(random_observables(4, 30, 1, signed=True))
    assert signed.min() < 0
