import numpy as np
import pytest

from tomolab.linalg import DensityMatrix, DimensionMismatch, random_density_matrix
from tomolab.measurements import (
    InvalidPovmError,
    Povm,
    SimulatedState,
    binary_pauli_povm,
    measure_bases,
    measure_repeated,
    outcome_distribution,
    pauli_labels,
    pauli_operators,
    rotated_basis_povm,
    rotated_vectors,
    run_adaptive,
    sample_categorical,
    total_variation,
)
from tomolab.randomness import haar_unitaries, haar_unitary, random_povm


def test_povm_validation():
    Povm([np.eye(2) / 2, np.eye(2) / 2])
    with pytest.raises(InvalidPovmError):
        Povm([np.eye(2) / 2])
    with pytest.raises(InvalidPovmError):
        Povm([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])])


def test_povm_json_round_trip():
    m = random_povm(3, 3, 1)
    back = Povm.from_json(m.to_json())
    assert np.allclose(back.elements, m.elements)
    assert back.weights().sum() == pytest.approx(1.0)


def test_outcome_distribution_matches_trace():
    rho = random_density_matrix(3, np.random.default_rng(0)).matrix
    m = random_povm(3, 4, 2)
    p = outcome_distribution(m, rho)
    assert np.allclose(p, [np.trace(e @ rho).real for e in m.elements])
    with pytest.raises(DimensionMismatch):
        outcome_distribution(m, np.eye(2) / 2)


def test_pauli_operators():
    ps = pauli_operators(2)
    assert len(ps) == 16 and pauli_labels(2)[0] == "II"
    assert np.allclose(ps[0], np.eye(4))
    gram = np.array([[np.trace(a.conj().T @ b) for b in ps] for a in ps])
    assert np.allclose(gram, 4 * np.eye(16))


def test_binary_pauli_povm_sign_convention():
    z = pauli_operators(1)[3]
    m = binary_pauli_povm(z)
    up = DensityMatrix.pure([1, 0])
    assert np.allclose(outcome_distribution(m, up), [1, 0])
    with pytest.raises(InvalidPovmError):
        binary_pauli_povm(np.diag([1.0, 0.5]))


def test_sample_categorical_frequencies():
    gen = np.random.default_rng(1)
    probs = np.tile([0.2, 0.5, 0.3], (60_000, 1))
    z = sample_categorical(probs, gen)
    assert np.allclose(np.bincount(z, minlength=3) / len(z), [0.2, 0.5, 0.3], atol=0.01)


def test_measure_bases_frequencies():
    d = 3
    rho = random_density_matrix(d, np.random.default_rng(3)).matrix
    u = haar_unitary(d, 5)
    src = SimulatedState(rho)
    js = src.measure_bases(np.repeat(u[None], 40_000, axis=0), 6)
    expected = outcome_distribution(rotated_basis_povm(u), rho)
    assert total_variation(np.bincount(js, minlength=d) / len(js), expected) < 0.01


class _OneAtATime:
    """A source with only the minimal single-outcome contract."""

    def __init__(self, rho):
        self.inner = SimulatedState(rho)
        self.dim = self.inner.dim

    def measure(self, povm, rng):
        return self.inner.measure(povm, rng)


def test_generic_source_paths():
    rho = np.diag([1.0, 0.0]).astype(complex)
    src = _OneAtATime(rho)
    us = haar_unitaries(2, 5, 0)
    js = measure_bases(src, us, 1)
    assert js.shape == (5,)
    m = binary_pauli_povm(pauli_operators(1)[3])
    assert np.all(measure_repeated(src, m, 10, 2) == 0)


def test_run_adaptive_sees_history():
    z = binary_pauli_povm(pauli_operators(1)[3])
    x = binary_pauli_povm(pauli_operators(1)[1])
    seen = []

    def strategy(history):
        seen.append(history)
        return x if history and history[-1] == 0 else z

    out = run_adaptive(strategy, SimulatedState(np.diag([1.0, 0.0])), 5, 0)
    assert out[0] == 0
    assert [len(h) for h in seen] == list(range(5))


def test_rotated_vectors():
    us = haar_unitaries(3, 4, 0)
    js = np.array([0, 2, 1, 0])
    v = rotated_vectors(us, js)
    assert np.allclose(v[1], us[1][:, 2])
