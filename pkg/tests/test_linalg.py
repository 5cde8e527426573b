import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tomolab.linalg import (
    DensityMatrix,
    DimensionMismatch,
    InvalidStateError,
    Projector,
    frobenius_norm,
    is_hermitian,
    is_psd,
    is_unitary,
    matrix_from_json,
    matrix_to_json,
    operator_norm,
    partial_trace_second,
    project_to_density,
    random_density_matrix,
    swap_operator,
    trace_distance,
    trace_norm,
)


def test_density_matrix_validation():
    DensityMatrix.maximally_mixed(4)
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.eye(2))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(InvalidStateError):
        DensityMatrix(np.ones((2, 3)) / 2)


def test_density_matrix_is_read_only():
    rho = DensityMatrix.pure([1, 1j])
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1.0
    assert np.isclose(np.trace(rho.matrix).real, 1.0)


def test_projector_rank_and_rejection():
    p = Projector.coordinate(5, [0, 2])
    assert p.rank == 2 and p.dim == 5
    with pytest.raises(InvalidStateError):
        Projector(np.diag([1.0, 0.5]))


def test_trace_distance_has_no_half_factor():
    a = DensityMatrix.pure([1, 0])
    b = DensityMatrix.pure([0, 1])
    assert trace_distance(a, b) == pytest.approx(2.0)
    with pytest.raises(DimensionMismatch):
        trace_distance(np.eye(2) / 2, np.eye(3) / 3)


def test_norm_ordering(gen):
    x = random_density_matrix(6, gen).matrix - random_density_matrix(6, gen).matrix
    assert operator_norm(x) <= frobenius_norm(x) + 1e-12
    assert frobenius_norm(x) <= trace_norm(x) + 1e-12
    assert trace_norm(x) <= np.sqrt(6) * frobenius_norm(x) + 1e-12


def test_swap_operator_action(gen):
    d = 3
    x, y = gen.normal(size=d), gen.normal(size=d)
    w = swap_operator(d)
    assert np.allclose(w @ np.kron(x, y), np.kron(y, x))
    assert np.allclose(w @ w, np.eye(d * d))
    assert np.trace(w).real == pytest.approx(d)


def test_partial_trace_of_product(gen):
    a = random_density_matrix(2, gen).matrix
    b = random_density_matrix(3, gen).matrix
    assert np.allclose(partial_trace_second(np.kron(a, b), 2, 3), a)
    with pytest.raises(DimensionMismatch):
        partial_trace_second(np.eye(5), 2, 3)


def test_project_to_density_clips_and_renormalizes():
    out = project_to_density(np.diag([0.7, 0.5, -0.2]))
    assert np.allclose(np.diag(out.matrix).real, [0.7 / 1.2, 0.5 / 1.2, 0.0])
    with pytest.raises(InvalidStateError):
        project_to_density(-np.eye(2))


def test_project_to_density_fixes_valid_state(gen):
    rho = random_density_matrix(4, gen)
    assert np.allclose(project_to_density(rho.matrix).matrix, rho.matrix)


def test_matrix_json_round_trip(gen):
    rho = random_density_matrix(3, gen).matrix
    assert np.array_equal(matrix_from_json(matrix_to_json(rho)), rho)
    with pytest.raises(DimensionMismatch):
        matrix_from_json({"d": 4, "re": [[1.0]], "im": [[0.0]]})


@settings(max_examples=40, deadline=None)
@given(d=st.integers(1, 6), rank=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_random_states_are_valid(d, rank, seed):
    rank = min(rank, d)
    rho = random_density_matrix(d, np.random.default_rng(seed), rank=rank).matrix
    assert is_hermitian(rho) and is_psd(rho)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.matrix_rank(rho, tol=1e-10) == rank


def test_is_unitary():
    assert is_unitary(np.array([[0, 1], [1, 0]]))
    assert not is_unitary(np.eye(2) * 1.01)
