import numpy as np
import pytest

from tomolab.ensembles import (
    PerturbedEnsembleParams,
    RankREnsembleParams,
    embed_block_unitary,
    gamma_projectors,
    half_projector,
    perturbed_matrix,
    perturbed_state,
    rank_r_base_matrix,
    rank_r_matrix,
    rank_r_pure_component,
    rank_r_state,
)
from tomolab.linalg import TomolabError, trace_distance
from tomolab.randomness import haar_unitaries, haar_unitary


def test_half_projector():
    q = half_projector(6)
    assert np.trace(q).real == 3
    assert np.allclose(q @ q, q)
    with pytest.raises(TomolabError):
        half_projector(5)


def test_perturbed_state_spectrum():
    d, eps = 8, 0.3
    rho = perturbed_state(PerturbedEnsembleParams(eps, d, haar_unitary(d, 0))).matrix
    vals = np.sort(np.linalg.eigvalsh(rho))
    assert np.allclose(vals[: d // 2], (1 - eps) / d)
    assert np.allclose(vals[d // 2:], (1 + eps) / d)


def test_perturbed_distance_from_mixed():
    # every member sits at trace distance exactly eps from 𝟙/d
    d, eps = 6, 0.4
    for u in haar_unitaries(d, 5, 1):
        assert trace_distance(perturbed_matrix(eps, u), np.eye(d) / d) == pytest.approx(eps)


def test_perturbed_matrix_batches():
    us = haar_unitaries(4, 3, 2)
    stacked = perturbed_matrix(0.2, us)
    assert stacked.shape == (3, 4, 4)
    assert np.allclose(stacked[1], perturbed_matrix(0.2, us[1]))


def test_perturbed_params_validation():
    u = haar_unitary(4, 0)
    with pytest.raises(TomolabError):
        PerturbedEnsembleParams(1.0, 4, u)
    with pytest.raises(TomolabError):
        PerturbedEnsembleParams(0.1, 3, haar_unitary(3, 0))
    with pytest.raises(TomolabError):
        PerturbedEnsembleParams(0.1, 4, np.ones((4, 4)))
    assert np.allclose(perturbed_state(PerturbedEnsembleParams(0.0, 4, u)).matrix, np.eye(4) / 4)


def test_gamma_projectors_partition():
    g0, g1 = gamma_projectors(9, 3)
    assert g0.rank == 3 and g1.rank == 6
    assert np.allclose(g0.matrix + g1.matrix, np.eye(9))


def test_rank_r_components():
    psi = rank_r_pure_component(0.25, 1, 9)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    assert psi[8] == pytest.approx(np.sqrt(0.75)) and psi[0] == pytest.approx(0.5)
    with pytest.raises(TomolabError):
        rank_r_pure_component(0.25, 4, 9)


def test_rank_r_base_is_rank_r_state():
    base = rank_r_base_matrix(0.16, 3, 9)
    assert np.trace(base).real == pytest.approx(1.0)
    assert np.linalg.matrix_rank(base, tol=1e-10) == 3


def test_rank_r_state_rotation_fixes_tail():
    d, r = 9, 3
    v = haar_unitary(d - r, 4)
    p = RankREnsembleParams(0.16, r, d, v)
    rho = rank_r_state(p).matrix
    assert np.allclose(rho, rank_r_matrix(0.16, r, embed_block_unitary(v, d)))
    # the block on the last r coordinates is untouched by the rotation
    base = rank_r_base_matrix(0.16, r, d)
    assert np.allclose(rho[d - r:, d - r:], base[d - r:, d - r:])


def test_rank_r_params_validation():
    with pytest.raises(TomolabError):
        RankREnsembleParams(0.1, 4, 9, np.eye(5))
    with pytest.raises(TomolabError):
        RankREnsembleParams(0.1, 3, 9, haar_unitary(9, 0))
