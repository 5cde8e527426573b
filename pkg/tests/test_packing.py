import math

import numpy as np
import pytest

from tomolab.ensembles import perturbed_matrix
from tomolab.linalg import TomolabError, trace_distance
from tomolab.packing import (
    build_chi2_constrained_packing,
    build_rank_r_packing,
    build_shadow_packing,
    build_trace_packing,
    overlap_samples,
    overlap_tail_bounds,
    overlap_tail_empirical,
    pairwise_trace_distances,
    projector,
    projector_overlap,
    shadow_gap,
    shadow_overlaps,
    verify_packing,
)
from tomolab.randomness import haar_unitaries, haar_unitary, random_povm


def test_trace_packing_verifies_independently():
    res = build_trace_packing(8, 0.5, 30, rng=1)
    assert res.size == 30 and not res.exhausted
    check = verify_packing(res)
    assert check["ok"] and check["min_distance"] > 0.25
    # brute-force one pair against the generic trace distance
    a, b = perturbed_matrix(0.5, res.unitaries[:2])
    assert trace_distance(a, b) > 0.25


def test_packing_is_deterministic():
    a = build_trace_packing(4, 0.5, 10, rng=7)
    b = build_trace_packing(4, 0.5, 10, rng=7)
    assert np.array_equal(a.unitaries, b.unitaries)
    assert a.n_draws == b.n_draws


def test_budget_exhaustion_is_reported():
    # d=2 members are rank-one perturbations; a cap of three draws cannot reach 50
    res = build_trace_packing(2, 0.5, 50, max_draws=3, rng=0)
    assert res.exhausted and res.size <= 3
    assert res.summary()["exhausted"]


def test_packing_argument_errors():
    with pytest.raises(TomolabError):
        build_trace_packing(3, 0.5, 5)
    with pytest.raises(ValueError):
        build_trace_packing(4, 0.5, 0)
    with pytest.raises(ValueError):
        build_trace_packing(4, 0.5, 5000)


def test_chi2_packing_default_cap_is_vacuous():
    povms = [random_povm(4, 2, k) for k in range(2)]
    res = build_chi2_constrained_packing(4, 0.5, 5, povms, rng=3)
    cap = res.constraints[1]
    assert cap.vacuous and cap.rejections == 0
    assert verify_packing(res, povms)["ok"]


def test_chi2_packing_tight_cap_rejects():
    povms = [random_povm(4, 2, k) for k in range(2)]
    res = build_chi2_constrained_packing(4, 0.5, 5, povms, tau=0.01, max_draws=2000, rng=3)
    check = verify_packing(res, povms)
    assert check["ok"] and check["max_chi2"] <= 0.01
    assert res.constraints[1].rejections > 0


def test_shadow_packing_overlaps():
    res = build_shadow_packing(8, 15, rng=2)
    assert res.size == 15
    ov = shadow_overlaps(res.unitaries)
    assert np.allclose(np.diag(ov), 4.0)
    assert verify_packing(res)["max_overlap"] <= 8 / 3


def test_shadow_gap_is_eps_over_three():
    eps = 0.5
    res = build_shadow_packing(8, 10, rng=4)
    g, diag = shadow_gap(res.unitaries, eps)
    assert np.allclose(diag, (1 + eps) / 2)
    mask = ~np.eye(len(g), dtype=bool)
    off = g[mask]
    assert np.all((diag[:, None] - g)[mask] >= eps / 3 - 1e-12)
    assert off.max() <= (1 - eps) / 2 + 2 * eps / 3 + 1e-12


def test_rank_r_packing():
    res = build_rank_r_packing(9, 3, 0.16, 10, rng=5)
    assert res.size == 10
    assert verify_packing(res)["min_distance"] > math.sqrt(0.16) / 4


def test_pairwise_distances_match_loop():
    states = perturbed_matrix(0.3, haar_unitaries(4, 4, 0))
    flat = pairwise_trace_distances(states)
    loop = [trace_distance(states[i], states[j]) for i in range(4) for j in range(i + 1, 4)]
    assert np.allclose(flat, loop)


def test_overlap_samples_match_definition():
    d = 5
    u = haar_unitary(d, 3)
    direct = projector_overlap(projector(d, 2), u, projector(d, 3))
    assert overlap_samples(d, 2, 3, 1, 3)[0] == pytest.approx(direct)


def test_overlap_mean_and_tails():
    x = overlap_samples(16, 8, 8, 5000, 1)
    assert x.mean() == pytest.approx(4.0, abs=0.05)
    lo, hi = overlap_tail_empirical(16, 8, 8, 0.5, 5000, 2)
    blo, bhi = overlap_tail_bounds(8, 8, 0.5)
    assert lo <= blo and hi <= bhi
