import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tomolab.ensembles import half_projector, perturbed_matrix, rank_r_matrix, embed_block_unitary
from tomolab.infotheory import (
    Chi2TailParams,
    SupportError,
    chi2_divergence,
    conditional_mutual_information,
    empirical_tail,
    entropy,
    expected_chi2_bound,
    f_chi2,
    f_chi2_batch,
    f_chi2_mean_exact,
    fano_required_mi,
    haar_second_moment_exact,
    kl_divergence,
    mi_chi2_upper_bound,
    mutual_information,
    perturbed_twirl_exact,
    rank_r_first_moment,
    rank_r_second_moment_bound,
    rank_r_second_moment_exact,
    sample_lower_bound,
    second_moment_bound,
    second_moment_exact,
)
from tomolab.linalg import Projector, TomolabError, dagger, swap_operator
from tomolab.measurements import outcome_distribution
from tomolab.randomness import haar_unitaries, random_observables, random_povm


def _pmf(raw):
    raw = np.asarray(raw, dtype=float) + 1e-3
    return raw / raw.sum()


pmfs = arrays(np.float64, 5, elements=st.floats(0, 1))


def test_worked_divergences():
    assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(1.0)
    assert chi2_divergence([1, 0], [0.5, 0.5]) == pytest.approx(1.0)
    assert kl_divergence([0.5, 0.5], [1, 0]) == math.inf
    with pytest.raises(SupportError):
        chi2_divergence([0.5, 0.5], [1, 0])


def test_pmf_validation():
    with pytest.raises(TomolabError):
        kl_divergence([0.5, 0.6], [0.5, 0.5])
    with pytest.raises(TomolabError):
        chi2_divergence([1.2, -0.2], [0.5, 0.5])


@settings(max_examples=60, deadline=None)
@given(pmfs, pmfs)
def test_kl_below_log_one_plus_chi2(a, b):
    p, q = _pmf(a), _pmf(b)
    kl = kl_divergence(p, q)
    assert 0.0 <= kl <= math.log2(1 + chi2_divergence(p, q)) + 1e-12


def test_entropy_and_fano():
    assert entropy(np.full(8, 1 / 8)) == pytest.approx(3.0)
    assert fano_required_mi(1024, 1 / 3) == pytest.approx(17 / 3)
    with pytest.raises(ValueError):
        fano_required_mi(1, 0.1)


def test_mutual_information_extremes():
    assert mutual_information(np.outer([0.3, 0.7], [0.4, 0.6])) == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(np.diag([0.25] * 4)) == pytest.approx(2.0)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (3, 2, 4), elements=st.floats(0, 1)))
def test_chain_rule_and_chi2_bound(raw):
    j = raw + 1e-3
    j /= j.sum()
    whole = mutual_information(j.reshape(3, -1))
    parts = mutual_information(j.sum(axis=2)) + conditional_mutual_information(j)
    assert whole == pytest.approx(parts, abs=1e-9)
    jxy = j.sum(axis=1)
    assert mutual_information(jxy) <= mi_chi2_upper_bound(jxy, jxy.sum(axis=0)) + 1e-12


def test_f_chi2_matches_direct_oracle():
    d, eps = 4, 0.5
    m = random_povm(d, 3, 1)
    for u in haar_unitaries(d, 5, 2):
        p = outcome_distribution(m, perturbed_matrix(eps, u))
        assert f_chi2(eps, d, m, u) == pytest.approx(chi2_divergence(p, m.weights()), rel=1e-9)


def test_f_chi2_mean_exact_against_monte_carlo():
    d, eps = 4, 0.5
    m = random_povm(d, 2, 3)
    vals = f_chi2_batch(eps, m, haar_unitaries(d, 40_000, 4))
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - f_chi2_mean_exact(eps, m)) < 5 * se


def test_expected_chi2_bound_worked_value():
    assert expected_chi2_bound(0.5, 4, 2) == pytest.approx(1 / 30)
    assert expected_chi2_bound(0.5, 4, None) == pytest.approx(0.05)


@pytest.mark.parametrize("d,ell", [(4, 2), (4, 4), (6, 3), (8, 2)])
def test_exact_mean_respects_bound(d, ell):
    for k in range(5):
        m = random_povm(d, ell, 100 + k)
        assert f_chi2_mean_exact(0.4, m) <= expected_chi2_bound(0.4, d, ell) + 1e-12


def test_perturbed_twirl_worked_value():
    w = swap_operator(4)
    assert np.allclose(perturbed_twirl_exact(4), (14 * np.eye(16) + 4 * w) / 60)


def test_haar_second_moment_against_monte_carlo():
    d = 3
    p1, p2 = Projector.coordinate(d, [0]), Projector.coordinate(d, [0, 1])
    us = haar_unitaries(d, 20_000, 5)
    a = us @ p1.matrix @ dagger(us)
    b = us @ p2.matrix @ dagger(us)
    mc = np.einsum("nij,nkl->ikjl", a, b).reshape(d * d, d * d) / len(us)
    assert np.abs(mc - haar_second_moment_exact(p1, p2)).max() < 0.01
    with pytest.raises(TomolabError):
        haar_second_moment_exact(Projector.coordinate(d, [2]), p2)


def test_second_moment_exact_and_bound():
    d, eps = 6, 0.4
    us = haar_unitaries(d, 20_000, 6)
    rho = perturbed_matrix(eps, us)
    for m in random_observables(d, 4, 7):
        vals = np.einsum("ij,nji->n", m, rho).real ** 2
        se = vals.std(ddof=1) / np.sqrt(vals.size)
        exact = second_moment_exact(m, eps, d)
        assert abs(vals.mean() - exact) < 5 * se
        assert exact <= second_moment_bound(m, eps, d) + 1e-12
    with pytest.raises(TomolabError):
        second_moment_exact(2 * np.eye(d), eps, d)


def test_rank_r_moments():
    d, r, nu = 9, 3, 0.16
    vs = haar_unitaries(d - r, 20_000, 8)
    us = np.array([embed_block_unitary(v, d) for v in vs])
    sig = rank_r_matrix(nu, r, us)
    for m in random_observables(d, 3, 9):
        vals = np.einsum("ij,nji->n", m, sig).real
        se1 = vals.std(ddof=1) / np.sqrt(vals.size)
        se2 = (vals**2).std(ddof=1) / np.sqrt(vals.size)
        assert abs(vals.mean() - rank_r_first_moment(m, nu, r, d)) < 5 * se1
        exact = rank_r_second_moment_exact(m, nu, r, d)
        assert abs((vals**2).mean() - exact) < 5 * se2
        assert exact <= rank_r_second_moment_bound(m, nu, r, d) + 1e-12


def test_tail_params():
    t = Chi2TailParams(0.5, 8)
    assert t.alpha == pytest.approx(2 * 0.25 / 8)
    assert Chi2TailParams(0.5, 8, ell=2).alpha == pytest.approx(4 * 2 * 0.25 / (3 * 64))
    assert t.threshold(1) == pytest.approx(t.alpha + 0.25 * math.log(3) * 768 / 64)
    # at desk-scale d the union-bound threshold exceeds ε², so it cannot bind
    assert t.is_vacuous(1)
    assert not Chi2TailParams(0.5, 256).is_vacuous(3)
    assert t.tail(0.0) == pytest.approx(1.0)


def test_empirical_tail():
    assert np.allclose(empirical_tail([1, 2, 3, 4], [0, 2, 4]), [1.0, 0.5, 0.0])


def test_lower_bound_claims_and_value():
    lb = sample_lower_bound(16, 0.1)
    assert lb.claim == "nonadaptive-arbitrary"
    req = (2 / 3) * (16 * 16 / 32) / math.log(2) - 1
    assert lb.required_information == pytest.approx(req)
    assert float(lb) == pytest.approx(req / (0.01 / 17 / math.log(2)))
    assert sample_lower_bound(16, 0.1, ell=2).claim == "nonadaptive-l-outcome"
    assert sample_lower_bound(16, 0.1, log_m=2.0).claim == "adaptive-m-settings"
    assert sample_lower_bound(16, 0.1, ell=2, log_m=2.0).claim == "adaptive-l-outcome-m-settings"
    assert sample_lower_bound(16, 0.1, mode="rank-r", r=2).claim == "rank-r-arbitrary"
    assert sample_lower_bound(16, 0.1, ell=2, mode="rank-r", r=2).claim == "rank-r-l-outcome"
    assert sample_lower_bound(16, 0.1, mode="shadow", n_observables=100).claim == "shadow-m-settings"


def test_lower_bound_scaling_laws():
    a, b = sample_lower_bound(64, 0.1), sample_lower_bound(128, 0.1)
    assert float(b) / float(a) == pytest.approx(8.0, rel=0.1)
    c = sample_lower_bound(64, 0.05)
    assert float(c) / float(a) == pytest.approx(4.0, rel=1e-9)
    a4, b4 = sample_lower_bound(64, 0.1, ell=2), sample_lower_bound(128, 0.1, ell=2)
    assert float(b4) / float(a4) == pytest.approx(16.0, rel=0.1)


def test_lower_bound_domain_errors():
    with pytest.raises(ValueError):
        sample_lower_bound(16, 0.2, mode="rank-r", r=2)
    with pytest.raises(ValueError):
        sample_lower_bound(16, 0.1, mode="shadow")
    with pytest.raises(ValueError):
        sample_lower_bound(16, 0.1, mode="bogus")
    with pytest.raises(ValueError):
        sample_lower_bound(1, 0.1)
