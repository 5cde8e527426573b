import json
import math

import numpy as np
import pytest

from tomolab.experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    load_config,
    run,
    write_reports,
)
from tomolab.experiments.config import config_from_dict
from tomolab.experiments.report import FAIL, PASS
from tomolab.experiments.risk import (
    BisectionBudgetError,
    find_threshold,
    fit_slope,
    pauli_risk,
    random_basis_risk,
)
from tomolab.experiments.tables import property_suite
from tomolab.randomness import RngStream

SMALL = dict(
    d_list=[2, 4],
    eps_list=[0.5],
    trials=30,
    n_grid=[50, 100],
    mc_samples=100_000,
    chi2_samples=400,
    povms_per_cell=4,
    observables_per_d=4,
    shadow_shots=4000,
    tail_trials=400,
    packing_n=8,
    shadow_packing_n=5,
    rank_r_packing=[9, 3, 0.16, 5],
    shadow_trials=4,
    n_observables=8,
    discriminate_trials=4,
    discriminate_m=4,
    n=500,
)


def small(**kw):
    return config_from_dict({**SMALL, **kw})


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        config_from_dict({"not_a_key": 1})
    with pytest.raises(ConfigError):
        config_from_dict({"eps_list": [1.5]})
    with pytest.raises(ConfigError):
        config_from_dict({"kind": "bogus"})


def test_load_config_with_override(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("seed: 5\nd_list: [4]\n")
    cfg = load_config(p, seed=9)
    assert cfg.seed == 9 and cfg.d_list == [4]
    assert load_config(p).seed == 5
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_report_csv_layout():
    rep = ExperimentReport("demo", {})
    rep.add("claim.a", "tag-a", {"d": 2}, 0.5, 0.5, 0.01, PASS, {"ratio": 1.0})
    rep.add("claim.b", "tag-b", {"d": 4, "n": 10}, 1 / 3, math.nan, math.nan, FAIL)
    lines = rep.csv_text().splitlines()
    assert lines[0] == "claim_id,d,n,empirical,theory,se,ratio,verdict,anchor"
    assert lines[1].startswith("claim.a,2,,0.5,0.5,0.01,1")
    assert lines[2].endswith("fail,tag-b")
    assert rep.n_failed == 1 and not rep.passed


def test_closed_form_risks():
    assert random_basis_risk(2, 100, 0.5) == pytest.approx(4.5 / 100)
    assert pauli_risk(np.eye(2) / 2, 50) == pytest.approx(3 / 100)


def test_find_threshold_on_exact_curve():
    # a deterministic error c/n drops below eps at n* = c/eps
    search = find_threshold(lambda n: 200.0 / n, 100, 0.2, 20, 0.02)
    assert search.converged
    assert search.n_star == pytest.approx(1000, rel=0.03)
    with pytest.raises(BisectionBudgetError):
        find_threshold(lambda n: 200.0 / n, 100, 0.2, 2, 0.001)


def test_fit_slope_recovers_power_law():
    ds = np.array([2, 4, 8, 16])
    fit = fit_slope(ds, 3.0 * ds**3)
    assert fit["slope"] == pytest.approx(3.0)


def test_property_suite_has_no_violations():
    res = property_suite(100, RngStream(1))
    assert sum(res["violations"].values()) == 0


@pytest.mark.parametrize("name", ["moments", "chi2", "bounds", "packing", "risk", "shadows",
                                  "discriminate", "tables", "tomography"])
def test_runners_pass_on_small_config(name, tmp_path):
    reports = run(name, small(seed=3), tmp_path)
    assert reports and all(r.rows for r in reports)
    failed = [(r.claim_id, r.params) for rep in reports for r in rep.rows if r.verdict == FAIL]
    assert not failed


def test_pauli_risk_runner():
    reports = run("risk", small(seed=4, kind="pauli", q_list=[1], s_grid=[50]))
    assert {r.claim_id for r in reports[0].rows} >= {"risk.pauli.bound", "risk.pauli.mixed-exact"}


def test_tomography_reads_state_file(tmp_path):
    from tomolab.linalg import matrix_to_json

    state = tmp_path / "rho.json"
    state.write_text(json.dumps(matrix_to_json(np.diag([0.5, 0.5, 0, 0]).astype(complex))))
    run("tomography", small(state_file=str(state), method="pauli", n=200), tmp_path)
    est = json.loads((tmp_path / "estimate.json").read_text())
    assert est["truth"]["d"] == 4 and est["n_used"] == 200 * 15


def test_outputs_are_deterministic(tmp_path):
    cfg = small(seed=11)
    a, b = tmp_path / "a", tmp_path / "b"
    write_reports(run("chi2", cfg), a, "test")
    write_reports(run("chi2", cfg), b, "test")
    assert (a / "chi2.csv").read_bytes() == (b / "chi2.csv").read_bytes()
    doc = json.loads((a / "report.json").read_text())
    assert "timestamp" in doc["metadata"]
    assert doc["experiments"]["chi2"]["rows"]
