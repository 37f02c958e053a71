"""Acceptance gate: the eleven checks the package must pass, at pinned
tolerances, each criterion exercised end to end through the public API.
"""

import os
import subprocess
import sys
import time

from boxlab.suite import (
    check_bilinear,
    check_box_oracle,
    check_counting,
    check_cutnorm,
    check_certifier_examples,
    check_ell_rules,
    check_gcs,
    check_norm_axioms,
    check_sum_family,
    check_near_majorant,
    check_vonneumann,
)

TOL = 1e-9


def test_01_box_norm_recursive_matches_direct_enumeration():
    t0 = time.perf_counter()
    res = check_box_oracle({"count": 500, "seed": 101})
    elapsed = time.perf_counter() - t0
    assert res.holds is True
    assert res.lhs <= TOL
    assert res.details["count"] == 500
    assert elapsed < 60.0


def test_02_product_expectation_bounded_by_norm_product():
    res = check_gcs({"count": 500, "seed": 102})
    assert res.holds is True
    assert res.details["worst_excess"] <= 0.0
    assert res.details["equality_gap"] <= TOL


def test_03_norm_axioms_battery():
    res = check_norm_axioms({"count": 500, "seed": 103})
    assert res.holds is True
    assert res.lhs <= res.rhs
    assert res.details["count"] == 500


def test_04_bilinear_bound_battery():
    res = check_bilinear({"count": 200, "seed": 104})
    assert res.holds is True
    assert res.details["count"] == 200


def test_05_cut_norm_oracles_and_heuristic():
    res = check_cutnorm({"seed": 105})
    assert res.holds is True
    assert res.lhs <= 0.0
    assert res.details["heuristic_matches"] == res.details["heuristic_count"] == 100


def test_06_counting_certificates_battery():
    res_vn = check_vonneumann({"count": 100, "seed": 106})
    assert res_vn.holds is True
    assert res_vn.details["count"] == 100
    res_ct = check_counting({"count": 100, "seed": 107})
    assert res_ct.holds is True
    assert res_ct.details["count"] == 100


def test_07_replica_count_rules():
    res = check_ell_rules({})
    assert res.holds is True
    assert res.details["mismatches"] == []
    assert res.details["cases"] >= 20


def test_08_certifier_example_verdicts():
    res = check_certifier_examples({"seed": 108})
    assert res.holds is True
    out = res.details["outcomes"]
    assert out["ones"] == "true"
    assert out["zero_edge"] == "false"
    assert out["zero_edge_condition"] == "false"
    assert out["perturbed"] == "true"
    assert 0.0 <= res.details["measured_eta"] < 1.0


def test_09_sum_family_certificate_end_to_end():
    t0 = time.perf_counter()
    res = check_sum_family({"seed": 109})
    elapsed = time.perf_counter() - t0
    assert res.holds is True
    assert res.details["verdict"] == "true"
    assert all(res.details["hypotheses"].values())
    assert 0.0 < res.details["eta"] <= res.details["constants"]["eta_cap"]
    assert res.details["constants"]["ell"] == 2
    assert elapsed < 300.0


def test_10_near_majorant_certificate_end_to_end():
    res = check_near_majorant({"seed": 110})
    assert res.holds is True
    d = res.details
    assert d["verdict"] == "true"
    assert all(d["hypotheses"].values())
    assert d["oracle_gap_sup"] <= d["eta"] + TOL
    assert d["oracle_shifted_gap_sup"] <= d["eta"] + TOL
    assert d["oracle_centered_sup"] <= d["oracle_centered_bound"] + TOL
    assert d["oracle_mass_sup"] <= d["oracle_mass_bound"] + TOL


def _run_suite_cli(threads: str) -> bytes:
    env = dict(os.environ)
    env["BOXLAB_THREADS"] = threads
    proc = subprocess.run(
        [sys.executable, "-m", "boxlab", "suite", "--stable"],
        capture_output=True,
        env=env,
    )
    assert proc.returncode == 0, proc.stderr.decode()[:2000]
    return proc.stdout


def test_11_suite_reports_bit_identical_across_runs_and_threads():
    single = _run_suite_cli("1")
    single_again = _run_suite_cli("1")
    parallel = _run_suite_cli("8")
    assert single == single_again
    assert single == parallel
