import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boxlab.errors import (
    BadSpec,
    DigitOutOfRange,
    MalformedProblem,
    POutOfRange,
    SubsetCapExceeded,
    WrongHypergraph,
)
from boxlab.pseudo import (
    PseudoParams,
    Slot,
    SupProblem,
    bounded_slot_mass_sup,
    centered_family_correlation_sup,
    certify_pseudorandom,
    check_C1,
    check_C2a,
    check_C2b,
    check_C3,
    conditional_onto_edge,
    ell_pseudorandom,
    full_family,
    linear_forms_deviation,
    majorant_gap_correlation_sup,
    measure_eta,
    replica_mass_max,
    shifted_majorant_gap_correlation_sup,
    sup_multilinear,
    sum_family_certificate,
    near_majorant_certificate,
)
from boxlab.spaces import INF, Exponent, constant_function, edge_function, make_system

from oracles import conditional_brute, deviation_brute, sup_correlation_brute

seeds = st.integers(min_value=0, max_value=2**31 - 1)

K3_EDGES = [(0, 1), (0, 2), (1, 2)]


def k3_system(atoms=2):
    return make_system([np.ones(atoms) / atoms] * 3, K3_EDGES)


def ones_family(system):
    return {e: constant_function(system, e, 1.0) for e in system.edges}


def perturbed_family(system, seed, eps):
    rng = np.random.Generator(np.random.Philox(key=seed))
    fam = {}
    for e in system.edges:
        vals = 1.0 + eps * rng.uniform(-1, 1, size=system.edge_shape(e))
        fam[e] = edge_function(system, e, np.maximum(vals, 0.0))
    return fam


class TestEllRule:
    @pytest.mark.parametrize(
        "C,p,want",
        [
            (1.0, 4.0, 4),
            (1.0, float("inf"), 2),
            (2.0, 2.0, 6),
            (1.0, 2.0, 6),  # 2q + (1 - 1/C) + 1/p = 4.5
            (1.5, 3.0, 4),
        ],
    )
    def test_table(self, C, p, want):
        p_exp = INF if math.isinf(p) else Exponent(p)
        assert ell_pseudorandom(C, p_exp) == want

    def test_errors(self):
        with pytest.raises(BadSpec):
            ell_pseudorandom(0.5, Exponent(2.0))
        with pytest.raises(POutOfRange):
            ell_pseudorandom(1.0, Exponent(1.0))


class TestPseudoParams:
    def test_resolved_ell_defaults_to_rule(self):
        params = PseudoParams(1.0, 0.1, Exponent(4.0))
        assert params.resolved_ell() == 4
        assert PseudoParams(1.0, 0.1, Exponent(4.0), ell=8).resolved_ell() == 8

    def test_validation(self):
        with pytest.raises(BadSpec):
            PseudoParams(0.5, 0.1, Exponent(2.0)).validate()
        with pytest.raises(BadSpec):
            PseudoParams(1.0, 0.0, Exponent(2.0)).validate()
        with pytest.raises(BadSpec):
            PseudoParams(1.0, 1.5, Exponent(2.0)).validate()
        with pytest.raises(BadSpec):
            PseudoParams(1.0, 0.1, Exponent(2.0), c2b_replicas=0).validate()

    def test_to_dict(self):
        d = PseudoParams(2.0, 0.25, INF).to_dict()
        assert d == {"C": 2.0, "eta": 0.25, "p": "inf", "ell": 4, "c2b_replicas": 2}


class TestFullFamily:
    def test_nonnegativity_enforced(self):
        sys_ = k3_system()
        fam = ones_family(sys_)
        fam[(0, 1)] = edge_function(sys_, (0, 1), [[1.0, -0.1], [1.0, 1.0]])
        with pytest.raises(BadSpec):
            full_family(sys_, fam, nonnegative=True)
        # signed families pass without the flag
        assert set(full_family(sys_, fam)) == set(K3_EDGES)


class TestSupProblem:
    def test_validation(self):
        sys_ = k3_system()
        kernel = constant_function(sys_, (0, 1), 1.0)
        with pytest.raises(MalformedProblem):
            SupProblem(sys_, (0, 1), 2, kernel,
                       (Slot((0, 1), 0, None),)).validate()
        with pytest.raises(DigitOutOfRange):
            SupProblem(sys_, (0, 1), 2, kernel,
                       (Slot((0, 2), 5, None),)).validate()
        with pytest.raises(DigitOutOfRange):
            SupProblem(sys_, (0, 1), 2, kernel, (), kernel_replica=2).validate()
        bad_bound = edge_function(sys_, (0, 2), [[1.0, -1.0], [1.0, 1.0]])
        with pytest.raises(MalformedProblem):
            SupProblem(sys_, (0, 1), 2, kernel,
                       (Slot((0, 2), 0, bad_bound),)).validate()

    @given(seeds)
    @settings(max_examples=10)
    def test_exact_matches_brute(self, seed):
        rng = np.random.Generator(np.random.Philox(key=seed))
        sys_ = k3_system(2)
        kernel = edge_function(sys_, (0, 1), rng.uniform(-1, 1, size=(2, 2)))
        bound = edge_function(sys_, (1, 2), rng.uniform(0, 1, size=(2, 2)))
        slots = (Slot((0, 2), 0, None), Slot((1, 2), 1, bound))
        problem = SupProblem(sys_, (0, 1), 2, kernel, slots)
        res = sup_multilinear(problem, mode="exact")
        want = sup_correlation_brute(
            sys_, (0, 1), 2, (0, 1), kernel.values, 0,
            [((0, 2), 0, None), ((1, 2), 1, bound.values)],
        )
        assert abs(res.value - want) <= 1e-10 * max(1.0, want)
        assert res.certified and res.mode == "exact"

    @given(seeds)
    @settings(max_examples=10)
    def test_heuristic_lower_bounds_exact(self, seed):
        rng = np.random.Generator(np.random.Philox(key=seed))
        sys_ = k3_system(2)
        kernel = edge_function(sys_, (0, 1), rng.uniform(-1, 1, size=(2, 2)))
        slots = (Slot((0, 2), 0, None), Slot((1, 2), 0, None))
        problem = SupProblem(sys_, (0, 1), 2, kernel, slots)
        exact = sup_multilinear(problem, mode="exact")
        heur = sup_multilinear(problem, mode="heuristic", restarts=8, seed=1)
        assert heur.value <= exact.value + 1e-10 * max(1.0, exact.value)
        assert not heur.certified

    def test_off_base_kernel_replica(self):
        # kernel on (0, 2) reading replica 1 of coordinate 2
        rng = np.random.Generator(np.random.Philox(key=5))
        sys_ = k3_system(2)
        kernel = edge_function(sys_, (0, 2), rng.uniform(-1, 1, size=(2, 2)))
        bound = edge_function(sys_, (1, 2), rng.uniform(0, 1, size=(2, 2)))
        problem = SupProblem(
            sys_, (0, 1), 2, kernel, (Slot((1, 2), 0, bound),), kernel_replica=1
        )
        res = sup_multilinear(problem, mode="exact")
        want = sup_correlation_brute(
            sys_, (0, 1), 2, (0, 2), kernel.values, 1,
            [((1, 2), 0, bound.values)],
        )
        assert abs(res.value - want) <= 1e-10 * max(1.0, want)


class TestConditionChecks:
    def test_c1_true_on_ones(self):
        sys_ = k3_system()
        rep = check_C1(sys_, ones_family(sys_), PseudoParams(1.0, 0.1, Exponent(2.0)))
        assert rep.verdict == "true"
        assert math.isclose(rep.worst_value, 1.0, rel_tol=1e-12)
        assert rep.details["subsets_checked"] == 7

    def test_c1_false_with_witness(self):
        sys_ = k3_system()
        fam = ones_family(sys_)
        fam[(0, 1)] = constant_function(sys_, (0, 1), 0.0)
        rep = check_C1(sys_, fam, PseudoParams(1.0, 0.1, Exponent(2.0)))
        assert rep.verdict == "false"
        assert [0, 1] in rep.witness["subset"]

    def test_c1_subset_cap(self):
        sys_ = k3_system()
        with pytest.raises(SubsetCapExceeded):
            check_C1(sys_, ones_family(sys_),
                     PseudoParams(1.0, 0.1, Exponent(2.0)), subset_cap=4)

    def test_c2a_true_when_psi_equals_nu(self):
        sys_ = k3_system()
        fam = perturbed_family(sys_, 1, 0.05)
        rep = check_C2a(sys_, fam, fam, PseudoParams(2.0, 0.1, Exponent(2.0)),
                        mode="exact")
        assert rep.verdict == "true"
        assert rep.worst_value <= 1e-12
        assert rep.details["psi_lp_ok"]

    def test_c2a_false_on_lp_violation(self):
        sys_ = k3_system()
        nu = ones_family(sys_)
        psi = {e: constant_function(sys_, e, 5.0) for e in sys_.edges}
        rep = check_C2a(sys_, nu, psi, PseudoParams(1.0, 0.9, Exponent(2.0)),
                        mode="exact")
        assert rep.verdict == "false"
        assert not rep.details["psi_lp_ok"]
        assert "psi_lp" in rep.witness

    def test_c2a_false_on_cut_violation(self):
        sys_ = k3_system()
        nu = {e: constant_function(sys_, e, 2.0) for e in sys_.edges}
        psi = ones_family(sys_)
        rep = check_C2a(sys_, nu, psi, PseudoParams(3.0, 0.01, Exponent(2.0)),
                        mode="exact")
        assert rep.verdict == "false"
        assert rep.worst_value > rep.bound

    def test_c2b_zero_kernel_true(self):
        sys_ = k3_system()
        fam = perturbed_family(sys_, 2, 0.05)
        rep = check_C2b(sys_, fam, fam, PseudoParams(1.5, 0.1, Exponent(2.0)),
                        mode="exact")
        assert rep.verdict == "true"
        assert rep.worst_value <= 1e-12
        assert rep.details["replicas"] == 2

    def test_c2b_heuristic_below_bound_is_unknown(self):
        sys_ = k3_system()
        fam = ones_family(sys_)
        rep = check_C2b(sys_, fam, fam, PseudoParams(1.5, 0.1, Exponent(2.0)),
                        mode="heuristic")
        assert rep.verdict == "unknown"
        assert rep.mode == "heuristic"

    def test_c3_ones(self):
        sys_ = k3_system()
        rep = check_C3(sys_, ones_family(sys_), PseudoParams(1.0, 0.1, Exponent(2.0)))
        assert rep.verdict == "true"
        assert math.isclose(rep.worst_value, 1.0, rel_tol=1e-12)

    def test_c3_false_on_spiky_family(self):
        sys_ = k3_system()
        fam = ones_family(sys_)
        spike = np.array([[4.0, 0.0], [0.0, 0.0]])
        fam[(0, 1)] = edge_function(sys_, (0, 1), spike)
        rep = check_C3(sys_, fam, PseudoParams(1.0, 0.01, Exponent(2.0)))
        assert rep.verdict == "false"
        assert rep.worst_value > rep.bound


class TestConditionalDensity:
    @given(seeds)
    @settings(max_examples=10)
    def test_matches_brute(self, seed):
        rng = np.random.Generator(np.random.Philox(key=seed))
        sys_ = k3_system(2)
        funcs = [
            edge_function(sys_, e, rng.uniform(0, 2, size=(2, 2)))
            for e in [(0, 2), (1, 2)]
        ]
        got = conditional_onto_edge(sys_, (0, 1), funcs)
        want = conditional_brute(sys_, (0, 1), {f.edge: f for f in funcs})
        assert np.allclose(got.values, want, rtol=1e-12, atol=1e-14)

    def test_no_outside_coordinates_is_plain_product(self):
        sys_ = k3_system(2)
        f = edge_function(sys_, (0, 1), [[1.0, 2.0], [3.0, 4.0]])
        got = conditional_onto_edge(sys_, (0, 1), [f])
        assert np.allclose(got.values, f.values)


class TestLinearFormsDeviation:
    def test_ones_has_zero_eta(self):
        sys_ = k3_system()
        rep = linear_forms_deviation(sys_, ones_family(sys_), 2)
        assert rep.eta == 0.0
        assert rep.exact and not rep.degraded
        assert rep.min_value == 1.0 and rep.max_value == 1.0
        assert rep.patterns_checked == 1 << 12

    @given(seeds)
    @settings(max_examples=5)
    def test_matches_brute_on_single_edge(self, seed):
        rng = np.random.Generator(np.random.Philox(key=seed))
        sys_ = make_system([np.ones(2) / 2] * 2, [(0, 1)])
        fam = {(0, 1): edge_function(sys_, (0, 1), rng.uniform(0, 2, size=(2, 2)))}
        rep = linear_forms_deviation(sys_, fam, 2)
        lo, hi = deviation_brute(sys_, fam, 2)
        assert abs(rep.min_value - lo) <= 1e-11 * max(1.0, abs(lo))
        assert abs(rep.max_value - hi) <= 1e-11 * max(1.0, abs(hi))
        assert math.isclose(
            rep.eta, max(hi - 1.0, 1.0 - lo, 0.0), rel_tol=1e-10, abs_tol=1e-14
        )

    def test_witnesses_decode_masks(self):
        rng = np.random.Generator(np.random.Philox(key=9))
        sys_ = make_system([np.ones(2) / 2] * 2, [(0, 1)])
        fam = {(0, 1): edge_function(sys_, (0, 1), rng.uniform(0, 2, size=(2, 2)))}
        rep = linear_forms_deviation(sys_, fam, 2)
        for witness in (rep.witness_min, rep.witness_max):
            assert set(witness) == {"mask", "factors"}
            mask = int(witness["mask"], 16)
            assert bin(mask).count("1") == len(witness["factors"])

    def test_cap_degrades_to_sampling(self):
        sys_ = k3_system()
        fam = perturbed_family(sys_, 3, 0.1)
        exact = linear_forms_deviation(sys_, fam, 2)
        sampled = linear_forms_deviation(sys_, fam, 2, pattern_cap=16, samples=64)
        assert sampled.degraded and not sampled.exact
        assert sampled.min_value >= exact.min_value - 1e-12
        assert sampled.max_value <= exact.max_value + 1e-12
        assert sampled.eta <= exact.eta + 1e-12
        # structured masks guarantee the empty and full patterns are present
        assert sampled.patterns_checked >= 2 + len(sys_.edges)

    def test_sampling_includes_full_pattern(self):
        sys_ = make_system([np.ones(2) / 2] * 2, [(0, 1)])
        fam = {(0, 1): edge_function(sys_, (0, 1), [[2.0, 0.5], [0.5, 1.0]])}
        exact = linear_forms_deviation(sys_, fam, 2)
        sampled = linear_forms_deviation(sys_, fam, 2, mode="sample", samples=0)
        full_mask = (1 << 4) - 1
        vals_at_full = [
            w for w in (sampled.witness_min, sampled.witness_max)
            if int(w["mask"], 16) == full_mask
        ]
        # the full pattern is always scanned; its value bounds the extremes
        assert sampled.max_value <= exact.max_value + 1e-12
        assert sampled.min_value >= exact.min_value - 1e-12
        assert vals_at_full or sampled.patterns_checked >= 3

    def test_measure_eta_shortcut(self):
        sys_ = k3_system()
        assert measure_eta(sys_, ones_family(sys_), 2) == 0.0


class TestCertifyPseudorandom:
    def test_params_required(self):
        sys_ = k3_system()
        with pytest.raises(BadSpec):
            certify_pseudorandom(sys_, ones_family(sys_))

    def test_ones_certify_true(self):
        sys_ = k3_system()
        cert = certify_pseudorandom(
            sys_, ones_family(sys_),
            params=PseudoParams(1.5, 0.1, Exponent(2.0)), mode="exact",
        )
        assert cert.verdict == "true"
        assert set(cert.conditions) == {"C1", "C2a", "C2b", "C3"}
        for rep in cert.conditions.values():
            assert rep.verdict == "true"

    def test_verdict_merge_false_beats_unknown(self):
        sys_ = k3_system()
        fam = ones_family(sys_)
        fam[(0, 1)] = constant_function(sys_, (0, 1), 0.0)
        cert = certify_pseudorandom(
            sys_, fam, params=PseudoParams(1.5, 0.1, Exponent(2.0)),
            mode="heuristic",
        )
        assert cert.conditions["C1"].verdict == "false"
        assert cert.verdict == "false"

    def test_heuristic_only_gives_unknown(self):
        sys_ = k3_system()
        cert = certify_pseudorandom(
            sys_, ones_family(sys_),
            params=PseudoParams(1.5, 0.1, Exponent(2.0)), mode="heuristic",
        )
        assert cert.verdict == "unknown"

    def test_to_dict_round_shape(self):
        sys_ = k3_system()
        cert = certify_pseudorandom(
            sys_, ones_family(sys_),
            params=PseudoParams(1.5, 0.1, Exponent(2.0)), mode="exact",
        )
        d = cert.to_dict()
        assert d["verdict"] == "true"
        assert d["params"]["ell"] == 6


class TestTheoremCertificates:
    def test_wrong_hypergraph(self):
        sys_ = make_system([np.ones(2) / 2] * 3, [(0, 1)])
        fam = {(0, 1): constant_function(sys_, (0, 1), 1.0)}
        with pytest.raises(WrongHypergraph):
            sum_family_certificate(sys_, fam, fam, 1.0, 1e-16, INF)
        with pytest.raises(WrongHypergraph):
            near_majorant_certificate(sys_, fam, fam, 1.0, 0.05, INF)
        two = make_system([np.ones(2) / 2] * 2, [(0,), (1,)])
        fam2 = {e: constant_function(two, e, 1.0) for e in two.edges}
        with pytest.raises(WrongHypergraph):
            sum_family_certificate(two, fam2, fam2, 1.0, 1e-16, INF)

    def test_bad_constants(self):
        sys_ = k3_system()
        lam = ones_family(sys_)
        with pytest.raises(BadSpec):
            sum_family_certificate(sys_, lam, lam, 0.5, 1e-16, INF)
        with pytest.raises(BadSpec):
            sum_family_certificate(sys_, lam, lam, 1.0, 0.0, INF)
        with pytest.raises(BadSpec):
            near_majorant_certificate(sys_, lam, lam, 1.0, -0.1, INF)

    def test_sum_family_eta_above_cap_is_false(self):
        sys_ = k3_system()
        lam = ones_family(sys_)
        phi = {e: constant_function(sys_, e, 0.5) for e in sys_.edges}
        cert = sum_family_certificate(sys_, lam, phi, 1.0, 0.5, INF, mode="exact")
        assert cert.hypotheses["eta_in_range"] is False
        assert cert.verdict == "false"

    def test_sum_family_exact_ones_instance(self):
        sys_ = k3_system()
        lam = ones_family(sys_)
        phi = {e: constant_function(sys_, e, 0.5) for e in sys_.edges}
        eta = 0.5 * math.exp(-3 * 8 * math.log(4.0))
        cert = sum_family_certificate(sys_, lam, phi, 1.0, eta, INF, mode="exact")
        assert all(cert.hypotheses.values())
        assert cert.verdict == "true"
        assert cert.deviation.eta == 0.0
        assert math.isclose(cert.constants["C_out"], 4.0 ** 6, rel_tol=1e-12)
        inner = cert.inner
        assert inner is not None and inner.verdict == "true"

    def test_near_majorant_exact_ones_instance(self):
        sys_ = k3_system()
        nu = ones_family(sys_)
        cert = near_majorant_certificate(sys_, nu, nu, 1.0, 0.05, INF, mode="exact")
        assert all(cert.hypotheses.values())
        assert cert.verdict == "true"
        assert math.isclose(cert.constants["eta_out"], 3 * 2 * 0.05, rel_tol=1e-12)

    def test_near_majorant_eta_too_big_is_false(self):
        sys_ = k3_system()
        nu = ones_family(sys_)
        cert = near_majorant_certificate(sys_, nu, nu, 1.0, 0.4, INF, mode="exact")
        assert cert.hypotheses["eta_in_range"] is False
        assert cert.verdict == "false"


class TestLemmaOracles:
    def test_majorant_gap_zero_when_equal(self):
        sys_ = k3_system()
        fam = perturbed_family(sys_, 6, 0.05)
        out = majorant_gap_correlation_sup(sys_, (0, 1), fam, fam, 2, mode="exact")
        assert out["value"] <= 1e-12
        assert out["certified"]
        assert len(out["selectors"]) == len(out["slots"]) == 4

    def test_centered_zero_on_ones(self):
        sys_ = k3_system()
        fam = ones_family(sys_)
        out = centered_family_correlation_sup(sys_, (0, 1), fam, fam, 2, mode="exact")
        assert out["value"] <= 1e-12

    def test_bounded_slot_mass_on_ones(self):
        sys_ = k3_system()
        fam = ones_family(sys_)
        out = bounded_slot_mass_sup(sys_, (0, 1), fam, fam, 2)
        assert math.isclose(out["value"], 1.0, rel_tol=1e-12)

    def test_replica_mass_none_bound_means_one(self):
        sys_ = k3_system()
        out = replica_mass_max(sys_, (0, 1), {"one": None}, 2)
        assert math.isclose(out["value"], 1.0, rel_tol=1e-12)
        assert out["selectors"] == ["one"] * 4

    def test_shifted_kernel_must_leave_base(self):
        sys_ = k3_system()
        fam = ones_family(sys_)
        with pytest.raises(MalformedProblem):
            shifted_majorant_gap_correlation_sup(
                sys_, (0, 1), (0, 1), 0, fam, fam, 2
            )

    def test_shifted_zero_when_equal(self):
        sys_ = k3_system()
        fam = perturbed_family(sys_, 7, 0.05)
        out = shifted_majorant_gap_correlation_sup(
            sys_, (0, 1), (0, 2), 1, fam, fam, 2, mode="exact"
        )
        assert out["value"] <= 1e-12
        # the excluded (kernel edge, replica) pair must not appear as a slot
        assert [[0, 2], 1] not in out["slots"]
