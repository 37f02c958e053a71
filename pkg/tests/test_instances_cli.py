import json
import math
import subprocess
import sys

import numpy as np
import pytest

from boxlab.cli import main
from boxlab.errors import BoxlabError, MalformedProblem
from boxlab.generators import GenSpec, generate
from boxlab.instances import (
    digest_text,
    emit_json,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    parse_json,
    save_instance,
)


class TestEmitJson:
    @pytest.mark.parametrize(
        "x",
        [0.1, 1.0 / 3.0, 1e-300, 6.661338147750939e-16, -2.5, 1e17 + 1.0, 0.0],
    )
    def test_floats_round_trip(self, x):
        assert parse_json(emit_json(x)) == x

    def test_17_digit_rendering(self):
        assert emit_json(1.0 / 3.0).strip() == "0.33333333333333331"

    def test_nested_structures(self):
        obj = {"a": [1, 2.5, "x"], "b": {"c": None, "d": [True, False]}}
        assert parse_json(emit_json(obj)) == obj

    def test_numpy_scalars_and_arrays(self):
        out = parse_json(emit_json({"v": np.float64(0.5), "n": np.int64(3),
                                    "arr": np.array([[1.0, 2.0]])}))
        assert out == {"v": 0.5, "n": 3, "arr": [[1.0, 2.0]]}

    def test_rejects_nonfinite(self):
        with pytest.raises(MalformedProblem):
            emit_json(float("nan"))
        with pytest.raises(MalformedProblem):
            emit_json({"x": float("inf")})

    def test_rejects_non_string_keys_and_unknown_types(self):
        with pytest.raises(MalformedProblem):
            emit_json({1: "x"})
        with pytest.raises(MalformedProblem):
            emit_json({"x": object()})

    def test_emission_is_deterministic(self):
        obj = {"z": [1.0, 2.0], "a": {"k": 0.1}}
        assert emit_json(obj) == emit_json(obj)
        assert digest_text(emit_json(obj)) == digest_text(emit_json(obj))


class TestInstanceRoundTrip:
    def test_save_load_preserves_everything(self, tmp_path):
        system, functions, meta = generate(
            GenSpec(3, 2, 3, "random_signed", seed=11)
        )
        path = str(tmp_path / "inst.json")
        digest = save_instance(path, system, functions, meta)
        sys2, fns2, meta2, digest2 = load_instance(path)
        assert digest == digest2
        assert sys2.edges == system.edges
        for sp_a, sp_b in zip(system.spaces, sys2.spaces):
            assert np.array_equal(sp_a.weights, sp_b.weights)
        for e in functions:
            assert np.array_equal(functions[e].values, fns2[e].values)
        assert meta2["spec"] == meta["spec"]

    def test_dict_round_trip(self):
        system, functions, meta = generate(GenSpec(3, 2, 2, "perturbed_ones",
                                                   epsilon=0.2, seed=3))
        data = parse_json(emit_json(instance_to_dict(system, functions, meta)))
        sys2, fns2, _ = instance_from_dict(data)
        for e in functions:
            assert np.array_equal(functions[e].values, fns2[e].values)

    def test_missing_keys(self):
        with pytest.raises(MalformedProblem):
            instance_from_dict({"spaces": [[1.0]], "edges": []})
        with pytest.raises(MalformedProblem):
            instance_from_dict([1, 2, 3])

    def test_unknown_edge_and_duplicates(self):
        base = {
            "spaces": [[0.5, 0.5], [0.5, 0.5]],
            "edges": [[0, 1]],
            "functions": [{"edge": [0], "values": [1.0, 1.0]}],
        }
        with pytest.raises(MalformedProblem):
            instance_from_dict(base)
        dup = {
            "spaces": [[0.5, 0.5], [0.5, 0.5]],
            "edges": [[0, 1]],
            "functions": [
                {"edge": [0, 1], "values": [[1.0, 1.0], [1.0, 1.0]]},
                {"edge": [0, 1], "values": [[2.0, 2.0], [2.0, 2.0]]},
            ],
        }
        with pytest.raises(MalformedProblem):
            instance_from_dict(dup)

    def test_bad_shape_rejected(self):
        data = {
            "spaces": [[0.5, 0.5], [0.5, 0.5]],
            "edges": [[0, 1]],
            "functions": [{"edge": [0, 1], "values": [1.0, 1.0]}],
        }
        with pytest.raises(BoxlabError):
            instance_from_dict(data)

    def test_json_error_reports_line_and_column(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"spaces": [[1.0],\n  oops]}')
        with pytest.raises(MalformedProblem, match=r"line 2, column"):
            load_instance(str(path))


@pytest.fixture
def ones_instance(tmp_path):
    path = str(tmp_path / "ones.json")
    system, functions, meta = generate(GenSpec(3, 2, 2, "ones"))
    save_instance(path, system, functions, meta)
    return path


@pytest.fixture
def perturbed_instance(tmp_path):
    path = str(tmp_path / "pert.json")
    system, functions, meta = generate(
        GenSpec(3, 2, 2, "perturbed_ones", epsilon=0.1, seed=7)
    )
    save_instance(path, system, functions, meta)
    return path


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    out = json.loads(captured.out) if captured.out.strip() else None
    err = json.loads(captured.err) if captured.err.strip().startswith("{") else captured.err
    return code, out, err


class TestCliGenAndNorm:
    def test_gen_writes_instance_with_digest(self, tmp_path, capsys):
        out_path = str(tmp_path / "gen.json")
        code, out, _ = run_cli(
            capsys, "gen", "--n", "3", "--r", "2", "--atoms", "2",
            "--kind", "perturbed_ones", "--epsilon", "0.1", "--seed", "7",
            "--out", out_path,
        )
        assert code == 0
        with open(out_path, "r", encoding="utf-8") as fh:
            assert digest_text(fh.read()) == out["digest"]
        assert out["spec"]["kind"] == "perturbed_ones"

    def test_gen_atom_list(self, tmp_path, capsys):
        out_path = str(tmp_path / "gen2.json")
        code, out, _ = run_cli(
            capsys, "gen", "--n", "3", "--r", "2", "--atoms", "2,3,4",
            "--kind", "ones", "--out", out_path,
        )
        assert code == 0
        assert out["spec"]["atoms"] == [2, 3, 4]

    def test_norm_edge_index_and_list_agree(self, perturbed_instance, capsys):
        code_a, out_a, _ = run_cli(
            capsys, "norm", "--instance", perturbed_instance,
            "--edge", "0", "--ell", "2", "--stable",
        )
        code_b, out_b, _ = run_cli(
            capsys, "norm", "--instance", perturbed_instance,
            "--edge", "0,1", "--ell", "2", "--stable",
        )
        assert code_a == code_b == 0
        assert out_a == out_b
        assert out_a["elapsed_ms"] == 0.0
        assert out_a["method"] == "recursive"

    def test_norm_matches_library(self, perturbed_instance, capsys):
        from boxlab.boxnorm import box_norm

        system, functions, _, _ = load_instance(perturbed_instance)
        want = box_norm(system, (0, 1), functions[(0, 1)], 2).value
        _, out, _ = run_cli(
            capsys, "norm", "--instance", perturbed_instance,
            "--edge", "0,1", "--ell", "2",
        )
        assert math.isclose(out["value"], want, rel_tol=1e-15)

    def test_norm_with_p(self, perturbed_instance, capsys):
        _, out, _ = run_cli(
            capsys, "norm", "--instance", perturbed_instance,
            "--edge", "0", "--ell", "2", "--p", "2",
        )
        assert out["p"] == 2.0
        _, out_inf, _ = run_cli(
            capsys, "norm", "--instance", perturbed_instance,
            "--edge", "0", "--ell", "2", "--p", "inf",
        )
        assert out_inf["method"] == "sup"
        assert out["value"] <= out_inf["value"] + 1e-9

    def test_norm_bad_edge_exits_3(self, perturbed_instance, capsys):
        code, _, err = run_cli(
            capsys, "norm", "--instance", perturbed_instance,
            "--edge", "9", "--ell", "2",
        )
        assert code == 3
        assert err["error"] == "MalformedProblem"


class TestCliCutGcs:
    def test_cutnorm_matches_library(self, perturbed_instance, capsys):
        from boxlab.cutnorm import cut_norm

        system, functions, _, _ = load_instance(perturbed_instance)
        want = cut_norm(system, (0, 1), functions[(0, 1)], mode="exact").value
        code, out, _ = run_cli(
            capsys, "cutnorm", "--instance", perturbed_instance,
            "--edge", "0,1", "--mode", "exact",
        )
        assert code == 0
        assert math.isclose(out["value"], want, rel_tol=1e-15)
        assert out["mode"] == "exact"

    def test_gcs_reports_hold(self, perturbed_instance, capsys):
        code, out, _ = run_cli(
            capsys, "gcs", "--instance", perturbed_instance,
            "--edge", "0", "--ell", "2",
        )
        assert code == 0
        assert out["holds"] is True
        assert out["lhs"] <= out["rhs"] + out["tol"]


class TestCliCertificates:
    def test_vonneumann(self, ones_instance, capsys):
        code, out, _ = run_cli(
            capsys, "vonneumann", "--instance", ones_instance,
            "--C", "1.5", "--p", "2",
        )
        assert code == 0
        assert out["holds"] is True
        assert out["hypotheses"]["box_lp_at_most_one"] is True

    def test_counting(self, ones_instance, perturbed_instance, capsys):
        code, out, _ = run_cli(
            capsys, "counting", "--instance", ones_instance,
            "--instance2", perturbed_instance, "--C", "2", "--p", "2",
        )
        assert code == 0
        assert out["holds"] is True
        assert len(out["instance_digests"]) == 2

    def test_counting_edge_set_mismatch(self, ones_instance, tmp_path, capsys):
        other = str(tmp_path / "tri.json")
        system, functions, meta = generate(GenSpec(4, 3, 2, "ones"))
        save_instance(other, system, functions, meta)
        code, _, err = run_cli(
            capsys, "counting", "--instance", ones_instance,
            "--instance2", other, "--C", "2", "--p", "2",
        )
        assert code == 3
        assert err["error"] == "MalformedProblem"

    def test_pseudorandom_check_true(self, ones_instance, capsys):
        code, out, _ = run_cli(
            capsys, "pseudorandom", "check", "--instance", ones_instance,
            "--C", "1.5", "--eta", "0.1", "--p", "2", "--mode", "exact",
        )
        assert code == 0
        assert out["verdict"] == "true"
        assert set(out["conditions"]) == {"C1", "C2a", "C2b", "C3"}

    def test_pseudorandom_sum_family_requires_psi(self, ones_instance, capsys):
        code, _, err = run_cli(
            capsys, "pseudorandom", "thm42", "--instance", ones_instance,
            "--C", "1", "--eta", "1e-16", "--p", "inf",
        )
        assert code == 3
        assert err["error"] == "BadSpec"

    def test_pseudorandom_near_majorant(self, ones_instance, capsys):
        code, out, _ = run_cli(
            capsys, "pseudorandom", "thm43", "--instance", ones_instance,
            "--psi", ones_instance, "--C", "1", "--eta", "0.05", "--p", "inf",
            "--mode", "exact",
        )
        assert code == 0
        assert out["verdict"] == "true"
        assert out["psi_digest"] == out["instance_digest"]


class TestCliErrors:
    def test_missing_file_exits_3(self, capsys):
        code, _, err = run_cli(
            capsys, "norm", "--instance", "/nonexistent/x.json",
            "--edge", "0", "--ell", "2",
        )
        assert code == 3
        assert err["error"] == "OSError"

    def test_usage_errors_exit_3(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 3
        with pytest.raises(SystemExit) as exc:
            main(["norm", "--bogus"])
        assert exc.value.code == 3
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 3

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("boxlab ")


class TestModuleEntry:
    def test_python_dash_m_works(self):
        proc = subprocess.run(
            [sys.executable, "-m", "boxlab", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("boxlab ")
