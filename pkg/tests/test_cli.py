import csv
import io
import json
import math
from pathlib import Path

import pytest

from groupfair.cli import CSV_COLUMNS, main

HERE = Path(__file__).parent
DATA = HERE / "data"
GOLDEN = HERE / "golden"


def call(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_json(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


def test_run_matches_golden(capsys):
    code, out, _ = call(capsys, "run", DATA / "sweep_small.json", "--seed", 7, "--workers", 1)
    assert code == 0
    assert out == (GOLDEN / "sweep_small_seed7.csv").read_text()


def test_run_schema_and_row_invariants(capsys):
    code, out, _ = call(capsys, "run", DATA / "sweep_small.json", "--seed", 3, "--trials", 50)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert tuple(out.splitlines()[0].split(",")) == CSV_COLUMNS
    assert len(rows) == 9
    for r in rows:
        assert int(r["trials"]) == 50 and int(r["seed"]) == 3
        assert float(r["ci_low"]) <= float(r["estimate"]) <= float(r["ci_high"])
    by_m = {}
    for r in rows:
        by_m.setdefault(r["m"], {})[r["check"]] = int(r["successes"])
    # greedy_total being envy-free on an instance proves existence on it
    for counts in by_m.values():
        assert counts["ef"] <= counts["exists_ef"]


@pytest.mark.parametrize("workers", [1, 2, 4])
def test_run_byte_identical_across_workers(capsys, workers):
    _, out, _ = call(capsys, "run", DATA / "sweep_small.json", "--seed", 7, "--workers", workers)
    assert out == (GOLDEN / "sweep_small_seed7.csv").read_text()


def test_run_json_full_precision(capsys):
    code, out, _ = call(capsys, "run", DATA / "sweep_small.json", "--seed", 7, "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0
    assert rows[0]["estimate"] == 25 / 300
    assert rows[2]["bound_kind"] == "success_upper"
    assert "wall_time" not in rows[0]
    _, out, _ = call(capsys, "run", DATA / "sweep_small.json", "--seed", 7, "--trials", 5,
                     "--format", "json", "--timing")
    assert all(r["wall_time"] >= 0 for r in json.loads(out)["rows"])


def test_run_thm3_style_config(capsys):
    code, out, _ = call(capsys, "run", HERE.parent / "configs" / "nonexistence.json",
                        "--trials", 1000, "--seed", 7)
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert (row["m"], row["n"], row["g"], row["check"]) == ("4", "6", "3", "exists_ef")
    assert float(row["theory_bound"]) == pytest.approx(1 / 9, rel=1e-5)


def test_run_single_group_is_input_error(capsys, tmp_path):
    bad = write_json(tmp_path, "bad.json", {"group_sizes": [3], "m": 2})
    code, out, err = call(capsys, "run", bad, "--seed", 1)
    assert code == 2 and out == ""
    assert "group_sizes: need at least 2 groups" in err


@pytest.mark.parametrize("cfg, field", [
    ({"group_sizes": [1, 1]}, "m"),
    ({"group_sizes": [1, 1], "m": 2, "trials": "many"}, "trials"),
    ({"group_sizes": [1, 1], "m": 2, "colour": 1}, "colour"),
    ({"group_sizes": [1, 1], "m": 2, "checks": ["envy"]}, "checks"),
    ({"group_sizes": [1, 1], "m": 2, "distribution": {"family": "cauchy"}}, "distribution"),
    ({"group_sizes": [1, 1], "m": 2, "mechanism": "greedy_average", "checks": ["ef"],
      "sweep": {"axis": "g", "values": [2, 3]}}, "greedy_average"),
    ({"group_sizes": [1, 1], "m": 2, "sweep": {"axis": "alpha", "values": [0.5]}}, "alpha_ef"),
])
def test_run_malformed_config_names_field(capsys, tmp_path, cfg, field):
    code, _, err = call(capsys, "run", write_json(tmp_path, "c.json", cfg), "--seed", 1)
    assert code == 2
    assert field in err


def test_run_unreadable_file(capsys, tmp_path):
    (tmp_path / "x.json").write_text("{not json")
    assert call(capsys, "run", tmp_path / "x.json", "--seed", 1)[0] == 2
    assert call(capsys, "run", tmp_path / "missing.json", "--seed", 1)[0] == 2


def test_run_requires_seed(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["run", str(DATA / "sweep_small.json")])
    assert exc.value.code == 2


def test_run_capacity_error(capsys, tmp_path):
    cfg = write_json(tmp_path, "big.json", {"group_sizes": [1, 1], "m": 30, "mechanism": "none",
                                             "checks": ["exists_ef"], "trials": 1})
    code, out, err = call(capsys, "run", cfg, "--seed", 1)
    assert code == 3 and out == ""
    assert str(2**30) in err
    code, _, _ = call(capsys, "run", cfg, "--seed", 1, "--budget", 2**29)
    assert code == 3


def test_check_one_item_instance(capsys):
    code, out, _ = call(capsys, "check", DATA / "one_item.json")
    report = json.loads(out)
    assert code == 1
    assert report["is_envy_free"] is False
    assert report["per_player_own_value"] == [0.7, 0.0]
    assert report["per_player_max_other"] == [0.0, 0.4]
    assert report["alpha_star"] == 0.0


def test_check_alpha_zero_always_passes(capsys):
    code, out, _ = call(capsys, "check", DATA / "one_item.json", "--alpha", 0)
    assert code == 0 and json.loads(out)["is_alpha_ef"] is True


def test_check_zero_utilities_pass(capsys):
    code, out, _ = call(capsys, "check", DATA / "zeros.json")
    assert code == 0 and json.loads(out)["alpha_star"] == 1.0


def test_check_mechanisms(capsys):
    code, out, _ = call(capsys, "check", DATA / "diagonal.json", "--mechanism", "greedy_total")
    assert code == 0 and json.loads(out)["allocation"] == [0, 1]
    code, out, _ = call(capsys, "check", DATA / "diagonal.json", "--mechanism", "greedy_average")
    assert code == 0 and json.loads(out)["allocation"] == [0, 1]
    a = call(capsys, "check", DATA / "diagonal.json", "--mechanism", "random_assignment", "--seed", 5)
    b = call(capsys, "check", DATA / "diagonal.json", "--mechanism", "random_assignment", "--seed", 5)
    assert a == b
    assert call(capsys, "check", DATA / "diagonal.json", "--mechanism", "random_assignment")[0] == 2


@pytest.mark.parametrize("inst", [
    {"group_sizes": [1, 1], "utilities": [[1.2], [0.5]], "allocation": [0]},
    {"group_sizes": [1, 1], "utilities": [[-0.1], [0.5]], "allocation": [0]},
    {"group_sizes": [1, 1], "m": 2, "utilities": [[0.1], [0.5]], "allocation": [0]},
    {"group_sizes": [1, 1], "utilities": [[0.1], [0.5]], "allocation": [2]},
    {"group_sizes": [2, 1], "utilities": [[0.1], [0.5]], "allocation": [0]},
    {"group_sizes": [1, 1], "utilities": [[0.1], [0.5]]},
])
def test_check_invalid_instances(capsys, tmp_path, inst):
    assert call(capsys, "check", write_json(tmp_path, "i.json", inst))[0] == 2


def test_check_alpha_out_of_range(capsys):
    assert call(capsys, "check", DATA / "diagonal.json", "--alpha", 1.5)[0] == 2


def test_exists_exit_codes(capsys, tmp_path, monkeypatch):
    code, out, _ = call(capsys, "exists", DATA / "one_item.json")
    assert code == 1 and json.loads(out) == {"exists": False, "witness": "none"}
    code, out, _ = call(capsys, "exists", DATA / "diagonal.json")
    assert code == 0 and json.loads(out) == {"exists": True, "witness": [0, 1]}
    big = write_json(tmp_path, "big.json", {"group_sizes": [1, 1], "utilities": [[0.5] * 25] * 2})
    code, _, err = call(capsys, "exists", big)
    assert code == 3 and str(2**25) in err
    assert call(capsys, "exists", DATA / "diagonal.json", "--budget", 3)[0] == 3
    monkeypatch.setenv("GROUPFAIR_BUDGET", "3")
    assert call(capsys, "exists", DATA / "diagonal.json")[0] == 3


def test_bounds_nonexistence(capsys):
    code, out, _ = call(capsys, "bounds", "--g", 2, "--n", 4, "--m", 2)
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert float(row["nonexistence"]) == 0.25
    assert row["nonexistence_hypothesis"] == "true"
    assert row["approx_ef_failure"] == ""


def test_bounds_approx_example(capsys):
    code, out, _ = call(capsys, "bounds", "--alpha", 0, "--mu-min", 0.5, "--g", 2, "--n", 8,
                        "--m", 2000, "--format", "json")
    (row,) = json.loads(out)["rows"]
    assert code == 0
    assert row["approx_ef_failure"] == pytest.approx(math.exp(-2000 * 0.5 / 6 + 3 * math.log(8)), rel=1e-12)
    assert row["approx_ef_hypothesis"] is True


def test_bounds_grid(capsys):
    _, out, _ = call(capsys, "bounds", "--g", 2, 3, "--n", 4, 6, "--m", 1, 5, "--alpha", 0.2, 0.8)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 16
    for r in rows:
        assert 0.0 <= float(r["nonexistence"]) <= 1.0


@pytest.mark.parametrize("argv", [
    ["--g", 2, "--n", 4, "--m", 2, "--alpha", 1],
    ["--g", 1, "--n", 4, "--m", 2],
    ["--g", 2, "--n", 4, "--m", 2, "--mu-min", 0],
    ["--g", 2, "--n", 4, "--m", 2, "--sigma-min", 0.7],
])
def test_bounds_invalid(capsys, argv):
    assert call(capsys, "bounds", *argv)[0] == 2


def test_symmetry_and_maxsum_output(capsys):
    code, out, _ = call(capsys, "symmetry", "--n1", 3, "--n2", 7, "--trials", 20000, "--seed", 2)
    res = json.loads(out)
    assert code == 0 and abs(res["estimate"] - 0.5) < 0.02
    assert call(capsys, "symmetry", "--n1", 3, "--n2", 7, "--trials", 20000, "--seed", 2,
                "--workers", 3)[1] == out
    code, out, _ = call(capsys, "maxsum", "--n-prime", 100, "--g", 2, "--trials", 20000, "--seed", 2)
    res = json.loads(out)
    assert code == 0 and res["exceeds_threshold"] is True
    assert res["threshold"] == pytest.approx(50 + math.sqrt(1 / 12) * 10 / 50)


def test_symmetry_and_maxsum_invalid(capsys):
    beta = '{"family": "beta", "a": 2, "b": 5}'
    assert call(capsys, "symmetry", "--dist", beta, "--n1", 1, "--n2", 1, "--seed", 0)[0] == 2
    assert call(capsys, "symmetry", "--dist", "{oops", "--n1", 1, "--n2", 1, "--seed", 0)[0] == 2
    assert call(capsys, "maxsum", "--n-prime", 10, "--g", 1, "--seed", 0)[0] == 2
