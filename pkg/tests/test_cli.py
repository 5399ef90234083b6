import csv
import io
import json

import pytest

from esh import graphs
from esh.cli import COLUMNS, UsageError, main, parse_spec, parse_subsets


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))


@pytest.mark.parametrize("spec, n, m", [
    ("paley:13", 13, 39),
    ("er:10:0.5:3", 10, graphs.erdos_renyi(10, 0.5, 3).m),
    ("hamming64", 64, 1312),
    ("hamming6-4", 64, 704),
    ("circulant:47:1,2,3,4,5,6", 47, 282),
    ("cycle:5", 5, 5),
])
def test_generator_specs(spec, n, m):
    g = parse_spec(spec)
    assert (g.n, g.m) == (n, m)


def test_complement_spec(data_dir):
    g = parse_spec(f"complement:{data_dir / 'hamming6-4.clq'}")
    assert g.m == 1312


@pytest.mark.parametrize("spec", ["nope:3", "paley:x", "er:10", "complement:/no/such/file"])
def test_bad_specs(spec):
    with pytest.raises(UsageError):
        parse_spec(spec)


def test_parse_subsets():
    assert parse_subsets("1,2,3; 4,5") == [(1, 2, 3), (4, 5)]


def test_theta_both_formulations(capsys):
    code, out, _ = run(capsys, "theta", "--gen", "paley:61", "--no-time")
    assert code == 0
    got = rows(out)
    assert [r["formulation"] for r in got] == ["Tn+1", "Tn"]
    assert all(abs(float(r["bound"]) - 7.8102) <= 1e-3 for r in got)
    assert list(got[0]) == list(COLUMNS)


def test_facets_pretty(capsys):
    code, out, _ = run(capsys, "facets", "--k", "4", "--format", "pretty")
    assert code == 0 and out.strip() == "k=4: 56 facets"


def test_facets_ieq_file(capsys, tmp_path):
    target = tmp_path / "stab2_k{k}.ieq"
    assert run(capsys, "facets", "--k", "3", "--ieq", str(target))[0] == 0
    assert (tmp_path / "stab2_k3.ieq").read_text().count("<=") == 16


def test_compare_example(capsys):
    code, out, _ = run(capsys, "compare", "--gen", "er:12:0.4:7", "--k", "3", "--all-subsets")
    assert code == 0
    vals = {r["formulation"]: float(r["bound"]) for r in rows(out)}
    assert vals["ESH"] <= vals["CESH"] + 1e-6 and abs(vals["SESH"] - vals["CESH"]) <= 1e-5
    assert "holds" in out


def test_bound_explicit_subsets_json(capsys):
    code, out, _ = run(capsys, "bound", "--gen", "cycle:5", "--subsets", "1,2,3,4,5",
                       "--formulation", "ESH,CESH", "--alpha", "--format", "json")
    assert code == 0
    data = json.loads(out)["rows"]
    assert [abs(float(r["bound"]) - 2) <= 1e-5 for r in data] == [True, True]
    assert data[0]["alpha"] == 2 and set(data[0]) == set(COLUMNS)


def test_level_range(capsys):
    code, out, _ = run(capsys, "level", "--gen", "cycle:5", "--max-k", "2")
    assert code == 0 and [r["k_or_J"] for r in rows(out)] == ["k=0", "k=1", "k=2"]


def test_search_writes_trajectory(capsys, tmp_path):
    traj = tmp_path / "t.csv"
    code, out, _ = run(capsys, "search", "--gen", "cycle:5", "--k", "5", "--formulation", "CESH",
                       "--trajectory", str(traj), "--no-time")
    assert code == 0
    assert abs(float(rows(out)[-1]["bound"]) - 2) <= 1e-5
    assert traj.read_text().splitlines()[0] == "round,formulation,bound,escs_added,escs_total,solve_seconds"


def test_alpha_from_file(capsys, data_dir):
    code, out, _ = run(capsys, "alpha", "--file", str(data_dir / "hamming6-4.clq"))
    assert code == 0 and rows(out)[0]["alpha"] == "12"


def test_batch(capsys, tmp_path):
    batch = tmp_path / "b.txt"
    batch.write_text("# two instances\ncycle:5\ncycle:7\n")
    code, out, _ = run(capsys, "theta", "--batch", str(batch))
    assert code == 0 and [r["name"] for r in rows(out)] == ["C5", "C5", "C7", "C7"]


def test_out_file(capsys, tmp_path):
    dest = tmp_path / "r.csv"
    code, out, _ = run(capsys, "theta", "--gen", "cycle:5", "--out", str(dest))
    assert code == 0 and out == "" and dest.read_text().startswith("name,")


@pytest.mark.parametrize("argv", [
    ["theta"],
    ["theta", "--gen", "nope:1"],
    ["bound", "--gen", "cycle:5"],
    ["bound", "--gen", "paley:61", "--k", "5", "--all-subsets", "--cap", "10"],
    ["level", "--gen", "cycle:5", "--formulation", "XYZ"],
    ["theta", "--file", "/no/such.clq"],
    ["search", "--gen", "cycle:5"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 1


def test_malformed_file(capsys, tmp_path):
    bad = tmp_path / "bad.clq"
    bad.write_text("p edge 2 1\ne 2 2\n")
    code, _, err = run(capsys, "theta", "--file", str(bad))
    assert code == 1 and "self-loop" in err


def test_solver_failure_exit_code(capsys):
    assert run(capsys, "theta", "--gen", "cycle:9", "--max-iter", "2")[0] == 2
