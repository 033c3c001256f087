import io
import json
import math
import subprocess
import sys

import pytest

from privacy_frontier.cli import run
from privacy_frontier.histogram import format_matrix_text


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def invoke_json(*argv):
    code, out, err = invoke(*argv)
    assert code == 0, err
    return json.loads(out)


def test_title1_headline():
    data = invoke_json("title1", "--eta", "1")
    assert data["epsilon"] == pytest.approx(2.52, abs=0.01)
    assert data["rmse_dollars"] == pytest.approx(2509, rel=0.01)
    assert data["schema_version"] == 1 and data["seed"] == 0
    assert data["params"]["eta"] == 1.0


def test_title1_dollars_two_decimals():
    data = invoke_json("title1", "--eta", "0.15")
    assert data["rmse_dollars"] == round(data["rmse_dollars"], 2)
    assert data["per_student_dollars"] == 0.38


def test_title1_from_csv(tmp_path):
    path = tmp_path / "districts.csv"
    path.write_text("district_id,sppe,eligible_count\nA,4000,100\nB,3000,50\n")
    data = invoke_json("title1", "--districts", str(path), "--epsilon", "1.0", "--replications", "5", "--seed", "3")
    assert data["calibration"]["num_districts"] == 2
    assert data["rmse_dollars"] == pytest.approx(round(math.sqrt(2 * 12.5e6), 2))
    assert data["replications"] == 5


def test_title1_bad_csv_is_domain_error(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("district_id,sppe,eligible_count\nA,0,100\n")
    code, out, _ = invoke("title1", "--districts", str(path))
    assert code == 1
    assert json.loads(out)["error"] == "NonPositiveSppe"


def test_frontier_csv():
    code, out, _ = invoke("frontier", "--mechanism", "rr", "--pi", "0.5", "--n", "100", "--eps", "0.1:5:50", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "epsilon,accuracy"
    rows = [tuple(map(float, line.split(","))) for line in lines[1:]]
    assert len(rows) == 50
    assert rows[0][0] == pytest.approx(0.1) and rows[-1][0] == pytest.approx(5.0)
    assert all(b[1] > a[1] for a, b in zip(rows, rows[1:]))


def test_frontier_matrix_json(tmp_path):
    path = tmp_path / "q.txt"
    path.write_text(format_matrix_text([[1, 0], [0, 1], [1, 1]]))
    ident = tmp_path / "a.txt"
    ident.write_text(format_matrix_text([[1, 0], [0, 1]]))
    data = invoke_json("frontier", "--mechanism", "matrix", "--workload", str(path), "--strategy", str(ident), "--eps", "1:4:3", "--linear")
    assert [p["epsilon"] for p in data["points"]] == pytest.approx([1.0, 2.5, 4.0])
    assert [p["accuracy"] for p in data["points"]] == pytest.approx([-8.0, -8.0 / 6.25, -8.0 / 16])


def test_optimize():
    data = invoke_json("optimize", "--mechanism", "identity", "--k", "1", "--wta", "4")
    assert data["epsilon"] == pytest.approx(1.0, rel=1e-9)


def test_optimize_bad_bracket():
    code, out, _ = invoke("optimize", "--mechanism", "identity", "--k", "1", "--wta", "4", "--bracket", "2:3")
    assert code == 1
    envelope = json.loads(out)
    assert envelope["error"] == "BracketDoesNotStraddle"
    assert envelope["schema_version"] == 1


def test_verify_dp():
    data = invoke_json("verify-dp", "--mechanism", "rr", "--rho", "0.5")
    cert = data["certificate"] if "certificate" in data else data
    assert cert["measured_max_log_ratio"] == pytest.approx(math.log(3), abs=1e-12)
    assert cert["passes"] is True


def test_verify_dp_identity_fails():
    data = invoke_json("verify-dp", "--mechanism", "identity", "--epsilon", "5")
    cert = data["certificate"] if "certificate" in data else data
    assert cert["passes"] is False


def test_reconstruct_demo():
    data = invoke_json("reconstruct")
    assert data["consistent_histograms"] == [[0, 1, 2, 0], [1, 0, 1, 1]]
    assert data["unique"] is False


def test_reconstruct_identity(tmp_path):
    path = tmp_path / "q.txt"
    path.write_text(format_matrix_text([[1, 0, 0], [0, 1, 0], [0, 0, 1]]))
    data = invoke_json("reconstruct", "--workload", str(path), "--answers", "2,0,1", "--n", "3")
    assert data["unique"] is True and data["consistent_histograms"] == [[2, 0, 1]]


def test_rr_demo_reproducible():
    a = invoke("rr-demo", "--pi", "0.3", "--rho", "0.5", "--n", "500", "--seed", "9")
    b = invoke("rr-demo", "--pi", "0.3", "--rho", "0.5", "--n", "500", "--seed", "9")
    assert a == b and a[0] == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["title1", "--synthetic", "--replications", "2", "--seed", "4"],
        ["frontier", "--mechanism", "identity", "--k", "3", "--eps", "0.5:2:4"],
        ["verify-dp", "--mechanism", "laplace", "--epsilon", "0.5"],
    ],
)
def test_byte_identical_output(argv):
    assert invoke(*argv) == invoke(*argv)


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["nonsense"],
        ["frontier", "--mechanism", "rr", "--eps", "bad"],
        ["frontier", "--mechanism", "matrix"],
        ["optimize", "--mechanism", "identity", "--k", "1"],
        ["rr-demo", "--rho", "0.5", "--epsilon", "1"],
        ["title1", "--eta", "0"],
    ],
)
def test_usage_errors(argv):
    code, out, err = invoke(*argv)
    assert code == 2
    assert err


def test_missing_file_is_reported():
    code, out, _ = invoke("title1", "--districts", "/nonexistent/file.csv")
    assert code == 1
    assert "error" in json.loads(out)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "privacy_frontier", "title1", "--eta", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "title1"


@pytest.mark.parametrize("command", ["frontier", "optimize", "title1", "verify-dp", "reconstruct", "rr-demo"])
def test_help_documents_flags(command):
    code, out, _ = invoke(command, "--help")
    assert code == 0
    assert "--seed" in out
