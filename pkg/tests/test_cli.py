import json

import pytest

from matchstat.cli import run
from matchstat.graph import read_graph


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def c4(tmp_path):
    f = tmp_path / "c4.txt"
    f.write_text("4 4\n0 1\n1 2\n2 3\n0 3\n")
    return str(f)


def test_count_cycle(capsys, c4):
    code, out, _ = call(capsys, "count", "--graph", c4)
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["counts"] == ["1", "4", "2"]
    assert doc["command"] == "count" and doc["config"]["graph"] == c4


def test_formulas_beta(capsys):
    code, out, _ = call(capsys, "formulas", "--n", "10", "--l", "5", "--p", "0.5")
    assert code == 0
    assert float(json.loads(out)["result"]["beta"]) == pytest.approx(0.745356, abs=1e-6)


def test_verify_switching(capsys):
    code, out, _ = call(capsys, "verify-switching", "--n", "6", "--l", "2", "--transition", "i:1-0")
    assert code == 0
    assert '"equal": true' in out


def test_pairs_csv_header(capsys):
    code, out, _ = call(capsys, "pairs", "--n", "4", "--l", "1")
    lines = out.splitlines()
    header = [x for x in lines if not x.startswith("#")][0]
    assert code == 0 and header.split(",")[:2] == ["i", "n2"]
    assert any(x.startswith("# version.matchstat=") for x in lines)


def test_csv_header_with_no_rows(capsys):
    code, out, _ = call(capsys, "mc-dist", "--n", "8", "--l", "2", "--p", "0.3", "--trials", "0", "--format", "csv")
    body = [x for x in out.splitlines() if not x.startswith("#")]
    assert code == 0 and body == ["trial,count"]


def test_byte_identical(tmp_path):
    p = tmp_path / "out.json"
    blobs = []
    for threads in (1, 1, 2):
        argv = ["mc-dist", "--n", "12", "--l", "3", "--p", "0.3", "--trials", "30", "--seed", "9", "--out", str(p)]
        assert run(argv + ["--threads", str(threads)]) == 0
        blobs.append(p.read_bytes())
    a, b, c = blobs
    assert a == b
    # the thread count appears in the config header only
    ra, rc = json.loads(a), json.loads(c)
    assert ra["rows"] == rc["rows"] and ra["result"] == rc["result"]


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 10, "l": 5, "p": "0.3"}))
    _, out, _ = call(capsys, "formulas", "--config", str(cfg))
    assert json.loads(out)["config"]["p"] == "0.3"
    _, out, _ = call(capsys, "formulas", "--config", str(cfg), "--p", "0.5")
    doc = json.loads(out)
    assert doc["config"]["p"] == "0.5" and doc["config"]["n"] == "10"
    assert json.loads(out)["config"]["delta"] == "9/10"
    cfg.write_text(json.dumps({"n": 10, "bogus": 1}))
    assert call(capsys, "formulas", "--config", str(cfg), "--l", "2", "--p", "0.5")[0] == 2


def test_big_integers_are_strings(capsys):
    _, out, _ = call(capsys, "formulas", "--n", "40", "--l", "20", "--p", "0.5")
    assert json.loads(out)["result"]["s"] == str(39 * 37 * 35 * 33 * 31 * 29 * 27 * 25 * 23 * 21 * 19 * 17 * 15 * 13 * 11 * 9 * 7 * 5 * 3)


@pytest.mark.parametrize("argv,code", [
    (["moments", "--n", "6", "--l", "2", "--p", "0.999"], 2),
    (["mc-dist", "--n", "10", "--l", "2", "--p", "0.999", "--trials", "3"], 2),
    (["formulas", "--n", "10", "--l", "9", "--p", "0.5"], 2),
    (["formulas", "--n", "10", "--p", "0.5"], 2),
    (["nosuch"], 2),
    (["formulas", "--n", "10", "--l", "5", "--p", "0.5", "--bogus"], 2),
    (["pairs", "--n", "10", "--l", "4", "--cap", "10"], 3),
    (["tuples", "--n", "6", "--l", "2", "--k", "4", "--cap", "10"], 3),
    (["count", "--graph", "/nonexistent/graph.txt"], 4),
])
def test_exit_codes(capsys, argv, code):
    assert run(argv) == code
    capsys.readouterr()


def test_save_graph_round_trip(tmp_path, capsys):
    g = tmp_path / "g.txt"
    code, out, _ = call(capsys, "count", "--n", "9", "--p", "0.4", "--seed", "3", "--save-graph", str(g))
    assert code == 0
    first = json.loads(out)["result"]["counts"]
    code, out, _ = call(capsys, "count", "--graph", str(g))
    assert json.loads(out)["result"]["counts"] == first
    assert read_graph(str(g)).n == 9


def test_plot_data(tmp_path, capsys):
    pd = tmp_path / "plot.csv"
    code, _, _ = call(capsys, "transition-scan", "--n", "10", "--p", "0.4", "--l-max", "3", "--trials", "40",
                      "--plot-data", str(pd))
    assert code == 0
    lines = pd.read_text().splitlines()
    assert lines[0] == "series,x,y" and len(lines) > 3


def test_exact_dist_and_moments(capsys):
    _, out, _ = call(capsys, "exact-dist", "--n", "4", "--l", "2", "--p", "1/2")
    doc = json.loads(out)
    assert doc["result"]["total"] == "1" and doc["result"]["mean"] == "3/4"
    code, out, _ = call(capsys, "moments", "--n", "6", "--l", "2", "--p", "3/10", "--k-max", "4")
    assert code == 0 and [r["k"] for r in json.loads(out)["rows"]] == ["2", "3", "4"]
