import csv
import io
import json

import pytest

from sdtk.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def ex1(tmp_path):
    return _write(tmp_path, "ex1.json", {"A": [[0, 2], [2, 0]], "B": [[0], [1]], "delays": [0, 1]})


def test_controllability_example1(capsys, ex1):
    code, out, _ = _run(capsys, ["controllability", "--system", ex1])
    assert code == EXIT_OK
    res = json.loads(out)
    assert res["outcome"] == "Uncontrollable"
    assert sorted(res["witness"]["period"]) == [0, 1]
    assert res["bound_Nstar"] == 15


def test_controllability_nilpotent_and_block_cyclic(capsys, tmp_path):
    nil = _write(tmp_path, "nil.json", {"A": [[0, 1], [0, 0]], "B": [[0], [1]], "delays": [0, 2]})
    code, out, _ = _run(capsys, ["controllability", "--system", nil])
    res = json.loads(out)
    assert code == EXIT_OK and res["outcome"] == "Controllable" and res["min_lookahead"] == 2
    swap = _write(tmp_path, "swap.json", {"A": [[0, 1], [1, 0]], "B": [[1], [0]], "delays": [0, 1]})
    code, out, _ = _run(capsys, ["controllability", "--system", swap, "--block-cyclic"])
    assert json.loads(out)["block_cyclic"]["outcome"] == "Uncontrollable"


def test_stability_example3(capsys, tmp_path):
    sys_ = _write(tmp_path, "s.json", {"A": [[2]], "B": [[1]], "delays": [0, 1]})
    gain = _write(tmp_path, "g.json", {"example3": {"k1": 0.4, "k2": -1.5}})
    code, out, _ = _run(capsys, ["stability", "--system", sys_, "--gain", gain])
    res = json.loads(out)
    assert code == EXIT_OK and res["outcome"] == "Stable"
    assert res["upper"] < 1


def test_stability_sweep_a4_unstable(capsys, tmp_path):
    sys_ = _write(tmp_path, "s.json", {"A": [[4]], "B": [[1]], "delays": [0, 1]})
    grid = {"start": -3, "stop": 3, "num": 7}
    gain = _write(tmp_path, "g.json", {"example3": {"k1": grid, "k2": grid}})
    code, out, _ = _run(capsys, ["stability", "--system", sys_, "--gain", gain])
    res = json.loads(out)
    assert code == EXIT_OK and res["outcome"] == "Unstable" and len(res["grid"]) == 49


def test_stability_di_gain_and_evaluate(capsys, tmp_path):
    sys_ = _write(tmp_path, "s.json", {"A": [[0.5]], "B": [[1]], "delays": [0, 1]})
    gain = _write(tmp_path, "g.json", {"K": [[0, 0]]})
    code, out, _ = _run(capsys, ["stability", "--system", sys_, "--gain", gain])
    assert code == EXIT_OK and json.loads(out)["outcome"] == "Stable"
    code, out, _ = _run(capsys, ["evaluate", "gain", "--system", sys_, "--gain", gain])
    assert code == EXIT_OK and json.loads(out)["outcome"] == "Stable"


def test_synthesize_scalar_zeroes_state(capsys, tmp_path):
    sys_ = _write(tmp_path, "s.json", {"A": [[2]], "B": [[1]], "delays": [0, 1, 3]})
    out_csv = tmp_path / "t.csv"
    code, out, _ = _run(capsys, ["synthesize", "scalar", "--system", sys_, "--seed", "4", "--out", str(out_csv)])
    res = json.loads(out)
    assert code == EXIT_OK and res["zero_by"] == 4
    assert res["gains"]["3"] == [-16, -8, -4, -2]
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert all(float(r["x_1"]) == 0 for r in rows if int(r["t"]) >= 4)


def test_synthesize_deadbeat_replay(capsys, tmp_path):
    sys_ = _write(tmp_path, "s.json", {"A": [[0, 2], [1, 1]], "B": [[0], [1]], "delays": [0, 1]})
    sig = _write(tmp_path, "sig.json", {"kind": "periodic", "period": [1, 0, 0]})
    code, out, _ = _run(capsys, ["synthesize", "deadbeat", "--system", sys_, "--signal", sig, "--x0", "1,-1", "--xf", "2,0"])
    res = json.loads(out)
    assert code == EXIT_OK and res["replay_error"] == 0


def test_simulate_zero_controller_csv(capsys, tmp_path):
    sys_ = _write(tmp_path, "s.json", {"A": [[0.5]], "B": [[1]], "delays": [0, 1]})
    code, out, _ = _run(capsys, ["simulate", "--system", sys_, "--seed", "1", "--horizon", "5"])
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "t,sigma,tau,v_1,x_1"
    assert [float(line.split(",")[-1]) for line in lines[1:]] == [0.5**t for t in range(6)]


def test_routing_simulation_is_byte_identical(capsys, tmp_path):
    sys_ = _write(tmp_path, "s.json", {"A": [[0.9, 0.1], [0, 0.8]], "B": [[0], [1]], "delays": [1, 2]})
    net = _write(
        tmp_path,
        "net.json",
        {
            "nodes": ["c", "r1", "r2", "a"],
            "edges": [
                {"from": "c", "to": "r1", "delay": 0},
                {"from": "c", "to": "r2", "delay": 1},
                {"from": "r1", "to": "a", "delay": 1},
                {"from": "r2", "to": "a", "delay": 1},
            ],
            "controller_node": "c",
            "actuator_node": "a",
        },
    )
    sig = _write(tmp_path, "sig.json", {"kind": "routing", "policy": "uniform"})
    gain = _write(tmp_path, "g.json", {"K": [[0.1, -0.2, 0, 0]]})
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        argv = ["simulate", "--system", sys_, "--network", net, "--signal", sig, "--gain", gain, "--seed", "3"]
        assert main(argv + ["--horizon", "40", "--out", str(path)]) == EXIT_OK
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert {int(r.split(b",")[1]) for r in outs[0].splitlines()[1:]} <= {1, 2}


def test_rotation_demo(capsys):
    code, out, _ = _run(capsys, ["rotation", "demo", "--seed", "2"])
    res = json.loads(out)
    assert code == EXIT_OK and res["rate"] <= 0.72
    assert _run(capsys, ["rotation", "demo", "--alpha", "0.5"])[0] == EXIT_INPUT


def test_reproduce_exit_codes(capsys):
    code, out, err = _run(capsys, ["reproduce", "3"])
    assert code == EXIT_OK and json.loads(out)["passed"]
    assert err.count("PASS") == 4
    # the printed Example 2 signal reaches full rank, so this check fails by design
    code, out, err = _run(capsys, ["reproduce", "2"])
    assert code == EXIT_FAIL and "FAIL example 2: rank_C_t_below_4" in err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["nosuch"],
        ["controllability", "--system", "/nonexistent.json"],
        ["controllability"],
        ["stability", "--system", "x.json"],
        ["reproduce", "9"],
        ["stability", "--epsilon", "-1"],
    ],
)
def test_input_errors_exit_2(capsys, argv):
    assert main(argv) == EXIT_INPUT


def test_malformed_files_exit_2(capsys, tmp_path):
    bad = _write(tmp_path, "bad.json", "{not json")
    assert main(["controllability", "--system", bad]) == EXIT_INPUT
    wrong = _write(tmp_path, "w.json", {"A": [[1, 2]], "B": [[1]], "delays": [0]})
    assert main(["controllability", "--system", wrong]) == EXIT_INPUT
    arr = _write(tmp_path, "arr.json", {"A": [[1]], "B": [[1]], "delays": [0], "arrival": "last"})
    assert main(["controllability", "--system", arr]) == EXIT_INPUT
    ok = _write(tmp_path, "ok.json", {"A": [[1]], "B": [[1]], "delays": [0]})
    assert main(["synthesize", "deadbeat", "--system", ok, "--seed", "0", "--x0", "1,2"]) == EXIT_INPUT


def test_output_uses_twelve_significant_digits(capsys, tmp_path):
    sys_ = _write(tmp_path, "s.json", {"A": [[0.3333333333333333]], "B": [[1]], "delays": [0]})
    code, out, _ = _run(capsys, ["simulate", "--system", sys_, "--seed", "0", "--horizon", "1"])
    assert out.strip().splitlines()[-1].endswith(",0.333333333333")
