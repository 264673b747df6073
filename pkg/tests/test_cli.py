import json
import subprocess
import sys

import pytest

from wickflow import cli
from wickflow.estimate import MCEstimate, block_map, block_sizes, resolve_workers
from wickflow.results import COLUMNS, ResultRow, rows_to_csv


def run(tmp_path, *args, config=None):
    argv = list(args) + ["--out", str(tmp_path / "out")]
    if config is not None:
        path = tmp_path / "cfg.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        argv += ["--config", str(path)]
    return cli.main(argv)


def test_hermite_check(tmp_path):
    assert run(tmp_path, "hermite-check", config={"kmax": 8}) == 0
    lines = (tmp_path / "out" / "results.csv").read_text().splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) - 1 == 9
    assert all(float(l.split(",")[4]) <= 1e-9 for l in lines[1:])


def test_malformed_json(tmp_path):
    assert run(tmp_path, "zn", config="{not json") == 2
    assert not (tmp_path / "out").exists()


def test_unknown_key_and_wrong_type(tmp_path):
    assert run(tmp_path, "zn", config={"bogus": 1}) == 2
    assert run(tmp_path, "zn", config={"n": "ten"}) == 2
    assert run(tmp_path, "zn", config={"experiment": "chain"}) == 2


def test_precondition(tmp_path):
    assert run(tmp_path, "zn", config={"n": 0}) == 3
    assert run(tmp_path, "lattice", config={"n_steps": 25}) == 3
    assert run(tmp_path, "chain", config={"generator": [[1.0, -1.0], [1.0, -1.0]]}) == 3


def test_bad_command_line(tmp_path):
    assert cli.main(["nonsense"]) == 2
    assert cli.main(["zn", "--workers", "zero", "--out", str(tmp_path)]) == 2


def test_contract_failure_still_writes(tmp_path):
    code = run(tmp_path, "gram", config={"n": 64, "tolerance": 0.0, "length": [0.3, 0.2]})
    assert code == 1
    assert (tmp_path / "out" / "results.csv").exists()
    assert json.loads((tmp_path / "out" / "summary.json").read_text())["passed"] is False


def test_rerun_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for d in (a, b):
        cli.main(["chain", "--reps", "3000", "--seed", "99", "--no-timing", "--out", str(d)])
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()


def test_timing_column_present_by_default(tmp_path):
    run(tmp_path, "lattice", config={"n_steps": 2})
    row = (tmp_path / "out" / "results.csv").read_text().splitlines()[1].split(",")
    assert row[COLUMNS.index("wall_time_ms")] != ""


def test_workers_do_not_change_results(tmp_path):
    outs = []
    for w in ("1", "4", "16"):
        d = tmp_path / w
        cli.main(["zn", "--reps", "3000", "--seed", "5", "--workers", w, "--no-timing", "--out", str(d)])
        outs.append((d / "results.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_shift_csv_columns(tmp_path):
    run(tmp_path, "gmc-circle", config={"n": 256, "reps": 2000})
    head = (tmp_path / "out" / "shifts.csv").read_text().splitlines()[0]
    assert head == "label,n,reps,mean,stderr,oracle,z_score"


@pytest.mark.parametrize("cmd,cfg", [
    ("adjoint-check", {"reps": 2000}),
    ("shift-identity", {"n": 4, "p_reps": 2000, "q_reps": 20}),
    ("milt-moments", {"shift": "planar-motion", "n": 32, "reps": 500, "ks": [1, 2]}),
    ("she1d", {"n": 8, "p_reps": 2000, "q_reps": 20}),
    ("she2d", {"n": 8, "p_reps": 2000, "q_reps": 20}),
    ("kpz-couple", {"Ns": [4, 64], "n": 8, "reps": 300}),
    ("alpha-variance", {"nus": [0.5], "ys": [0.0, 1.0], "n": 16, "steps": 128, "reps": 300}),
    ("zn", {"shift": "gmc-circle", "n": 64, "p_reps": 2000}),
    ("zn", {"shift": "lattice", "n": 15, "p_reps": 2000}),
])
def test_subcommands_run(tmp_path, cmd, cfg):
    assert run(tmp_path, cmd, config=cfg) in (0, 1)
    assert (tmp_path / "out" / "results.csv").read_text().count("\n") >= 2


def test_dump_paths(tmp_path):
    dump = tmp_path / "path.csv"
    run(tmp_path, "she2d", config={"n": 4, "p_reps": 200, "q_reps": 10, "dump_paths": str(dump)})
    lines = dump.read_text().splitlines()
    assert lines[0] == "time,x,y" and len(lines) == 2 + 64


def test_module_entry_point(tmp_path):
    p = subprocess.run([sys.executable, "-m", "wickflow.cli", "lattice", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert p.returncode == 0


def test_z_score_rule():
    r = ResultRow("x", "y", 1, 10, 1.5, 0.25, 1.0)
    assert r.z_score == 2.0
    assert ResultRow("x", "y", 1, 10, 1.5, 0.25).z_score is None
    assert "2.0" in rows_to_csv([r])


def test_block_map_order_independent_of_workers():
    def fn(seed, size):
        return [seed % 1000, size]
    assert block_map(fn, 3, block_sizes(10, 3), 1) == block_map(fn, 3, block_sizes(10, 3), 1)
    assert block_sizes(10, 3) == [3, 3, 3, 1]


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv("WICKFLOW_WORKERS", "3")
    assert resolve_workers(None) == 3
    assert resolve_workers(2) == 2
    assert resolve_workers("auto") >= 1
    with pytest.raises(ValueError):
        resolve_workers(0)


def test_estimate_from_samples():
    e = MCEstimate.from_samples([1.0, 2.0, 3.0, 4.0], 0, 0)
    assert e.mean == 2.5 and e.stderr == pytest.approx((5 / 3 / 4) ** 0.5)
    with pytest.raises(ValueError):
        MCEstimate.from_samples([1.0], 0, 0)
