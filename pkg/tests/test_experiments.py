import json

import pytest

from qspai import cli
from qspai.experiments import (
    ExperimentConfig,
    run_single,
    run_sweep_eps,
    run_sweep_length,
    run_two_material,
)
from qspai.sparse import read_matrix_market

SMALL = dict(gx=12, gy=9)


def test_defaults_echo_experimental_setup():
    d = ExperimentConfig()
    assert (d.gx, d.gy, d.k, d.split) == (401, 301, 1.0, False)
    assert (d.eps_box, d.box_length, d.max_box_iters, d.cg_tol) == (1e-6, 1.0, 100, 1e-10)
    assert (d.backend, d.samples, d.source_f, d.h, d.use_cache) == ("exact", 100, 1.0, 1.0, True)


def test_cli_defaults_equal_config_defaults():
    args = cli.build_parser().parse_args(["run"])
    cfg = cli._config(args)
    default = ExperimentConfig(out="results")
    assert cfg == default


def test_single_node_problem():
    r = run_single(ExperimentConfig(gx=1, gy=1))
    assert r.cg_iterations == 1 and r.pcg_iterations == 1
    assert r.speedup == 1.0


def test_report_fields_and_artifacts(tmp_path):
    out = tmp_path / "run"
    r = run_single(ExperimentConfig(**SMALL, out=str(out), export_k=True, export_m=True))
    assert r.speedup == r.cg_iterations / r.pcg_iterations
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["gx"] == 12
    assert report["pcg_iterations"] == r.pcg_iterations
    assert report["spai"]["unique_families"] == 6
    for name in ("cg_trace.csv", "pcg_trace.csv", "field.csv", "spai_stats.json", "K.mtx", "M.mtx"):
        assert (out / name).exists(), name
    assert (out / "cg_trace.csv").read_text().startswith("iteration,residual\n")
    assert (out / "field.csv").read_text().startswith("m,n,u\n")
    stats = json.loads((out / "spai_stats.json").read_text())
    assert stats["per_family_iters"] == r.spai["per_family_iters"]
    M = read_matrix_market(out / "M.mtx")
    K = read_matrix_market(out / "K.mtx")
    assert M.same_pattern(K) and M.n == 108


def test_two_material_degenerate_split_matches_uniform():
    a = run_single(ExperimentConfig(**SMALL))
    b = run_two_material(ExperimentConfig(**SMALL), 1.0, 1.0)
    assert (a.cg_iterations, a.pcg_iterations, a.spai) == (b.cg_iterations, b.pcg_iterations, b.spai)


def test_two_material_speedup():
    r = run_two_material(ExperimentConfig(gx=30, gy=20), 1.0, 100.0)
    assert r.speedup > 1.0
    assert r.spai["unique_families"] <= 21


def test_sweeps(tmp_path):
    reps = run_sweep_eps(ExperimentConfig(**SMALL, out=str(tmp_path)), [1e-6, 1e-2])
    assert [r.config["eps_box"] for r in reps] == [1e-6, 1e-2]
    summary = json.loads((tmp_path / "sweep_eps.json").read_text())
    assert len(summary["runs"]) == 2
    assert (tmp_path / "eps_1e-06" / "report.json").exists()

    reps = run_sweep_length(ExperimentConfig(**SMALL), [1.0, 1e-2])
    assert [r.config["box_length"] for r in reps] == [1.0, 1e-2]


def test_backend_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(backend="qpu")


def _snapshot(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_cli_reruns_are_byte_identical(tmp_path):
    args = ["run", "--gx", "10", "--gy", "8", "--backend", "sa", "--seed", "5", "--sweeps", "200",
            "--export-m"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "a2")]) == 0
    a, b = _snapshot(tmp_path / "a"), _snapshot(tmp_path / "a2")
    assert a.keys() == b.keys()
    for k in a:
        if k.name == "report.json":
            ja, jb = json.loads(a[k]), json.loads(b[k])
            ja["config"].pop("out"), jb["config"].pop("out")
            assert ja == jb
        else:
            assert a[k] == b[k], k


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["run", "--gx", "6", "--gy", "5", "--out", str(tmp_path)]) == 0
    assert "Q-PCG=" in capsys.readouterr().out
    rc = cli.main(["run", "--gx", "30", "--gy", "30", "--max-cg-iters", "2", "--out", str(tmp_path)])
    assert rc == 2
    assert cli.main(["run", "--gx", "0", "--out", str(tmp_path)]) == 1


def test_cli_sweep_and_two_material(tmp_path, capsys):
    assert cli.main(["sweep-eps", "--gx", "6", "--gy", "5", "--eps-list", "1e-4", "1e-2",
                     "--out", str(tmp_path)]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 2
    assert cli.main(["two-material", "--gx", "8", "--gy", "6", "--k2", "100",
                     "--out", str(tmp_path / "tm")]) == 0
    report = json.loads((tmp_path / "tm" / "report.json").read_text())
    assert report["config"]["split"] and report["config"]["k2"] == 100.0
