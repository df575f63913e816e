import json

import pytest

from sitsqueeze.artifacts import SCHEMA_VERSION, SWEEP_COLUMNS, read_csv
from sitsqueeze.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, build_parser, main
from sitsqueeze.experiments import FIGURES, figure_path, load_document, series_configs

SMALL = ["--override", "n_bands=4", "--override", "L=0.2", "--override", "tau_max=15", "--n-traj", "6"]


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_every_pinned_document_loads_and_validates():
    for name in (*FIGURES, "default", "soliton", "attractors", "damping"):
        cfg, spec = load_document(figure_path(name))
        for _, c in series_configs(cfg, spec):
            c.validate()


def test_parser_knows_all_commands():
    p = build_parser()
    for cmd in ("run", "sweep-area", "sweep-damping", "sweep-temperature", "sweep-gamma0", *FIGURES):
        assert p.parse_args([cmd]).command == cmd


def test_run_writes_artifacts_and_reproduces(tmp_path, capsys):
    out = tmp_path / "a"
    code, stdout, _ = run_cli(["run", "--out", str(out), *SMALL], capsys)
    assert code == EXIT_OK
    report = json.loads(stdout)
    assert {"config", "manifest", "data", "plot"} <= set(report["files"])
    for name in ("config.toml", "manifest.json", "data.csv", "plot.svg", "area.svg"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["schema_version"] == SCHEMA_VERSION
    meta, rows = read_csv(out / "data.csv")
    assert meta["schema_version"] == str(SCHEMA_VERSION) and meta["table"] == "checkpoints"
    # rerun from the manifest and from the written TOML
    for src in ("manifest.json", "config.toml"):
        again = tmp_path / src
        assert run_cli(["run", "--config", str(out / src), "--out", str(again)], capsys)[0] == EXIT_OK
        assert (again / "data.csv").read_text() == (out / "data.csv").read_text()


def test_fig2a_sweep_artifacts(tmp_path, capsys):
    out = tmp_path / "fig2a"
    code, stdout, _ = run_cli(["fig2a", "--out", str(out), "--override", "L=0.2"], capsys)
    assert code == EXIT_OK
    meta, rows = read_csv(out / "data.csv")
    assert meta["table"] == "sweep"
    assert list(rows[0]) == ["series", *SWEEP_COLUMNS]
    assert len(rows) == len(load_document(figure_path("fig2a"))[1].values)
    svg = (out / "plot.svg").read_text()
    assert "energy loss" in svg and "atomic excitation" in svg
    assert (out / "curves.csv").exists()


def test_sweep_with_explicit_values(tmp_path, capsys):
    out = tmp_path / "s"
    code, stdout, _ = run_cli(["sweep-area", "--out", str(out), "--values", "2.5,2.0", *SMALL,
                               "--override", "area_over_pi=2.5"], capsys)
    assert code == EXIT_OK
    _, rows = read_csv(out / "data.csv")
    values = sorted({float(r["value"]) for r in rows})
    assert values == [2.0, 2.5]


@pytest.mark.parametrize("bad", [["--override", "d_tau=0.2"], ["--override", "no_such_key=1"],
                                 ["--override", "gamma0=-1"], ["--values", "a,b"]])
def test_invalid_configuration_exit_code(tmp_path, capsys, bad):
    cmd = "sweep-area" if bad[0] == "--values" else "run"
    code, _, err = run_cli([cmd, "--out", str(tmp_path), *bad], capsys)
    assert code == EXIT_CONFIG
    assert json.loads(err.strip().splitlines()[-1])["error"] == "invalid_config"
    assert (tmp_path / "error.json").exists()


def test_numerical_failure_exit_code(tmp_path, capsys):
    code, _, err = run_cli(["run", "--out", str(tmp_path), *SMALL, "--override", "noise.scale=3e3"], capsys)
    assert code == EXIT_NUMERIC
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "numerical_failure" and "diagnostics" in payload
