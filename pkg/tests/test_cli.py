import copy
import csv
import json
import math

import pytest

from savsddp import cli
from savsddp import experiments as ex
from savsddp.instances import five_node_line, toy2
from savsddp.specfile import SpecError, load_model, model_to_dict, parse_model


@pytest.fixture
def toy_model():
    net, spec, w, o, _ = toy2()
    return model_to_dict(net, spec, w, o)


def test_model_round_trip(toy_model):
    m = parse_model(toy_model)
    again = model_to_dict(m["network"], m["demand"], m["weights"], m["options"])
    assert again == toy_model
    assert json.loads(json.dumps(again)) == again


def test_infinite_capacity_is_null():
    net, spec, w, o = five_node_line()
    d = model_to_dict(net, spec, w, o)
    d["network"]["links"][0]["cap_max"] = None
    assert math.isinf(parse_model(d)["network"].links[0].cap_max)


@pytest.mark.parametrize("edit, path", [
    (lambda d: d["demand"]["departures"][0]["od"][0].update(expected="x"),
     "demand.departures[0].od[0].expected"),
    (lambda d: d["demand"]["departures"][0]["od"][0].update(origin="Z"),
     "demand.departures[0].od[0].origin"),
    (lambda d: d["network"]["links"][1].update(travel_time=1.5), "network.links[1].travel_time"),
    (lambda d: d["network"]["nodes"][0].update(colour="red"), "network.nodes[0].colour"),
    (lambda d: d["weights"].update(alpha_T=True), "weights.alpha_T"),
    (lambda d: d["options"].update(dedicated="yes"), "options.dedicated"),
    (lambda d: d.pop("demand"), "demand"),
    (lambda d: d["demand"].update(booking_rate=2.0), "demand"),
    (lambda d: d.update(experiment={"rhos": []}), "experiment.rhos"),
    (lambda d: d.update(experiment={"speed": 1}), "experiment.speed"),
    (lambda d: d.update(experiment={"weight_sets": [[1, 2]]}), "experiment.weight_sets[0]"),
])
def test_errors_name_the_key_path(toy_model, edit, path):
    d = copy.deepcopy(toy_model)
    edit(d)
    with pytest.raises(SpecError) as err:
        ex.config_from_model(parse_model(d))
    assert err.value.path == path


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SpecError, match="invalid JSON"):
        load_model(p)


def test_overrides_win(toy_model):
    d = dict(toy_model, experiment={"iterations": 7, "paths": 2})
    cfg = ex.config_from_model(parse_model(d), iterations=3, paths=None, seed=5)
    assert (cfg.iterations, cfg.paths, cfg.seed, cfg.options.seed) == (3, 2, 5, 5)


def test_sub_seeds_differ_and_repeat():
    assert ex.sub_seed(0, 1) == ex.sub_seed(0, 1)
    assert ex.sub_seed(0, 1) != ex.sub_seed(0, 2) != ex.sub_seed(1, 1)


def read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_oracle_command_on_toy(tmp_path, capsys):
    assert cli.main(["oracle", "--out", str(tmp_path)]) == 0
    (row,) = read(tmp_path / "oracle.csv")
    assert float(row["ef_optimum"]) == pytest.approx(10.0, abs=1e-6)
    assert float(row["rel_gap"]) <= 1e-6
    assert row["passed"] == "true"
    assert "extensive form" in capsys.readouterr().out


def test_oracle_exit_status_on_failure(tmp_path, toy_model):
    cfg_path = tmp_path / "toy.json"
    cfg_path.write_text(json.dumps(toy_model))
    # one iteration cannot close the gap on the toy
    rc = cli.main(["oracle", "--config", str(cfg_path), "--iterations", "1", "--out",
                   str(tmp_path)])
    (row,) = read(tmp_path / "oracle.csv")
    assert row["passed"] == ("true" if rc == 0 else "false")
    assert rc in (0, 1)


def test_oracle_scenario_cap(tmp_path, toy_model, capsys):
    d = dict(toy_model, experiment={"max_scenarios": 1})
    d["options"]["saa_samples"] = 3
    d["demand"]["noise_halfwidth"] = 0.2
    cfg_path = tmp_path / "toy.json"
    cfg_path.write_text(json.dumps(d))
    assert cli.main(["oracle", "--config", str(cfg_path), "--out", str(tmp_path)]) == 2
    assert "cap" in capsys.readouterr().err


def test_bad_config_reports_path(tmp_path, toy_model, capsys):
    toy_model["network"]["links"][0]["cap_min"] = "low"
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps(toy_model))
    assert cli.main(["validate", "--config", str(cfg_path)]) == 2
    assert "network.links[0].cap_min" in capsys.readouterr().err


def test_missing_config_for_sweeps(capsys):
    assert cli.main(["sensitivity"]) == 2
    assert "--config" in capsys.readouterr().err


def test_bad_thread_setting(monkeypatch, capsys):
    monkeypatch.setenv("SAVSDDP_THREADS", "many")
    assert cli.main(["oracle"]) == 2
    assert "SAVSDDP_THREADS" in capsys.readouterr().err


def test_validate_with_infinite_epsilon(tmp_path):
    net, spec, w, o = five_node_line(total_demand=100.0, horizon=8, latest_arrival=6,
                                 departures=(2,))
    d = model_to_dict(net, spec, w, o)
    d["experiment"] = {"eval_paths": 2}
    cfg_path = tmp_path / "small.json"
    cfg_path.write_text(json.dumps(d))
    assert cli.main(["validate", "--config", str(cfg_path), "--epsilon", "inf", "--samples", "2",
                     "--out", str(tmp_path)]) == 0
    rows = read(tmp_path / "convergence.csv")
    assert len(rows) == len(ex.DEFAULT_WEIGHTS)
    assert list(rows[0]) == ex.CONVERGENCE_HEADER
    assert [(r["alpha_T"], r["alpha_D"]) for r in rows] == [("10.0", "1.0"), ("1.0", "1.0"),
                                                           ("1.0", "10.0")]


def test_sensitivity_shape(tmp_path):
    net, spec, w, o = five_node_line(total_demand=60.0, horizon=6, latest_arrival=5, departures=(2,))
    d = model_to_dict(net, spec, w, o)
    d["experiment"] = {"eval_paths": 2, "iterations": 2}
    cfg_path = tmp_path / "small.json"
    cfg_path.write_text(json.dumps(d))
    assert cli.main(["sensitivity", "--config", str(cfg_path), "--samples", "2",
                     "--out", str(tmp_path)]) == 0
    rows = read(tmp_path / "design.csv")
    assert len(rows) == 5 * 2
    assert list(rows[0]) == ex.DESIGN_HEADER
    assert {r["booking_rate"] for r in rows} == {"0.0", "0.25", "0.5", "0.75", "1.0"}
    assert all(r["converged"] in ("true", "false") for r in rows)
    raw = (tmp_path / "design.csv").read_bytes()
    assert b"\r" not in raw


def test_atomic_write_leaves_no_temp_files(tmp_path):
    ex.write_csv(tmp_path / "a.csv", ["x"], [[1.0]])
    assert [p.name for p in tmp_path.iterdir()] == ["a.csv"]
    assert (tmp_path / "a.csv").read_text() == "x\n1.0\n"
