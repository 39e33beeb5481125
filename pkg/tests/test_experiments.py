import json

import jsonschema
import pytest

from brownbeads.experiments import (CONFIG_SCHEMA, BudgetExceeded, CensoringError,
                                    ExperimentConfig, csv_rows, report_json, run_experiment)

SMALL_EXP = dict(n_paths=60, dt_ladder=[2e-2, 1e-2], t_grid=[2, 4, 8])


def test_defaults_filled_per_kind():
    c = ExperimentConfig.default("exponent", 1)
    assert c.n_paths == 10_000 and c.dt_ladder == [1e-2, 2.5e-3] and c.t_grid[-1] == 64
    a = ExperimentConfig.default("avoid", 1)
    assert a.hull == {"type": "semidisk", "x0": 2.0, "r": 1.0}
    # defaults are copied, not shared
    a.hull["r"] = 5.0
    assert ExperimentConfig.default("avoid", 1).hull["r"] == 1.0


@pytest.mark.parametrize("bad", [
    {"version": 2, "kind": "tail", "seed": 1},
    {"version": 1, "kind": "nope", "seed": 1},
    {"version": 1, "kind": "tail", "seed": -1},
    {"version": 1, "kind": "tail", "seed": 1, "n_paths": 0},
    {"version": 1, "kind": "tail", "seed": 1, "unknown": 3},
    {"version": 1, "kind": "exponent", "seed": 1, "t_grid": [2, 4]},
    {"version": 1, "kind": "tail"},
])
def test_schema_rejects(bad):
    with pytest.raises(jsonschema.ValidationError):
        ExperimentConfig.from_dict(bad)


def test_semantic_checks():
    with pytest.raises(ValueError):
        ExperimentConfig.default("exponent", 1, t_grid=[4, 2, 8])
    with pytest.raises(ValueError):
        ExperimentConfig.default("avoid", 1, hull={"type": "slit", "x0": 1.0, "r": 1.0})


def test_config_round_trip():
    c = ExperimentConfig.default("tail", 3, threads=2, budget_seconds=10.0)
    d = c.to_dict()
    assert ExperimentConfig.from_dict(d) == c
    assert "threads" not in c.to_dict(execution=False)
    jsonschema.validate(d, CONFIG_SCHEMA)


def test_exponent_report_shape():
    r = run_experiment(ExperimentConfig.default("exponent", 5, **SMALL_EXP))
    assert [q["dt"] for q in r["rungs"]] == [2e-2, 1e-2]
    assert r["fit"]["dt"] == 1e-2 and r["alpha_hat"] == -r["fit"]["slope"]
    assert r["fitter_gate"]["passed"]
    ps = [q["p"] for q in r["per_point"]]
    assert ps == sorted(ps, reverse=True)
    json.loads(report_json(r))
    head, rows = csv_rows(r)
    assert head[0] == "dt" and len(rows) == 6


def test_avoid_report_against_exact():
    r = run_experiment(ExperimentConfig.default("avoid", 6, n_paths=4000,
                                                dt_ladder=[1e-3, 2.5e-4], y_max=100.0))
    assert r["exact"] == pytest.approx(0.75)
    assert abs(r["p_extrapolated"]["value"] - 0.75) < 0.05
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig.default("avoid", 6, n_paths=10, y_max=5.0))


def test_tail_report_and_censoring():
    kw = dict(n_paths=30, dt_ladder=[1e-2], walkers=200, x_grid=[1.5, 2.0, 3.0], a_cap=9.0,
              y_max=60.0)
    r = run_experiment(ExperimentConfig.default("tail", 7, **kw))
    assert r["censoring"]["0.01"]["n_used"] <= 30
    assert r["reference"]["slope_on_grid"] < 0
    with pytest.raises(CensoringError):
        run_experiment(ExperimentConfig.default("tail", 7, **{**kw, "n_cap": 10}))
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig.default("tail", 7, **{**kw, "a_cap": 2.0}))


def test_capacity_report_passes():
    r = run_experiment(ExperimentConfig.default("capacity", 8, walkers=4000))
    assert r["passed"], [c for c in r["checks"] if not c["passed"]]
    assert {c["name"] for c in r["checks"]} >= {"slit cap1", "slit cap0", "subadditivity"}


def test_budget_enforced():
    with pytest.raises(BudgetExceeded):
        run_experiment(ExperimentConfig.default("exponent", 9, budget_seconds=1e-9, **SMALL_EXP))


def test_same_seed_same_json_across_threads():
    outs = []
    for t in (1, 3):
        r = run_experiment(ExperimentConfig.default("exponent", 10, threads=t, **SMALL_EXP))
        r.pop("generated_at")
        outs.append(report_json(r))
    assert outs[0] == outs[1]
    r = run_experiment(ExperimentConfig.default("exponent", 11, **SMALL_EXP))
    r.pop("generated_at")
    assert report_json(r) != outs[0]


def test_wrong_kind_rejected():
    from brownbeads.experiments import run_avoidance_experiment
    with pytest.raises(ValueError):
        run_avoidance_experiment(ExperimentConfig.default("tail", 1))
