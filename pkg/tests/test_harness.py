import csv
import io
import json

import numpy as np
import pytest

from intspec.copulas import ScenarioError, generate, preset
from intspec.estimator import estimate_path
from intspec.harness import Cell, ExperimentPlan, analyze, p_value_quantiles, plan_from_dict, run
from intspec.sample import BlockScheme, TruncationWarning, decompose, enumerate_candidate_sets
from intspec.stationarity import MissingSimulationError, compute_statistics


def test_single_block_design_never_rejects():
    plan = ExperimentPlan((Cell(preset("gumbel", n=50), 50, 10),), replications=1)
    res = run(plan).results[0]
    assert res.frequency("ks", 0.05) == 0.0 and res.frequency("cm", 0.05) == 0.0
    assert np.all(res.statistics == 0.0)


def test_schedule_independence():
    plan = ExperimentPlan.grid([preset("gumbel", n=400)], [(50, 10), (100, 10)], replications=6, seed=5)
    a, b = run(plan, workers=1), run(plan, workers=2)
    assert a.to_csv() == b.to_csv()
    for ra, rb in zip(a.results, b.results):
        np.testing.assert_array_equal(ra.statistics, rb.statistics)


def test_infeasible_cells_are_reported():
    plan = ExperimentPlan.grid([preset("gumbel", n=400)], [(50, 10), (10, 20), (500, 5)], replications=2)
    table = run(plan)
    assert len(table.results) == 1
    reasons = [bad["reason"] for bad in table.infeasible]
    assert any("k < b" in r for r in reasons) and any("fewer observations" in r for r in reasons)
    assert json.loads(table.to_json())["infeasible"][0]["b"] == 10


def test_d3_requires_budget():
    with pytest.raises(MissingSimulationError, match="limit_replications"):
        ExperimentPlan((Cell(preset("t_jump", d=3), 50, 20),), replications=1)


def test_table_schema_and_mc_se():
    plan = ExperimentPlan((Cell(preset("gumbel", n=200), 50, 10),), replications=5, seed=3)
    table = run(plan)
    rows = list(csv.DictReader(io.StringIO(table.to_csv())))
    assert list(rows[0]) == ["scenario", "b", "k", "test", "size", "rejections", "R", "frequency", "mc_se", "seed"]
    assert len(rows) == 4
    for row in rows:
        p = int(row["rejections"]) / 5
        assert float(row["frequency"]) == pytest.approx(p)
        assert float(row["mc_se"]) == pytest.approx(np.sqrt(p * (1 - p) / 5), abs=1e-6)
        assert row["seed"] == "3"


def test_p_value_quantiles_empty_and_sorted():
    ks, cm = p_value_quantiles(preset("gumbel", n=200), 50, 10, 0)
    assert ks.size == 0 and cm.size == 0
    ks, cm = p_value_quantiles(preset("gumbel", n=200), 50, 10, 4, limit_replications=20)
    assert np.all(np.diff(ks) >= 0) and np.all((cm > 0) & (cm <= 1))


def test_analyze_truncates_with_warning():
    x = generate(preset("gumbel", n=230), 1).x
    with pytest.warns(TruncationWarning):
        rep = analyze(x, 50, 10)
    assert rep.path.scheme.n == 200


def test_analyze_matches_manual_pipeline():
    s = generate(preset("g_linear", lam1=4.0, n=500), 2)
    path = estimate_path(decompose(s), BlockScheme(500, 50, 10))
    manual = compute_statistics(path, enumerate_candidate_sets(path.atoms()[0], 2))
    rep = analyze(s, 50, 10)
    assert (rep.t_ks, rep.t_cm) == (manual.t_ks, manual.t_cm)


def test_plan_document():
    doc = {
        "seed": 2, "replications": 2,
        "scenarios": [{"preset": "t_jump", "n": 300, "sweep": {"rho1": [0.2, 0.75]}}],
        "blocks": [[50, 10]],
    }
    plan, workers = plan_from_dict(doc)
    assert workers == 1 and len(plan.cells) == 2
    table = run(plan)
    curves = list(csv.DictReader(io.StringIO(table.curves_csv())))
    assert {r["value"] for r in curves} == {"0.2", "0.75"}
    assert {r["family"] for r in curves} == {"t_jump"}
    with pytest.raises(ScenarioError, match="bogus"):
        plan_from_dict({**doc, "bogus": 1})
    with pytest.raises(ScenarioError, match=r"scenarios\[0\]"):
        plan_from_dict({**doc, "scenarios": [{"preset": "t_jump", "colour": 1}]})
    crossed = {key: v for key, v in doc.items() if key != "blocks"}
    crossed.update(b=[50, 100], k=[5, 10])
    plan, _ = plan_from_dict(crossed)
    assert [(c.b, c.k) for c in plan.cells[:4]] == [(50, 5), (50, 10), (100, 5), (100, 10)]
