import csv
import io

import numpy as np
import pytest

from factories import exact_factor_data, make_dataset, simple_structure
from proxfactor import published
from proxfactor.efa import prune_iterate
from proxfactor.regression import RegressionResult, fit_statistics, ols_fit, stepwise_select
from proxfactor.report import (
    DEFAULT_HYPOTHESES,
    FACTOR_NAMES,
    HypothesisSpec,
    ModelColumn,
    QuadrantThresholds,
    ReportError,
    Verdict,
    classify_points,
    descriptive_table,
    emit_tables,
    emphasize,
    evaluate_hypotheses,
    fmt,
    quadrant_classify,
    render_descriptives,
    render_loadings,
    render_quadrants,
    render_regressions,
)
from proxfactor.scales import ScaleDefinition, build_scale
from proxfactor.statcore import p_value_r

# -- formatting ------------------------------------------------------------


def test_fmt_normalizes_negative_zero_and_missing():
    assert fmt(-0.0004) == "0.000"
    assert fmt(0.4567) == "0.457"
    assert fmt(None) == "" and fmt(float("nan")) == ""
    assert fmt(float("inf")) == "inf"


@pytest.mark.parametrize("value, text", [(0.4, "***0.400***"), (-0.41, "***-0.410***"), (0.399, "0.399")])
def test_emphasize(value, text):
    assert emphasize(value) == text


# -- quadrants -------------------------------------------------------------


def test_quadrant_strict_inequalities():
    t = QuadrantThresholds(10, 20, 30, 40)
    rep = classify_points(
        ["a", "b", "c", "d", "e", "f"], ["A", "B", "C", "D", "E", "F"],
        [9, 10, 21, 20, 21, float("nan")], [29, 29, 41, 41, 40, 10], t,
    )
    assert rep.codes("low_low") == ("a",)
    assert rep.codes("high_high") == ("c",)
    assert set(rep.codes("unclassified")) == {"b", "d", "e", "f"}


def test_thresholds_from_values_use_sample_sd():
    x = np.array([1.0, 2.0, 3.0, 4.0, np.nan])
    y = np.array([2.0, 4.0, 6.0, 8.0, 1.0])
    t = QuadrantThresholds.from_values(x, y)
    sd = np.std([1, 2, 3, 4], ddof=1)
    assert (t.x_low, t.x_high) == pytest.approx((2.5 - sd, 2.5 + sd))
    assert (t.y_low, t.y_high) == pytest.approx((5 - 2 * sd, 5 + 2 * sd))


def test_threshold_validation():
    with pytest.raises(ReportError):
        QuadrantThresholds(2, 1, 0, 1)


def test_appendix_membership_with_printed_thresholds():
    rows = published.appendix_rows()
    rep = classify_points(
        [r.code for r in rows], [r.title for r in rows],
        [r.response_to_aggression for r in rows], [r.physical_proximity for r in rows],
        published.PRINTED_THRESHOLDS,
    )
    assert set(rep.codes("low_low")) == {r.code for r in rows if r.table == "A1"}
    assert set(rep.codes("high_high")) == {r.code for r in rows if r.table == "A2"}


def test_quadrant_classify_on_scales_and_render():
    ds = make_dataset(
        np.array([[5, 5], [50, 50], [95, 95], [40, 60], [60, 40], [50, 55]], float),
        ["Work Context - X", "Work Context - Y"],
    )
    x = build_scale(ds, ScaleDefinition("X", ["Work Context - X"]))
    y = build_scale(ds, ScaleDefinition("Y", ["Work Context - Y"]))
    rep = quadrant_classify(x, y)
    assert rep.codes("low_low") == (ds.codes[0],)
    assert rep.codes("high_high") == (ds.codes[2],)
    md, text = render_quadrants(rep)
    assert "Low / low (1)" in md and "Mean + SD" in md
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["box", "code", "title", "X", "Y"]
    assert rows[1][:2] == ["low_low", ds.codes[0]]


# -- hypotheses ------------------------------------------------------------


def _simple_from_r(name, r, n=published.SAMPLE_SIZE):
    adj, f, f_p = fit_statistics(r * r, n, 1)
    p = p_value_r(r, n)
    return RegressionResult(
        "Physical Proximity", (name,), np.array([r]), np.array([np.nan]), np.array([np.nan]),
        np.array([p]), ("",), r * r, adj, f, f_p, n,
    )


def test_printed_correlations_give_expected_verdicts():
    n = published.SAMPLE_SIZE
    corr = {k: (r, p_value_r(r, n)) for k, r in published.PRINTED_R.items()}
    regs = {k: _simple_from_r(k, r) for k, r in published.PRINTED_R.items()}
    checks = {c.id: c for c in evaluate_hypotheses(corr, regs)}
    assert checks["H1"].verdict is Verdict.MIXED  # Leadership not significant
    assert checks["H2"].verdict is Verdict.MIXED  # Mechanical Movement not significant
    assert checks["H3"].verdict is Verdict.SUPPORTED
    assert checks["H4"].verdict is Verdict.SUPPORTED
    assert checks["H4"].observed["argmax"] == "Response to Aggression"
    assert "(n.s.)" in checks["H1"].observed["Leadership"]


def test_strongest_requires_positive_direction():
    corr = {name: (0.05, 0.5) for name in FACTOR_NAMES}
    corr["Response to Aggression"] = (-0.6, 1e-9)
    regs = {name: _simple_from_r(name, corr[name][0]) for name in FACTOR_NAMES}
    spec = [s for s in DEFAULT_HYPOTHESES if s.id == "H4"]
    (check,) = evaluate_hypotheses(corr, regs, spec)
    assert check.verdict is Verdict.NOT_SUPPORTED


def test_sign_verdicts_and_missing_scales():
    spec = HypothesisSpec("X", "sign", ("a", "b"), -1)
    assert evaluate_hypotheses({"a": (-0.3, 0.001), "b": (-0.2, 0.01)}, {}, [spec])[0].verdict is Verdict.SUPPORTED
    assert evaluate_hypotheses({"a": (0.3, 0.001), "b": (-0.2, 0.2)}, {}, [spec])[0].verdict is Verdict.NOT_SUPPORTED
    missing = evaluate_hypotheses({"a": (-0.3, 0.001)}, {}, [spec])[0]
    assert missing.verdict is Verdict.UNEVALUABLE and "b" in missing.render()


def test_unknown_hypothesis_kind():
    with pytest.raises(ReportError):
        evaluate_hypotheses({}, {}, [HypothesisSpec("Z", "bogus", ("a",))])


# -- tables ----------------------------------------------------------------


def _solution():
    lam = simple_structure(3, 2, 0.8)
    items = [f"Work Context - I{j}" for j in range(6)]
    ds = make_dataset(exact_factor_data(lam, n=120, seed=9), items)
    return prune_iterate(ds, items), ds


def test_render_loadings_groups_and_marks():
    sol, _ = _solution()
    md, text = render_loadings(sol, ["F1", "F2"], {sol.items[0]: "(T)"})
    assert "| Item | F1 | F2 |" in md
    assert f"{sol.items[0]} (T)" in md
    assert md.count("***") == 2 * 6
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["item", "marks", "F1", "F2", "communality"]
    primary = sol.primary_factor()
    order = [primary[r[0]] for r in rows[1:]]
    assert order == sorted(order)


def test_descriptives_table_and_stars():
    rng = np.random.default_rng(0)
    a = rng.normal(size=200)
    scales = {"a": a, "b": a + rng.normal(size=200), "c": rng.normal(size=200)}
    table = descriptive_table(scales, alphas={"b": 0.8})
    assert table.n == 200
    assert table.r_with("a", "b")[0] == pytest.approx(np.corrcoef(a, scales["b"])[0, 1])
    md, text = render_descriptives(table)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["variable", "mean", "sd", "alpha", "a", "b"]
    assert rows[2][3] == "0.800" and rows[2][4].endswith("**")
    assert rows[1][4:] == ["", ""]


def test_regression_tables_mark_offered_and_selected():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(100, 3))
    y = x[:, 0] + rng.normal(size=100)
    names = ["a", "b", "c"]
    simple = {n: ols_fit(y, x[:, [j]], [n]) for j, n in enumerate(names)}
    step, _ = stepwise_select(y, x[:, :2], names[:2])
    enter = ols_fit(y, x[:, [1, 2]], ["b", "c"])
    md, text = render_regressions(
        simple, [ModelColumn("S", ("a", "b"), step, "stepwise"), ModelColumn("E", ("b", "c"), enter)]
    )
    lines = {line.split("|")[1].strip(): line for line in md.splitlines() if line.startswith("| ")}
    assert "| - |" in lines["c"]  # c not offered to the stepwise model
    assert lines["b"].split("|")[2].strip() == ""  # b offered but not selected
    rows = list(csv.reader(io.StringIO(text)))
    assert {r[0] for r in rows[1:]} == {"simple", "stepwise", "enter"}


def test_emit_tables_keys():
    sol, ds = _solution()
    docs = emit_tables(solution=sol)
    assert set(docs) == {"loadings.md", "loadings.csv"}
