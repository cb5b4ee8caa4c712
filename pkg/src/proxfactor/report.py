"""Quadrant classification, hypothesis checks and table rendering.

Renderers return text and never touch the filesystem; the CLI decides where
the documents go. Output is deterministic for identical inputs.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .efa import FactorSolution
from .regression import RegressionResult
from .scales import ScaleScores
from .statcore import p_value_r, significance_stars


class ReportError(ValueError):
    pass


def fmt(value: float | None, decimals: int = 3) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    text = f"{value:.{decimals}f}"
    if text.startswith("-") and float(text) == 0.0:
        text = text[1:]
    return text


def _csv_text(rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _md_table(header: Sequence[str], rows: Sequence[Sequence[str]], align: str = "") -> str:
    def esc(cell: str) -> str:
        return str(cell).replace("|", "\\|")

    lines = ["| " + " | ".join(esc(h) for h in header) + " |"]
    seps = ["---"] + ["---:" for _ in header[1:]] if align == "right" else ["---" for _ in header]
    lines.append("| " + " | ".join(seps) + " |")
    for row in rows:
        lines.append("| " + " | ".join(esc(c) for c in row) + " |")
    return "\n".join(lines) + "\n"


# -- quadrants -------------------------------------------------------------


@dataclass(frozen=True)
class QuadrantThresholds:
    x_low: float
    x_high: float
    y_low: float
    y_high: float

    def __post_init__(self):
        if not self.x_low < self.x_high:
            raise ReportError(f"x_low ({self.x_low}) must be below x_high ({self.x_high})")
        if not self.y_low < self.y_high:
            raise ReportError(f"y_low ({self.y_low}) must be below y_high ({self.y_high})")

    @classmethod
    def from_values(cls, x, y) -> "QuadrantThresholds":
        """Mean minus / plus one sample SD on each axis, over complete pairs."""
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = ~(np.isnan(x) | np.isnan(y))
        x, y = x[ok], y[ok]
        mx, sx = x.mean(), x.std(ddof=1)
        my, sy = y.mean(), y.std(ddof=1)
        return cls(float(mx - sx), float(mx + sx), float(my - sy), float(my + sy))


@dataclass(frozen=True)
class QuadrantEntry:
    code: str
    title: str
    x: float
    y: float


@dataclass(frozen=True)
class QuadrantReport:
    thresholds: QuadrantThresholds
    low_low: tuple[QuadrantEntry, ...]
    high_high: tuple[QuadrantEntry, ...]
    unclassified: tuple[QuadrantEntry, ...]
    x_name: str = "x"
    y_name: str = "y"

    def codes(self, box: str) -> tuple[str, ...]:
        return tuple(e.code for e in getattr(self, box))


def classify_points(
    codes: Sequence[str],
    titles: Sequence[str],
    x: Sequence[float],
    y: Sequence[float],
    thresholds: QuadrantThresholds,
    x_name: str = "x",
    y_name: str = "y",
) -> QuadrantReport:
    """Strict-inequality box membership; ties and missing values stay unclassified."""
    low, high, rest = [], [], []
    for code, title, xv, yv in zip(codes, titles, x, y):
        entry = QuadrantEntry(code, title, float(xv), float(yv))
        if xv < thresholds.x_low and yv < thresholds.y_low:
            low.append(entry)
        elif xv > thresholds.x_high and yv > thresholds.y_high:
            high.append(entry)
        else:
            rest.append(entry)
    return QuadrantReport(thresholds, tuple(low), tuple(high), tuple(rest), x_name, y_name)


def quadrant_classify(
    x: ScaleScores,
    y: ScaleScores,
    thresholds: QuadrantThresholds | None = None,
) -> QuadrantReport:
    if x.codes != y.codes:
        raise ReportError(f"{x.name!r} and {y.name!r} cover different occupations")
    if thresholds is None:
        thresholds = QuadrantThresholds.from_values(x.scores, y.scores)
    return classify_points(x.codes, x.titles, x.scores, y.scores, thresholds, x.name, y.name)


def render_quadrants(report: QuadrantReport, decimals: int = 1) -> tuple[str, str]:
    """Appendix-style membership tables as ``(markdown, csv)``."""
    rows = [["box", "code", "title", report.x_name, report.y_name]]
    md_parts = []
    for box, label in (("low_low", "Low / low"), ("high_high", "High / high")):
        entries = getattr(report, box)
        body = [[e.code, e.title, fmt(e.x, decimals), fmt(e.y, decimals)] for e in entries]
        rows.extend([box, *r] for r in body)
        md_parts.append(f"### {label} ({len(entries)})\n\n")
        md_parts.append(_md_table(["Code", "Occupation", report.x_name, report.y_name], body))
        md_parts.append("\n")
    t = report.thresholds
    md_parts.append(
        _md_table(
            ["Threshold", report.x_name, report.y_name],
            [
                ["Mean + SD", fmt(t.x_high, decimals), fmt(t.y_high, decimals)],
                ["Mean - SD", fmt(t.x_low, decimals), fmt(t.y_low, decimals)],
            ],
        )
    )
    return "".join(md_parts), _csv_text(rows)


def render_scatter(x: ScaleScores, y: ScaleScores, decimals: int = 1) -> str:
    rows = [["code", x.name, y.name]]
    for code, xv, yv in zip(x.codes, x.scores, y.scores):
        rows.append([code, fmt(float(xv), decimals), fmt(float(yv), decimals)])
    return _csv_text(rows)


# -- hypotheses ------------------------------------------------------------


class Verdict(str, Enum):
    SUPPORTED = "Supported"
    NOT_SUPPORTED = "NotSupported"
    MIXED = "Mixed"
    UNEVALUABLE = "Unevaluable"


@dataclass(frozen=True)
class HypothesisSpec:
    id: str
    kind: str  # "sign" or "strongest"
    scales: tuple[str, ...]
    sign: int = 1
    among: tuple[str, ...] = ()

    def describe(self) -> str:
        if self.kind == "sign":
            word = "positive" if self.sign > 0 else "negative"
            return f"{word} correlation: {', '.join(self.scales)}"
        return f"largest adjusted R² among single-predictor fits: {self.scales[0]}"


FACTOR_NAMES = (
    "Adverse Conditions",
    "Leadership",
    "Information Processing",
    "Response to Aggression",
    "Mechanical Movement",
    "Autonomy",
    "Communication with the Outside",
    "Horizontal Teamwork",
)

DEFAULT_HYPOTHESES = (
    HypothesisSpec(
        "H1", "sign", ("Leadership", "Response to Aggression", "Horizontal Teamwork"), 1
    ),
    HypothesisSpec(
        "H2",
        "sign",
        ("Information Processing", "Autonomy", "Mechanical Movement",
         "Communication with the Outside"),
        -1,
    ),
    HypothesisSpec("H3", "sign", ("Adverse Conditions",), 1),
    HypothesisSpec("H4", "strongest", ("Response to Aggression",), 1, FACTOR_NAMES),
)


@dataclass(frozen=True)
class HypothesisCheck:
    id: str
    expected: str
    observed: dict = field(hash=False)
    verdict: Verdict

    def render(self) -> str:
        parts = []
        for name, value in self.observed.items():
            parts.append(f"{name}={value}")
        return f"{self.id}: {self.verdict.value} ({self.expected}) " + "; ".join(parts)


def evaluate_hypotheses(
    correlations: Mapping[str, tuple[float, float]],
    regressions: Mapping[str, RegressionResult],
    specs: Sequence[HypothesisSpec] = DEFAULT_HYPOTHESES,
    alpha: float = 0.05,
) -> list[HypothesisCheck]:
    """Sign checks at ``alpha`` and a strongest-predictor check.

    ``correlations`` maps scale name to ``(r, p)`` with the dependent
    variable; ``regressions`` maps scale name to its single-predictor fit.
    """
    checks = []
    for spec in specs:
        if spec.kind == "sign":
            checks.append(_sign_check(spec, correlations, alpha))
        elif spec.kind == "strongest":
            checks.append(_strongest_check(spec, correlations, regressions))
        else:
            raise ReportError(f"{spec.id}: unknown hypothesis kind {spec.kind!r}")
    return checks


def _sign_check(spec, correlations, alpha):
    missing = [s for s in spec.scales if s not in correlations]
    if missing:
        return HypothesisCheck(
            spec.id, spec.describe(), {"missing": ", ".join(missing)}, Verdict.UNEVALUABLE
        )
    observed, hits = {}, 0
    for name in spec.scales:
        r, p = correlations[name]
        ok = (r * spec.sign > 0) and p < alpha
        hits += ok
        observed[name] = f"r={fmt(r)}{'' if p < alpha else ' (n.s.)'}"
    if hits == len(spec.scales):
        verdict = Verdict.SUPPORTED
    elif hits == 0:
        verdict = Verdict.NOT_SUPPORTED
    else:
        verdict = Verdict.MIXED
    return HypothesisCheck(spec.id, spec.describe(), observed, verdict)


def _strongest_check(spec, correlations, regressions):
    target = spec.scales[0]
    pool = tuple(dict.fromkeys((*spec.among, target))) if spec.among else tuple(regressions)
    missing = [s for s in pool if s not in regressions]
    if missing:
        return HypothesisCheck(
            spec.id, spec.describe(), {"missing": ", ".join(missing)}, Verdict.UNEVALUABLE
        )
    adj = {name: regressions[name].adj_r_squared for name in pool}
    winner = max(pool, key=lambda n: (adj[n], -pool.index(n)))
    beta = regressions[target].beta_of(target) if target in regressions[target].predictors else 0.0
    r = correlations.get(target, (beta, 0.0))[0]
    observed = {"argmax": winner, f"adjR2[{target}]": fmt(adj[target])}
    ok = winner == target and r * spec.sign > 0
    return HypothesisCheck(
        spec.id, spec.describe(), observed, Verdict.SUPPORTED if ok else Verdict.NOT_SUPPORTED
    )


# -- tables ----------------------------------------------------------------


def emphasize(value: float, cutoff: float = 0.4, decimals: int = 3) -> str:
    """Bold-italic markdown for loadings at or above the cutoff in magnitude."""
    text = fmt(value, decimals)
    return f"***{text}***" if abs(value) >= cutoff else text


def render_loadings(
    solution: FactorSolution,
    factor_names: Sequence[str] | None = None,
    marks: Mapping[str, str] | None = None,
    cutoff: float = 0.4,
) -> tuple[str, str]:
    """Loadings table, items grouped by primary factor and sorted by loading."""
    names = list(factor_names or [f"Factor {k + 1}" for k in range(solution.n_factors)])
    marks = marks or {}
    primary = solution.primary_factor()
    index = {item: i for i, item in enumerate(solution.items)}
    ordered = sorted(
        solution.items,
        key=lambda it: (primary[it], -abs(solution.loadings[index[it], primary[it]]), it),
    )
    md_rows, csv_rows = [], [["item", "marks", *names, "communality"]]
    for item in ordered:
        row = solution.loadings[index[item]]
        label = f"{item} {marks[item]}" if marks.get(item) else item
        md_rows.append([label, *(emphasize(float(v), cutoff) for v in row)])
        csv_rows.append(
            [item, marks.get(item, ""), *(fmt(float(v)) for v in row),
             fmt(float(solution.communalities[index[item]]))]
        )
    md = _md_table(["Item", *names], md_rows)
    md += f"\nLoadings with magnitude {cutoff:g} or more are in bold italic.\n"
    return md, _csv_text(csv_rows)


@dataclass(frozen=True)
class DescriptiveTable:
    names: tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    alpha: tuple[float | None, ...]
    r: np.ndarray
    p: np.ndarray
    n: int

    def r_with(self, a: str, b: str) -> tuple[float, float]:
        i, j = self.names.index(a), self.names.index(b)
        return float(self.r[i, j]), float(self.p[i, j])


def descriptive_table(
    scales: Mapping[str, ScaleScores] | Mapping[str, np.ndarray],
    alphas: Mapping[str, float | None] | None = None,
) -> DescriptiveTable:
    """Means, SDs, alphas and pairwise correlations over complete occupations."""
    names = tuple(scales)
    cols, alpha_list = [], []
    for name in names:
        s = scales[name]
        if isinstance(s, ScaleScores):
            cols.append(np.asarray(s.scores, float))
            a = s.alpha_report.alpha if s.alpha_report else None
        else:
            cols.append(np.asarray(s, float))
            a = None
        if alphas is not None and name in alphas:
            a = alphas[name]
        alpha_list.append(a)
    data = np.column_stack(cols)
    data = data[~np.isnan(data).any(axis=1)]
    n = len(data)
    centered = data - data.mean(axis=0)
    norm = np.sqrt(np.einsum("ij,ij->j", centered, centered))
    r = np.clip((centered.T @ centered) / np.outer(norm, norm), -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    p = np.vectorize(lambda v: p_value_r(float(v), n))(r)
    return DescriptiveTable(
        names, data.mean(axis=0), data.std(axis=0, ddof=1), tuple(alpha_list), r, p, n
    )


def render_descriptives(
    table: DescriptiveTable, one_star: float = 0.05, two_star: float = 0.01
) -> tuple[str, str]:
    """Mean, SD, alpha and a starred lower-triangle correlation matrix."""
    cols = table.names[:-1]
    header = ["", "Mean", "SD", "α", *cols]
    rows = []
    for i, name in enumerate(table.names):
        cells = [name, fmt(table.mean[i]), fmt(table.sd[i]), fmt(table.alpha[i])]
        for j in range(len(cols)):
            if j < i:
                stars = significance_stars(table.p[i, j], one_star, two_star)
                cells.append(fmt(table.r[i, j]) + stars)
            else:
                cells.append("")
        rows.append(cells)
    md = _md_table(header, rows)
    md += (
        f"\nn = {table.n}; *p < {one_star:g}; **p < {two_star:g} (two-tailed).\n"
    )
    csv_header = ["variable", "mean", "sd", "alpha", *cols]
    return md, _csv_text([csv_header, *rows])


@dataclass(frozen=True)
class ModelColumn:
    name: str
    candidates: tuple[str, ...]
    result: RegressionResult
    method: str = "enter"


def render_regressions(
    simple: Mapping[str, RegressionResult],
    models: Sequence[ModelColumn],
    variables: Sequence[str] | None = None,
    one_star: float = 0.05,
    two_star: float = 0.01,
) -> tuple[str, str]:
    """Single-predictor table plus a multiple-model table.

    In the multiple-model table ``-`` marks a variable not offered to a
    model and a blank cell marks a candidate stepwise did not select.
    """
    csv_rows = [[
        "table", "model", "variable", "beta", "stars", "t", "p",
        "r_squared", "adj_r_squared", "f", "f_p", "n",
    ]]
    md = ["## Single-predictor regressions\n\n"]
    body = []
    for name, res in simple.items():
        b = res.beta[0] if res.p_count else math.nan
        star = res.stars[0] if res.p_count else ""
        body.append([
            name, fmt(b), star, fmt(res.r_squared), fmt(res.adj_r_squared),
            fmt(res.f_stat), res.f_stars(one_star, two_star),
        ])
        csv_rows.append([
            "simple", name, name, fmt(b), star,
            fmt(res.t[0] if res.p_count else math.nan), fmt(res.p[0] if res.p_count else math.nan),
            fmt(res.r_squared), fmt(res.adj_r_squared), fmt(res.f_stat), fmt(res.f_p),
            res.n,
        ])
    md.append(_md_table(["Variable", "β", "", "R²", "Adj-R²", "F", ""], body))
    n_note = next(iter(simple.values())).n if simple else None

    if models:
        md.append("\n## Multiple regressions\n\n")
        if variables is None:
            variables = list(dict.fromkeys(v for m in models for v in m.candidates))
        header = ["Variable"]
        for m in models:
            header += [m.name, ""]
        body = []
        for var in variables:
            row = [var]
            for m in models:
                if var not in m.candidates:
                    row += ["-", ""]
                elif var in m.result.predictors:
                    row += [fmt(m.result.beta_of(var)), m.result.star_of(var)]
                else:
                    row += ["", ""]
            body.append(row)
        body.append(["R²", *sum(([fmt(m.result.r_squared), ""] for m in models), [])])
        body.append(["Adjusted R²", *sum(([fmt(m.result.adj_r_squared), ""] for m in models), [])])
        body.append([
            "F",
            *sum(([fmt(m.result.f_stat), m.result.f_stars(one_star, two_star)] for m in models), []),
        ])
        md.append(_md_table(header, body))
        for m in models:
            res = m.result
            for var, b, s, t, p in zip(res.predictors, res.beta, res.stars, res.t, res.p):
                csv_rows.append([
                    m.method, m.name, var, fmt(b), s, fmt(t), fmt(p),
                    fmt(res.r_squared), fmt(res.adj_r_squared), fmt(res.f_stat), fmt(res.f_p),
                    res.n,
                ])
            if not res.predictors:
                csv_rows.append([
                    m.method, m.name, "", "", "", "", "",
                    fmt(res.r_squared), fmt(res.adj_r_squared), fmt(res.f_stat), fmt(res.f_p),
                    res.n,
                ])
        n_note = n_note or (models[0].result.n if models else None)
    md.append(
        f"\nn = {n_note}; *p < {one_star:g}; **p < {two_star:g}. "
        "\"-\" = not offered to the model; blank = not selected by stepwise.\n"
    )
    return "".join(md), _csv_text(csv_rows)


def emit_tables(
    solution: FactorSolution | None = None,
    descriptives: DescriptiveTable | None = None,
    simple: Mapping[str, RegressionResult] | None = None,
    models: Sequence[ModelColumn] = (),
    quadrants: QuadrantReport | None = None,
    scatter: tuple[ScaleScores, ScaleScores] | None = None,
    factor_names: Sequence[str] | None = None,
    marks: Mapping[str, str] | None = None,
    cutoff: float = 0.4,
    one_star: float = 0.05,
    two_star: float = 0.01,
) -> dict[str, str]:
    """Render every available table, keyed by output file name."""
    docs: dict[str, str] = {}
    if solution is not None:
        docs["loadings.md"], docs["loadings.csv"] = render_loadings(
            solution, factor_names, marks, cutoff
        )
    if descriptives is not None:
        docs["descriptives.md"], docs["descriptives.csv"] = render_descriptives(
            descriptives, one_star, two_star
        )
    if simple is not None:
        docs["regressions.md"], docs["regressions.csv"] = render_regressions(
            simple, models, one_star=one_star, two_star=two_star
        )
    if quadrants is not None:
        docs["quadrants.md"], docs["quadrants.csv"] = render_quadrants(quadrants)
    if scatter is not None:
        docs["scatter.csv"] = render_scatter(*scatter)
    return docs
