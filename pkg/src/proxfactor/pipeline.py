"""Stage runners connecting the modules through files in the output directory.

Each stage reads what the previous stage wrote, so running the stages one by
one produces the same artifacts as ``run_pipeline``.

    ingest     -> dataset.csv, load_report.txt
    efa        -> efa_audit.txt, efa_solution.json, loadings.md/.csv
    scales     -> scales.csv, scales.json, reliability.txt
    correlate  -> descriptives.md/.csv
    regress    -> regressions.md/.csv, stepwise_trace.txt, diagnostics.txt, hypotheses.txt
    quadrants  -> quadrants.md/.csv, scatter.csv
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from pathlib import Path

import numpy as np

from . import report
from .config import ConfigError, PipelineConfig, check_references
from .dataset import Dataset, load_matrix, save_matrix
from .efa import FactorSolution, PruneIteration, prune_iterate, render_audit
from .regression import multicollinearity_report, ols_fit, stepwise_select
from .scales import (
    ScaleDefinition,
    ScaleError,
    ScaleScores,
    build_scale,
    match_factor_names,
    reliability_report,
    scales_from_solution,
)
from .statcore import AlphaReport, p_value_r, pearson_r

log = logging.getLogger(__name__)

STAGES = ("ingest", "efa", "scales", "correlate", "regress", "quadrants")


class MissingArtifactError(RuntimeError):
    pass


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8", newline="")
    log.info("wrote %s", out / name)


def _require(out: Path, name: str, stage: str) -> Path:
    path = out / name
    if not path.exists():
        raise MissingArtifactError(f"{path} not found; run the `{stage}` stage first")
    return path


# -- ingest ----------------------------------------------------------------


def stage_ingest(config: PipelineConfig) -> Dataset:
    if not config.input_path.exists():
        raise ConfigError(f"input file not found: {config.input_path}")
    dataset = load_matrix(str(config.input_path))
    if config.dependent not in dataset.item_ids:
        raise ConfigError(f"dependent item {config.dependent!r} not in input")
    if config.items is not None:
        wanted = list(dict.fromkeys(config.items))
        if config.dependent not in wanted:
            wanted.append(config.dependent)
        unknown = [i for i in wanted if i not in dataset.item_ids]
        if unknown:
            raise ConfigError(f"input.items not found in input: {unknown}")
        dataset = dataset.select_items(wanted)
    out = config.output_dir
    _write(out, "dataset.csv", save_matrix(dataset))
    _write(out, "load_report.txt", dataset.report.render())
    return dataset


def _load_dataset(out: Path) -> Dataset:
    return load_matrix(str(_require(out, "dataset.csv", "ingest")))


# -- efa -------------------------------------------------------------------


def stage_efa(config: PipelineConfig) -> tuple[FactorSolution, list[str]]:
    out = config.output_dir
    dataset = _load_dataset(out)
    solution = prune_iterate(dataset, dataset.item_ids, config.rules)
    names = match_factor_names(solution, config.scales, config.rules.loading_cutoff)
    _write(out, "efa_audit.txt", render_audit(solution.iterations) + _solution_summary(solution, names))
    _write(out, "efa_solution.json", _solution_json(solution, names))
    md, csv_text = report.render_loadings(
        solution, names, config.overlap_marks, config.rules.loading_cutoff
    )
    _write(out, "loadings.md", md)
    _write(out, "loadings.csv", csv_text)
    return solution, names


def _solution_summary(solution: FactorSolution, names: list[str]) -> str:
    lines = [
        "result",
        f"  outer iterations: {solution.iteration_count}",
        f"  factors: {solution.n_factors}",
        f"  retained items: {len(solution.items)}",
        f"  converged: {'yes' if solution.converged else 'no'}",
    ]
    for name, items in zip(names, solution.factor_items()):
        lines.append(f"  {name}: {len(items)} item(s)")
    return "\n".join(lines) + "\n"


def _solution_json(solution: FactorSolution, names: list[str]) -> str:
    def iteration(it: PruneIteration) -> dict:
        return {
            "index": it.index,
            "items": list(it.items),
            "n_rows": it.n_rows,
            "n_factors": it.n_factors,
            "eigenvalues": [float(v) for v in it.eigenvalues],
            "degenerate": it.degenerate,
            "paf_iterations": it.paf_iterations,
            "paf_converged": it.paf_converged,
            "heywood": list(it.heywood),
            "dropped_low": list(it.dropped_low),
            "dropped_cross": list(it.dropped_cross),
        }

    payload = {
        "factor_names": names,
        "items": list(solution.items),
        "loadings": solution.loadings.tolist(),
        "unrotated": solution.unrotated.tolist(),
        "communalities": solution.communalities.tolist(),
        "rotation": solution.rotation.tolist(),
        "unreduced_eigenvalues": solution.unreduced_eigenvalues.tolist(),
        "converged": solution.converged,
        "iterations": [iteration(it) for it in solution.iterations],
    }
    return json.dumps(payload, indent=1) + "\n"


def load_solution(path: Path) -> tuple[FactorSolution, list[str]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    iterations = tuple(
        PruneIteration(
            index=it["index"], items=tuple(it["items"]), n_rows=it["n_rows"],
            n_factors=it["n_factors"], eigenvalues=np.array(it["eigenvalues"]),
            degenerate=it["degenerate"], paf_iterations=it["paf_iterations"],
            paf_converged=it["paf_converged"], heywood=tuple(it["heywood"]),
            dropped_low=tuple(it["dropped_low"]), dropped_cross=tuple(it["dropped_cross"]),
        )
        for it in data["iterations"]
    )
    solution = FactorSolution(
        items=tuple(data["items"]),
        loadings=np.array(data["loadings"]),
        unrotated=np.array(data["unrotated"]),
        communalities=np.array(data["communalities"]),
        rotation=np.array(data["rotation"]),
        unreduced_eigenvalues=np.array(data["unreduced_eigenvalues"]),
        iterations=iterations,
        converged=data["converged"],
    )
    return solution, list(data["factor_names"])


# -- scales ----------------------------------------------------------------


def stage_scales(config: PipelineConfig) -> dict[str, ScaleScores]:
    out = config.output_dir
    dataset = _load_dataset(out)
    gates = (config.taber_gate, config.cortina_gate)

    if config.scale_source == "efa":
        solution, names = load_solution(_require(out, "efa_solution.json", "efa"))
        definitions = scales_from_solution(solution, names)
    else:
        definitions = list(config.scales)

    scored: dict[str, ScaleScores] = {}
    roles: dict[str, str] = {}
    dep = ScaleDefinition(config.dependent_label, (config.dependent,))
    scored[dep.name] = build_scale(dataset, dep, *gates)
    roles[dep.name] = "dependent"
    for definition in definitions:
        _check_name(definition.name, scored)
        scored[definition.name] = build_scale(dataset, definition, *gates)
        roles[definition.name] = "scale"

    composite_items: dict[str, tuple[str, ...]] = {}
    skipped = []
    for comp in config.composites:
        if not comp.complete:
            skipped.append(comp.name)
            continue
        _check_name(comp.name, scored)
        scored[comp.name] = build_scale(dataset, comp.definition, *gates)
        roles[comp.name] = "composite"
        composite_items[comp.name] = comp.definition.items
    for index in config.indices:
        if any(src not in composite_items for src in index.sources):
            skipped.append(index.name)
            continue
        items = tuple(dict.fromkeys(i for src in index.sources for i in composite_items[src]))
        definition = ScaleDefinition(index.name, items, "hundred_minus_mean")
        _check_name(index.name, scored)
        scored[index.name] = build_scale(dataset, definition, *gates)
        roles[index.name] = "index"

    lines = []
    alternates = {a.replaces: a.definition for a in config.alternates}
    alt_alphas = {}
    for name, scores in scored.items():
        rep = reliability_report(scores, alternates.get(name), dataset, *gates)
        lines.append(rep.render())
        if rep.alternate is not None and rep.alternate_alpha is not None:
            alt_alphas[name] = (rep.alternate.name, rep.alternate_alpha.alpha)
    for name in skipped:
        lines.append(f"{name}: skipped (item list marked incomplete)")
    _write(out, "reliability.txt", "\n".join(lines) + "\n")
    _write(out, "scales.csv", _scales_csv(dataset, scored))
    _write(out, "scales.json", _scales_json(scored, roles, skipped, alt_alphas))
    return scored


def _check_name(name: str, scored: dict) -> None:
    if name in scored:
        raise ScaleError(f"duplicate scale name {name!r}")


def _scales_csv(dataset: Dataset, scored: dict[str, ScaleScores]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["code", "title", *scored])
    for i, (code, title) in enumerate(dataset.occupations):
        row = [code, title]
        for scores in scored.values():
            v = float(scores.scores[i])
            row.append("" if math.isnan(v) else repr(v))
        writer.writerow(row)
    return buf.getvalue()


def _scales_json(scored, roles, skipped, alt_alphas) -> str:
    payload = {
        "scales": [
            {
                "name": name,
                "role": roles[name],
                "direction": s.definition.direction.value,
                "items": list(s.definition.items),
                "alpha": None if s.alpha_report is None else s.alpha_report.alpha,
                "alternate": (
                    None if name not in alt_alphas
                    else {"name": alt_alphas[name][0], "alpha": alt_alphas[name][1]}
                ),
            }
            for name, s in scored.items()
        ],
        "skipped": skipped,
    }
    return json.dumps(payload, indent=1) + "\n"


def load_scales(out: Path, config: PipelineConfig) -> tuple[dict[str, ScaleScores], dict]:
    """Read back ``scales.csv`` / ``scales.json`` as ScaleScores."""
    meta = json.loads(_require(out, "scales.json", "scales").read_text(encoding="utf-8"))
    with open(_require(out, "scales.csv", "scales"), newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    codes = tuple(r[0] for r in body)
    titles = tuple(r[1] for r in body)
    scored = {}
    for entry in meta["scales"]:
        j = header.index(entry["name"])
        values = np.array([float(r[j]) if r[j] else math.nan for r in body])
        values.setflags(write=False)
        alpha = None
        if entry["alpha"] is not None:
            alpha = AlphaReport.gate(
                entry["alpha"], len(entry["items"]), config.taber_gate, config.cortina_gate
            )
        definition = ScaleDefinition(entry["name"], tuple(entry["items"]), entry["direction"])
        scored[entry["name"]] = ScaleScores(definition, codes, titles, values, alpha)
    return scored, meta


# -- correlate -------------------------------------------------------------


def stage_correlate(config: PipelineConfig) -> report.DescriptiveTable:
    out = config.output_dir
    scored, _ = load_scales(out, config)
    table = report.descriptive_table(scored)
    md, csv_text = report.render_descriptives(table, config.one_star, config.two_star)
    _write(out, "descriptives.md", md)
    _write(out, "descriptives.csv", csv_text)
    return table


# -- regress ---------------------------------------------------------------


def stage_regress(config: PipelineConfig):
    out = config.output_dir
    scored, meta = load_scales(out, config)
    available = set(scored)
    skipped = set(meta.get("skipped", []))
    check_references(config, available | skipped)

    dep_name = config.dependent_label
    y = scored[dep_name].scores
    stars = dict(one_star=config.one_star, two_star=config.two_star)

    if config.simple == "all":
        simple_names = [n for n in scored if n != dep_name]
    else:
        simple_names = [n for n in config.simple if n in available]
    simple = {
        name: ols_fit(y, scored[name].scores, [name], dep_name, **stars) for name in simple_names
    }

    columns, traces, diagnostics = [], [], []
    for model in config.models:
        missing = [p for p in model.predictors if p not in available]
        if missing:
            log.warning("model %r skipped: incomplete scale(s) %s", model.name, missing)
            traces.append(f"{model.name}: skipped, incomplete scale(s) {missing}\n")
            continue
        x = np.column_stack([scored[p].scores for p in model.predictors])
        if model.method == "stepwise":
            result, trace = stepwise_select(
                y, x, model.predictors, config.entry_p, config.removal_p, dep_name, **stars
            )
            traces.append(f"{model.name}:\n{trace.render() or '(no step taken)'}\n")
        else:
            result = ols_fit(y, x, model.predictors, dep_name, **stars)
        columns.append(report.ModelColumn(model.name, model.predictors, result, model.method))
        if result.p_count >= 1:
            diag = multicollinearity_report(
                y,
                np.column_stack([scored[p].scores for p in result.predictors]),
                result.predictors,
                dep_name,
                config.vif_limit,
            )
            diagnostics.append(diag.render(model.name))

    md, csv_text = report.render_regressions(simple, columns, **stars)
    _write(out, "regressions.md", md)
    _write(out, "regressions.csv", csv_text)
    _write(out, "stepwise_trace.txt", "".join(traces))
    _write(out, "diagnostics.txt", "\n".join(diagnostics))

    correlations = {}
    for name in scored:
        if name == dep_name:
            continue
        ok = ~(np.isnan(y) | np.isnan(scored[name].scores))
        r = pearson_r(scored[name].scores[ok], y[ok])
        correlations[name] = (r, p_value_r(r, int(ok.sum())))
    specs = config.hypotheses or report.DEFAULT_HYPOTHESES
    checks = report.evaluate_hypotheses(correlations, simple, specs, config.one_star)
    _write(out, "hypotheses.txt", "\n".join(c.render() for c in checks) + "\n")
    return simple, columns, checks


# -- quadrants -------------------------------------------------------------


def stage_quadrants(config: PipelineConfig) -> report.QuadrantReport:
    out = config.output_dir
    scored, _ = load_scales(out, config)
    for axis in (config.quadrant_x, config.quadrant_y):
        if axis not in scored:
            raise ConfigError(f"quadrants: unknown scale {axis!r}")
    x, y = scored[config.quadrant_x], scored[config.quadrant_y]
    result = report.quadrant_classify(x, y, config.thresholds)
    md, csv_text = report.render_quadrants(result)
    _write(out, "quadrants.md", md)
    _write(out, "quadrants.csv", csv_text)
    _write(out, "scatter.csv", report.render_scatter(x, y))
    return result


STAGE_FUNCS = {
    "ingest": stage_ingest,
    "efa": stage_efa,
    "scales": stage_scales,
    "correlate": stage_correlate,
    "regress": stage_regress,
    "quadrants": stage_quadrants,
}


def run_pipeline(config: PipelineConfig) -> list[str]:
    """Run every stage in order; ``audit.log`` records each stage's outcome."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    audit = []
    try:
        for stage in STAGES:
            audit.append(f"stage {stage}: start")
            STAGE_FUNCS[stage](config)
            audit.append(f"stage {stage}: ok")
    except Exception as exc:
        audit.append(f"stage {stage}: FAILED: {type(exc).__name__}: {exc}")
        _write(out, "audit.log", "\n".join(audit) + "\n")
        raise
    _write(out, "audit.log", "\n".join(audit) + "\n")
    return audit
