import csv
import json
from pathlib import Path

import pytest
import yaml

from proxfactor.cli import main
from proxfactor.config import ConfigError, default_config_text, load_config, parse_config
from proxfactor.pipeline import STAGE_FUNCS, STAGES, run_pipeline
from proxfactor.synthetic import synthetic_table


@pytest.fixture(scope="module")
def table_text():
    return synthetic_table(n=300)


@pytest.fixture
def workspace(tmp_path, table_text):
    (tmp_path / "data.csv").write_text(table_text, encoding="utf-8")
    raw = yaml.safe_load(default_config_text())
    raw["input"]["path"] = "data.csv"
    return tmp_path, raw


def _write_config(root: Path, raw: dict, name="config.yaml") -> Path:
    path = root / name
    path.write_text(yaml.safe_dump(raw, sort_keys=False), encoding="utf-8")
    return path


def _artifacts(out: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "audit.log"}


# -- config ----------------------------------------------------------------


def test_default_config_exposes_constants(workspace):
    root, raw = workspace
    config = parse_config(raw, root)
    assert config.rules.loading_cutoff == 0.4
    assert config.rules.eigen_threshold == 1.0
    assert (config.taber_gate, config.cortina_gate) == (0.6, 0.7)
    assert (config.entry_p, config.removal_p) == (0.05, 0.10)
    assert (config.one_star, config.two_star) == (0.05, 0.01)
    assert len(config.scales) == 8
    assert sum(len(s.items) for s in config.scales) == 46
    assert config.input_path == root / "data.csv"
    assert config.output_dir == root / "out"
    assert {h.id for h in config.hypotheses} == {"H1", "H2", "H3", "H4"}


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda r: r["input"].pop("path"), "input.path"),
        (lambda r: r["input"].__setitem__("items", []), "empty list"),
        (lambda r: r["reliability"].__setitem__("taber_gate", 0.8), "reliability gates"),
        (lambda r: r["significance"].__setitem__("two_star", 0.1), "significance"),
        (lambda r: r["regression"].__setitem__("entry_p", 0.2), "stepwise thresholds"),
        (lambda r: r["efa"].__setitem__("loading_cutoff", "high"), "number"),
        (lambda r: r["efa"].__setitem__("loading_cutoff", 1.5), "loading_cutoff"),
        (lambda r: r["regression"]["models"][0]["predictors"].append("Nope"), "unknown scale 'Nope'"),
        (lambda r: r["quadrants"].__setitem__("x", "Nope"), "quadrants.x"),
        (lambda r: r["quadrants"].__setitem__("thresholds", {"x_low": 1}), "thresholds"),
        (lambda r: r.__setitem__("scale_source", "magic"), "scale_source"),
        (lambda r: r["scales"][0].__setitem__("items", []), "empty item list"),
        (lambda r: r["alternates"][0].__setitem__("replaces", "Nope"), "replaces unknown"),
        (lambda r: r["indices"][0].__setitem__("from", ["Nope"]), "unknown composite"),
        (lambda r: r["regression"]["models"][0].__setitem__("method", "lasso"), "unknown method"),
        (lambda r: r.pop("dependent"), "dependent"),
    ],
)
def test_config_validation(workspace, mutate, message):
    root, raw = workspace
    mutate(raw)
    with pytest.raises(ConfigError, match=message):
        parse_config(raw, root)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("input: [unclosed", encoding="utf-8")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(bad)


def test_output_override(workspace):
    root, raw = workspace
    config = load_config(_write_config(root, raw), out=root / "elsewhere")
    assert config.output_dir == root / "elsewhere"


# -- pipeline --------------------------------------------------------------


def test_full_run_writes_every_artifact(workspace):
    root, raw = workspace
    config = parse_config(raw, root)
    audit = run_pipeline(config)
    out = config.output_dir
    expected = {
        "dataset.csv", "load_report.txt", "efa_audit.txt", "efa_solution.json", "loadings.md",
        "loadings.csv", "scales.csv", "scales.json", "reliability.txt", "descriptives.md",
        "descriptives.csv", "regressions.md", "regressions.csv", "stepwise_trace.txt",
        "diagnostics.txt", "hypotheses.txt", "quadrants.md", "quadrants.csv", "scatter.csv",
        "audit.log",
    }
    assert expected <= {p.name for p in out.iterdir()}
    assert audit == [f"stage {s}: {state}" for s in STAGES for state in ("start", "ok")]
    assert (out / "audit.log").read_text().splitlines() == audit
    solution = json.loads((out / "efa_solution.json").read_text())
    assert len(solution["factor_names"]) == 8
    assert "Work Context - Physical Proximity" not in solution["items"]
    hyp = (out / "hypotheses.txt").read_text()
    assert hyp.startswith("H1:")


def test_stages_one_by_one_match_full_run(workspace):
    root, raw = workspace
    full = parse_config(raw, root, root / "full")
    run_pipeline(full)
    staged = parse_config(raw, root, root / "staged")
    for stage in STAGES:
        STAGE_FUNCS[stage](staged)
    assert _artifacts(root / "full") == _artifacts(root / "staged")


def test_rerunning_a_stage_is_stable(workspace):
    root, raw = workspace
    config = parse_config(raw, root)
    run_pipeline(config)
    before = _artifacts(config.output_dir)
    STAGE_FUNCS["regress"](config)
    assert _artifacts(config.output_dir) == before


def test_incomplete_composites_are_reported_not_scored(workspace):
    root, raw = workspace
    config = parse_config(raw, root)
    run_pipeline(config)
    info = json.loads((config.output_dir / "scales.json").read_text())
    assert "Customer" in info["skipped"]
    rel = (config.output_dir / "reliability.txt").read_text()
    assert "Customer: skipped" in rel


def test_completed_composites_enter_models(workspace):
    root, raw = workspace
    for comp, source in zip(raw["composites"], raw["scales"]):
        comp["items"] = source["items"][:3]
        comp["complete"] = True
    config = parse_config(raw, root)
    run_pipeline(config)
    regs = (config.output_dir / "regressions.md").read_text()
    assert "Teamwork/Customer/Presence" in regs
    assert "Social Distance Index" in (config.output_dir / "descriptives.csv").read_text()


def test_scales_from_factor_solution(workspace):
    root, raw = workspace
    raw["scale_source"] = "efa"
    config = parse_config(raw, root)
    run_pipeline(config)
    info = json.loads((config.output_dir / "scales.json").read_text())
    names = {s["name"] for s in info["scales"]}
    assert "Response to Aggression" in names and "Horizontal Teamwork" in names


def test_printed_threshold_override(workspace):
    root, raw = workspace
    raw["quadrants"]["thresholds"] = {"x_low": 23.8, "x_high": 49.6, "y_low": 43.4, "y_high": 77.2}
    config = parse_config(raw, root)
    run_pipeline(config)
    md = (config.output_dir / "quadrants.md").read_text()
    assert "| Mean + SD | 49.6 | 77.2 |" in md


def test_item_subset(workspace):
    root, raw = workspace
    keep = [i for s in raw["scales"][:3] for i in s["items"]]
    raw["input"]["items"] = keep
    raw["scale_source"] = "efa"
    raw["regression"]["models"] = []
    raw["quadrants"]["x"] = raw["dependent_label"]
    config = parse_config(raw, root)
    run_pipeline(config)
    with open(config.output_dir / "dataset.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert header[2:] == keep + [raw["dependent"]]


# -- cli -------------------------------------------------------------------


def test_cli_run_and_stage_order(workspace):
    root, raw = workspace
    cfg = _write_config(root, raw)
    assert main(["regress", "--config", str(cfg)]) == 1  # nothing ingested yet
    assert main(["run", "--config", str(cfg)]) == 0
    assert main(["quadrants", "--config", str(cfg), "--out", str(root / "out")]) == 0


def test_cli_validation_errors_exit_1(workspace, tmp_path):
    root, raw = workspace
    assert main(["run", "--config", str(tmp_path / "none.yaml")]) == 1
    raw["dependent"] = "Work Context - Not There"
    assert main(["ingest", "--config", str(_write_config(root, raw))]) == 1
    (root / "bad.csv").write_text("code,title,Work Context - A\nx,y,150\n", encoding="utf-8")
    raw["input"]["path"] = "bad.csv"
    assert main(["ingest", "--config", str(_write_config(root, raw))]) == 1


def test_cli_computation_errors_exit_2(workspace):
    root, raw = workspace
    lines = ["code,title," + ",".join(f"Work Context - C{j}" for j in range(4)) + ",Work Context - Physical Proximity"]
    lines += [f"c{i},t{i},50,50,50,50,{i}" for i in range(10)]
    (root / "flat.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    raw["input"]["path"] = "flat.csv"
    raw["scale_source"] = "efa"
    raw["regression"]["models"] = []
    raw["quadrants"]["x"] = raw["dependent_label"]
    cfg = _write_config(root, raw)
    assert main(["ingest", "--config", str(cfg)]) == 0
    assert main(["efa", "--config", str(cfg)]) == 2


def test_cli_helpers(tmp_path):
    assert main(["init-config", str(tmp_path / "c.yaml")]) == 0
    assert yaml.safe_load((tmp_path / "c.yaml").read_text())["dependent"]
    assert main(["synth", str(tmp_path / "d.csv"), "--rows", "50", "--seed", "3"]) == 0
    assert len((tmp_path / "d.csv").read_text().splitlines()) == 51


def test_cli_requires_a_command(capsys):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
