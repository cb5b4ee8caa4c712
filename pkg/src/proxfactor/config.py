"""Pipeline configuration: YAML loading, defaults and validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .efa import PruneRules
from .report import HypothesisSpec, QuadrantThresholds, ReportError
from .scales import Direction, ScaleDefinition, ScaleError


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Composite:
    definition: ScaleDefinition | None
    name: str
    complete: bool


@dataclass(frozen=True)
class Alternate:
    definition: ScaleDefinition
    replaces: str


@dataclass(frozen=True)
class IndexSpec:
    name: str
    sources: tuple[str, ...]


@dataclass(frozen=True)
class ModelSpec:
    name: str
    method: str
    predictors: tuple[str, ...]


@dataclass
class PipelineConfig:
    input_path: Path
    output_dir: Path
    dependent: str
    dependent_label: str
    items: tuple[str, ...] | None = None
    rules: PruneRules = field(default_factory=PruneRules)
    taber_gate: float = 0.6
    cortina_gate: float = 0.7
    one_star: float = 0.05
    two_star: float = 0.01
    scale_source: str = "config"
    scales: tuple[ScaleDefinition, ...] = ()
    alternates: tuple[Alternate, ...] = ()
    composites: tuple[Composite, ...] = ()
    indices: tuple[IndexSpec, ...] = ()
    overlap_marks: dict[str, str] = field(default_factory=dict)
    entry_p: float = 0.05
    removal_p: float = 0.10
    simple: str | tuple[str, ...] = "all"
    models: tuple[ModelSpec, ...] = ()
    vif_limit: float = 10.0
    quadrant_x: str = "Response to Aggression"
    quadrant_y: str = "Physical Proximity"
    thresholds: QuadrantThresholds | None = None
    hypotheses: tuple[HypothesisSpec, ...] = ()

    def declared_names(self) -> set[str]:
        """Every scale-like name the config can produce (complete or not)."""
        names = {s.name for s in self.scales}
        names |= {c.name for c in self.composites}
        names |= {i.name for i in self.indices}
        names.add(self.dependent_label)
        return names

    def incomplete_names(self) -> set[str]:
        names = {c.name for c in self.composites if not c.complete}
        for index in self.indices:
            if any(src in names for src in index.sources):
                names.add(index.name)
        return names


def default_config_text() -> str:
    return resources.files("proxfactor").joinpath("data/default_config.yaml").read_text("utf-8")


def load_config(path: str | Path, out: str | Path | None = None) -> PipelineConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return parse_config(raw or {}, base=path.parent, out=out)


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"section {key!r} must be a mapping")
    return value


def _float(section: dict, key: str, default: float) -> float:
    value = section.get(key, default)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key!r} must be a number, got {value!r}") from None


def _names(value: Any, where: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{where} must be a list of strings")
    return tuple(value)


def _definition(entry: dict, where: str, allow_empty: bool = False) -> ScaleDefinition | None:
    if not isinstance(entry, dict) or "name" not in entry:
        raise ConfigError(f"{where}: each entry needs a name")
    items = _names(entry.get("items"), f"{where} {entry['name']!r} items")
    if not items:
        if allow_empty:
            return None
        raise ConfigError(f"{where} {entry['name']!r} has an empty item list")
    try:
        return ScaleDefinition(
            str(entry["name"]), items, Direction(entry.get("direction", "mean"))
        )
    except (ScaleError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(raw: dict, base: Path = Path("."), out: str | Path | None = None) -> PipelineConfig:
    """Validate a config mapping; relative paths resolve against ``base``."""
    inp = _section(raw, "input")
    if "path" not in inp:
        raise ConfigError("input.path is required")
    items = inp.get("items")
    if items is not None:
        items = _names(items, "input.items")
        if not items:
            raise ConfigError("input.items is an empty list; use null for all items")

    output = _section(raw, "output")
    out_dir = Path(out) if out is not None else base / output.get("directory", "out")

    dependent = raw.get("dependent")
    if not dependent:
        raise ConfigError("dependent item is required")
    dependent_label = raw.get("dependent_label") or dependent

    efa = _section(raw, "efa")
    try:
        max_outer = efa.get("max_outer_iterations")
        rules = PruneRules(
            loading_cutoff=_float(efa, "loading_cutoff", 0.4),
            eigen_threshold=_float(efa, "eigen_threshold", 1.0),
            max_outer_iterations=int(max_outer) if max_outer is not None else None,
            paf_tolerance=_float(efa, "paf_tolerance", 1e-4),
            paf_max_iter=int(efa.get("paf_max_iter", 100)),
            varimax_tolerance=_float(efa, "varimax_tolerance", 1e-6),
            varimax_max_sweeps=int(efa.get("varimax_max_sweeps", 50)),
            kaiser_normalize=bool(efa.get("kaiser_normalize", True)),
        )
    except ValueError as exc:
        raise ConfigError(f"efa: {exc}") from None

    rel = _section(raw, "reliability")
    sig = _section(raw, "significance")
    taber, cortina = _float(rel, "taber_gate", 0.6), _float(rel, "cortina_gate", 0.7)
    if not 0 < taber <= cortina <= 1:
        raise ConfigError("reliability gates must satisfy 0 < taber_gate <= cortina_gate <= 1")
    one_star, two_star = _float(sig, "one_star", 0.05), _float(sig, "two_star", 0.01)
    if not 0 < two_star <= one_star < 1:
        raise ConfigError("significance levels must satisfy 0 < two_star <= one_star < 1")

    scale_source = raw.get("scale_source", "config")
    if scale_source not in ("config", "efa"):
        raise ConfigError(f"scale_source must be 'config' or 'efa', got {scale_source!r}")
    scales = tuple(_definition(e, "scales") for e in raw.get("scales") or [])
    if scale_source == "config" and not scales:
        raise ConfigError("no scales defined")

    alternates = []
    for entry in raw.get("alternates") or []:
        definition = _definition(entry, "alternates")
        replaces = entry.get("replaces")
        if replaces not in {s.name for s in scales} and scale_source == "config":
            raise ConfigError(f"alternate {definition.name!r} replaces unknown scale {replaces!r}")
        alternates.append(Alternate(definition, replaces))

    composites = []
    for entry in raw.get("composites") or []:
        definition = _definition(entry, "composites", allow_empty=True)
        complete = bool(entry.get("complete", True)) and definition is not None
        composites.append(Composite(definition, str(entry["name"]), complete))

    composite_names = {c.name for c in composites}
    indices = []
    for entry in raw.get("indices") or []:
        sources = _names(entry.get("from"), f"index {entry.get('name')!r} from")
        unknown = [s for s in sources if s not in composite_names]
        if not sources or unknown:
            raise ConfigError(f"index {entry.get('name')!r}: unknown composite(s) {unknown}")
        indices.append(IndexSpec(str(entry["name"]), sources))

    marks = raw.get("overlap_marks") or {}
    if not isinstance(marks, dict):
        raise ConfigError("overlap_marks must be a mapping")

    reg = _section(raw, "regression")
    entry_p, removal_p = _float(reg, "entry_p", 0.05), _float(reg, "removal_p", 0.10)
    if not 0 < entry_p <= removal_p <= 1:
        raise ConfigError("stepwise thresholds must satisfy 0 < entry_p <= removal_p <= 1")
    simple = reg.get("simple", "all")
    if simple != "all":
        simple = _names(simple, "regression.simple")
    models = []
    for entry in reg.get("models") or []:
        method = entry.get("method", "enter")
        if method not in ("enter", "stepwise"):
            raise ConfigError(f"model {entry.get('name')!r}: unknown method {method!r}")
        predictors = _names(entry.get("predictors"), f"model {entry.get('name')!r} predictors")
        if not predictors:
            raise ConfigError(f"model {entry.get('name')!r} has no predictors")
        models.append(ModelSpec(str(entry.get("name")), method, predictors))

    quad = _section(raw, "quadrants")
    thresholds = None
    if quad.get("thresholds"):
        t = quad["thresholds"]
        try:
            thresholds = QuadrantThresholds(
                float(t["x_low"]), float(t["x_high"]), float(t["y_low"]), float(t["y_high"])
            )
        except (KeyError, TypeError, ValueError, ReportError) as exc:
            raise ConfigError(f"quadrants.thresholds: {exc}") from None

    hypotheses = []
    for entry in raw.get("hypotheses") or []:
        kind = entry.get("kind", "sign")
        if kind not in ("sign", "strongest"):
            raise ConfigError(f"hypothesis {entry.get('id')!r}: unknown kind {kind!r}")
        sign = {"positive": 1, "negative": -1}.get(entry.get("sign", "positive"))
        if sign is None:
            raise ConfigError(f"hypothesis {entry.get('id')!r}: sign must be positive or negative")
        hypotheses.append(
            HypothesisSpec(
                str(entry.get("id")), kind, _names(entry.get("scales"), "hypothesis scales"),
                sign, _names(entry.get("among"), "hypothesis among"),
            )
        )

    config = PipelineConfig(
        input_path=(base / inp["path"]) if not Path(inp["path"]).is_absolute() else Path(inp["path"]),
        output_dir=out_dir,
        dependent=str(dependent),
        dependent_label=str(dependent_label),
        items=items,
        rules=rules,
        taber_gate=taber,
        cortina_gate=cortina,
        one_star=one_star,
        two_star=two_star,
        scale_source=scale_source,
        scales=scales,
        alternates=tuple(alternates),
        composites=tuple(composites),
        indices=tuple(indices),
        overlap_marks={str(k): str(v) for k, v in marks.items()},
        entry_p=entry_p,
        removal_p=removal_p,
        simple=simple,
        models=tuple(models),
        vif_limit=_float(reg, "vif_limit", 10.0),
        quadrant_x=str(quad.get("x", "Response to Aggression")),
        quadrant_y=str(quad.get("y", dependent_label)),
        thresholds=thresholds,
        hypotheses=tuple(hypotheses),
    )
    if scale_source == "config":
        check_references(config)
    return config


def check_references(config: PipelineConfig, available: set[str] | None = None) -> None:
    """Every model and quadrant axis must name a known scale.

    Hypotheses are exempt: a missing scale makes a check unevaluable.
    """
    known = available if available is not None else config.declared_names()
    wanted = []
    for model in config.models:
        wanted += [(p, f"model {model.name!r}") for p in model.predictors]
    if config.simple != "all":
        wanted += [(s, "regression.simple") for s in config.simple]
    wanted += [(config.quadrant_x, "quadrants.x"), (config.quadrant_y, "quadrants.y")]
    for name, where in wanted:
        if name not in known:
            raise ConfigError(f"{where}: unknown scale {name!r}")
