"""Scale scores from item lists: unweighted means, reverse indices, reliability."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dataset import SCORE_MAX, Dataset
from .efa import FactorSolution
from .statcore import CORTINA_GATE, TABER_GATE, AlphaReport, alpha_from_array


class ScaleError(ValueError):
    pass


class Direction(str, Enum):
    MEAN = "mean"
    HUNDRED_MINUS_MEAN = "hundred_minus_mean"


@dataclass(frozen=True)
class ScaleDefinition:
    name: str
    items: tuple[str, ...]
    direction: Direction = Direction.MEAN

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "direction", Direction(self.direction))
        if not self.items:
            raise ScaleError(f"scale {self.name!r} has no items")
        if len(set(self.items)) != len(self.items):
            raise ScaleError(f"scale {self.name!r} lists an item twice")

    def check_against(self, dataset: Dataset) -> None:
        known = set(dataset.item_ids)
        missing = [i for i in self.items if i not in known]
        if missing:
            raise ScaleError(f"scale {self.name!r}: unknown item(s) {missing}")


@dataclass(frozen=True, eq=False)
class ScaleScores:
    """Per-occupation scores; NaN marks occupations with a missing item."""

    definition: ScaleDefinition
    codes: tuple[str, ...]
    titles: tuple[str, ...]
    scores: np.ndarray
    alpha_report: AlphaReport | None

    @property
    def name(self) -> str:
        return self.definition.name

    def complete(self) -> np.ndarray:
        return ~np.isnan(self.scores)


def build_scale(
    dataset: Dataset,
    definition: ScaleDefinition,
    taber_gate: float = TABER_GATE,
    cortina_gate: float = CORTINA_GATE,
) -> ScaleScores:
    """Unweighted per-occupation item mean, optionally reversed as 100 - mean."""
    definition.check_against(dataset)
    block, _ = dataset.submatrix(definition.items, complete=False)
    # item-order independent: sort columns before summing
    order = np.argsort(np.array(definition.items, dtype=object))
    block = block[:, order]
    scores = block.mean(axis=1)
    if definition.direction is Direction.HUNDRED_MINUS_MEAN:
        scores = SCORE_MAX - scores
    complete = block[~np.isnan(block).any(axis=1)]
    alpha = None
    if len(definition.items) >= 2:
        alpha = alpha_from_array(complete, taber_gate, cortina_gate)
    scores.setflags(write=False)
    return ScaleScores(definition, dataset.codes, dataset.titles, scores, alpha)


def composite_reverse_index(
    dataset: Dataset,
    items: Sequence[str],
    name: str = "Social Distance Index",
    taber_gate: float = TABER_GATE,
    cortina_gate: float = CORTINA_GATE,
) -> ScaleScores:
    """100 minus the unweighted mean of ``items`` per occupation."""
    definition = ScaleDefinition(name, tuple(items), Direction.HUNDRED_MINUS_MEAN)
    return build_scale(dataset, definition, taber_gate, cortina_gate)


@dataclass(frozen=True)
class ReliabilityReport:
    scale: str
    alpha: AlphaReport | None
    status: str
    message: str
    alternate: ScaleDefinition | None = None
    alternate_alpha: AlphaReport | None = None

    def render(self) -> str:
        head = f"{self.scale}: "
        if self.alpha is None:
            line = head + self.message
        else:
            line = head + f"alpha={self.alpha.alpha:.3f} [{self.status}] {self.message}".rstrip()
        if self.alternate is not None and self.alternate_alpha is not None:
            line += (
                f"\n  alternate {self.alternate.name!r} ({len(self.alternate.items)} items): "
                f"alpha={self.alternate_alpha.alpha:.3f} [{self.alternate_alpha.status}]"
            )
        return line


def reliability_report(
    scores: ScaleScores,
    alternate: ScaleDefinition | None = None,
    dataset: Dataset | None = None,
    taber_gate: float = TABER_GATE,
    cortina_gate: float = CORTINA_GATE,
) -> ReliabilityReport:
    """Gate a scale's alpha at the 0.6 and 0.7 thresholds.

    A scale that clears only the lower gate is marked ``taber-only``; if an
    ``alternate`` definition and the ``dataset`` are given, the alternate's
    alpha is computed and attached.
    """
    if scores.alpha_report is None:
        return ReliabilityReport(
            scores.name, None, "undefined", "alpha undefined for a single-item scale"
        )
    alpha = scores.alpha_report
    status = alpha.status
    alt_alpha = None
    if status == "taber-only":
        message = f"passes {taber_gate:g} but not {cortina_gate:g}"
        if alternate is not None:
            if dataset is None:
                raise ScaleError("an alternate definition needs the dataset to score it")
            alt_alpha = build_scale(dataset, alternate, taber_gate, cortina_gate).alpha_report
    else:
        alternate = None
        message = f"below {taber_gate:g}" if status == "unacceptable" else ""
    return ReliabilityReport(scores.name, alpha, status, message, alternate, alt_alpha)


def match_factor_names(
    solution: FactorSolution,
    definitions: Sequence[ScaleDefinition],
    cutoff: float = 0.4,
) -> list[str]:
    """Name each factor after the definition sharing the most marker items.

    Uses a one-to-one assignment; factors with no overlap keep a
    ``Factor k`` label.
    """
    markers = solution.factor_items(cutoff)
    names = [f"Factor {k + 1}" for k in range(solution.n_factors)]
    if not definitions:
        return names
    overlap = np.array(
        [[len(set(m) & set(d.items)) for d in definitions] for m in markers], dtype=float
    )
    rows, cols = linear_sum_assignment(-overlap)
    for f, d in zip(rows, cols):
        if overlap[f, d] > 0:
            names[f] = definitions[d].name
    return names


def scales_from_solution(
    solution: FactorSolution,
    names: Sequence[str] | None = None,
) -> list[ScaleDefinition]:
    """One scale per factor from the items whose strongest loading is on it."""
    names = list(names) if names is not None else [
        f"Factor {k + 1}" for k in range(solution.n_factors)
    ]
    primary = solution.primary_factor()
    out = []
    for f, name in enumerate(names):
        items = tuple(i for i in solution.items if primary[i] == f)
        if items:
            out.append(ScaleDefinition(name, items))
    return out


def scale_table(scales: Mapping[str, ScaleScores]) -> tuple[tuple[str, ...], np.ndarray]:
    """Stack scale scores column-wise in insertion order."""
    names = tuple(scales)
    if not names:
        return names, np.empty((0, 0))
    return names, np.column_stack([scales[n].scores for n in names])
