"""Occupation-by-item score tables: loading, validation and descriptives.

Input is UTF-8 CSV with a header row. The first two columns hold the
occupation code and title; every further column is one item, keyed by its
item id, with scores on the 0-100 metric. Empty cells are missing values and
are handled by listwise deletion inside each analysis.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

SCORE_MIN = 0.0
SCORE_MAX = 100.0


class DataError(ValueError):
    """Raised when an input table violates the dataset invariants."""


class Source(str, Enum):
    WORK_CONTEXT = "WorkContext"
    WORK_ACTIVITIES = "WorkActivities"


class Measure(str, Enum):
    FREQUENCY = "Frequency"
    IMPORTANCE = "Importance"
    CONTEXT = "Context"


@dataclass(frozen=True)
class ItemDescriptor:
    item_id: str
    label: str
    source: Source
    measure: Measure
    option_count: int = 5

    def __post_init__(self):
        if self.option_count < 2:
            raise DataError(f"item {self.item_id!r}: option_count must be >= 2")

    @classmethod
    def infer(cls, item_id: str) -> "ItemDescriptor":
        """Guess metadata from an O*NET style id such as ``Work Context - Telephone``."""
        if item_id.startswith("Work Activities"):
            source, measure = Source.WORK_ACTIVITIES, Measure.IMPORTANCE
        else:
            source, measure = Source.WORK_CONTEXT, Measure.CONTEXT
        label = item_id.split(" - ", 1)[1] if " - " in item_id else item_id
        return cls(item_id=item_id, label=label, source=source, measure=measure)


@dataclass
class LoadReport:
    rows_read: int = 0
    missing_cells: list[tuple[int, str]] = field(default_factory=list)
    rows_with_missing: list[str] = field(default_factory=list)
    dropped_rows: list[tuple[int, str]] = field(default_factory=list)

    def render(self) -> str:
        lines = [
            f"rows read: {self.rows_read}",
            f"missing cells: {len(self.missing_cells)}",
            f"occupations with missing cells: {len(self.rows_with_missing)}",
        ]
        for code in self.rows_with_missing:
            lines.append(f"  incomplete: {code}")
        lines.append(f"dropped rows: {len(self.dropped_rows)}")
        for line_no, reason in self.dropped_rows:
            lines.append(f"  line {line_no}: {reason}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable occupation x item score matrix.

    ``values`` holds NaN for missing cells; every observed cell is finite
    and within [0, 100].
    """

    occupations: tuple[tuple[str, str], ...]
    items: tuple[ItemDescriptor, ...]
    values: np.ndarray
    report: LoadReport = field(default_factory=LoadReport, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise DataError("values must be a 2-D matrix")
        if values.shape != (len(self.occupations), len(self.items)):
            raise DataError(
                f"matrix shape {values.shape} does not match "
                f"{len(self.occupations)} occupations x {len(self.items)} items"
            )
        codes = [code for code, _ in self.occupations]
        dup = _first_duplicate(codes)
        if dup is not None:
            raise DataError(f"duplicate occupation code {dup!r}")
        dup = _first_duplicate(item.item_id for item in self.items)
        if dup is not None:
            raise DataError(f"duplicate item id {dup!r}")
        observed = ~np.isnan(values)
        bad = observed & ~((values >= SCORE_MIN) & (values <= SCORE_MAX))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DataError(
                f"value {values[i, j]!r} out of range [0, 100] at occupation "
                f"{codes[i]!r}, item {self.items[j].item_id!r}"
            )
        if np.isinf(values).any():
            raise DataError("infinite values are not allowed")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "occupations", tuple(tuple(o) for o in self.occupations))
        object.__setattr__(self, "items", tuple(self.items))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.occupations == other.occupations
            and self.items == other.items
            and np.array_equal(self.values, other.values, equal_nan=True)
        )

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(code for code, _ in self.occupations)

    @property
    def titles(self) -> tuple[str, ...]:
        return tuple(title for _, title in self.occupations)

    @property
    def item_ids(self) -> tuple[str, ...]:
        return tuple(item.item_id for item in self.items)

    @property
    def n_occupations(self) -> int:
        return len(self.occupations)

    def column_index(self, item_ids: Iterable[str]) -> list[int]:
        lookup = {item.item_id: j for j, item in enumerate(self.items)}
        out = []
        for item_id in item_ids:
            if item_id not in lookup:
                raise KeyError(f"unknown item {item_id!r}")
            out.append(lookup[item_id])
        return out

    def column(self, item_id: str) -> np.ndarray:
        return self.values[:, self.column_index([item_id])[0]]

    def submatrix(self, item_ids: Sequence[str], complete: bool = True):
        """Return ``(matrix, row_mask)`` for the given items.

        With ``complete`` the matrix only keeps rows without missing cells
        among these items (listwise deletion) and ``row_mask`` marks them.
        """
        cols = self.column_index(item_ids)
        block = self.values[:, cols]
        if not complete:
            return block, np.ones(len(block), dtype=bool)
        mask = ~np.isnan(block).any(axis=1)
        dropped = int((~mask).sum())
        if dropped:
            log.info("listwise deletion: %d of %d rows excluded", dropped, len(block))
        return block[mask], mask

    def select_items(self, item_ids: Sequence[str]) -> "Dataset":
        cols = self.column_index(item_ids)
        return Dataset(
            occupations=self.occupations,
            items=tuple(self.items[j] for j in cols),
            values=self.values[:, cols],
            report=self.report,
        )


def _first_duplicate(keys: Iterable[str]):
    seen = set()
    for key in keys:
        if key in seen:
            return key
        seen.add(key)
    return None


def map_option_scores(option_index: int, option_count: int) -> float:
    """Score of a response option on the 0-100 metric.

    Options are spread evenly, so five options map to 0, 25, 50, 75, 100.
    """
    if option_count < 2:
        raise ValueError(f"option_count must be >= 2, got {option_count}")
    if not 0 <= option_index < option_count:
        raise ValueError(f"option_index {option_index} outside 0..{option_count - 1}")
    return SCORE_MAX * option_index / (option_count - 1)


def load_matrix(
    source: IO[str] | str,
    schema: Mapping[str, ItemDescriptor] | None = None,
) -> Dataset:
    """Parse a CSV score table into a :class:`Dataset`.

    ``source`` is an open text stream or a path. ``schema`` optionally maps
    item ids to descriptors; ids without an entry get inferred metadata.
    """
    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_matrix(fh, schema)

    schema = schema or {}
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty input: no header row") from None
    if len(header) < 3:
        raise DataError("header needs code, title and at least one item column")
    item_ids = [h.strip() for h in header[2:]]
    items = tuple(schema.get(i) or ItemDescriptor.infer(i) for i in item_ids)

    report = LoadReport()
    occupations, rows = [], []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            report.dropped_rows.append((line_no, "blank line"))
            continue
        report.rows_read += 1
        if len(row) != len(header):
            raise DataError(
                f"line {line_no}: expected {len(header)} cells, found {len(row)}"
            )
        code, title = row[0].strip(), row[1].strip()
        parsed = []
        for j, cell in enumerate(row[2:]):
            cell = cell.strip()
            if cell == "" or cell.upper() in ("NA", "NAN"):
                parsed.append(math.nan)
                report.missing_cells.append((line_no, item_ids[j]))
                continue
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"line {line_no}, column {item_ids[j]!r}: cannot parse {cell!r}"
                ) from None
            if not math.isfinite(value) or not SCORE_MIN <= value <= SCORE_MAX:
                raise DataError(
                    f"line {line_no}, column {item_ids[j]!r}: value {value!r} "
                    "out of range [0, 100]"
                )
            parsed.append(value)
        if any(math.isnan(v) for v in parsed):
            report.rows_with_missing.append(code)
        occupations.append((code, title))
        rows.append(parsed)

    values = np.array(rows, dtype=float).reshape(len(rows), len(items))
    dataset = Dataset(tuple(occupations), items, values, report)
    for line in report.render().splitlines():
        log.info("load: %s", line)
    return dataset


def save_matrix(dataset: Dataset, sink: IO[str] | None = None) -> str:
    """Write ``dataset`` in canonical CSV form and return the text.

    Floats are written with ``repr`` so a reload is bit-for-bit identical.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["code", "title", *dataset.item_ids])
    for (code, title), row in zip(dataset.occupations, dataset.values):
        writer.writerow([code, title, *("" if math.isnan(v) else repr(float(v)) for v in row)])
    text = buf.getvalue()
    if sink is not None:
        sink.write(text)
    return text


@dataclass(frozen=True)
class DescriptiveStats:
    columns: tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    n: int

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {c: (float(m), float(s)) for c, m, s in zip(self.columns, self.mean, self.sd)}


def describe_array(values: np.ndarray, columns: Sequence[str]) -> DescriptiveStats:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    n = values.shape[0]
    if n < 2:
        raise ValueError("descriptive statistics need at least 2 rows")
    mean = values.mean(axis=0)
    sd = values.std(axis=0, ddof=1)
    return DescriptiveStats(tuple(columns), mean, sd, n)


def descriptive_stats(dataset: Dataset, columns: Sequence[str]) -> DescriptiveStats:
    """Sample mean and SD (n - 1 denominator) per column over complete rows."""
    columns = list(columns)
    if not columns:
        raise ValueError("descriptive_stats needs at least one column")
    block, _ = dataset.submatrix(columns)
    return describe_array(block, columns)
