"""Published reference values used for replication checks.

The appendix rows are occupation-level scores and box thresholds as printed,
so box membership can be checked without any O*NET snapshot.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

from .report import QuadrantThresholds

PRINTED_THRESHOLDS = QuadrantThresholds(x_low=23.8, x_high=49.6, y_low=43.4, y_high=77.2)

SAMPLE_SIZE = 968

# Single-predictor correlations with Physical Proximity as printed.
PRINTED_R = {
    "Adverse Conditions": 0.074,
    "Leadership": 0.056,
    "Information Processing": -0.085,
    "Response to Aggression": 0.456,
    "Mechanical Movement": 0.001,
    "Autonomy": -0.130,
    "Communication with the Outside": -0.064,
    "Horizontal Teamwork": 0.306,
    "Teamwork": 0.098,
    "Customer": 0.415,
    "Presence": 0.197,
    "Remote Working": -0.356,
}

# Single-predictor fit statistics as printed: (R², adjusted R², F).
PRINTED_FIT = {
    "Response to Aggression": (0.208, 0.207, 253.458),
    "Horizontal Teamwork": (0.094, 0.093, 99.691),
    "Remote Working": (0.127, 0.126, 139.189),
}

# Descriptive statistics as printed: (mean, SD).
PRINTED_MEAN_SD = {
    "Physical Proximity": (60.300, 16.875),
    "Adverse Conditions": (18.542, 17.538),
    "Leadership": (48.440, 11.806),
    "Information Processing": (66.133, 11.940),
    "Response to Aggression": (36.748, 12.878),
    "Mechanical Movement": (58.955, 9.699),
    "Autonomy": (76.918, 11.440),
    "Communication with the Outside": (67.569, 18.633),
    "Horizontal Teamwork": (84.353, 8.904),
}

# Stepwise model over the eight factor scales as printed.
PRINTED_STEPWISE = frozenset({
    "Information Processing",
    "Response to Aggression",
    "Mechanical Movement",
    "Communication with the Outside",
    "Horizontal Teamwork",
})
PRINTED_STEPWISE_ADJ_R2 = 0.319

PRINTED_ALPHA = {
    "Adverse Conditions": 0.929,
    "Leadership": 0.939,
    "Information Processing": 0.923,
    "Response to Aggression": 0.871,
    "Mechanical Movement": 0.694,
    "Autonomy": 0.897,
    "Communication with the Outside": 0.810,
    "Horizontal Teamwork": 0.656,
}


@dataclass(frozen=True)
class AppendixRow:
    table: str
    code: str
    title: str
    response_to_aggression: float
    physical_proximity: float


def appendix_rows() -> list[AppendixRow]:
    """All printed appendix rows; ``table`` is ``A1`` (low/low) or ``A2`` (high/high)."""
    text = resources.files("proxfactor").joinpath("data/appendix.csv").read_text("utf-8")
    reader = csv.DictReader(text.splitlines())
    return [
        AppendixRow(
            r["table"], r["code"], r["title"],
            float(r["response_to_aggression"]), float(r["physical_proximity"]),
        )
        for r in reader
    ]
