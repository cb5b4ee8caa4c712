"""Seeded synthetic occupation tables with a planted factor structure.

The default layout mirrors the eight-factor item lists of the bundled config
plus a dependent item that cross-loads, a cross-loading extra item and a
weak item, so a full pipeline run exercises every pruning branch.
"""

from __future__ import annotations

import csv
import io
from importlib import resources

import numpy as np
import yaml

DEPENDENT = "Work Context - Physical Proximity"
CROSS_ITEM = "Work Context - Coordinate or Lead Others"
WEAK_ITEM = "Work Context - Consequence of Error"


def default_layout() -> dict[str, tuple[str, ...]]:
    text = resources.files("proxfactor").joinpath("data/default_config.yaml").read_text("utf-8")
    raw = yaml.safe_load(text)
    return {s["name"]: tuple(s["items"]) for s in raw["scales"]}


def planted_loadings(rng: np.random.Generator, layout: dict[str, tuple[str, ...]]):
    """Simple-structure loadings for ``layout`` plus the three special items."""
    factors = list(layout)
    items = [i for group in layout.values() for i in group]
    lam = np.zeros((len(items) + 3, len(factors)))
    row = 0
    for f, group in enumerate(layout.values()):
        for item in group:
            lam[row, f] = rng.uniform(0.75, 0.92)
            if item.endswith("Indoors, Environmentally Controlled"):
                lam[row, f] *= -1
            row += 1
    f_of = {name: k for k, name in enumerate(factors)}
    # dependent: Response to Aggression and Horizontal Teamwork, minus outside contact
    lam[row, f_of["Response to Aggression"]] = 0.55
    lam[row, f_of["Horizontal Teamwork"]] = 0.50
    lam[row, f_of["Communication with the Outside"]] = -0.25
    lam[row + 1, f_of["Leadership"]] = 0.55
    lam[row + 1, f_of["Horizontal Teamwork"]] = 0.55
    lam[row + 2, f_of["Mechanical Movement"]] = 0.20
    return items + [DEPENDENT, CROSS_ITEM, WEAK_ITEM], lam


def make_scores(lam: np.ndarray, n: int, rng: np.random.Generator, spread: float = 15.0):
    """Scores on the 0-100 metric from ``lam`` with unit-variance items."""
    h2 = np.minimum((lam ** 2).sum(axis=1), 0.99)
    factors = rng.standard_normal((n, lam.shape[1]))
    unique = rng.standard_normal((n, lam.shape[0]))
    z = factors @ lam.T + unique * np.sqrt(1.0 - h2)
    return np.clip(np.round(50.0 + spread * z, 1), 0.0, 100.0)


def synthetic_table(n: int = 400, seed: int = 20200808) -> str:
    """CSV text of a synthetic occupation x item table."""
    rng = np.random.default_rng(seed)
    items, lam = planted_loadings(rng, default_layout())
    scores = make_scores(lam, n, rng)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["code", "title", *items])
    for i, row in enumerate(scores):
        writer.writerow([f"99-{i:04d}.00", f"Synthetic occupation {i + 1}", *(f"{v:.1f}" for v in row)])
    return buf.getvalue()


def wide_table(n: int = 968, p: int = 98, m: int = 8, seed: int = 7) -> str:
    """A full-size table (default 968 x 98) for runtime checks."""
    rng = np.random.default_rng(seed)
    lam = np.zeros((p, m))
    for j in range(p):
        lam[j, j % m] = rng.uniform(0.6, 0.9)
    scores = make_scores(lam, n, rng)
    items = [f"Work Context - Synthetic item {j + 1:03d}" for j in range(p - 1)] + [DEPENDENT]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["code", "title", *items])
    for i, row in enumerate(scores):
        writer.writerow([f"98-{i:04d}.00", f"Occupation {i + 1}", *(f"{v:.1f}" for v in row)])
    return buf.getvalue()
