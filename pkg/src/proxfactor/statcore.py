"""Numerical building blocks: correlation, eigendecomposition, alpha, t and F tails."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import betainc, betaincc

from .dataset import Dataset

SYMMETRY_TOL = 1e-10

TABER_GATE = 0.6
CORTINA_GATE = 0.7


class ZeroVarianceError(ValueError):
    pass


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray
    items: tuple[str, ...]
    n: int

    @property
    def p(self) -> int:
        return len(self.items)

    def get(self, a: str, b: str) -> float:
        i, j = self.items.index(a), self.items.index(b)
        return float(self.values[i, j])

    def subset(self, items: Sequence[str]) -> "CorrelationMatrix":
        idx = [self.items.index(i) for i in items]
        return CorrelationMatrix(self.values[np.ix_(idx, idx)], tuple(items), self.n)


def correlation_from_array(values: np.ndarray, names: Sequence[str]) -> CorrelationMatrix:
    """Pearson correlation matrix of the columns of a complete 2-D array."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < 3:
        raise ValueError(f"correlation needs at least 3 complete rows, got {n}")
    centered = values - values.mean(axis=0)
    ss = np.einsum("ij,ij->j", centered, centered)
    zero = np.flatnonzero(ss <= 0.0)
    if zero.size:
        raise ZeroVarianceError(f"zero-variance column {names[zero[0]]!r}")
    norm = np.sqrt(ss)
    r = (centered.T @ centered) / np.outer(norm, norm)
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    r.setflags(write=False)
    return CorrelationMatrix(r, tuple(names), n)


def correlation_matrix(dataset: Dataset, columns: Sequence[str]) -> CorrelationMatrix:
    block, _ = dataset.submatrix(list(columns))
    return correlation_from_array(block, list(columns))


def pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float) - np.mean(x)
    y = np.asarray(y, dtype=float) - np.mean(y)
    sxx, syy = float(x @ x), float(y @ y)
    if sxx <= 0.0 or syy <= 0.0:
        raise ZeroVarianceError("pearson_r of a zero-variance vector")
    return float(np.clip((x @ y) / math.sqrt(sxx * syy), -1.0, 1.0))


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eigen(matrix: np.ndarray) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues come back in descending order; each eigenvector is signed so
    that its largest-magnitude entry is positive.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_TOL * scale:
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh((a + a.T) / 2.0)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], v[:, order]
    pivots = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[pivots, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return EigenDecomposition(w, v * signs)


@dataclass(frozen=True)
class AlphaReport:
    alpha: float
    item_count: int
    passes_0_6: bool
    passes_0_7: bool

    @classmethod
    def gate(
        cls,
        alpha: float,
        item_count: int,
        taber_gate: float = TABER_GATE,
        cortina_gate: float = CORTINA_GATE,
    ) -> "AlphaReport":
        """Apply the inclusive 0.6 / 0.7 gates to an alpha value."""
        return cls(alpha, item_count, alpha >= taber_gate, alpha >= cortina_gate)

    @property
    def status(self) -> str:
        if self.passes_0_7:
            return "acceptable"
        if self.passes_0_6:
            return "taber-only"
        return "unacceptable"


def alpha_from_array(
    values: np.ndarray,
    taber_gate: float = TABER_GATE,
    cortina_gate: float = CORTINA_GATE,
) -> AlphaReport:
    """Raw (covariance-based) Cronbach alpha of the columns of ``values``."""
    values = np.asarray(values, dtype=float)
    n, k = values.shape
    if k < 2:
        raise ValueError("alpha needs at least 2 items")
    if n < 3:
        raise ValueError(f"alpha needs at least 3 complete rows, got {n}")
    cov = _covariance_fsum(values)
    trace = sum((Fraction(cov[i][i]) for i in range(k)), Fraction(0))
    total = sum((Fraction(c) for row in cov for c in row), Fraction(0))
    if total <= 0:
        raise ZeroVarianceError("total score has zero variance")
    alpha = float(Fraction(k, k - 1) * (1 - trace / total))
    return AlphaReport.gate(alpha, k, taber_gate, cortina_gate)


def _covariance_fsum(values: np.ndarray) -> list[list[float]]:
    # correctly rounded sums: identical columns give bit-identical entries
    centered = values - values.mean(axis=0)
    k = values.shape[1]
    cov = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i, k):
            cov[i][j] = cov[j][i] = math.fsum(centered[:, i] * centered[:, j])
    return cov


def cronbach_alpha(
    dataset: Dataset,
    columns: Sequence[str],
    taber_gate: float = TABER_GATE,
    cortina_gate: float = CORTINA_GATE,
) -> AlphaReport:
    columns = list(columns)
    if len(columns) < 2:
        raise ValueError("alpha needs at least 2 items")
    block, _ = dataset.submatrix(columns)
    return alpha_from_array(block, taber_gate, cortina_gate)


def p_value_t(t: float, df: float) -> float:
    """Two-tailed p-value of Student's t with ``df`` degrees of freedom."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if math.isinf(t):
        return 0.0
    if math.isnan(t):
        return math.nan
    t2 = t * t
    if t2 < df:
        # evaluate at the small argument so it never rounds to 1
        return float(betaincc(0.5, df / 2.0, t2 / (df + t2)))
    return float(betainc(df / 2.0, 0.5, df / (df + t2)))


def p_value_f(f: float, df_num: float, df_den: float) -> float:
    """Upper-tail p-value of the F distribution."""
    if df_num < 1 or df_den < 1:
        raise ValueError("F degrees of freedom must be >= 1")
    if math.isnan(f):
        return math.nan
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    scaled = df_num * f
    if scaled < df_den:
        return float(betaincc(df_num / 2.0, df_den / 2.0, scaled / (df_den + scaled)))
    return float(betainc(df_den / 2.0, df_num / 2.0, df_den / (df_den + scaled)))


def p_value_r(r: float, n: int) -> float:
    """Two-tailed p-value for a Pearson correlation from ``n`` observations."""
    if abs(r) >= 1.0:
        return 0.0
    return p_value_t(r * math.sqrt(n - 2) / math.sqrt(1.0 - r * r), n - 2)


def significance_stars(p: float, one_star: float = 0.05, two_star: float = 0.01) -> str:
    if math.isnan(p):
        return ""
    if p < two_star:
        return "**"
    if p < one_star:
        return "*"
    return ""
