"""Standardized OLS, stepwise selection and multicollinearity diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .statcore import ZeroVarianceError, p_value_f, p_value_t, pearson_r, significance_stars

RANK_TOL = 1e-10


class RankDeficientError(ValueError):
    def __init__(self, columns: Sequence[str]):
        super().__init__(f"design matrix is rank deficient; dependent column(s): {list(columns)}")
        self.columns = tuple(columns)


@dataclass(frozen=True)
class RegressionResult:
    dependent: str
    predictors: tuple[str, ...]
    beta: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    stars: tuple[str, ...]
    r_squared: float
    adj_r_squared: float
    f_stat: float
    f_p: float
    n: int
    coef: np.ndarray = field(repr=False, default=None)
    intercept: float = field(repr=False, default=math.nan)

    @property
    def p_count(self) -> int:
        return len(self.predictors)

    @property
    def df_resid(self) -> int:
        return self.n - self.p_count - 1

    def beta_of(self, name: str) -> float:
        return float(self.beta[self.predictors.index(name)])

    def p_of(self, name: str) -> float:
        return float(self.p[self.predictors.index(name)])

    def star_of(self, name: str) -> str:
        return self.stars[self.predictors.index(name)]

    def f_stars(self, one_star: float = 0.05, two_star: float = 0.01) -> str:
        return significance_stars(self.f_p, one_star, two_star)


def fit_statistics(r_squared: float, n: int, p_count: int) -> tuple[float, float, float]:
    """Adjusted R², F and its p-value from R², sample size and predictor count."""
    df_resid = n - p_count - 1
    if df_resid < 1:
        raise ValueError(f"need n > p_count + 1, got n={n}, p_count={p_count}")
    adj = 1.0 - (1.0 - r_squared) * (n - 1) / df_resid
    if p_count == 0:
        return adj, 0.0, 1.0
    if r_squared >= 1.0:
        return adj, math.inf, 0.0
    f = (r_squared / p_count) / ((1.0 - r_squared) / df_resid)
    return adj, f, p_value_f(f, p_count, df_resid)


def _as_design(X, names):
    x = np.asarray(X, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if names is None:
        names = [f"x{j + 1}" for j in range(x.shape[1])]
    names = tuple(names)
    if len(names) != x.shape[1]:
        raise ValueError(f"{len(names)} names for {x.shape[1]} columns")
    return x, names


def _zscore(a: np.ndarray) -> np.ndarray:
    return (a - a.mean(axis=0)) / a.std(axis=0, ddof=1)


def _qr_solve(z: np.ndarray, zy: np.ndarray, names: Sequence[str]):
    q, r = np.linalg.qr(z)
    diag = np.abs(np.diag(r))
    limit = RANK_TOL * max(1.0, float(diag.max(initial=0.0)))
    bad = np.flatnonzero(diag <= limit)
    if bad.size:
        raise RankDeficientError([names[j] for j in bad])
    beta = solve_triangular(r, q.T @ zy)
    return beta, r


def ols_fit(
    y,
    X,
    names: Sequence[str] | None = None,
    dependent: str = "y",
    one_star: float = 0.05,
    two_star: float = 0.01,
) -> RegressionResult:
    """Least squares on z-scored variables, giving standardized coefficients.

    Rows with a missing value in ``y`` or any column of ``X`` are dropped.
    Coefficient p-values are two-tailed t tests on ``n - k - 1`` df.
    """
    x, names = _as_design(X, names)
    yv = np.asarray(y, dtype=float).ravel()
    if len(yv) != len(x):
        raise ValueError("y and X have different row counts")
    keep = ~(np.isnan(yv) | np.isnan(x).any(axis=1))
    yv, x = yv[keep], x[keep]
    n, k = x.shape
    if n <= k + 1:
        raise ValueError(f"need n > p_count + 1, got n={n}, p_count={k}")
    sy = yv.std(ddof=1)
    if sy == 0.0:
        raise ZeroVarianceError(f"dependent variable {dependent!r} has zero variance")
    zy = (yv - yv.mean()) / sy

    if k == 0:
        empty = np.empty(0)
        return RegressionResult(
            dependent, (), empty, empty, empty, empty, (), 0.0,
            fit_statistics(0.0, n, 0)[0], 0.0, 1.0, n, empty, float(yv.mean()),
        )

    sx = x.std(axis=0, ddof=1)
    flat = np.flatnonzero(sx == 0.0)
    if flat.size:
        raise RankDeficientError([names[j] for j in flat])
    z = (x - x.mean(axis=0)) / sx
    beta, r = _qr_solve(z, zy, names)

    resid = zy - z @ beta
    rss = float(resid @ resid)
    tss = float(zy @ zy)
    r2 = min(max(1.0 - rss / tss, 0.0), 1.0)
    adj, f, f_p = fit_statistics(r2, n, k)

    df = n - k - 1
    rinv = solve_triangular(r, np.eye(k))
    se = np.sqrt((rss / df) * np.einsum("ij,ij->i", rinv, rinv))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0.0, beta / np.where(se > 0.0, se, 1.0), np.sign(beta) * np.inf)
    p = np.array([p_value_t(float(v), df) if not math.isnan(v) else 1.0 for v in t])
    stars = tuple(significance_stars(v, one_star, two_star) for v in p)

    coef = beta * sy / sx
    intercept = float(yv.mean() - coef @ x.mean(axis=0))
    return RegressionResult(
        dependent, names, beta, se, t, p, stars, r2, adj, f, f_p, n, coef, intercept
    )


class Action(str, Enum):
    ENTER = "Enter"
    REMOVE = "Remove"


@dataclass(frozen=True)
class Step:
    action: Action
    predictor: str
    p_value: float
    r_squared: float


@dataclass(frozen=True)
class StepwiseTrace:
    steps: tuple[Step, ...]
    stopped_on_cycle: bool = False

    def __len__(self) -> int:
        return len(self.steps)

    def entered(self) -> tuple[str, ...]:
        return tuple(s.predictor for s in self.steps if s.action is Action.ENTER)

    def render(self) -> str:
        lines = [
            f"{i + 1}. {s.action.value} {s.predictor} (p={s.p_value:.4g}, R2={s.r_squared:.3f})"
            for i, s in enumerate(self.steps)
        ]
        if self.stopped_on_cycle:
            lines.append("stopped: selection started to cycle")
        return "\n".join(lines) + ("\n" if lines else "")


def stepwise_select(
    y,
    candidates,
    names: Sequence[str] | None = None,
    entry_p: float = 0.05,
    removal_p: float = 0.10,
    dependent: str = "y",
    one_star: float = 0.05,
    two_star: float = 0.01,
) -> tuple[RegressionResult, StepwiseTrace]:
    """Bidirectional stepwise selection on partial-F p-values.

    Each round enters the outside candidate with the smallest p-value if it
    is at most ``entry_p``, then removes in-model predictors with p-value at
    or above ``removal_p`` (worst first). Rows with missing values in any
    candidate are dropped once up front so every model uses the same rows.
    """
    if entry_p > removal_p:
        raise ValueError(f"entry_p ({entry_p}) must not exceed removal_p ({removal_p})")
    x, names = _as_design(candidates, names)
    if not names:
        raise ValueError("stepwise selection needs at least one candidate")
    yv = np.asarray(y, dtype=float).ravel()
    keep = ~(np.isnan(yv) | np.isnan(x).any(axis=1))
    yv, x = yv[keep], x[keep]

    def fit(cols):
        return ols_fit(yv, x[:, cols], [names[c] for c in cols], dependent, one_star, two_star)

    current: list[int] = []
    steps: list[Step] = []
    seen = {frozenset()}
    cycled = False
    max_rounds = 4 * len(names) + 4
    for _ in range(max_rounds):
        best = None
        for c in range(len(names)):
            if c in current:
                continue
            try:
                res = fit(current + [c])
            except RankDeficientError:
                continue
            pc = float(res.p[-1])
            if best is None or pc < best[1]:
                best = (c, pc, res.r_squared)
        if best is None or best[1] > entry_p:
            break
        current.append(best[0])
        steps.append(Step(Action.ENTER, names[best[0]], best[1], best[2]))

        while current:
            res = fit(current)
            worst = int(np.argmax(res.p))
            if res.p[worst] < removal_p:
                break
            gone = current.pop(worst)
            after = fit(current).r_squared if current else 0.0
            steps.append(Step(Action.REMOVE, names[gone], float(res.p[worst]), after))

        state = frozenset(current)
        if state in seen and steps[-1].action is Action.REMOVE:
            cycled = True
            break
        seen.add(state)

    final = fit(sorted(current))
    return final, StepwiseTrace(tuple(steps), cycled)


@dataclass(frozen=True)
class VIFReport:
    names: tuple[str, ...]
    values: np.ndarray
    limit: float = 10.0

    @property
    def flagged(self) -> tuple[str, ...]:
        return tuple(n for n, v in zip(self.names, self.values) if v > self.limit)

    @property
    def infinite(self) -> tuple[str, ...]:
        return tuple(n for n, v in zip(self.names, self.values) if math.isinf(v))

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}


def vif(X, names: Sequence[str] | None = None, limit: float = 10.0) -> VIFReport:
    """Variance inflation factor 1 / (1 - R²_j) for each column of ``X``."""
    x, names = _as_design(X, names)
    x = x[~np.isnan(x).any(axis=1)]
    k = x.shape[1]
    if k < 2:
        raise ValueError("VIF needs at least 2 predictors")
    out = np.empty(k)
    for j in range(k):
        others = [c for c in range(k) if c != j]
        try:
            res = ols_fit(x[:, j], x[:, others], [names[c] for c in others])
        except (RankDeficientError, ZeroVarianceError):
            out[j] = math.inf
            continue
        resid_share = 1.0 - res.r_squared
        out[j] = math.inf if resid_share <= RANK_TOL else 1.0 / resid_share
    return VIFReport(names, out, limit)


@dataclass(frozen=True)
class SignFlip:
    predictor: str
    simple: float
    multiple: float


def sign_flips(multiple: RegressionResult, simple: Mapping[str, float]) -> tuple[SignFlip, ...]:
    """Predictors whose multiple-model β opposes their simple correlation."""
    out = []
    for name, b in zip(multiple.predictors, multiple.beta):
        r = simple.get(name)
        if r is None or r == 0.0 or b == 0.0:
            continue
        if math.copysign(1.0, r) != math.copysign(1.0, b):
            out.append(SignFlip(name, float(r), float(b)))
    return tuple(out)


@dataclass(frozen=True)
class MulticollinearityReport:
    model: RegressionResult
    vif: VIFReport | None
    flips: tuple[SignFlip, ...]

    @property
    def flagged(self) -> bool:
        return bool(self.flips) or bool(self.vif and (self.vif.flagged or self.vif.infinite))

    def render(self, label: str = "") -> str:
        title = label or ", ".join(self.model.predictors) or "(empty model)"
        lines = [f"model: {title}"]
        if self.vif is not None:
            for name, value in self.vif.as_dict().items():
                mark = " (> limit)" if value > self.vif.limit else ""
                lines.append(f"  VIF {name}: {value:.3f}{mark}")
        for flip in self.flips:
            lines.append(
                f"  sign flip {flip.predictor}: simple {flip.simple:+.3f}, "
                f"multiple {flip.multiple:+.3f}"
            )
        lines.append(f"  multicollinearity suspected: {'yes' if self.flagged else 'no'}")
        return "\n".join(lines) + "\n"


def multicollinearity_report(
    y, X, names: Sequence[str] | None = None, dependent: str = "y", limit: float = 10.0
) -> MulticollinearityReport:
    """Fit the multiple model and check VIFs and sign reversals."""
    x, names = _as_design(X, names)
    yv = np.asarray(y, dtype=float).ravel()
    keep = ~(np.isnan(yv) | np.isnan(x).any(axis=1))
    yv, x = yv[keep], x[keep]
    model = ols_fit(yv, x, names, dependent)
    report = vif(x, names, limit) if len(names) >= 2 else None
    simple = {n: pearson_r(x[:, j], yv) for j, n in enumerate(names)}
    return MulticollinearityReport(model, report, sign_flips(model, simple))
