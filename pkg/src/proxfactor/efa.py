"""Exploratory factor analysis with rule-based item pruning.

Extraction is principal-axis factoring on the item correlation matrix, the
number of factors follows the eigenvalue >= 1 rule on the unreduced matrix,
and loadings are varimax rotated with Kaiser row normalization. The pruning
loop removes weak and cross-loading items in batches and refits until the
item set is stable.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .statcore import CorrelationMatrix, correlation_from_array, sym_eigen

log = logging.getLogger(__name__)

HEYWOOD_CAP = 1.0 - 1e-6
# eigenvalues this close to the threshold count as ties
KAISER_TIE_TOL = 1e-10


class FactorAnalysisError(ValueError):
    pass


class PruningError(FactorAnalysisError):
    """Pruning left too few items; ``iterations`` holds the audit trail."""

    def __init__(self, message: str, iterations: list["PruneIteration"]):
        super().__init__(message)
        self.iterations = iterations


@dataclass(frozen=True)
class PruneRules:
    loading_cutoff: float = 0.4
    eigen_threshold: float = 1.0
    max_outer_iterations: int | None = None
    paf_tolerance: float = 1e-4
    paf_max_iter: int = 100
    varimax_tolerance: float = 1e-6
    varimax_max_sweeps: int = 50
    kaiser_normalize: bool = True

    def __post_init__(self):
        if not 0.0 < self.loading_cutoff < 1.0:
            raise ValueError(f"loading_cutoff must be in (0, 1), got {self.loading_cutoff}")
        if self.eigen_threshold <= 0.0:
            raise ValueError(f"eigen_threshold must be > 0, got {self.eigen_threshold}")
        if self.max_outer_iterations is not None and self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")


@dataclass(frozen=True)
class KaiserResult:
    count: int
    eigenvalues: np.ndarray
    degenerate: bool


def kaiser_retention(corr: CorrelationMatrix | np.ndarray, threshold: float = 1.0) -> KaiserResult:
    """Count eigenvalues of the unreduced correlation matrix at or above ``threshold``.

    ``degenerate`` is set when an eigenvalue ties the threshold, as happens
    for an identity matrix where every item would be its own factor.
    """
    r = corr.values if isinstance(corr, CorrelationMatrix) else np.asarray(corr, float)
    eig = sym_eigen(r).eigenvalues
    count = int(np.sum(eig >= threshold - KAISER_TIE_TOL))
    degenerate = bool(np.any(np.abs(eig - threshold) <= KAISER_TIE_TOL))
    return KaiserResult(max(count, 1), eig, degenerate)


def kaiser_retention_count(corr: CorrelationMatrix | np.ndarray, threshold: float = 1.0) -> int:
    return kaiser_retention(corr, threshold).count


def initial_communalities(r: np.ndarray) -> np.ndarray:
    """Squared multiple correlations, or the largest |r| per row if R is singular."""
    p = r.shape[0]
    try:
        if np.linalg.cond(r) > 1e12:
            raise np.linalg.LinAlgError("ill-conditioned")
        smc = 1.0 - 1.0 / np.diag(np.linalg.inv(r))
        if np.all(np.isfinite(smc)) and np.all(smc >= 0.0):
            return np.clip(smc, 0.0, HEYWOOD_CAP)
    except np.linalg.LinAlgError:
        pass
    off = np.abs(r - np.eye(p))
    return np.clip(off.max(axis=1), 0.0, HEYWOOD_CAP)


@dataclass(frozen=True)
class PAFResult:
    loadings: np.ndarray
    communalities: np.ndarray
    iterations: int
    converged: bool
    heywood: tuple[int, ...]


def principal_axis_factor(
    corr: CorrelationMatrix | np.ndarray,
    m: int,
    tol: float = 1e-4,
    max_iter: int = 100,
) -> PAFResult:
    """Iterated principal-axis extraction of ``m`` unrotated factors."""
    r = np.array(corr.values if isinstance(corr, CorrelationMatrix) else corr, dtype=float)
    p = r.shape[0]
    if not 1 <= m < p:
        raise FactorAnalysisError(f"need 1 <= m < p, got m={m}, p={p}")

    h2 = initial_communalities(r)
    heywood: set[int] = set()
    converged = False
    loadings = np.zeros((p, m))
    it = 0
    for it in range(1, max_iter + 1):
        reduced = r.copy()
        np.fill_diagonal(reduced, h2)
        eig = sym_eigen(reduced)
        lam = np.clip(eig.eigenvalues[:m], 0.0, None)
        loadings = eig.eigenvectors[:, :m] * np.sqrt(lam)
        new_h2 = np.einsum("ij,ij->i", loadings, loadings)
        over = np.flatnonzero(new_h2 > HEYWOOD_CAP)
        heywood.update(int(i) for i in over)
        new_h2 = np.minimum(new_h2, HEYWOOD_CAP)
        delta = float(np.max(np.abs(new_h2 - h2)))
        h2 = new_h2
        if delta < tol:
            converged = True
            break
    if not converged:
        log.warning("principal-axis factoring did not converge in %d iterations", max_iter)

    row_h2 = np.einsum("ij,ij->i", loadings, loadings)
    over = row_h2 > HEYWOOD_CAP
    if over.any():
        heywood.update(int(i) for i in np.flatnonzero(over))
        loadings[over] *= np.sqrt(HEYWOOD_CAP / row_h2[over])[:, None]
        log.warning("Heywood case clamped for %d item(s)", int(over.sum()))
    communalities = np.einsum("ij,ij->i", loadings, loadings)
    return PAFResult(loadings, communalities, it, converged, tuple(sorted(heywood)))


def varimax_criterion(loadings: np.ndarray) -> float:
    """Sum over factors of the variance of squared loadings."""
    sq = np.asarray(loadings) ** 2
    return float(np.sum(sq.var(axis=0)))


@dataclass(frozen=True)
class VarimaxResult:
    loadings: np.ndarray
    rotation: np.ndarray
    criterion_history: tuple[float, ...]
    sweeps: int


def varimax_rotate(
    loadings: np.ndarray,
    normalize: bool = True,
    tol: float = 1e-6,
    max_sweeps: int = 50,
) -> VarimaxResult:
    """Varimax rotation by cyclic pairwise planar rotations.

    Returns rotated loadings ``A @ T`` with ``T`` orthogonal. Factors are
    reordered by explained variance and signed so the largest-|loading| item
    on each factor is positive. ``criterion_history`` holds the criterion of
    the (normalized) loadings before the first sweep and after each sweep.
    """
    a = np.array(loadings, dtype=float)
    p, m = a.shape
    if m < 1:
        raise FactorAnalysisError("varimax needs at least one factor")
    rotation = np.eye(m)

    if normalize:
        h = np.sqrt(np.einsum("ij,ij->i", a, a))
        scale = np.where(h > 0.0, h, 1.0)
    else:
        scale = np.ones(p)
    b = a / scale[:, None]

    history = [varimax_criterion(b)]
    sweeps = 0
    if m > 1:
        for sweeps in range(1, max_sweeps + 1):
            for i in range(m - 1):
                for j in range(i + 1, m):
                    theta = _pair_angle(b[:, i], b[:, j], p)
                    if theta == 0.0:
                        continue
                    c, s = math.cos(theta), math.sin(theta)
                    _rotate_pair(b, i, j, c, s)
                    _rotate_pair(rotation, i, j, c, s)
            crit = varimax_criterion(b)
            if crit < history[-1] - 1e-12:
                raise FactorAnalysisError(
                    f"varimax criterion decreased in sweep {sweeps}: {history[-1]} -> {crit}"
                )
            history.append(crit)
            if crit - history[-2] < tol:
                break

    rotated = a @ rotation
    rotated, rotation = _canonical_factor_order(rotated, rotation)
    return VarimaxResult(rotated, rotation, tuple(history), sweeps)


def _pair_angle(x: np.ndarray, y: np.ndarray, p: int) -> float:
    u = x * x - y * y
    v = 2.0 * x * y
    su, sv = u.sum(), v.sum()
    num = 2.0 * (u @ v) - 2.0 * su * sv / p
    den = (u @ u - v @ v) - (su * su - sv * sv) / p
    if abs(num) < 1e-15 and den >= 0.0:
        return 0.0
    return math.atan2(num, den) / 4.0


def _rotate_pair(mat: np.ndarray, i: int, j: int, c: float, s: float) -> None:
    x = mat[:, i].copy()
    y = mat[:, j]
    mat[:, i] = c * x + s * y
    mat[:, j] = -s * x + c * y


def _canonical_factor_order(rotated: np.ndarray, rotation: np.ndarray):
    explained = np.einsum("ij,ij->j", rotated, rotated)
    order = np.argsort(-explained, kind="stable")
    rotated, rotation = rotated[:, order], rotation[:, order]
    pivots = np.argmax(np.abs(rotated), axis=0)
    signs = np.sign(rotated[pivots, np.arange(rotated.shape[1])])
    signs[signs == 0] = 1.0
    return rotated * signs, rotation * signs


def classify_items(loadings: np.ndarray, cutoff: float = 0.4):
    """Boolean masks ``(low, cross)`` for the pruning rule.

    ``low``: every |loading| is below ``cutoff``. ``cross``: |loading| is at
    or above ``cutoff`` on two or more factors.
    """
    mag = np.abs(loadings)
    low = mag.max(axis=1) < cutoff
    cross = (mag >= cutoff).sum(axis=1) >= 2
    return low, cross


@dataclass(frozen=True)
class PruneIteration:
    index: int
    items: tuple[str, ...]
    n_rows: int
    n_factors: int
    eigenvalues: np.ndarray
    degenerate: bool
    paf_iterations: int
    paf_converged: bool
    heywood: tuple[str, ...]
    dropped_low: tuple[str, ...]
    dropped_cross: tuple[str, ...]

    @property
    def dropped(self) -> tuple[str, ...]:
        return self.dropped_low + self.dropped_cross


@dataclass(frozen=True)
class FactorSolution:
    items: tuple[str, ...]
    loadings: np.ndarray
    unrotated: np.ndarray
    communalities: np.ndarray
    rotation: np.ndarray
    unreduced_eigenvalues: np.ndarray
    iterations: tuple[PruneIteration, ...]
    converged: bool = True
    criterion_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def n_factors(self) -> int:
        return self.loadings.shape[1]

    @property
    def iteration_count(self) -> int:
        return len(self.iterations)

    @property
    def kept_items(self) -> tuple[str, ...]:
        return self.items

    @property
    def dropped_low(self) -> tuple[str, ...]:
        return tuple(i for it in self.iterations for i in it.dropped_low)

    @property
    def dropped_cross(self) -> tuple[str, ...]:
        return tuple(i for it in self.iterations for i in it.dropped_cross)

    def primary_factor(self) -> dict[str, int]:
        """Index of the factor each retained item loads on most strongly."""
        best = np.argmax(np.abs(self.loadings), axis=1)
        return {item: int(f) for item, f in zip(self.items, best)}

    def factor_items(self, cutoff: float = 0.4) -> list[tuple[str, ...]]:
        mag = np.abs(self.loadings)
        return [
            tuple(item for item, row in zip(self.items, mag) if row[f] >= cutoff)
            for f in range(self.n_factors)
        ]


def fit_factors(
    values: np.ndarray,
    items: Sequence[str],
    rules: PruneRules = PruneRules(),
    n_factors: int | None = None,
):
    """One extraction + rotation pass on a complete data block.

    Returns ``(corr, kaiser, paf, varimax)``.
    """
    corr = correlation_from_array(values, items)
    kaiser = kaiser_retention(corr, rules.eigen_threshold)
    m = kaiser.count if n_factors is None else n_factors
    if kaiser.degenerate:
        log.warning("eigenvalue tie at the retention threshold (%s)", rules.eigen_threshold)
    paf = principal_axis_factor(corr, m, rules.paf_tolerance, rules.paf_max_iter)
    vm = varimax_rotate(
        paf.loadings, rules.kaiser_normalize, rules.varimax_tolerance, rules.varimax_max_sweeps
    )
    return corr, kaiser, paf, vm


def prune_iterate(
    dataset: Dataset,
    start_items: Sequence[str],
    rules: PruneRules = PruneRules(),
) -> FactorSolution:
    """Refit and drop weak or cross-loading items until none remain.

    Every outer iteration recomputes the correlation matrix on the current
    items, reapplies the retention rule, and removes all violating items in
    one batch.
    """
    items = list(dict.fromkeys(start_items))
    if len(items) < 3:
        raise FactorAnalysisError(f"need at least 3 items, got {len(items)}")
    cap = rules.max_outer_iterations or len(items)
    trail: list[PruneIteration] = []

    for index in range(1, cap + 1):
        block, _ = dataset.submatrix(items)
        if len(block) < 3:
            raise PruningError(f"only {len(block)} complete rows for {len(items)} items", trail)
        try:
            corr, kaiser, paf, vm = fit_factors(block, items, rules)
        except FactorAnalysisError as exc:
            raise PruningError(f"iteration {index}: {exc}", trail) from exc
        low, cross = classify_items(vm.loadings, rules.loading_cutoff)
        record = PruneIteration(
            index=index,
            items=tuple(items),
            n_rows=len(block),
            n_factors=kaiser.count,
            eigenvalues=kaiser.eigenvalues,
            degenerate=kaiser.degenerate,
            paf_iterations=paf.iterations,
            paf_converged=paf.converged,
            heywood=tuple(items[i] for i in paf.heywood),
            dropped_low=tuple(i for i, flag in zip(items, low) if flag),
            dropped_cross=tuple(i for i, flag in zip(items, cross) if flag),
        )
        trail.append(record)
        log.info(
            "efa iteration %d: %d items, %d factors, dropped %d low / %d cross",
            index, len(items), kaiser.count, len(record.dropped_low), len(record.dropped_cross),
        )
        if not record.dropped:
            return FactorSolution(
                items=tuple(items),
                loadings=vm.loadings,
                unrotated=paf.loadings,
                communalities=np.einsum("ij,ij->i", vm.loadings, vm.loadings),
                rotation=vm.rotation,
                unreduced_eigenvalues=kaiser.eigenvalues,
                iterations=tuple(trail),
                converged=True,
                criterion_history=vm.criterion_history,
            )
        dropped = set(record.dropped)
        items = [i for i in items if i not in dropped]
        if len(items) < 3:
            raise PruningError(
                f"iteration {index} left {len(items)} item(s); at least 3 are required", trail
            )

    log.warning("pruning stopped at the iteration cap (%d) before converging", cap)
    block, _ = dataset.submatrix(items)
    corr, kaiser, paf, vm = fit_factors(block, items, rules)
    return FactorSolution(
        items=tuple(items),
        loadings=vm.loadings,
        unrotated=paf.loadings,
        communalities=np.einsum("ij,ij->i", vm.loadings, vm.loadings),
        rotation=vm.rotation,
        unreduced_eigenvalues=kaiser.eigenvalues,
        iterations=tuple(trail),
        converged=False,
        criterion_history=vm.criterion_history,
    )


def render_audit(iterations: Sequence[PruneIteration]) -> str:
    """Plain-text audit trail, one block per outer iteration."""
    lines = []
    for it in iterations:
        lines.append(f"iteration {it.index}")
        lines.append(f"  items: {len(it.items)}")
        lines.append(f"  complete rows: {it.n_rows}")
        lines.append(f"  retained factors: {it.n_factors}")
        top = ", ".join(f"{v:.3f}" for v in it.eigenvalues[: it.n_factors + 1])
        lines.append(f"  leading eigenvalues: {top}")
        if it.degenerate:
            lines.append("  note: eigenvalue tie at the retention threshold")
        lines.append(
            f"  principal-axis iterations: {it.paf_iterations}"
            + ("" if it.paf_converged else " (not converged)")
        )
        for item in it.heywood:
            lines.append(f"  heywood: {item}")
        lines.append(f"  dropped_low: {len(it.dropped_low)}")
        lines.extend(f"    - {item}" for item in it.dropped_low)
        lines.append(f"  dropped_cross: {len(it.dropped_cross)}")
        lines.extend(f"    - {item}" for item in it.dropped_cross)
    return "\n".join(lines) + "\n"
