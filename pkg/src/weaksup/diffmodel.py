"""Difference model: LASSO over binary features against model disagreement.

The canonical objective is

    (1 / 2N) ||X theta - y||^2 + lambda ||theta||_1

so correlations, the path grid, and the recovery-theory quantities all live
on one lambda axis.  Columns of X are +-1, hence have exact unit norm under
the 1/N scaling and are never standardized; the constructor of
FeatureMatrixBinary is the guard.

Coordinate descent runs on precomputed Gram/correlation statistics (the
covariance-update strategy), so each sweep costs O(P * |active|) independent
of N.  The cyclic order 0..P-1 is fixed and fits are fully deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import DataError, FeatureMatrixBinary, HardLabelVector, ProbLabelVector, _frozen, _set


@dataclass(frozen=True)
class DisagreementVector:
    """Elementwise -Y_G * Y_D; positive where the two models conflict."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise DataError("disagreement must be a vector")
        if not np.isfinite(values).all() or (np.abs(values) > 1.0).any():
            raise DataError("disagreement entries must lie in [-1,1]")
        _set(self, values=_frozen(values))

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LassoFit:
    coef: np.ndarray
    lam: float
    active_set: tuple[int, ...]
    kkt_residual: float

    def __post_init__(self):
        coef = np.asarray(self.coef, dtype=np.float64)
        _set(self, coef=_frozen(coef), active_set=tuple(int(j) for j in self.active_set))
        if self.active_set != tuple(np.flatnonzero(coef).tolist()):
            raise ValueError("active_set must be exactly the nonzero coefficient indices")


@dataclass(frozen=True)
class RegPath:
    """Warm-started fits on a decreasing lambda grid plus feature entry order.

    entry_lambdas[i] is the grid value at which entry_order[i] first became
    active.
    """

    lambdas: tuple[float, ...]
    entry_order: tuple[int, ...]
    fits: tuple[LassoFit, ...]
    entry_lambdas: tuple[float, ...] = ()

    def __post_init__(self):
        if any(a <= b for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ValueError("lambda grid must be strictly decreasing")
        if len(set(self.entry_order)) != len(self.entry_order):
            raise ValueError("entry_order must not repeat features")
        if self.entry_lambdas and len(self.entry_lambdas) != len(self.entry_order):
            raise ValueError("entry_lambdas must parallel entry_order")


def disagreement(gen_labels: ProbLabelVector, disc_labels: HardLabelVector) -> DisagreementVector:
    if gen_labels.n != disc_labels.n:
        raise ValueError(f"label lengths differ: {gen_labels.n} vs {disc_labels.n}")
    return DisagreementVector(-gen_labels.expected * disc_labels.labels)


def soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def _stats(features: FeatureMatrixBinary, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gram matrix (1/N) X^T X and correlations (1/N) X^T y."""
    x = features.values.astype(np.float64)
    if target.shape != (features.n,):
        raise ValueError(f"target length {target.shape} != object count {features.n}")
    if not np.isfinite(target).all():
        raise DataError("non-finite target")
    return (x.T @ x) / features.n, (x.T @ target) / features.n


def _target_values(target) -> np.ndarray:
    return target.values if isinstance(target, DisagreementVector) else np.asarray(target, dtype=np.float64)


def _cd_solve(
    gram: np.ndarray,
    corr: np.ndarray,
    lam: float,
    theta: np.ndarray,
    tol: float,
    max_sweeps: int,
) -> tuple[np.ndarray, int]:
    """Cyclic coordinate descent; `theta` is updated in place.

    Maintains q = corr - gram @ theta (the residual correlations, and exactly
    the KKT vector).  A fit is converged when a full sweep moves no coordinate
    by tol or more and the Gram-based KKT violation is within 5 * tol.
    """
    p = theta.shape[0]
    sweeps = 0
    while sweeps < max_sweeps:
        q = corr - gram @ theta  # fresh start each full sweep: no drift
        max_delta = 0.0
        for j in range(p):
            rho = q[j] + theta[j]
            new = soft_threshold(rho, lam)
            d = new - theta[j]
            if d != 0.0:
                q -= gram[j] * d
                theta[j] = new
                if abs(d) > max_delta:
                    max_delta = abs(d)
        sweeps += 1
        if max_delta < tol and _kkt_from_q(q, theta, lam) <= 5.0 * tol:
            break
        # inner sweeps over the active set only (cheap), then re-check fully
        active = np.flatnonzero(theta)
        while sweeps < max_sweeps and active.size:
            inner_delta = 0.0
            for j in active:
                rho = q[j] + theta[j]
                new = soft_threshold(rho, lam)
                d = new - theta[j]
                if d != 0.0:
                    q -= gram[j] * d
                    theta[j] = new
                    if abs(d) > inner_delta:
                        inner_delta = abs(d)
            sweeps += 1
            if inner_delta < tol:
                break
    return theta, sweeps


def _kkt_from_q(q: np.ndarray, theta: np.ndarray, lam: float) -> float:
    active = theta != 0.0
    viol = 0.0
    if active.any():
        viol = float(np.abs(q[active] - lam * np.sign(theta[active])).max())
    if (~active).any():
        viol = max(viol, float(max(0.0, np.abs(q[~active]).max() - lam)))
    return viol


def lasso_objective(features: FeatureMatrixBinary, target, coef: np.ndarray, lam: float) -> float:
    """Canonical objective (1/2N) ||X coef - y||^2 + lambda ||coef||_1."""
    y = _target_values(target)
    r = features.values.astype(np.float64) @ np.asarray(coef, dtype=np.float64) - y
    return float((r @ r) / (2.0 * features.n) + lam * np.abs(coef).sum())


def kkt_residual(features: FeatureMatrixBinary, target, fit: LassoFit) -> float:
    """Largest violation of the subgradient optimality conditions.

    For active j, (1/N) X_j . (y - X theta) must equal lam * sign(theta_j);
    for inactive j its magnitude must not exceed lam.
    """
    y = _target_values(target)
    x = features.values.astype(np.float64)
    q = (x.T @ (y - x @ fit.coef)) / features.n
    return _kkt_from_q(q, fit.coef, fit.lam)


def lasso_fit(
    features: FeatureMatrixBinary,
    target,
    lam: float,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
    init: np.ndarray | None = None,
) -> LassoFit:
    """Solve the canonical LASSO at one lambda by cyclic coordinate descent."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    y = _target_values(target)
    gram, corr = _stats(features, y)
    theta = np.zeros(features.p) if init is None else np.array(init, dtype=np.float64)
    if theta.shape != (features.p,):
        raise ValueError("init must have one entry per feature column")
    theta, _ = _cd_solve(gram, corr, lam, theta, tol, max_sweeps)
    fit = LassoFit(
        coef=theta,
        lam=float(lam),
        active_set=tuple(np.flatnonzero(theta).tolist()),
        kkt_residual=0.0,
    )
    _set(fit, kkt_residual=kkt_residual(features, y, fit))
    return fit


def lambda_max(features: FeatureMatrixBinary, target) -> float:
    """Smallest lambda whose solution is exactly zero: || (1/N) X^T y ||_inf."""
    _, corr = _stats(features, _target_values(target))
    return float(np.abs(corr).max())


def regularization_path(
    features: FeatureMatrixBinary,
    target,
    grid_size: int = 100,
    lambda_min_ratio: float = 1e-3,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
    stop_after: int | None = None,
) -> RegPath:
    """Warm-started fits on a geometric grid from lambda_max downward.

    entry_order records each feature's first activation; features activating
    at the same grid point are ordered by larger |coef|, then lower index.
    With `stop_after`, the descent stops early once that many features have
    activated (the remaining grid points are dropped).
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    if not 0.0 < lambda_min_ratio < 1.0:
        raise ValueError("lambda_min_ratio must lie in (0,1)")
    y = _target_values(target)
    gram, corr = _stats(features, y)
    lam_max = float(np.abs(corr).max())
    if lam_max == 0.0:
        raise DataError("no disagreement signal: target is uncorrelated with every feature")

    grid = np.geomspace(lam_max, lam_max * lambda_min_ratio, grid_size)
    grid[0] = lam_max  # exact, so the first fit is all-zero by construction

    theta = np.zeros(features.p)
    fits: list[LassoFit] = []
    entry_order: list[int] = []
    entry_lambdas: list[float] = []
    seen = np.zeros(features.p, dtype=bool)
    lambdas: list[float] = []
    x = features.values.astype(np.float64)
    for lam in grid:
        theta, _ = _cd_solve(gram, corr, float(lam), theta, tol, max_sweeps)
        active = np.flatnonzero(theta)
        q = (x.T @ (y - x @ theta)) / features.n
        fit = LassoFit(
            coef=theta.copy(),
            lam=float(lam),
            active_set=tuple(active.tolist()),
            kkt_residual=_kkt_from_q(q, theta, float(lam)),
        )
        fits.append(fit)
        lambdas.append(float(lam))
        fresh = [int(j) for j in active if not seen[j]]
        fresh.sort(key=lambda j: (-abs(theta[j]), j))
        for j in fresh:
            seen[j] = True
            entry_order.append(j)
            entry_lambdas.append(float(lam))
        if stop_after is not None and len(entry_order) >= stop_after:
            break
    return RegPath(
        lambdas=tuple(lambdas),
        entry_order=tuple(entry_order),
        fits=tuple(fits),
        entry_lambdas=tuple(entry_lambdas),
    )


def select_features(path: RegPath, k: int) -> list[int]:
    """First k features by path entry order (fewer, with a warning, if the
    path never activated k features)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not path.fits:
        raise ValueError("empty regularization path")
    if k > len(path.entry_order):
        warnings.warn(
            f"only {len(path.entry_order)} features activated; requested {k}",
            stacklevel=2,
        )
    return list(path.entry_order[:k])
