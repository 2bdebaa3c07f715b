"""Empirical evaluation of the sparse-recovery conditions for the difference
model: incoherence, dependence, relevance, and irrelevance slack, plus the
recommended lambda and the sample-size bound they imply.

All expectations are replaced by plug-in sample averages over the provided
data; the quantities are reported as empirical estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DataError
from .diffmodel import DisagreementVector, _target_values


def matrix_inf_norm(a: np.ndarray) -> float:
    """Operator infinity norm: maximum absolute row sum."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    return float(np.abs(a).sum(axis=1).max())


def vector_inf_norm(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=np.float64)
    return float(np.abs(v).max()) if v.size else 0.0


@dataclass(frozen=True)
class ConditionReport:
    alpha: float
    beta: float
    gamma: float
    c: float
    sigma_ss: np.ndarray
    sigma_s_sbar: np.ndarray
    sigma_ss_cond: float
    satisfied: dict[str, bool]
    recommended_lambda: float | None
    n_bound: int | None
    delta: float

    @property
    def all_satisfied(self) -> bool:
        return all(self.satisfied.values())

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "c": self.c,
            "sigma_ss": self.sigma_ss.tolist(),
            "sigma_s_sbar": self.sigma_s_sbar.tolist(),
            "sigma_ss_cond": self.sigma_ss_cond,
            "satisfied": dict(self.satisfied),
            "recommended_lambda": self.recommended_lambda,
            "n_bound": self.n_bound,
            "delta": self.delta,
        }


def compute_sigmas(x_s: np.ndarray, x_sbar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample second-moment blocks (1/N) X_S^T X_S and (1/N) X_S^T X_Sbar.

    Raises when the relevant block is numerically singular, reporting the
    smallest singular value.
    """
    x_s = np.asarray(x_s, dtype=np.float64)
    x_sbar = np.asarray(x_sbar, dtype=np.float64)
    if x_s.ndim != 2 or x_s.shape[1] < 1:
        raise ValueError("x_s must be an N x K matrix with K >= 1")
    n = x_s.shape[0]
    if x_sbar.shape[0] != n:
        raise ValueError("x_s and x_sbar must have the same row count")
    sigma_ss = (x_s.T @ x_s) / n
    sigma_s_sbar = (x_s.T @ x_sbar) / n
    svals = np.linalg.svd(sigma_ss, compute_uv=False)
    if svals[-1] <= 1e-12 * max(1.0, svals[0]):
        raise DataError(
            f"singular relevant-feature second-moment matrix; smallest singular "
            f"value {svals[-1]:.3e}"
        )
    return sigma_ss, sigma_s_sbar


def sample_bound(beta: float, gamma: float, c: float, p: int, delta: float) -> int:
    """Objects needed for recovery with probability at least 1 - delta:
    ceil(max(8 beta^4 / gamma^2, 32) / c^2 * log(4 P / delta))."""
    if gamma <= 0 or c <= 0:
        raise ValueError("conditions unsatisfied: gamma and c must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0,1)")
    if p < 1:
        raise ValueError("p must be at least 1")
    return math.ceil(max(8.0 * beta**4 / gamma**2, 32.0) / c**2 * math.log(4.0 * p / delta))


def recommended_lambda(alpha: float, beta: float, gamma: float, c: float) -> float:
    """The theory's canonical-scale regularizer gamma/beta - c/alpha."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    lam = gamma / beta - c / alpha
    if lam <= 0:
        raise ValueError("no admissible lambda; conditions too weak")
    return lam


def check_conditions(
    x_s: np.ndarray,
    x_sbar: np.ndarray,
    target: DisagreementVector | np.ndarray,
    delta: float = 0.05,
) -> ConditionReport:
    """Plug-in estimates of the recovery conditions on the given split.

    alpha is the incoherence slack 1 - ||Sigma_SbarS Sigma_SS^-1||_inf, beta
    the dependence bound ||Sigma_SS^-1||_inf, gamma the smallest rescaled
    correlation of a relevant feature with the target, and c the irrelevance
    slack alpha*gamma/beta minus the largest correlation of an irrelevant
    feature with the least-squares residual of the target on x_s.
    """
    y = _target_values(target)
    x_s = np.asarray(x_s, dtype=np.float64)
    x_sbar = np.asarray(x_sbar, dtype=np.float64)
    n = x_s.shape[0]
    if y.shape != (n,):
        raise ValueError("target length must match feature rows")
    sigma_ss, sigma_s_sbar = compute_sigmas(x_s, x_sbar)
    svals = np.linalg.svd(sigma_ss, compute_uv=False)
    inv = np.linalg.inv(sigma_ss)

    alpha = 1.0 - matrix_inf_norm(sigma_s_sbar.T @ inv) if x_sbar.shape[1] else 1.0
    beta = matrix_inf_norm(inv)
    gamma = float(np.abs(inv @ (x_s.T @ y / n)).min())

    # least-squares residual avoids forming the N x N projector
    coef, *_ = np.linalg.lstsq(x_s, y, rcond=None)
    resid = y - x_s @ coef
    resid_corr = vector_inf_norm(x_sbar.T @ resid / n) if x_sbar.shape[1] else 0.0
    c = alpha * gamma / beta - resid_corr

    satisfied = {
        "incoherence": bool(alpha > 0),
        "relevance": bool(gamma > 0),
        "irrelevance": bool(c > 0),
    }
    p_total = x_s.shape[1] + x_sbar.shape[1]
    try:
        rec_lam: float | None = recommended_lambda(alpha, beta, gamma, c)
    except ValueError:
        rec_lam = None
    try:
        n_bound: int | None = sample_bound(beta, gamma, c, p_total, delta)
    except ValueError:
        n_bound = None
    return ConditionReport(
        alpha=float(alpha),
        beta=float(beta),
        gamma=gamma,
        c=float(c),
        sigma_ss=sigma_ss,
        sigma_s_sbar=sigma_s_sbar,
        sigma_ss_cond=float(svals[0] / svals[-1]),
        satisfied=satisfied,
        recommended_lambda=rec_lam,
        n_bound=n_bound,
        delta=float(delta),
    )
