"""Generative label models over weak-supervision votes.

Two variants share one likelihood core:

* single-parameter (SP): one accuracy weight phi_j per source, joint density
  proportional to exp(phi . lambda * y) over votes lambda and latent class y;
* augmented: per selected binary feature i, an extra weight row W_i shifts the
  accuracies so that the effective weight for an object with feature row x is
  phi + sum_i x_i W_i.

Because no factor couples two sources, the partition function factorizes:
log Z(phi) = log 2 + sum_j log(2 cosh phi_j + 1), which gives exact O(M)
marginal likelihoods, gradients, and posteriors (no sampling anywhere).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .data import DataError, FeatureMatrixBinary, LabelMatrix, ProbLabelVector, _frozen, _set

LOG2 = float(np.log(2.0))


class FitError(RuntimeError):
    """Optimization produced a non-finite objective."""


@dataclass(frozen=True)
class GenParamsSP:
    """Per-source accuracy weights of the single-parameter model."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        if phi.ndim != 1 or not np.isfinite(phi).all():
            raise ValueError("phi must be a finite vector")
        _set(self, phi=_frozen(phi))

    @property
    def m(self) -> int:
        return self.phi.shape[0]


@dataclass(frozen=True)
class GenParamsAug:
    """Accuracy weights plus per-feature adjustment rows.

    `selected[i]` is the feature-matrix column that carries adjustment row
    `w[i]`; the effective weights for an object with feature row x are
    phi + sum_i x[i] * w[i].
    """

    phi: np.ndarray
    w: np.ndarray
    selected: tuple[int, ...]

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        w = np.asarray(self.w, dtype=np.float64)
        selected = tuple(int(i) for i in self.selected)
        if phi.ndim != 1 or not np.isfinite(phi).all():
            raise ValueError("phi must be a finite vector")
        if w.ndim != 2 or not np.isfinite(w).all():
            raise ValueError("w must be a finite K x M matrix")
        if w.shape[1] != phi.shape[0]:
            raise ValueError("w row length must match phi length")
        if len(selected) != w.shape[0] or len(selected) < 1:
            raise ValueError("selected must name one feature column per w row")
        if len(set(selected)) != len(selected) or min(selected) < 0:
            raise ValueError("selected indices must be distinct and non-negative")
        _set(self, phi=_frozen(phi), w=_frozen(w), selected=selected)

    @property
    def m(self) -> int:
        return self.phi.shape[0]

    @property
    def k(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class FitConfig:
    learning_rate: float = 0.1
    max_iters: int = 2000
    grad_tol: float = 1e-6
    phi_init: float = 0.5
    w_l2: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.w_l2 < 0:
            raise ValueError("w_l2 must be non-negative")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


# -- numerically stable scalar kernels (vectorized) -------------------------


def _log_2cosh(z: np.ndarray) -> np.ndarray:
    # log(2 cosh z) = |z| + log1p(exp(-2|z|))
    a = np.abs(z)
    return a + np.log1p(np.exp(-2.0 * a))


def _log_2cosh_plus_1(z: np.ndarray) -> np.ndarray:
    # log(2 cosh z + 1) = |z| + log1p(exp(-|z|) + exp(-2|z|))
    a = np.abs(z)
    e = np.exp(-a)
    return a + np.log1p(e + e * e)


def _dlog_2cosh_plus_1(z: np.ndarray) -> np.ndarray:
    # d/dz log(2 cosh z + 1) = 2 sinh z / (2 cosh z + 1)
    a = np.abs(z)
    e = np.exp(-a)
    return np.sign(z) * (1.0 - e * e) / (1.0 + e + e * e)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


# -- shared evaluation core ---------------------------------------------------
# The SP evaluators run on a broadcast view of phi so that the augmented model
# with W = 0 reproduces them bit for bit (same elementwise ops, same
# reduction order).


def _scores_rows(phi_rows: np.ndarray, lam: np.ndarray) -> np.ndarray:
    # phi_rows: N x M (possibly broadcast), lam: M x N
    return (lam.T * phi_rows).sum(axis=1)


def _per_object_loglik(phi_rows: np.ndarray, lam: np.ndarray) -> np.ndarray:
    scores = _scores_rows(phi_rows, lam)
    log_z = LOG2 + _log_2cosh_plus_1(phi_rows).sum(axis=1)
    return _log_2cosh(scores) - log_z


# -- single-parameter model --------------------------------------------------


def log_partition_sp(params: GenParamsSP) -> float:
    """Closed-form log Z: sum over all vote/class states factorizes per source."""
    return float(LOG2 + _log_2cosh_plus_1(params.phi).sum())


def _check_m(params_m: int, labels: LabelMatrix) -> None:
    if params_m != labels.m:
        raise ValueError(f"parameter count {params_m} != source count {labels.m}")


def marginal_loglik_sp(params: GenParamsSP, labels: LabelMatrix) -> float:
    """Mean per-object log-likelihood of the observed votes, class summed out."""
    _check_m(params.m, labels)
    lam = labels.votes.astype(np.float64)
    phi_rows = np.broadcast_to(params.phi, (labels.n, params.m))
    return float(_per_object_loglik(phi_rows, lam).mean())


def grad_marginal_sp(params: GenParamsSP, labels: LabelMatrix) -> np.ndarray:
    """Analytic gradient of marginal_loglik_sp with respect to phi."""
    _check_m(params.m, labels)
    lam = labels.votes.astype(np.float64)
    t = np.tanh(params.phi @ lam)
    return (lam @ t) / labels.n - _dlog_2cosh_plus_1(params.phi)


def fit_sp(labels: LabelMatrix, config: FitConfig = FitConfig()) -> GenParamsSP:
    """Full-batch gradient ascent on the marginal likelihood.

    Sources with no votes at all keep phi_j at phi_init (their gradient is
    masked) so column indices stay stable across pipeline iterations.  The
    returned parameters are the best-scoring iterate, hence never worse than
    the initialization.
    """
    lam = labels.votes.astype(np.float64)
    votes_seen = (labels.votes != 0).any(axis=1)
    phi = np.full(labels.m, config.phi_init, dtype=np.float64)

    def loglik(p: np.ndarray) -> float:
        return float(_log_2cosh(p @ lam).mean() - LOG2 - _log_2cosh_plus_1(p).sum())

    best_ll, best_phi = loglik(phi), phi.copy()
    for it in range(config.max_iters):
        t = np.tanh(phi @ lam)
        grad = (lam @ t) / labels.n - _dlog_2cosh_plus_1(phi)
        grad[~votes_seen] = 0.0
        if np.abs(grad).max() < config.grad_tol:
            break
        phi = phi + config.learning_rate * grad
        ll = loglik(phi)
        if not np.isfinite(ll):
            raise FitError(f"non-finite marginal likelihood at iteration {it + 1}")
        if ll > best_ll:
            best_ll, best_phi = ll, phi.copy()
    return GenParamsSP(best_phi)


def posterior_sp(params: GenParamsSP, vote_column: np.ndarray) -> float:
    """P(Y = +1 | votes) = sigmoid(2 phi . votes)."""
    lam = np.asarray(vote_column, dtype=np.float64)
    if lam.shape != params.phi.shape:
        raise ValueError("vote column length must match parameter count")
    if not np.isin(lam, (-1.0, 0.0, 1.0)).all():
        raise DataError("vote entries must lie in {-1,0,+1}")
    return float(_sigmoid(2.0 * float(params.phi @ lam)))


def label_sp(params: GenParamsSP, labels: LabelMatrix) -> ProbLabelVector:
    """Expected label E[Y | votes] = tanh(phi . votes) per object."""
    _check_m(params.m, labels)
    lam = labels.votes.astype(np.float64)
    phi_rows = np.broadcast_to(params.phi, (labels.n, params.m))
    return ProbLabelVector(np.tanh(_scores_rows(phi_rows, lam)))


# -- augmented model ---------------------------------------------------------


def effective_phi(params: GenParamsAug, feature_row: np.ndarray) -> np.ndarray:
    """Per-object effective weights phi + sum_i x_i W_i."""
    x = np.asarray(feature_row, dtype=np.float64)
    if x.shape != (params.k,):
        raise ValueError(f"feature row must have length {params.k}")
    if not np.isin(x, (-1.0, 1.0)).all():
        raise DataError("feature row entries must lie in {-1,+1}")
    return params.phi + x @ params.w


def _check_selected(params: GenParamsAug, features: FeatureMatrixBinary) -> np.ndarray:
    if max(params.selected) >= features.p:
        raise IndexError(
            f"selected feature index {max(params.selected)} out of range for "
            f"{features.p} columns"
        )
    return features.values[:, list(params.selected)].astype(np.float64)


def _phi_eff_all(params: GenParamsAug, features: FeatureMatrixBinary) -> np.ndarray:
    return params.phi[None, :] + _check_selected(params, features) @ params.w


def marginal_loglik_aug(
    params: GenParamsAug,
    labels: LabelMatrix,
    features: FeatureMatrixBinary,
    w_l2: float = 0.0,
) -> float:
    """Mean conditional log-likelihood of votes given features, minus the
    (w_l2 / 2) * ||W||^2 penalty.

    The family is fit conditionally on the features: each object uses the SP
    likelihood evaluated at its own effective weights.
    """
    _check_m(params.m, labels)
    phi_eff = _phi_eff_all(params, features)  # N x M
    lam = labels.votes.astype(np.float64)
    penalty = 0.5 * w_l2 * float((params.w**2).sum())
    return float(_per_object_loglik(phi_eff, lam).mean() - penalty)


def grad_marginal_aug(
    params: GenParamsAug,
    labels: LabelMatrix,
    features: FeatureMatrixBinary,
    w_l2: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of marginal_loglik_aug with respect to (phi, w).

    The w gradient is the per-object phi gradient weighted by the object's
    feature value, minus the penalty term.
    """
    _check_m(params.m, labels)
    x_sel = _check_selected(params, features)
    phi_eff = params.phi[None, :] + x_sel @ params.w
    lam = labels.votes.astype(np.float64)
    t = np.tanh(np.einsum("om,mo->o", phi_eff, lam))
    base = lam.T * t[:, None] - _dlog_2cosh_plus_1(phi_eff)  # N x M
    grad_phi = base.mean(axis=0)
    grad_w = (x_sel.T @ base) / labels.n - w_l2 * params.w
    return grad_phi, grad_w


def fit_aug(
    labels: LabelMatrix,
    features: FeatureMatrixBinary,
    selected: Sequence[int],
    config: FitConfig = FitConfig(),
) -> GenParamsAug:
    """Joint gradient ascent on (phi, W); phi starts at phi_init, W at zero."""
    selected = tuple(int(i) for i in selected)
    if not selected:
        raise ValueError("selected must be non-empty")
    if len(set(selected)) != len(selected):
        raise ValueError("selected indices must be distinct")
    if min(selected) < 0 or max(selected) >= features.p:
        raise IndexError(f"selected indices out of range for {features.p} columns")
    if features.n != labels.n:
        raise ValueError("labels and features disagree on object count")

    lam = labels.votes.astype(np.float64)
    x_sel = features.values[:, list(selected)].astype(np.float64)
    votes_seen = (labels.votes != 0).any(axis=1)
    n, k = labels.n, len(selected)
    phi = np.full(labels.m, config.phi_init, dtype=np.float64)
    w = np.zeros((k, labels.m), dtype=np.float64)

    def objective(p: np.ndarray, ww: np.ndarray) -> float:
        phi_eff = p[None, :] + x_sel @ ww
        scores = np.einsum("om,mo->o", phi_eff, lam)
        log_z = LOG2 + _log_2cosh_plus_1(phi_eff).sum(axis=1)
        return float((_log_2cosh(scores) - log_z).mean() - 0.5 * config.w_l2 * (ww**2).sum())

    best = (objective(phi, w), phi.copy(), w.copy())
    for it in range(config.max_iters):
        phi_eff = phi[None, :] + x_sel @ w
        t = np.tanh(np.einsum("om,mo->o", phi_eff, lam))
        base = lam.T * t[:, None] - _dlog_2cosh_plus_1(phi_eff)
        grad_phi = base.mean(axis=0)
        grad_w = (x_sel.T @ base) / n - config.w_l2 * w
        grad_phi[~votes_seen] = 0.0
        grad_w[:, ~votes_seen] = 0.0
        if max(np.abs(grad_phi).max(), np.abs(grad_w).max()) < config.grad_tol:
            break
        phi = phi + config.learning_rate * grad_phi
        w = w + config.learning_rate * grad_w
        obj = objective(phi, w)
        if not np.isfinite(obj):
            raise FitError(f"non-finite penalized likelihood at iteration {it + 1}")
        if obj > best[0]:
            best = (obj, phi.copy(), w.copy())
    return GenParamsAug(phi=best[1], w=best[2], selected=selected)


def label_aug(
    params: GenParamsAug, labels: LabelMatrix, features: FeatureMatrixBinary
) -> ProbLabelVector:
    """Expected label tanh(phi_eff(x_o) . votes_o) per object."""
    _check_m(params.m, labels)
    if features.n != labels.n:
        raise ValueError("labels and features disagree on object count")
    phi_eff = _phi_eff_all(params, features)
    scores = _scores_rows(phi_eff, labels.votes.astype(np.float64))
    return ProbLabelVector(np.tanh(scores))


# -- exhaustive-enumeration oracle -------------------------------------------


@dataclass(frozen=True)
class JointTable:
    """Exact joint distribution over all (vote vector, class) states."""

    vote_states: np.ndarray  # S x M
    class_states: np.ndarray  # S
    probs: np.ndarray  # S, sums to 1
    log_z: float

    def marginal_prob(self, vote_column: np.ndarray) -> float:
        """P(votes = vote_column), class summed out."""
        mask = (self.vote_states == np.asarray(vote_column)).all(axis=1)
        return float(self.probs[mask].sum())

    def posterior_positive(self, vote_column: np.ndarray) -> float:
        """P(Y = +1 | votes = vote_column)."""
        mask = (self.vote_states == np.asarray(vote_column)).all(axis=1)
        joint = self.probs[mask]
        pos = self.probs[mask & (self.class_states == 1)]
        return float(pos.sum() / joint.sum())

    def expected_label(self, vote_column: np.ndarray) -> float:
        return 2.0 * self.posterior_positive(vote_column) - 1.0


def brute_force_joint(phi_eff: np.ndarray) -> JointTable:
    """Enumerate all 2 * 3^M states of the model with weights phi_eff.

    Test oracle: every closed-form quantity (partition, marginals,
    posteriors) is recoverable from the table.  M is capped at 8.
    """
    phi_eff = np.asarray(phi_eff, dtype=np.float64)
    m = phi_eff.shape[0]
    if m > 8:
        raise ValueError(f"enumeration over 2 * 3^{m} states is too large (M <= 8)")
    votes = np.array(list(itertools.product((-1, 0, 1), repeat=m)), dtype=np.float64)
    votes = np.repeat(votes, 2, axis=0)
    ys = np.tile(np.array([-1.0, 1.0]), 3**m)
    weights = np.exp((votes @ phi_eff) * ys)
    z = weights.sum()
    return JointTable(
        vote_states=_frozen(votes.astype(np.int8)),
        class_states=_frozen(ys.astype(np.int8)),
        probs=_frozen(weights / z),
        log_z=float(np.log(z)),
    )


# -- serialization -----------------------------------------------------------


def params_to_dict(params: GenParamsSP | GenParamsAug, config: FitConfig | None = None) -> dict:
    if isinstance(params, GenParamsAug):
        body = {
            "phi": params.phi.tolist(),
            "w": params.w.tolist(),
            "selected": list(params.selected),
        }
    else:
        body = {"phi": params.phi.tolist(), "w": [], "selected": []}
    body["config"] = {} if config is None else {
        "learning_rate": config.learning_rate,
        "max_iters": config.max_iters,
        "grad_tol": config.grad_tol,
        "phi_init": config.phi_init,
        "w_l2": config.w_l2,
        "seed": config.seed,
    }
    return body


def params_from_dict(d: dict) -> GenParamsSP | GenParamsAug:
    phi = np.asarray(d["phi"], dtype=np.float64)
    if d.get("selected"):
        return GenParamsAug(phi=phi, w=np.asarray(d["w"], dtype=np.float64),
                            selected=tuple(d["selected"]))
    return GenParamsSP(phi=phi)


def save_params(params: GenParamsSP | GenParamsAug, writer: TextIO,
                config: FitConfig | None = None) -> None:
    json.dump(params_to_dict(params, config), writer, indent=2, sort_keys=True)
    writer.write("\n")


def load_params(reader: TextIO) -> GenParamsSP | GenParamsAug:
    return params_from_dict(json.load(reader))
