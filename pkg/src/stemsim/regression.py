"""Zero-intercept least-squares fitting of per-stem weights.

The model is deliberately minimal: a preference score is a weighted sum of
per-channel cosine differences with no intercept, so a triplet whose
features vanish is predicted as an exact tie no matter what the weights
are. The solvers are written here on top of numpy's orthogonal
least-squares routine rather than delegated to a modeling library, because
this fit is the contract the package exists to pin down.

Two solver routes exist on purpose: the implementation solves via SVD
(rank revealing, numerically stable), while the test suite keeps an
independent normal-equations oracle. The two must agree to a relative
residual of 1e-9 on well-conditioned designs, and every successful fit is
checked against the normal equations before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import (
    ConfigMismatch,
    EmptyDataset,
    InvalidInput,
    SingularSystem,
)
from .validation import as_matrix, as_vector, check_choice, check_non_negative

# condition estimate of the solved normal system above which we refuse to fit
CONDITION_LIMIT = 1e12
# fitted weights must satisfy the normal equations this tightly
NORMAL_RESIDUAL_TOL = 1e-9

METHOD_OLS = "ols"
METHOD_RIDGE = "ridge"
METHODS = (METHOD_OLS, METHOD_RIDGE)


@dataclass(frozen=True)
class DesignMatrix:
    """Stacked triplet features and their preference labels.

    ``F`` has one row per triplet (float64, N x K) and ``y`` holds the
    matching labels, each exactly +1.0 (majority chose A) or -1.0 (B).
    """

    F: np.ndarray
    y: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(self.F.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.F.shape[1])


@dataclass(frozen=True)
class FitConfig:
    """How to fit: the method and, for ridge, the penalty strength.

    ``alpha`` is the L2 penalty (the usual lambda); it is ignored under
    OLS, and ridge with alpha = 0 must reproduce OLS exactly.
    """

    method: str = METHOD_OLS
    alpha: float = 1.0

    def __post_init__(self) -> None:
        check_choice(self.method, "method", METHODS)
        check_non_negative(self.alpha, "alpha")

    @property
    def effective_alpha(self) -> float:
        return float(self.alpha) if self.method == METHOD_RIDGE else 0.0


def build_design(pairs: Iterable[tuple]) -> DesignMatrix:
    """Stack (features, label) pairs into a design matrix, order preserved.

    Args:
        pairs: iterable of (feature vector, label) with labels exactly
            +1 or -1.

    Raises:
        EmptyDataset: no rows.
        ConfigMismatch: feature vectors disagree on length.
        InvalidInput: a label is not exactly +1 or -1, or features are
            not finite numbers.
    """
    rows = list(pairs)
    if not rows:
        raise EmptyDataset("design needs at least one (features, label) row")
    first = as_vector(rows[0][0], "features[0]")
    dim = first.shape[0]
    F = np.empty((len(rows), dim), dtype=np.float64)
    y = np.empty(len(rows), dtype=np.float64)
    for i, (feats, label) in enumerate(rows):
        vec = as_vector(feats, f"features[{i}]")
        if vec.shape[0] != dim:
            raise ConfigMismatch(
                f"features[{i}] has {vec.shape[0]} channels, "
                f"features[0] has {dim}; rows mix stem configurations"
            )
        F[i] = vec
        val = float(label)
        if val not in (1.0, -1.0):
            raise InvalidInput(f"labels[{i}] must be +1 or -1, got {label!r}")
        y[i] = val
    return DesignMatrix(F=F, y=y)


def condition_report(design: DesignMatrix) -> float:
    """Condition estimate of the normal matrix F'F.

    Computed as the squared singular-value ratio of F, which equals the
    2-norm condition number of F'F without ever forming it. Returns inf
    for exactly rank-deficient designs. This is the quantity the
    SingularSystem gate compares against 1e12.
    """
    Fm = as_matrix(design.F, "design.F")
    svals = np.linalg.svd(Fm, compute_uv=False)
    smin = float(svals[-1])
    if smin == 0.0:
        return float("inf")
    ratio = float(svals[0]) / smin
    return ratio * ratio


@dataclass(frozen=True)
class FitResult:
    """Outcome of one weight fit.

    Attributes:
        weights: fitted weight vector, one entry per feature column.
        method: "ols" or "ridge".
        alpha: ridge strength actually applied (0.0 under OLS).
        n_rows: number of design rows consumed.
        condition: condition estimate of the normal system solved.
    """

    weights: np.ndarray
    method: str
    alpha: float
    n_rows: int
    condition: float


def _lstsq_gated(A: np.ndarray, rhs: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    """Solve min ||A w - rhs||, gating on the normal-system condition."""
    w, _, rank, svals = np.linalg.lstsq(A, rhs, rcond=None)
    smin = float(svals[-1]) if svals.size else 0.0
    if smin == 0.0:
        cond = float("inf")
    else:
        ratio = float(svals[0]) / smin
        cond = ratio * ratio
    if rank < A.shape[1] or cond > CONDITION_LIMIT:
        raise SingularSystem(
            f"{what} is rank deficient or ill conditioned "
            f"(rank {rank} of {A.shape[1]}, condition estimate {cond:.3e})",
            condition=cond,
        )
    return w, cond


def _check_normal_equations(
    F: np.ndarray, y: np.ndarray, w: np.ndarray, alpha: float
) -> None:
    """Verify (F'F + alpha I) w = F' y to a 1e-9 relative residual."""
    gram = F.T @ F
    if alpha > 0.0:
        gram = gram + alpha * np.eye(F.shape[1])
    lhs = gram @ w
    rhs = F.T @ y
    denom = max(float(np.linalg.norm(rhs)), 1e-30)
    rel = float(np.linalg.norm(lhs - rhs)) / denom
    if rel > NORMAL_RESIDUAL_TOL:
        raise SingularSystem(
            f"normal-equation residual {rel:.3e} exceeds "
            f"{NORMAL_RESIDUAL_TOL:.0e}; the design is numerically unreliable"
        )


def fit(design: DesignMatrix, cfg: FitConfig) -> FitResult:
    """Fit zero-intercept per-stem weights to preference labels.

    OLS minimizes ||F w - y||^2. Ridge adds an L2 penalty
    alpha ||w||^2, solved exactly as an augmented least-squares problem
    with sqrt(alpha) identity rows appended to F, so ridge with alpha = 0
    takes the OLS code path and returns identical weights.

    Returns:
        FitResult with the fitted weights and the condition estimate of
        the system that was solved.

    Raises:
        SingularSystem: rank-deficient design, condition estimate above
            1e12, or a solution that fails the normal-equation check.
    """
    F, y = design.F, design.y
    alpha = cfg.effective_alpha
    if alpha == 0.0:
        w, cond = _lstsq_gated(F, y, "design")
    else:
        k = F.shape[1]
        A = np.vstack([F, np.sqrt(alpha) * np.eye(k)])
        rhs = np.concatenate([y, np.zeros(k)])
        w, cond = _lstsq_gated(A, rhs, "regularized design")

    _check_normal_equations(F, y, w, alpha)
    return FitResult(
        weights=w,
        method=cfg.method,
        alpha=alpha,
        n_rows=design.n_rows,
        condition=cond,
    )


def fit_weights(
    features,
    labels,
    method: str = METHOD_OLS,
    alpha: float = 1.0,
) -> FitResult:
    """Convenience wrapper: build the design from parallel sequences and fit."""
    feats = list(features)
    labs = list(labels)
    if len(feats) != len(labs):
        raise InvalidInput(
            f"got {len(feats)} feature rows but {len(labs)} labels"
        )
    design = build_design(zip(feats, labs))
    return fit(design, FitConfig(method=method, alpha=alpha))


class StemWeightRegressor(BaseEstimator):
    """Estimator wrapper around :func:`fit`.

    Follows the usual fit/predict protocol so the learner composes with
    standard tooling (cloning, parameter search). Targets are the signed
    preference labels in this package, but any finite real targets are
    accepted; the solver is ordinary least squares either way.
    ``predict`` returns +1 for candidate A, -1 for candidate B, and 0
    for an exact tie.

    Parameters:
        method: "ols" or "ridge".
        alpha: ridge strength, ignored when method is "ols".

    Attributes (after fit):
        coef_: fitted weight vector of shape (n_features,).
        n_features_in_: number of feature columns seen during fit.
        condition_: condition estimate of the solved normal system.
    """

    def __init__(self, method: str = METHOD_OLS, alpha: float = 1.0):
        self.method = method
        self.alpha = alpha

    def fit(self, X, y) -> "StemWeightRegressor":
        Xm = as_matrix(X, "X")
        yv = as_vector(y, "y", dim=Xm.shape[0])
        design = DesignMatrix(F=Xm, y=yv)
        result = _fit_design(design, self.method, self.alpha)
        self.coef_ = result.weights
        self.n_features_in_ = int(result.weights.shape[0])
        self.condition_ = result.condition
        return self

    def _require_fitted(self) -> None:
        check_is_fitted(self, "coef_")

    def decision_function(self, X) -> np.ndarray:
        """Signed preference scores, one per row.

        Each score accumulates weight * feature terms left to right in
        double precision, matching the single-triplet prediction path.
        """
        self._require_fitted()
        Xm = as_matrix(X, "X", n_cols=self.n_features_in_)
        scores = np.empty(Xm.shape[0], dtype=np.float64)
        for i in range(Xm.shape[0]):
            acc = 0.0
            for k in range(Xm.shape[1]):
                acc += float(self.coef_[k]) * float(Xm[i, k])
            scores[i] = acc
        return scores

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return np.sign(scores)


def _fit_design(design: DesignMatrix, method: str, alpha: float) -> FitResult:
    return fit(design, FitConfig(method=method, alpha=alpha))
