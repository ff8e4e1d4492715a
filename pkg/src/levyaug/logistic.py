"""Multiclass ridge logistic regression on pseudo-examples.

The trained object is a coefficient matrix ``beta`` of shape (p, K) whose
column k scores class k; the per-example loss is

    loss(beta; x, y) = log sum_k exp(beta_k . phi(x)) - beta_y . phi(x),

and fitting minimizes the *average* loss over pseudo-examples plus the
ridge penalty ``lambda/2 * ||beta||_F^2``.  The coefficient matrix is kept
in the centered gauge (columns sum to zero featurewise), which the ridge
penalty already selects among the loss-equivalent shifts.

The regularization weight can be cross-validated on a descending grid of
lambdas with *grouped* folds: every pseudo-example derived from one
original lands in the same fold, so held-out scores are not contaminated
by siblings of the training copies.

Calibration refits one common scale and per-class intercepts on the
original (unthinned) examples while keeping the fitted directions, which
compensates for the coefficient shrinkage/inflation thinning induces.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .errors import (
    DataFormatError,
    DegenerateDataError,
    OptimizationError,
    ParameterError,
    ShapeError,
)
from .families import Example, FamilyKind, LevyFamily, PseudoExample

__all__ = [
    "FeatureMap",
    "LogisticModel",
    "TrainConfig",
    "FitReport",
    "logistic_loss",
    "loss_gradient",
    "fit_logistic",
    "fit_logistic_detailed",
    "calibrate",
    "predict",
    "grouped_fold_assignment",
    "default_lambda_grid",
    "save_model",
    "load_model",
]

_SCALE_CAP = 1e3


class FeatureMap(enum.Enum):
    """phi: identity on vectors, row-major flattening on symmetric matrices."""

    IDENTITY = "identity"
    FLATTEN_SYMMETRIC = "flatten_symmetric"


def apply_feature_map(fm: FeatureMap, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if fm is FeatureMap.IDENTITY:
        if arr.ndim != 1:
            raise ShapeError(f"identity feature map expects a vector, got shape {arr.shape}")
        return arr
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"matrix feature map expects a square matrix, got shape {arr.shape}")
    return arr.reshape(-1)


def center_columns(beta: np.ndarray) -> np.ndarray:
    """Project onto the gauge sum_k beta[:, k] = 0."""
    return beta - beta.mean(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class LogisticModel:
    """Fitted coefficients plus calibration state.

    ``beta`` must be in the centered gauge.  An uncalibrated model has
    ``calib_c = 0`` and ``calib_scale = 1``; prediction always scores
    ``calib_scale * beta_k . phi(x) + calib_c[k]``.
    """

    beta: np.ndarray
    calib_c: np.ndarray | None = None
    calib_scale: float = 1.0
    feature_map: FeatureMap = FeatureMap.IDENTITY

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float)
        if beta.ndim != 2 or beta.shape[1] < 2:
            raise ShapeError("beta must be a p x K matrix with K >= 2")
        gauge = np.abs(beta.sum(axis=1)).max()
        if gauge > 1e-8:
            raise ParameterError(
                f"beta violates the centered gauge (max column-sum {gauge:.3e})"
            )
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        c = self.calib_c
        c = np.zeros(beta.shape[1]) if c is None else np.array(c, dtype=float)
        if c.shape != (beta.shape[1],):
            raise ShapeError("calib_c must have one entry per class")
        c.setflags(write=False)
        object.__setattr__(self, "calib_c", c)
        # A binary recalibration slope may legitimately come out negative;
        # for K > 2 the common scale is constrained nonnegative.
        if self.calib_scale < 0.0 and beta.shape[1] > 2:
            raise ParameterError("calib_scale must be nonnegative for K > 2 models")

    @property
    def n_features(self) -> int:
        return self.beta.shape[0]

    @property
    def n_classes(self) -> int:
        return self.beta.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Fitting knobs.

    ``ridge_lambda`` may be a single value (no CV), an explicit grid
    (normalized to descending order), or None for the default grid of 50
    log-spaced values spanning a 1e4 range below the gradient scale of the
    unpenalized loss at beta = 0.  ``cv_rule`` selects lambda by mean
    held-out log-loss ("loss", default) or by held-out error rate
    ("accuracy").
    """

    ridge_lambda: float | tuple[float, ...] | None = None
    n_folds: int = 5
    tol: float = 1e-7
    max_iter: int = 500
    cv_rule: str = "loss"

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ParameterError("tolerance must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be >= 1")
        if self.n_folds < 2:
            raise ParameterError("n_folds must be >= 2")
        if self.cv_rule not in ("loss", "accuracy"):
            raise ParameterError(f"unknown cv_rule {self.cv_rule!r}")
        lam = self.ridge_lambda
        if lam is None:
            return
        if np.isscalar(lam):
            if lam < 0.0:
                raise ParameterError("ridge_lambda must be nonnegative")
            return
        grid = tuple(sorted((float(v) for v in lam), reverse=True))
        if len(grid) == 0 or grid[-1] < 0.0:
            raise ParameterError("lambda grid must be nonempty and nonnegative")
        object.__setattr__(self, "ridge_lambda", grid)


@dataclass(frozen=True)
class FitReport:
    """What the fit did: the lambda finally used, the per-lambda CV table
    (lambda, mean held-out loss, mean held-out error), and the final
    gradient max-norm."""

    chosen_lambda: float
    cv_table: tuple[tuple[float, float, float], ...]
    grad_max_norm: float


# --------------------------------------------------------------------------
# Loss and gradient
# --------------------------------------------------------------------------

def logistic_loss(beta: np.ndarray, x: np.ndarray, y: int) -> float:
    """Multiclass log-loss of a single (features, label) pair."""
    scores = np.asarray(x, dtype=float) @ np.asarray(beta, dtype=float)
    return float(logsumexp(scores) - scores[y - 1])


def loss_gradient(beta: np.ndarray, x: np.ndarray, y: int) -> np.ndarray:
    """d loss / d beta, a p x K matrix: (softmax_k - 1{k=y}) outer phi(x)."""
    beta = np.asarray(beta, dtype=float)
    x = np.asarray(x, dtype=float)
    scores = x @ beta
    p = np.exp(scores - logsumexp(scores))
    p[y - 1] -= 1.0
    return np.outer(x, p)


def _batch_loss_grad(beta, X, Y, lam):
    """Average loss + ridge and its gradient over a design matrix."""
    n = X.shape[0]
    scores = X @ beta
    lse = logsumexp(scores, axis=1)
    value = (lse - scores[np.arange(n), Y - 1]).mean() + 0.5 * lam * (beta**2).sum()
    p = np.exp(scores - lse[:, None])
    p[np.arange(n), Y - 1] -= 1.0
    grad = X.T @ p / n + lam * beta
    return value, grad


def _heldout_metrics(beta, X, Y):
    n = X.shape[0]
    scores = X @ beta
    lse = logsumexp(scores, axis=1)
    loss = float((lse - scores[np.arange(n), Y - 1]).mean())
    err = float((np.argmax(scores, axis=1) + 1 != Y).mean())
    return loss, err


def _minimize_lbfgs(fun_grad, x0: np.ndarray, tol: float, max_iter: int, what: str):
    shape = x0.shape

    def flat(v):
        value, grad = fun_grad(v.reshape(shape))
        return value, grad.ravel()

    res = minimize(
        flat,
        x0.ravel(),
        jac=True,
        method="L-BFGS-B",
        options=dict(maxiter=max_iter, maxfun=20 * max_iter, gtol=0.1 * tol, ftol=0.0),
    )
    sol = res.x.reshape(shape)
    grad_norm = float(np.abs(fun_grad(sol)[1]).max())
    if grad_norm > tol:
        raise OptimizationError(
            f"{what} did not converge within {max_iter} iterations "
            f"(gradient max-norm {grad_norm:.3e} > tol {tol:.1e})",
            grad_norm=grad_norm,
        )
    return sol, grad_norm


# --------------------------------------------------------------------------
# Fitting
# --------------------------------------------------------------------------

def _design(pseudo, feature_map=None):
    if len(pseudo) == 0:
        raise DegenerateDataError("no pseudo-examples to fit on")
    first = np.asarray(pseudo[0].x_tilde)
    if feature_map is None:
        feature_map = FeatureMap.FLATTEN_SYMMETRIC if first.ndim == 2 else FeatureMap.IDENTITY
    X = np.stack([apply_feature_map(feature_map, pe.x_tilde) for pe in pseudo])
    Y = np.array([pe.y for pe in pseudo], dtype=np.int64)
    groups = np.array([pe.origin_id for pe in pseudo], dtype=np.int64)
    return X, Y, groups, feature_map


def _check_classes(Y: np.ndarray) -> int:
    k = int(Y.max())
    present = np.unique(Y)
    missing = sorted(set(range(1, k + 1)) - set(present.tolist()))
    if missing:
        raise DegenerateDataError(f"no examples for class label(s) {missing}")
    return k


def default_lambda_grid(X: np.ndarray, Y: np.ndarray, n_values: int = 50, span: float = 1e-4):
    """Descending log-spaced grid anchored at the max-norm of the
    unpenalized average-loss gradient at beta = 0."""
    k = int(Y.max())
    n = X.shape[0]
    p0 = np.full((n, k), 1.0 / k)
    p0[np.arange(n), Y - 1] -= 1.0
    lam_max = float(np.abs(X.T @ p0 / n).max())
    if lam_max <= 0.0:
        lam_max = 1.0
    return tuple(np.geomspace(lam_max, lam_max * span, n_values).tolist())


def grouped_fold_assignment(groups: np.ndarray, n_folds: int) -> np.ndarray:
    """Fold index per row; every row sharing a group id shares a fold."""
    uniq = np.unique(groups)
    if len(uniq) < n_folds:
        raise DegenerateDataError(
            f"{n_folds}-fold CV needs at least {n_folds} distinct origins, got {len(uniq)}"
        )
    fold_of = {g: i % n_folds for i, g in enumerate(uniq.tolist())}
    folds = np.array([fold_of[g] for g in groups.tolist()], dtype=np.int64)
    for f in range(n_folds):
        train_groups = set(groups[folds != f].tolist())
        test_groups = set(groups[folds == f].tolist())
        assert not (train_groups & test_groups)
    return folds


def _fit_path(X, Y, k, lambdas, tol, max_iter, beta0=None):
    """Fit the descending lambda path with warm starts; yields (lam, beta)."""
    beta = np.zeros((X.shape[1], k)) if beta0 is None else beta0.copy()
    out = []
    for lam in lambdas:
        beta, _ = _minimize_lbfgs(
            lambda b: _batch_loss_grad(b, X, Y, lam),
            beta,
            tol,
            max_iter,
            f"logistic fit at lambda={lam:.4g}",
        )
        out.append((lam, beta.copy()))
    return out


def fit_logistic_detailed(
    pseudo: list[PseudoExample],
    cfg: TrainConfig,
    feature_map: FeatureMap | None = None,
) -> tuple[LogisticModel, FitReport]:
    """Fit, with the CV table and convergence diagnostics alongside."""
    X, Y, groups, feature_map = _design(pseudo, feature_map)
    k = _check_classes(Y)
    lam_cfg = cfg.ridge_lambda
    if lam_cfg is not None and np.isscalar(lam_cfg):
        lambdas = (float(lam_cfg),)
    elif lam_cfg is None:
        lambdas = default_lambda_grid(X, Y)
    else:
        lambdas = lam_cfg

    cv_table: tuple[tuple[float, float, float], ...] = ()
    if len(lambdas) == 1:
        chosen = lambdas[0]
    else:
        folds = grouped_fold_assignment(groups, cfg.n_folds)
        scores = np.zeros((len(lambdas), 2, cfg.n_folds))
        for f in range(cfg.n_folds):
            mask = folds != f
            if len(np.unique(Y[mask])) < k:
                raise DegenerateDataError(f"fold {f} lost a class; use fewer folds")
            path = _fit_path(X[mask], Y[mask], k, lambdas, cfg.tol, cfg.max_iter)
            for j, (_, beta) in enumerate(path):
                scores[j, :, f] = _heldout_metrics(beta, X[~mask], Y[~mask])
        mean_loss = scores[:, 0, :].mean(axis=1)
        mean_err = scores[:, 1, :].mean(axis=1)
        cv_table = tuple(
            (lam, float(l), float(e)) for lam, l, e in zip(lambdas, mean_loss, mean_err)
        )
        crit = mean_loss if cfg.cv_rule == "loss" else mean_err
        chosen = lambdas[int(np.argmin(crit))]

    path = _fit_path(
        X, Y, k, [lam for lam in lambdas if lam >= chosen], cfg.tol, cfg.max_iter
    )
    beta = path[-1][1]
    _, grad = _batch_loss_grad(beta, X, Y, chosen)
    model = LogisticModel(beta=center_columns(beta), feature_map=feature_map)
    report = FitReport(
        chosen_lambda=float(chosen),
        cv_table=cv_table,
        grad_max_norm=float(np.abs(grad).max()),
    )
    return model, report


def fit_logistic(
    pseudo: list[PseudoExample],
    cfg: TrainConfig,
    feature_map: FeatureMap | None = None,
) -> LogisticModel:
    """Ridge-penalized multiclass logistic fit on pseudo-examples.

    If the config carries a lambda grid, lambda is chosen by grouped
    k-fold cross-validation (all copies of one origin share a fold).
    Raises :class:`OptimizationError` when the gradient max-norm cannot be
    brought under ``cfg.tol`` and :class:`DegenerateDataError` when some
    class has no examples.
    """
    return fit_logistic_detailed(pseudo, cfg, feature_map)[0]


# --------------------------------------------------------------------------
# Calibration and prediction
# --------------------------------------------------------------------------

def _examples_design(originals: list[Example], feature_map: FeatureMap):
    X = np.stack([apply_feature_map(feature_map, ex.x) for ex in originals])
    Y = np.array([ex.y for ex in originals], dtype=np.int64)
    return X, Y


def calibrate(
    model: LogisticModel,
    originals: list[Example],
    tol: float = 1e-9,
    max_iter: int = 500,
) -> LogisticModel:
    """Refit scale and intercepts on uncorrupted originals.

    Keeps the fitted directions and minimizes the multiclass log-loss of
    ``s * beta_k . phi(x) + c_k`` over the common scale ``s`` and centered
    intercepts ``c``.  For two classes this is exactly a univariate
    logistic regression of the label on the fitted score.  A separable
    calibration set would send ``s`` to infinity; the scale is capped at
    1e3 (with a warning) instead.
    """
    if len(originals) == 0:
        raise DegenerateDataError("calibration needs at least one original example")
    X, Y = _examples_design(originals, model.feature_map)
    k = model.n_classes
    if int(Y.max()) > k:
        raise ShapeError("calibration data contains labels beyond the model's classes")
    _check_classes(Y)
    U = X @ model.beta  # per-class raw scores
    counts = np.bincount(Y, minlength=k + 1)[1:].astype(float)

    centered = U - U.mean(axis=1, keepdims=True)
    if np.ptp(centered) < 1e-12:
        # Degenerate scores carry no information: scale 0, intercepts from
        # class frequencies.
        c = np.log(counts / counts.sum())
        return LogisticModel(
            beta=model.beta,
            calib_c=c - c.mean(),
            calib_scale=0.0,
            feature_map=model.feature_map,
        )

    n = X.shape[0]
    idx = np.arange(n)

    def fun_grad(params):
        s = params[0]
        c = np.concatenate([params[1:], [0.0]])
        scores = s * U + c
        lse = logsumexp(scores, axis=1)
        value = float((lse - scores[idx, Y - 1]).mean())
        p = np.exp(scores - lse[:, None])
        p[idx, Y - 1] -= 1.0
        gs = float((p * U).sum() / n)
        gc = p.mean(axis=0)[:-1]
        return value, np.concatenate([[gs], gc])

    x0 = np.zeros(k)
    x0[0] = 1.0
    lo = -_SCALE_CAP if k == 2 else 0.0
    bounds = [(lo, _SCALE_CAP)] + [(None, None)] * (k - 1)
    res = minimize(
        fun_grad,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options=dict(maxiter=max_iter, gtol=0.1 * tol, ftol=0.0),
    )
    s = float(res.x[0])
    # Perfect separation sends the slope to infinity; the bounds already
    # cap it at 1e3, and a (near-)zero refit loss flags the pathology.
    if res.fun < 1e-6 or abs(s) >= _SCALE_CAP * (1.0 - 1e-9):
        warnings.warn(
            "calibration data is (near-)separable; the fitted scale is not stable",
            RuntimeWarning,
            stacklevel=2,
        )
        s = float(np.clip(s, -_SCALE_CAP, _SCALE_CAP))
    c = np.concatenate([res.x[1:], [0.0]])
    c = c - c.mean()
    if k > 2:
        s = max(s, 0.0)
    return LogisticModel(
        beta=model.beta, calib_c=c, calib_scale=s, feature_map=model.feature_map
    )


def predict(model: LogisticModel, x) -> tuple[int, np.ndarray]:
    """Label (1-based, ties to the smallest index) and class probabilities."""
    phi = apply_feature_map(model.feature_map, x)
    if phi.shape[0] != model.n_features:
        raise ShapeError(
            f"model expects {model.n_features} features, got {phi.shape[0]}"
        )
    scores = model.calib_scale * (phi @ model.beta) + model.calib_c
    probs = np.exp(scores - logsumexp(scores))
    probs = probs / probs.sum()
    return int(np.argmax(scores)) + 1, probs


def predict_labels(model: LogisticModel, examples: list[Example]) -> np.ndarray:
    X, _ = _examples_design(examples, model.feature_map)
    scores = model.calib_scale * (X @ model.beta) + model.calib_c
    return np.argmax(scores, axis=1) + 1


def mean_log_loss(model: LogisticModel, examples: list[Example]) -> float:
    """Mean calibrated log-loss on examples (used to audit calibration)."""
    X, Y = _examples_design(examples, model.feature_map)
    scores = model.calib_scale * (X @ model.beta) + model.calib_c
    lse = logsumexp(scores, axis=1)
    return float((lse - scores[np.arange(len(Y)), Y - 1]).mean())


# --------------------------------------------------------------------------
# Serialization: a versioned, self-describing text document.  Floats are
# written with repr (shortest round-trip), so load(save(m)) is bit-exact.
# --------------------------------------------------------------------------

_MODEL_MAGIC = "levyaug-model v1"


def _write_floats(out, values):
    out.write(" ".join(repr(float(v)) for v in values) + "\n")


def save_model(model: LogisticModel, path, family: LevyFamily | None = None) -> None:
    with open(path, "w", encoding="utf-8") as out:
        out.write(_MODEL_MAGIC + "\n")
        if family is None:
            out.write("family none\n")
        else:
            out.write(f"family {family.kind.value} {family.d}\n")
            if family.kind is FamilyKind.GAUSSIAN:
                out.write(f"sigma {family.d}\n")
                for row in family.sigma:
                    _write_floats(out, row)
        out.write(f"feature_map {model.feature_map.value}\n")
        p, k = model.beta.shape
        out.write(f"beta {p} {k}\n")
        for row in model.beta:
            _write_floats(out, row)
        out.write("calib_c\n")
        _write_floats(out, model.calib_c)
        out.write(f"calib_scale {model.calib_scale!r}\n")


def load_model(path) -> tuple[LogisticModel, LevyFamily | None]:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [ln.rstrip("\n") for ln in handle]
    it = iter(lines)

    def next_line():
        try:
            return next(it)
        except StopIteration:
            raise DataFormatError("model file truncated") from None

    if next_line() != _MODEL_MAGIC:
        raise DataFormatError(f"not a {_MODEL_MAGIC!r} document")
    family: LevyFamily | None = None
    tokens = next_line().split()
    if tokens[0] != "family":
        raise DataFormatError("expected family line")
    if tokens[1] != "none":
        kind = FamilyKind(tokens[1])
        d = int(tokens[2])
        sigma = None
        if kind is FamilyKind.GAUSSIAN:
            head = next_line().split()
            if head[0] != "sigma":
                raise DataFormatError("Gaussian family must carry its covariance")
            sigma = np.array(
                [[float(v) for v in next_line().split()] for _ in range(d)]
            )
        family = LevyFamily(kind, d, sigma)
    fm_line = next_line().split()
    if fm_line[0] != "feature_map":
        raise DataFormatError("expected feature_map line")
    feature_map = FeatureMap(fm_line[1])
    head = next_line().split()
    if head[0] != "beta":
        raise DataFormatError("expected beta header")
    p, k = int(head[1]), int(head[2])
    beta = np.array([[float(v) for v in next_line().split()] for _ in range(p)])
    if beta.shape != (p, k):
        raise DataFormatError("beta block has wrong shape")
    if next_line() != "calib_c":
        raise DataFormatError("expected calib_c line")
    calib_c = np.array([float(v) for v in next_line().split()])
    scale_line = next_line().split()
    if scale_line[0] != "calib_scale":
        raise DataFormatError("expected calib_scale line")
    model = LogisticModel(
        beta=beta,
        calib_c=calib_c,
        calib_scale=float(scale_line[1]),
        feature_map=feature_map,
    )
    return model, family
