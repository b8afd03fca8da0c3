"""Local learning of the detector from benign windows only.

Hidden layers are fit one at a time as non-negative L1-regularized least
squares (accelerated proximal gradient) against a fixed random projection
of the layer input, then rescaled; the output layer is a closed-form
pseudo-inverse fit; whiskers and threshold come from the training
residuals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .drnn import ClampCounter, DrnnParams, IdsModel, psi, swbc_score
from .errors import InsufficientTrainingData

logger = logging.getLogger(__name__)

ADJ_SHIFT = 0.001  # positive constant keeping adjusted projections > 0
RESCALE_TARGET = 0.1
PINV_RCOND = 1e-10


@dataclass(frozen=True)
class FistaConfig:
    """Solver settings for the hidden-layer fits.

    tol stops iteration on small relative objective change. The momentum
    ripple makes per-iteration changes a poor proxy for distance to the
    optimum, so tol is kept well below the accuracy actually needed;
    1e-9 lands within ~1e-6 relative of a converged projected-gradient
    run on the problem sizes seen here.
    """

    l1_coeff: float = 1.0
    max_iters: int = 200
    tol: float = 1e-9
    power_iters: int = 20

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.l1_coeff < 0:
            raise ValueError(f"l1_coeff must be >= 0, got {self.l1_coeff}")


@dataclass
class TrainSet:
    """Benign feature rows and the window indices they came from."""

    X: np.ndarray
    window_ids: list[int]

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if len(self.window_ids) != self.X.shape[0]:
            raise ValueError("window_ids must match the number of feature rows")


def layer_projections(params: DrnnParams, seed_key: tuple[int, ...]) -> list[np.ndarray]:
    """One fixed uniform-[0,1] width x width matrix per hidden layer.

    Seeded by (seed_key..., layer) so a node's projections are stable
    across windows and independent of which other nodes exist.
    """
    d = params.width
    return [
        np.random.default_rng((*seed_key, h)).uniform(0.0, 1.0, size=(d, d))
        for h in range(params.n_hidden)
    ]


def adj_transform(A: np.ndarray) -> np.ndarray:
    """Map entries to [0,1], z-score globally, then shift the minimum to 0.001.

    Degenerate inputs (constant matrix, zero spread after min-max) collapse
    to all zeros before the shift, i.e. every entry becomes 0.001.
    """
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("adj_transform input must be finite")
    lo, hi = A.min(), A.max()
    B = (A - lo) / (hi - lo) if hi > lo else np.zeros_like(A)
    std = B.std()
    B = (B - B.mean()) / std if std > 0 else np.zeros_like(B)
    return B - B.min() + ADJ_SHIFT


def _augment(a: np.ndarray) -> np.ndarray:
    return np.concatenate([a, np.ones((a.shape[0], 1))], axis=1)


def _power_iteration_top_eig(G: np.ndarray, iters: int) -> float:
    v = np.ones(G.shape[0]) / np.sqrt(G.shape[0])
    for _ in range(iters):
        w = G @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(v @ G @ v)


def fista_hidden_layer(
    target: np.ndarray,
    W_R: np.ndarray,
    params: DrnnParams,
    cfg: FistaConfig,
    counter: ClampCounter | None = None,
) -> np.ndarray:
    """Fit one hidden layer's non-negative weights.

    Solves min_{W >= 0} ||A W - target||_F^2 + l1_coeff * ||W||_1 where
    A = [adj(activation(target @ W_R)), ones]. Accelerated proximal
    gradient from the zero matrix, constant step 1/L with L estimated by
    power iteration on A^T A; the proximal step is soft-thresholding
    followed by projection onto W >= 0. Returns the best iterate seen, so
    the final objective never exceeds the zero-initializer objective.
    """
    target = np.atleast_2d(np.asarray(target, dtype=float))
    n, d = target.shape
    if n == 0:
        return np.zeros((d + 1, d))
    A = _augment(adj_transform(psi(target @ W_R, params, counter)))
    AtA = A.T @ A
    At_target = A.T @ target
    L = 2.0 * _power_iteration_top_eig(AtA, cfg.power_iters)
    if L <= 0.0:
        return np.zeros((d + 1, d))
    step = 1.0 / L
    thresh = step * cfg.l1_coeff

    def objective(W):
        return float(np.sum((A @ W - target) ** 2) + cfg.l1_coeff * np.abs(W).sum())

    W = np.zeros((d + 1, d))
    Y = W
    t = 1.0
    best_W, best_obj = W, objective(W)
    prev_obj = best_obj
    for _ in range(cfg.max_iters):
        grad = 2.0 * (AtA @ Y - At_target)
        V = Y - step * grad
        W_new = np.maximum(np.sign(V) * np.maximum(np.abs(V) - thresh, 0.0), 0.0)
        t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        Y = W_new + ((t - 1.0) / t_new) * (W_new - W)
        W, t = W_new, t_new
        obj = objective(W)
        if obj < best_obj:
            best_W, best_obj = W, obj
        if abs(prev_obj - obj) <= cfg.tol * max(abs(prev_obj), 1e-30):
            break
        prev_obj = obj
    return best_W


def rescale_hidden(W: np.ndarray, layer_outputs: np.ndarray) -> np.ndarray:
    """Scale the learned weights so the layer's peak training output is 0.1."""
    m = float(np.max(layer_outputs)) if layer_outputs.size else 0.0
    if m == 0.0:
        logger.warning("hidden layer produced all-zero outputs; skipping rescale")
        return W
    return W * (RESCALE_TARGET / m)


def elm_output_layer(H_last: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Closed-form output layer: pseudo-inverse of [H_last, ones] onto X.

    The ones column matches the bias convention of the forward pass;
    singular values below 1e-10 of the largest are treated as zero, so the
    result is the minimum-norm least-squares solution.
    """
    H_last = np.atleast_2d(np.asarray(H_last, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.linalg.pinv(_augment(H_last), rcond=PINV_RCOND) @ X


def _tukey_hinges(column: np.ndarray) -> tuple[float, float]:
    z = np.sort(column)
    n = z.size
    if n == 1:
        return float(z[0]), float(z[0])
    half = n // 2  # odd n: middle element excluded from both halves
    return float(np.median(z[:half])), float(np.median(z[n - half :]))


def compute_whiskers(Z: np.ndarray) -> np.ndarray:
    """Per-statistic upper whisker Q_U + 1.5*(Q_U - Q_L) over the residuals."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[0] < 1:
        raise ValueError("whiskers need at least one residual row")
    out = np.empty(Z.shape[1])
    for i in range(Z.shape[1]):
        q_l, q_u = _tukey_hinges(Z[:, i])
        out[i] = q_u + 1.5 * (q_u - q_l)
    return out


def compute_threshold(zetas) -> float:
    """Decision threshold: mean deviation count plus two population stds."""
    z = np.asarray(zetas, dtype=float)
    if z.size < 1:
        raise ValueError("threshold needs at least one score")
    return float(z.mean() + 2.0 * z.std())


def local_learn(
    train: TrainSet,
    params: DrnnParams,
    cfg: FistaConfig,
    projections: list[np.ndarray],
    counter: ClampCounter | None = None,
) -> IdsModel:
    """Fit the complete detector from benign feature rows.

    Layers are trained front to back; each layer's training output (after
    rescaling) is the next layer's input and regression target. The
    finished model is replayed over the training set to derive whiskers
    and the decision threshold.
    """
    if train.X.shape[0] < 1:
        raise InsufficientTrainingData("no benign windows to learn from")
    if len(projections) != params.n_hidden:
        raise ValueError(f"expected {params.n_hidden} projection matrices")
    X = train.X
    current = X
    hidden: list[np.ndarray] = []
    for h in range(params.n_hidden):
        W = fista_hidden_layer(current, projections[h], params, cfg, counter)
        outputs = psi(_augment(current) @ W, params, counter)
        W = rescale_hidden(W, outputs)
        outputs = psi(_augment(current) @ W, params, counter)
        hidden.append(W)
        current = outputs
    output_weights = elm_output_layer(current, X)
    x_hat = _augment(current) @ output_weights
    residuals = np.abs(X - x_hat)
    whiskers = compute_whiskers(residuals)
    zetas = swbc_score(X, x_hat, whiskers)
    theta = compute_threshold(zetas)
    return IdsModel(
        hidden_weights=hidden,
        output_weights=output_weights,
        whiskers=whiskers,
        theta=theta,
    )
