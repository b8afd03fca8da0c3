"""Detector core: random-network forward pass plus the whisker classifier.

The detector reconstructs the statistics expected under benign traffic
(auto-associative random network with a closed-form cluster activation),
then counts how many statistics deviate from the reconstruction by more
than their whisker. The count against a learned threshold is the binary
intrusion decision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ClampCounter:
    """Counts activation evaluations that hit the negative-radicand clamp."""

    events: int = 0


@dataclass(frozen=True)
class DrnnParams:
    """Fixed parameters of the random-network activation and topology.

    p: probability that a triggered neuron re-transmits a trigger, in (0,1).
    r: neuron firing rate.
    lambda_plus / lambda_minus: external excitatory / inhibitory spike rates.
    hidden_layers + 1 = total layer count H; width = neurons per layer.
    cluster_size is recorded configuration only; it does not enter the
    activation formula.
    """

    p: float = 0.05
    r: float = 0.001
    lambda_plus: float = 0.1
    lambda_minus: float = 0.1
    layers: int = 3
    width: int = 3
    cluster_size: int = 10

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0,1), got {self.p}")
        for name in ("r", "lambda_plus", "lambda_minus"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.layers < 2:
            raise ValueError(f"layers must be >= 2, got {self.layers}")
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")

    @property
    def n_hidden(self) -> int:
        return self.layers - 1


@dataclass
class IdsModel:
    """One node's full detector parameter set.

    hidden_weights: layers-1 non-negative matrices of shape (width+1, width);
    the bias row is the last row of every matrix. output_weights is the
    final linear map, same shape, unconstrained sign. whiskers and theta
    are the decision-side parameters.
    """

    hidden_weights: list[np.ndarray]
    output_weights: np.ndarray
    whiskers: np.ndarray
    theta: float

    def validate_shapes(self, params: DrnnParams) -> None:
        d = params.width
        if len(self.hidden_weights) != params.n_hidden:
            raise ValueError(
                f"expected {params.n_hidden} hidden matrices, got {len(self.hidden_weights)}"
            )
        for h, W in enumerate(self.hidden_weights):
            if W.shape != (d + 1, d):
                raise ValueError(f"hidden layer {h + 1} has shape {W.shape}, expected {(d + 1, d)}")
        if self.output_weights.shape != (d + 1, d):
            raise ValueError(
                f"output weights have shape {self.output_weights.shape}, expected {(d + 1, d)}"
            )
        if self.whiskers.shape != (d,):
            raise ValueError(f"whiskers have shape {self.whiskers.shape}, expected {(d,)}")

    def copy(self) -> "IdsModel":
        return IdsModel(
            hidden_weights=[W.copy() for W in self.hidden_weights],
            output_weights=self.output_weights.copy(),
            whiskers=self.whiskers.copy(),
            theta=self.theta,
        )


def psi(lam, params: DrnnParams, counter: ClampCounter | None = None):
    """Cluster activation: maps a non-negative input rate into [0,1].

    With small inputs the radicand of the closed form can go negative;
    it is clamped at zero (and counted) so the pipeline stays total, and
    the final value is clamped into [0,1].
    """
    arr = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("activation input must be finite")
    if np.any(arr < 0):
        raise ValueError("activation input must be non-negative")
    denom = params.lambda_minus + arr
    term1 = (params.p * (params.r + params.lambda_plus) + denom) / (2.0 * denom)
    radicand = term1**2 - params.lambda_plus / denom
    clamped = radicand < 0.0
    if counter is not None:
        counter.events += int(np.count_nonzero(clamped))
    value = term1 - np.sqrt(np.where(clamped, 0.0, radicand))
    value = np.clip(value, 0.0, 1.0)
    return value if arr.ndim else float(value)


def _augment(a: np.ndarray) -> np.ndarray:
    """Append the bias constant 1 as the last column."""
    return np.concatenate([a, np.ones((a.shape[0], 1))], axis=1)


def drnn_forward(
    x: np.ndarray,
    model: IdsModel,
    params: DrnnParams,
    counter: ClampCounter | None = None,
) -> np.ndarray:
    """Reconstruct expected-benign statistics for one vector or a batch.

    Hidden layers apply the cluster activation to [input, 1] @ W; the
    output layer is linear. A 1-D input returns a 1-D reconstruction.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != params.width:
        raise ValueError(f"input has {arr.shape[1]} features, expected {params.width}")
    model.validate_shapes(params)
    a = arr
    for W in model.hidden_weights:
        a = psi(_augment(a) @ W, params, counter)
    out = _augment(a) @ model.output_weights
    return out[0] if single else out


def hidden_activations(
    x: np.ndarray,
    hidden_weights: list[np.ndarray],
    params: DrnnParams,
    counter: ClampCounter | None = None,
) -> np.ndarray:
    """Batch output of the last hidden layer (the output layer's regressors)."""
    a = np.atleast_2d(np.asarray(x, dtype=float))
    for W in hidden_weights:
        a = psi(_augment(a) @ W, params, counter)
    return a


def swbc_score(x: np.ndarray, x_hat: np.ndarray, whiskers: np.ndarray):
    """Count statistics whose reconstruction residual strictly exceeds its whisker."""
    diffs = np.abs(np.asarray(x, dtype=float) - np.asarray(x_hat, dtype=float))
    score = np.sum(diffs > np.asarray(whiskers, dtype=float), axis=-1)
    return int(score) if np.ndim(score) == 0 else score.astype(int)


def swbc_decide(zeta, theta: float):
    """1 iff the deviation count strictly exceeds the threshold."""
    y = np.asarray(zeta) > theta
    return int(y) if np.ndim(y) == 0 else y.astype(int)


def detect(
    x: np.ndarray,
    model: IdsModel,
    params: DrnnParams,
    counter: ClampCounter | None = None,
):
    """Full decision for one window (or a batch): (y, zeta, x_hat)."""
    x_hat = drnn_forward(x, model, params, counter)
    zeta = swbc_score(x, x_hat, model.whiskers)
    return swbc_decide(zeta, model.theta), zeta, x_hat
