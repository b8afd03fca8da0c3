"""Peer-merge update strategies applied after local learning.

The main update blends each parameter segment (every hidden layer, every
whisker, the threshold) with the closest concurring peer's matching
segment, then refits the output layer locally. Three simpler strategies
(plain averaging, closest node overall, closest node per segment) and a
no-op baseline are provided for comparison.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .drnn import ClampCounter, DrnnParams, IdsModel, detect, hidden_activations
from .learning import TrainSet, elm_output_layer

logger = logging.getLogger(__name__)

STRATEGIES = ("NoFederated", "DofId", "Average", "ACN", "ACN_L")


@dataclass(frozen=True)
class FederationConfig:
    """Merge coefficient c, concurrence threshold, and strategy selection.

    replay_cap limits how many recent windows the concurrence check
    replays (None = full history).
    """

    strategy: str = "DofId"
    c: float = 0.75
    theta_cap: float = 0.65
    replay_cap: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if not 0.5 <= self.c <= 1.0:
            raise ValueError(f"c must be in [0.5, 1], got {self.c}")
        if not 0.0 <= self.theta_cap <= 1.0:
            raise ValueError(f"theta_cap must be in [0, 1], got {self.theta_cap}")
        if self.replay_cap is not None and self.replay_cap < 1:
            raise ValueError(f"replay_cap must be >= 1, got {self.replay_cap}")


@dataclass(frozen=True)
class PeerSnapshot:
    """A peer's published model for the current window; never mutated."""

    node_id: int
    model: IdsModel


def _l1(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).sum())


def _sorted_peers(peers: Sequence[PeerSnapshot]) -> list[PeerSnapshot]:
    # ascending node id, so argmin tie-breaks to the lowest id
    return sorted(peers, key=lambda s: s.node_id)


def _closest(peers: list[PeerSnapshot], distance) -> PeerSnapshot:
    dists = [distance(s.model) for s in peers]
    return peers[int(np.argmin(dists))]


def select_concurring(
    x_history: np.ndarray,
    y_history: np.ndarray,
    peers: Sequence[PeerSnapshot],
    params: DrnnParams,
    theta_cap: float,
    replay_cap: int | None = None,
    counter: ClampCounter | None = None,
) -> list[int]:
    """Peers whose current model agrees with our own past decisions.

    Each peer's window-l model is replayed over this node's feature
    history; the peer concurs when the agreement fraction reaches
    theta_cap (inclusive). Agreement is against our decisions, not ground
    truth.
    """
    xs = np.atleast_2d(np.asarray(x_history, dtype=float))
    ys = np.asarray(y_history, dtype=int)
    if xs.shape[0] != ys.shape[0]:
        raise ValueError("feature and decision histories differ in length")
    if xs.shape[0] == 0 or not peers:
        return []
    if replay_cap is not None and xs.shape[0] > replay_cap:
        xs, ys = xs[-replay_cap:], ys[-replay_cap:]
    concurring = []
    for snap in _sorted_peers(peers):
        # replayed window by window, the way the decisions were originally made
        agree = sum(
            1 for k in range(xs.shape[0])
            if detect(xs[k], snap.model, params, counter)[0] == ys[k]
        )
        if agree / xs.shape[0] >= theta_cap:
            concurring.append(snap.node_id)
    return concurring


def dfu_merge(
    local: IdsModel,
    concurring: Sequence[PeerSnapshot],
    c: float,
    trace_winners: dict[str, int] | None = None,
) -> IdsModel:
    """Blend every segment with its closest peer segment: c*local + (1-c)*peer.

    Segment winners are chosen independently (entry-wise L1 distance for
    layer matrices, absolute difference for whiskers and theta; ties go to
    the lowest node id). The output layer is left alone - it gets refit on
    local data afterwards. An empty concurring set returns the model
    unchanged. Pass a dict as trace_winners to capture which peer each
    segment merged with.
    """
    if not concurring:
        return local.copy()
    peers = _sorted_peers(concurring)
    merged = local.copy()
    # blends use local + (1-c)*(peer - local): algebraically c*local +
    # (1-c)*peer, but exactly the identity when c=1 or peer == local
    for h in range(len(local.hidden_weights)):
        best = _closest(peers, lambda m, h=h: _l1(local.hidden_weights[h], m.hidden_weights[h]))
        merged.hidden_weights[h] = local.hidden_weights[h] + (1.0 - c) * (
            best.model.hidden_weights[h] - local.hidden_weights[h]
        )
        if trace_winners is not None:
            trace_winners[f"layer_{h + 1}"] = best.node_id
    for i in range(local.whiskers.shape[0]):
        best = _closest(peers, lambda m, i=i: abs(local.whiskers[i] - m.whiskers[i]))
        merged.whiskers[i] = local.whiskers[i] + (1.0 - c) * (best.model.whiskers[i] - local.whiskers[i])
        if trace_winners is not None:
            trace_winners[f"whisker_{i + 1}"] = best.node_id
    best = _closest(peers, lambda m: abs(local.theta - m.theta))
    merged.theta = local.theta + (1.0 - c) * (best.model.theta - local.theta)
    if trace_winners is not None:
        trace_winners["theta"] = best.node_id
    return merged


def refit_output(
    model: IdsModel,
    train: TrainSet,
    params: DrnnParams,
    counter: ClampCounter | None = None,
) -> IdsModel:
    """Recompute the output layer on local benign data after a merge."""
    if train.X.shape[0] < 1:
        logger.warning("refit requested with empty training set; model unchanged")
        return model
    refit = model.copy()
    H_last = hidden_activations(train.X, model.hidden_weights, params, counter)
    refit.output_weights = elm_output_layer(H_last, train.X)
    return refit


def _segment_means(models: Sequence[IdsModel]) -> tuple[list[np.ndarray], np.ndarray, float]:
    n = len(models)
    hidden = [
        sum(m.hidden_weights[h] for m in models) / n
        for h in range(len(models[0].hidden_weights))
    ]
    whiskers = sum(m.whiskers for m in models) / n
    theta = sum(m.theta for m in models) / n
    return hidden, whiskers, theta


def average_update(models: Mapping[int, IdsModel]) -> dict[int, IdsModel]:
    """Replace every node's segments by the all-node arithmetic mean.

    All returned models carry identical (bit-equal) hidden weights,
    whiskers, and theta; each node still refits its own output layer.
    """
    ids = sorted(models)
    if not ids:
        return {}
    mean_hidden, mean_whiskers, mean_theta = _segment_means([models[i] for i in ids])
    out = {}
    for i in ids:
        merged = models[i].copy()
        merged.hidden_weights = [W.copy() for W in mean_hidden]
        merged.whiskers = mean_whiskers.copy()
        merged.theta = mean_theta
        out[i] = merged
    return out


def consensus_model(local: IdsModel, peers: Sequence[PeerSnapshot], self_id: int) -> IdsModel:
    """One node's view of the all-node average (its own snapshot included).

    Summation runs in node-id order, so every node computes bit-identical
    consensus segments.
    """
    ordered = sorted([(self_id, local)] + [(s.node_id, s.model) for s in peers])
    merged = local.copy()
    merged.hidden_weights, merged.whiskers, merged.theta = _segment_means(
        [m for _, m in ordered]
    )
    return merged


def acn_update(local: IdsModel, peers: Sequence[PeerSnapshot]) -> IdsModel:
    """Blend all segments 50/50 with the single closest peer overall.

    Closeness is the combined distance: summed entry-wise L1 over hidden
    layers plus absolute whisker and theta differences (output layer
    excluded, consistently with the other strategies).
    """
    if not peers:
        return local.copy()

    def combined(m: IdsModel) -> float:
        d = sum(_l1(a, b) for a, b in zip(local.hidden_weights, m.hidden_weights))
        d += float(np.abs(local.whiskers - m.whiskers).sum())
        d += abs(local.theta - m.theta)
        return d

    best = _closest(_sorted_peers(peers), combined)
    merged = local.copy()
    for h in range(len(local.hidden_weights)):
        merged.hidden_weights[h] = 0.5 * (local.hidden_weights[h] + best.model.hidden_weights[h])
    merged.whiskers = 0.5 * (local.whiskers + best.model.whiskers)
    merged.theta = 0.5 * (local.theta + best.model.theta)
    return merged


def acnl_update(local: IdsModel, peers: Sequence[PeerSnapshot]) -> IdsModel:
    """Per-segment closest peer over all peers, fixed 50/50 blend."""
    return dfu_merge(local, peers, c=0.5)
