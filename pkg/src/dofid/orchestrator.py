"""Multi-node per-window protocol driver.

Every window: featurize each node's traffic, let non-frozen nodes relearn
from their benign history and publish a model snapshot, apply the
configured federated update against the published snapshots, then let
every node classify its current window. A node that flagged the previous
window is frozen: it republishes its stale snapshot and skips learning
and merging, but keeps detecting.
"""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .drnn import ClampCounter, DrnnParams, IdsModel, detect
from .errors import ConfigError, InsufficientTrainingData
from .federation import (
    FederationConfig,
    PeerSnapshot,
    acn_update,
    acnl_update,
    consensus_model,
    dfu_merge,
    refit_output,
    select_concurring,
)
from .learning import FistaConfig, TrainSet, layer_projections, local_learn
from .model_io import dump_model
from .synth import SynthSpec, synth_generate
from .traffic import NormState, PacketRecord, WindowFeatures, featurize_window, partition_windows

logger = logging.getLogger(__name__)


@dataclass
class NodeSetup:
    """One node's data source and window length."""

    label: str
    window_seconds: float
    source: str | None = None
    source_format: str = "generic"
    flip: bool = False
    mapping: dict | None = None
    synth: SynthSpec | None = None
    synth_duration: float | None = None
    seed: int | None = None  # stable per-node seed; defaults to list position

    def validate(self) -> None:
        if self.window_seconds <= 0:
            raise ConfigError(f"node {self.label!r}: window_seconds must be positive")
        if (self.source is None) == (self.synth is None):
            raise ConfigError(f"node {self.label!r}: exactly one of source / synth required")
        if self.synth is not None and (self.synth_duration is None or self.synth_duration <= 0):
            raise ConfigError(f"node {self.label!r}: synth requires a positive duration")


@dataclass
class Scenario:
    """Everything needed for one deterministic run."""

    nodes: list[NodeSetup]
    drnn: DrnnParams = field(default_factory=DrnnParams)
    fista: FistaConfig = field(default_factory=FistaConfig)
    federation: FederationConfig = field(default_factory=FederationConfig)
    warmup: int = 4
    seed: int = 0
    max_windows: int | None = None

    def validate(self) -> None:
        if not self.nodes:
            raise ConfigError("scenario needs at least one node")
        if self.warmup < 1:
            raise ConfigError(f"warmup must be >= 1, got {self.warmup}")
        for setup in self.nodes:
            setup.validate()


@dataclass
class WindowRecord:
    """One (node, window) row of the run log."""

    node_id: int
    label: str
    window: int
    mu: float
    lam: float
    rho: float
    x: list[float]
    zeta: int | None
    theta: float | None
    y: int
    g: int
    warmup: bool
    frozen: bool
    learn_us: float | None
    update_us: float | None
    detect_us: float | None
    strategy: str
    concurring: list[int] | None = None
    merge_peers: dict[str, int] | None = None


@dataclass
class NodeState:
    """Mutable per-node simulation state."""

    node_id: int
    label: str
    T: float
    groups: list[list[PacketRecord]]
    projections: list[np.ndarray]
    norm: NormState = field(default_factory=NormState)
    features: list[WindowFeatures] = field(default_factory=list)
    y_history: list[int] = field(default_factory=list)
    benign_ids: list[int] = field(default_factory=list)
    model: IdsModel | None = None
    clamp: ClampCounter = field(default_factory=ClampCounter)

    def train_set(self) -> TrainSet:
        rows = [self.features[k - 1].x for k in self.benign_ids]
        return TrainSet(np.array(rows) if rows else np.empty((0, 3)), list(self.benign_ids))


def _node_packets(setup: NodeSetup, scenario_seed: int, node_seed: int) -> list[PacketRecord]:
    if setup.synth is not None:
        stream_seed = int(
            np.random.SeedSequence([scenario_seed, node_seed, setup.synth.seed]).generate_state(1)[0]
        )
        spec = dataclasses.replace(setup.synth, seed=stream_seed)
        return synth_generate(spec, setup.synth_duration)
    from .datasets import load_packets  # local import: datasets pulls csv machinery

    return load_packets(setup.source, setup.source_format, flip=setup.flip, mapping=setup.mapping)


def build_nodes(scenario: Scenario) -> list[NodeState]:
    scenario.validate()
    nodes = []
    for idx, setup in enumerate(scenario.nodes):
        node_seed = setup.seed if setup.seed is not None else idx
        packets = _node_packets(setup, scenario.seed, node_seed)
        groups = partition_windows(packets, setup.window_seconds)
        nodes.append(
            NodeState(
                node_id=idx,
                label=setup.label,
                T=setup.window_seconds,
                groups=groups,
                projections=layer_projections(scenario.drnn, (scenario.seed, node_seed)),
            )
        )
    return nodes


def _us(t0: int) -> float:
    return (time.perf_counter_ns() - t0) / 1000.0


def step_window(
    nodes: list[NodeState],
    l: int,
    scenario: Scenario,
    trace: bool = False,
    model_dump_dir: Path | None = None,
) -> list[WindowRecord]:
    """Advance all nodes by one window (1-based index l)."""
    params, fed = scenario.drnn, scenario.federation
    strategy = fed.strategy
    for node in nodes:
        node.features.append(featurize_window(l, node.groups[l - 1], node.T, node.norm))

    if l <= scenario.warmup:
        records = []
        for node in nodes:
            f = node.features[-1]
            node.y_history.append(0)
            node.benign_ids.append(l)
            node.norm.update(f.mu, f.lam, f.rho)
            records.append(
                WindowRecord(
                    node_id=node.node_id, label=node.label, window=l,
                    mu=f.mu, lam=f.lam, rho=f.rho, x=[float(v) for v in f.x],
                    zeta=None, theta=None, y=0, g=f.g, warmup=True, frozen=False,
                    learn_us=None, update_us=None, detect_us=None, strategy=strategy,
                )
            )
        return records

    # phase A: local learning and snapshot publication
    snapshots: dict[int, PeerSnapshot] = {}
    frozen: dict[int, bool] = {}
    skip_update: set[int] = set()
    learn_us: dict[int, float | None] = {}
    for node in nodes:
        is_frozen = node.y_history[-1] == 1
        frozen[node.node_id] = is_frozen
        learn_us[node.node_id] = None
        if not is_frozen:
            t0 = time.perf_counter_ns()
            try:
                node.model = local_learn(
                    node.train_set(), params, scenario.fista, node.projections, node.clamp
                )
            except InsufficientTrainingData:
                # without benign data there is nothing to learn from and no
                # way to refit a merge locally, so the whole update is skipped
                logger.warning("node %s window %d: no benign history, keeping previous model",
                               node.label, l)
                skip_update.add(node.node_id)
            learn_us[node.node_id] = _us(t0)
            if model_dump_dir is not None and node.model is not None:
                path = Path(model_dump_dir) / f"n{node.node_id}_{node.label}_w{l:05d}.json"
                with open(path, "w") as fp:
                    dump_model(node.model, params, fp)
        if node.model is not None:
            snapshots[node.node_id] = PeerSnapshot(node.node_id, node.model.copy())

    # phase B: federated update against the window-l snapshot set
    update_us: dict[int, float | None] = {}
    fed_trace: dict[int, tuple[list[int] | None, dict[str, int] | None]] = {}
    for node in nodes:
        update_us[node.node_id] = None
        fed_trace[node.node_id] = (None, None)
        if (frozen[node.node_id] or node.model is None or strategy == "NoFederated"
                or node.node_id in skip_update):
            continue
        peers = [s for nid, s in sorted(snapshots.items()) if nid != node.node_id]
        t0 = time.perf_counter_ns()
        if strategy == "DofId":
            xs = np.array([f.x for f in node.features[:-1]])
            ys = np.array(node.y_history, dtype=int)
            concurring_ids = select_concurring(
                xs, ys, peers, params, fed.theta_cap, fed.replay_cap, node.clamp
            )
            chosen = [s for s in peers if s.node_id in concurring_ids]
            winners: dict[str, int] | None = {} if trace else None
            merged = dfu_merge(node.model, chosen, fed.c, trace_winners=winners)
            node.model = refit_output(merged, node.train_set(), params, node.clamp)
            fed_trace[node.node_id] = (concurring_ids, winners)
        elif strategy == "Average":
            merged = consensus_model(node.model, peers, node.node_id)
            node.model = refit_output(merged, node.train_set(), params, node.clamp)
        elif strategy == "ACN":
            merged = acn_update(node.model, peers)
            node.model = refit_output(merged, node.train_set(), params, node.clamp)
        elif strategy == "ACN_L":
            merged = acnl_update(node.model, peers)
            node.model = refit_output(merged, node.train_set(), params, node.clamp)
        update_us[node.node_id] = _us(t0)

    # phase C: detection, benign admission, maxima update
    records = []
    for node in nodes:
        f = node.features[-1]
        zeta: int | None
        theta: float | None
        t0 = time.perf_counter_ns()
        if node.model is None:
            logger.warning("node %s window %d: no model yet, defaulting to benign", node.label, l)
            y, zeta, theta = 0, None, None
        else:
            y, zeta, _ = detect(f.x, node.model, params, node.clamp)
            theta = node.model.theta
        dt = _us(t0)
        node.y_history.append(y)
        if y == 0:
            node.benign_ids.append(l)
            node.norm.update(f.mu, f.lam, f.rho)
        concurring, winners = fed_trace[node.node_id]
        records.append(
            WindowRecord(
                node_id=node.node_id, label=node.label, window=l,
                mu=f.mu, lam=f.lam, rho=f.rho, x=[float(v) for v in f.x],
                zeta=zeta, theta=theta, y=y, g=f.g, warmup=False,
                frozen=frozen[node.node_id],
                learn_us=learn_us[node.node_id],
                update_us=update_us[node.node_id],
                detect_us=dt,
                strategy=strategy,
                concurring=concurring if trace else None,
                merge_peers=winners if trace else None,
            )
        )
    return records


def run(
    scenario: Scenario,
    trace: bool = False,
    model_dump_dir: Path | None = None,
) -> list[WindowRecord]:
    """Run the full scenario; returns one record per (node, window)."""
    nodes = build_nodes(scenario)
    n_windows = min(len(node.groups) for node in nodes)
    if n_windows == 0:
        raise ConfigError("at least one node produced no windows")
    if scenario.max_windows is not None:
        n_windows = min(n_windows, scenario.max_windows)
    if model_dump_dir is not None:
        Path(model_dump_dir).mkdir(parents=True, exist_ok=True)
    records: list[WindowRecord] = []
    for l in range(1, n_windows + 1):
        records.extend(step_window(nodes, l, scenario, trace, model_dump_dir))
    return records
