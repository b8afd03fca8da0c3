"""Decentralized online federated intrusion detection over window statistics.

A benign-trained anomaly detector (random-network reconstruction plus a
whisker-count classifier), its local learning procedure, four federated
update strategies, and a deterministic multi-node protocol simulator.
"""

from .drnn import ClampCounter, DrnnParams, IdsModel, detect, drnn_forward, psi, swbc_decide, swbc_score
from .errors import ConfigError, DataError, InsufficientTrainingData
from .estimator import WindowAnomalyDetector
from .federation import (
    FederationConfig,
    PeerSnapshot,
    STRATEGIES,
    acn_update,
    acnl_update,
    average_update,
    dfu_merge,
    refit_output,
    select_concurring,
)
from .learning import (
    FistaConfig,
    TrainSet,
    adj_transform,
    compute_threshold,
    compute_whiskers,
    elm_output_layer,
    fista_hidden_layer,
    layer_projections,
    local_learn,
    rescale_hidden,
)
from .model_io import dump_model, dumps_model, load_model, loads_model
from .orchestrator import NodeSetup, Scenario, WindowRecord, run, step_window
from .reporting import RunReport, build_report, compute_metrics, emit_report
from .synth import SynthSpec, synth_generate
from .traffic import (
    NormState,
    PacketRecord,
    WindowFeatures,
    compute_stats,
    flip_time_axis,
    normalize,
    partition_windows,
    window_ground_truth,
)

__version__ = "0.1.0"

__all__ = [
    "ClampCounter", "DrnnParams", "IdsModel", "detect", "drnn_forward", "psi",
    "swbc_decide", "swbc_score",
    "ConfigError", "DataError", "InsufficientTrainingData",
    "WindowAnomalyDetector",
    "FederationConfig", "PeerSnapshot", "STRATEGIES", "acn_update", "acnl_update",
    "average_update", "dfu_merge", "refit_output", "select_concurring",
    "FistaConfig", "TrainSet", "adj_transform", "compute_threshold", "compute_whiskers",
    "elm_output_layer", "fista_hidden_layer", "layer_projections", "local_learn",
    "rescale_hidden",
    "dump_model", "dumps_model", "load_model", "loads_model",
    "NodeSetup", "Scenario", "WindowRecord", "run", "step_window",
    "RunReport", "build_report", "compute_metrics", "emit_report",
    "SynthSpec", "synth_generate",
    "NormState", "PacketRecord", "WindowFeatures", "compute_stats", "flip_time_axis",
    "normalize", "partition_windows", "window_ground_truth",
]
