"""Scenario file parsing (YAML; JSON is a YAML subset and works too)."""

from __future__ import annotations

from pathlib import Path

import yaml

from .drnn import DrnnParams
from .errors import ConfigError
from .federation import FederationConfig
from .learning import FistaConfig
from .orchestrator import NodeSetup, Scenario
from .synth import SynthSpec


def _section(doc: dict, key: str) -> dict:
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{key!r} must be a mapping")
    return value


def _build(cls, section: dict, what: str):
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what} configuration: {exc}") from exc


def parse_synth_spec(section: dict) -> SynthSpec:
    section = dict(section)
    parsed = {}
    try:
        parsed["attack_intervals"] = tuple(
            (float(a), float(b)) for a, b in section.pop("attack_intervals", [])
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"attack_intervals must be [start, end] pairs: {exc}") from exc
    try:
        parsed["benign_bursts"] = tuple(
            tuple(float(v) for v in entry) for entry in section.pop("benign_bursts", [])
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"benign_bursts must be [start, end, rate_mult, len_mult] rows: {exc}") from exc
    section.pop("duration", None)
    return _build(lambda **kw: SynthSpec(**parsed, **kw), section, "synth")


def parse_node(section: dict, position: int) -> NodeSetup:
    if not isinstance(section, dict):
        raise ConfigError(f"node #{position}: expected a mapping")
    section = dict(section)
    label = str(section.pop("label", f"node{position}"))
    try:
        window_seconds = float(section.pop("window_seconds"))
    except KeyError:
        raise ConfigError(f"node {label!r}: window_seconds is required") from None
    synth_section = section.pop("synth", None)
    synth = None
    synth_duration = None
    if synth_section is not None:
        if not isinstance(synth_section, dict):
            raise ConfigError(f"node {label!r}: synth must be a mapping")
        synth_duration = synth_section.get("duration")
        synth = parse_synth_spec(synth_section)
    setup = NodeSetup(
        label=label,
        window_seconds=window_seconds,
        source=section.pop("source", None),
        source_format=section.pop("format", "generic"),
        flip=bool(section.pop("flip", False)),
        mapping=section.pop("mapping", None),
        synth=synth,
        synth_duration=float(synth_duration) if synth_duration is not None else None,
        seed=section.pop("seed", None),
    )
    if section:
        raise ConfigError(f"node {label!r}: unknown keys {sorted(section)}")
    setup.validate()
    return setup


def parse_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("scenario file must contain a mapping")
    node_sections = doc.get("nodes")
    if not node_sections:
        raise ConfigError("scenario needs a non-empty 'nodes' list")
    scenario = Scenario(
        nodes=[parse_node(sec, i) for i, sec in enumerate(node_sections)],
        drnn=_build(DrnnParams, _section(doc, "drnn"), "drnn"),
        fista=_build(FistaConfig, _section(doc, "fista"), "fista"),
        federation=_build(FederationConfig, _section(doc, "federation"), "federation"),
        warmup=int(doc.get("warmup", 4)),
        seed=int(doc.get("seed", 0)),
        max_windows=int(doc["max_windows"]) if doc.get("max_windows") is not None else None,
    )
    scenario.validate()
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    try:
        with open(path) as fp:
            doc = yaml.safe_load(fp)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_scenario(doc)


def load_synth_spec(path: str | Path) -> tuple[SynthSpec, float | None]:
    """Standalone synth spec file: SynthSpec fields plus optional duration."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"synth spec file not found: {path}")
    try:
        with open(path) as fp:
            doc = yaml.safe_load(fp)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("synth spec file must contain a mapping")
    duration = doc.get("duration")
    return parse_synth_spec(doc), float(duration) if duration is not None else None
