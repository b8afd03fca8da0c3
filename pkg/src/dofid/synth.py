"""Synthetic packet-stream generator for desk-scale runs.

Benign traffic is a homogeneous Poisson arrival process with normally
distributed packet lengths; inside attack intervals the rate and lengths
are multiplied and packets are labeled malicious. Benign bursts raise the
rate and/or lengths without changing the label, giving the stream the
headroom between typical and peak benign traffic that real captures have
(the running-max normalization needs it: a flat stream normalizes its own
typical level to ~1, leaving attacks nowhere to go). Keeping rate bursts
and length bursts in separate intervals keeps the all-statistics-extreme
corner out of the benign training data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .traffic import PacketRecord


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one node's synthetic stream.

    benign_bursts entries are (start_s, end_s, rate_multiplier,
    length_multiplier) with benign labels; attack intervals win where they
    overlap a burst.
    """

    benign_rate: float
    benign_len_mean: float
    benign_len_std: float
    attack_intervals: tuple[tuple[float, float], ...] = field(default_factory=tuple)
    attack_rate_multiplier: float = 1.0
    attack_len_multiplier: float = 1.0
    benign_bursts: tuple[tuple[float, float, float, float], ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        if self.benign_rate <= 0:
            raise ConfigError(f"benign_rate must be positive, got {self.benign_rate}")
        if self.benign_len_mean <= 0:
            raise ConfigError(f"benign_len_mean must be positive, got {self.benign_len_mean}")
        if self.benign_len_std < 0:
            raise ConfigError(f"benign_len_std must be >= 0, got {self.benign_len_std}")
        if self.attack_rate_multiplier <= 0 or self.attack_len_multiplier <= 0:
            raise ConfigError("attack multipliers must be positive")
        for lo, hi in self.attack_intervals:
            if not 0 <= lo < hi:
                raise ConfigError(f"bad attack interval ({lo}, {hi})")
        for entry in self.benign_bursts:
            if len(entry) != 4:
                raise ConfigError(f"burst entries are (start, end, rate_mult, len_mult): {entry}")
            lo, hi, rm, lm = entry
            if not 0 <= lo < hi or rm <= 0 or lm <= 0:
                raise ConfigError(f"bad burst entry {entry}")
        object.__setattr__(
            self, "attack_intervals", tuple((float(a), float(b)) for a, b in self.attack_intervals)
        )
        object.__setattr__(
            self,
            "benign_bursts",
            tuple((float(a), float(b), float(r), float(m)) for a, b, r, m in self.benign_bursts),
        )


def _segments(spec: SynthSpec, duration: float) -> list[tuple[float, float, float, float, int]]:
    """(start, end, rate_mult, len_mult, label) pieces covering [0, duration)."""
    cuts = {0.0, duration}
    for lo, hi in spec.attack_intervals:
        if lo >= duration:
            raise ConfigError(f"attack interval ({lo}, {hi}) starts past duration {duration}")
        cuts.update((lo, min(hi, duration)))
    for lo, hi, _, _ in spec.benign_bursts:
        if lo >= duration:
            raise ConfigError(f"burst ({lo}, {hi}) starts past duration {duration}")
        cuts.update((lo, min(hi, duration)))
    edges = sorted(cuts)
    segs = []
    for a, b in zip(edges, edges[1:]):
        mid = (a + b) / 2.0
        if any(lo <= mid < hi for lo, hi in spec.attack_intervals):
            segs.append((a, b, spec.attack_rate_multiplier, spec.attack_len_multiplier, 1))
            continue
        rate_mult = len_mult = 1.0
        for lo, hi, rm, lm in spec.benign_bursts:
            if lo <= mid < hi:
                rate_mult, len_mult = rm, lm
                break
        segs.append((a, b, rate_mult, len_mult, 0))
    return segs


def synth_generate(spec: SynthSpec, duration: float) -> list[PacketRecord]:
    """Generate one node's packet stream, reproducible from spec.seed."""
    if duration <= 0:
        raise ConfigError(f"duration must be positive, got {duration}")
    rng = np.random.default_rng(spec.seed)
    packets: list[PacketRecord] = []
    for a, b, rate_mult, len_mult, label in _segments(spec, duration):
        count = rng.poisson(spec.benign_rate * rate_mult * (b - a))
        times = np.sort(rng.uniform(a, b, size=count))
        lengths = rng.normal(spec.benign_len_mean, spec.benign_len_std, size=count) * len_mult
        lengths = np.maximum(np.rint(lengths), 1).astype(int)
        packets.extend(
            PacketRecord(t=float(t), length=int(n), label=label)
            for t, n in zip(times, lengths)
        )
    packets.sort(key=lambda p: p.t)
    return packets
