"""Per-window traffic statistics and normalized feature vectors.

A packet stream is cut into fixed-length time windows (1-based index l,
window l covers [(l-1)*T, l*T)). Each window yields three statistics:
mean packet length (mu, bytes), packet rate (lambda, packets/s) and byte
rate (rho, bytes/s), normalized into [0,1] by running per-node maxima.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PacketRecord:
    """One observed packet: arrival time (s), length (bytes), 0/1 label."""

    t: float
    length: int
    label: int

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"packet time must be >= 0, got {self.t}")
        if self.length < 1:
            raise ValueError(f"packet length must be >= 1, got {self.length}")
        if self.label not in (0, 1):
            raise ValueError(f"packet label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class WindowFeatures:
    """Statistics of one window: raw (mu, lambda, rho), normalized x, truth g."""

    index: int
    mu: float
    lam: float
    rho: float
    x: np.ndarray
    g: int
    packet_count: int


@dataclass
class NormState:
    """Running maxima of (mu, lambda, rho), fed only by benign-admitted windows."""

    max_mu: float = 0.0
    max_lambda: float = 0.0
    max_rho: float = 0.0
    _warned: bool = field(default=False, repr=False)

    def update(self, mu: float, lam: float, rho: float) -> None:
        self.max_mu = max(self.max_mu, mu)
        self.max_lambda = max(self.max_lambda, lam)
        self.max_rho = max(self.max_rho, rho)


def partition_windows(packets: list[PacketRecord], T: float) -> list[list[PacketRecord]]:
    """Group a sorted packet stream into consecutive windows of T seconds.

    Window l (1-based) holds packets with (l-1)*T <= t < l*T. Interior
    windows with no traffic come back as empty groups so indices stay
    aligned across nodes.
    """
    if T <= 0:
        raise ValueError(f"window length must be positive, got {T}")
    for a, b in zip(packets, packets[1:]):
        if b.t < a.t:
            raise ValueError(f"packet stream not sorted by time: {a.t} followed by {b.t}")
    if not packets:
        return []
    n_windows = int(packets[-1].t // T) + 1
    groups: list[list[PacketRecord]] = [[] for _ in range(n_windows)]
    for pkt in packets:
        groups[int(pkt.t // T)].append(pkt)
    return groups


def compute_stats(group: list[PacketRecord], T: float) -> tuple[float, float, float]:
    """(mu, lambda, rho) for one window; an empty window is (0, 0, 0)."""
    if T <= 0:
        raise ValueError(f"window length must be positive, got {T}")
    count = len(group)
    if count == 0:
        return 0.0, 0.0, 0.0
    total_bytes = float(sum(p.length for p in group))
    return total_bytes / count, count / T, total_bytes / T


def normalize(stats: tuple[float, float, float], norm: NormState) -> np.ndarray:
    """Divide each statistic by its running maximum, clamped into [0,1].

    Coordinates whose maximum is still zero map to 0 (happens only before
    the first non-empty benign window; logged once).
    """
    maxima = (norm.max_mu, norm.max_lambda, norm.max_rho)
    if all(m == 0.0 for m in maxima) and not norm._warned:
        logger.warning("normalizing with all-zero maxima; returning zero vector")
        norm._warned = True
    x = np.zeros(3)
    for i, (s, m) in enumerate(zip(stats, maxima)):
        if m > 0.0:
            x[i] = min(s / m, 1.0)
    return x


def window_ground_truth(group: list[PacketRecord]) -> int:
    """1 iff a strict majority of the window's packets is labeled malicious."""
    if not group:
        return 0
    malicious = sum(p.label for p in group)
    return 1 if malicious / len(group) > 0.5 else 0


def flip_time_axis(packets: list[PacketRecord]) -> list[PacketRecord]:
    """Reflect the stream about its end: t -> t_max - t, re-sorted ascending.

    Used for captures that open with attack traffic, so the replayed stream
    starts benign. Lengths and labels are untouched; applying twice gives
    back the original multiset of packets.
    """
    if not packets:
        return []
    t_max = packets[-1].t
    flipped = [PacketRecord(t=t_max - p.t, length=p.length, label=p.label) for p in packets]
    flipped.sort(key=lambda p: p.t)
    return flipped


def featurize_window(
    index: int, group: list[PacketRecord], T: float, norm: NormState
) -> WindowFeatures:
    """Full featurization of one window with the node's current maxima."""
    mu, lam, rho = compute_stats(group, T)
    return WindowFeatures(
        index=index,
        mu=mu,
        lam=lam,
        rho=rho,
        x=normalize((mu, lam, rho), norm),
        g=window_ground_truth(group),
        packet_count=len(group),
    )
