"""Packet-stream loaders for CSV exports of public capture datasets.

The generic format is one record per line, `timestamp_seconds,length_bytes,
label`, header optional (detected by a non-numeric first field). Named
presets map the column layouts of common exports; all mappings can be
overridden from the scenario file since public CSV exports vary.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Iterable

from .errors import DataError
from .traffic import PacketRecord, flip_time_axis

logger = logging.getLogger(__name__)

MALFORMED_ABORT_FRACTION = 0.01

# column selectors are names (str, header required) or 0-based indices (int)
FORMAT_PRESETS: dict[str, dict] = {
    "generic": {"time": 0, "length": 1, "label": 2, "rebase_time": False},
    "kitsune_csv": {
        "time": "frame.time_epoch",
        "length": "frame.len",
        "label": "label",
        "rebase_time": True,
    },
    "botiot_csv": {"time": "stime", "length": "bytes", "label": "attack", "rebase_time": True},
}


def _looks_like_header(row: list[str]) -> bool:
    try:
        float(row[0])
        return False
    except (ValueError, IndexError):
        return True


def _resolve(row: list[str], header: dict[str, int] | None, sel) -> str:
    if isinstance(sel, int):
        return row[sel]
    if header is None:
        raise DataError(f"column {sel!r} requested but the file has no header")
    return row[header[sel]]


def load_packets(
    path: str | Path,
    fmt: str = "generic",
    flip: bool = False,
    mapping: dict | None = None,
) -> list[PacketRecord]:
    """Read one node's packet stream from a CSV export.

    Malformed rows are skipped and counted; more than 1% malformed aborts
    the load. Records come back sorted by time; `flip` reflects the stream
    about its end (for captures that open mid-attack).
    """
    if fmt not in FORMAT_PRESETS:
        raise DataError(f"unknown dataset format {fmt!r}; expected one of {sorted(FORMAT_PRESETS)}")
    cols = dict(FORMAT_PRESETS[fmt])
    if mapping:
        cols.update(mapping)

    path = Path(path)
    if not path.is_file():
        raise DataError(f"packet file not found: {path}")

    records: list[tuple[float, int, int]] = []
    malformed = 0
    total = 0
    header: dict[str, int] | None = None
    with open(path, newline="") as fp:
        reader = csv.reader(fp)
        for rownum, row in enumerate(reader):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if rownum == 0 and _looks_like_header(row):
                header = {name.strip(): i for i, name in enumerate(row)}
                continue
            total += 1
            try:
                t = float(_resolve(row, header, cols["time"]))
                length = int(float(_resolve(row, header, cols["length"])))
                label = int(float(_resolve(row, header, cols["label"])))
                if t < 0 or length < 1 or label not in (0, 1):
                    raise ValueError("out-of-range field")
                records.append((t, length, label))
            except (ValueError, IndexError, KeyError):
                malformed += 1

    if total == 0:
        raise DataError(f"{path}: no data rows")
    if malformed / total > MALFORMED_ABORT_FRACTION:
        raise DataError(f"{path}: {malformed}/{total} malformed rows exceeds the 1% limit")
    if malformed:
        logger.warning("%s: skipped %d malformed rows of %d", path, malformed, total)

    records.sort(key=lambda r: r[0])
    t0 = records[0][0] if cols.get("rebase_time") else 0.0
    packets = [PacketRecord(t=t - t0, length=n, label=lab) for t, n, lab in records]
    if flip:
        packets = flip_time_axis(packets)
    return packets


def write_packets(packets: Iterable[PacketRecord], path: str | Path) -> None:
    """Write a stream in the generic three-column format."""
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["timestamp_seconds", "length_bytes", "label"])
        for p in packets:
            writer.writerow([repr(p.t), p.length, p.label])
