"""Run-log records, confusion metrics, timing aggregation, and report output.

Positive class = attack. Ratios with an empty denominator are reported as
"n/a", never as 0. Warm-up windows carry forced decisions and are excluded
from all metrics; frozen windows are excluded from learning/update timing
means.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, TextIO

from .orchestrator import WindowRecord

REPORT_FORMATS = ("table", "json_lines", "csv")


@dataclass
class NodeReport:
    node_id: int
    label: str
    strategy: str
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float | None
    tpr: float | None
    tnr: float | None
    mean_learn_us: float | None
    mean_update_us: float | None
    mean_detect_us: float | None
    mean_total_us: float | None
    evaluated_windows: int
    frozen_windows: int


@dataclass
class RunReport:
    strategy: str
    nodes: list[NodeReport]
    config: dict


def compute_metrics(decisions: Sequence[int], truths: Sequence[int]):
    """(accuracy, tpr, tnr, confusion) with None for undefined ratios."""
    if len(decisions) != len(truths):
        raise ValueError(f"length mismatch: {len(decisions)} decisions vs {len(truths)} truths")
    tp = tn = fp = fn = 0
    for y, g in zip(decisions, truths):
        if y == 1 and g == 1:
            tp += 1
        elif y == 0 and g == 0:
            tn += 1
        elif y == 1 and g == 0:
            fp += 1
        else:
            fn += 1
    total = tp + tn + fp + fn
    accuracy = (tp + tn) / total if total else None
    tpr = tp / (tp + fn) if tp + fn else None
    tnr = tn / (tn + fp) if tn + fp else None
    return accuracy, tpr, tnr, {"tp": tp, "tn": tn, "fp": fp, "fn": fn}


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def aggregate_timings(records: Iterable[WindowRecord]) -> dict[int, dict[str, float | None]]:
    """Per-node mean phase times in microseconds.

    Learning and update means cover only windows where the phase ran
    (non-frozen, post-warm-up); detection covers all post-warm-up windows.
    total is the sum of the available phase means.
    """
    by_node: dict[int, dict[str, list[float]]] = {}
    for rec in records:
        if rec.warmup:
            continue
        slot = by_node.setdefault(rec.node_id, {"learn": [], "update": [], "detect": []})
        if rec.learn_us is not None:
            slot["learn"].append(rec.learn_us)
        if rec.update_us is not None:
            slot["update"].append(rec.update_us)
        if rec.detect_us is not None:
            slot["detect"].append(rec.detect_us)
    out = {}
    for node_id, slot in sorted(by_node.items()):
        learn, update, detect = _mean(slot["learn"]), _mean(slot["update"]), _mean(slot["detect"])
        total = sum(v for v in (learn, update, detect) if v is not None)
        out[node_id] = {
            "learn_us": learn,
            "update_us": update,
            "detect_us": detect,
            "total_us": total if any(v is not None for v in (learn, update, detect)) else None,
        }
    return out


def build_report(records: Sequence[WindowRecord], config: dict | None = None) -> RunReport:
    """Fold a run log into per-node confusion counts, metrics and timings."""
    timings = aggregate_timings(records)
    nodes: dict[int, dict] = {}
    for rec in records:
        info = nodes.setdefault(
            rec.node_id,
            {"label": rec.label, "strategy": rec.strategy, "decisions": [], "truths": [],
             "frozen": 0},
        )
        if rec.warmup:
            continue
        info["decisions"].append(rec.y)
        info["truths"].append(rec.g)
        if rec.frozen:
            info["frozen"] += 1
    strategy = records[0].strategy if records else "?"
    reports = []
    for node_id, info in sorted(nodes.items()):
        accuracy, tpr, tnr, confusion = compute_metrics(info["decisions"], info["truths"])
        t = timings.get(node_id, {})
        reports.append(
            NodeReport(
                node_id=node_id,
                label=info["label"],
                strategy=info["strategy"],
                **confusion,
                accuracy=accuracy,
                tpr=tpr,
                tnr=tnr,
                mean_learn_us=t.get("learn_us"),
                mean_update_us=t.get("update_us"),
                mean_detect_us=t.get("detect_us"),
                mean_total_us=t.get("total_us"),
                evaluated_windows=len(info["decisions"]),
                frozen_windows=info["frozen"],
            )
        )
    return RunReport(strategy=strategy, nodes=reports, config=config or {})


def _fmt(value, digits=4) -> str:
    if value is None:
        return "n/a"
    return f"{value:.{digits}f}"


TABLE_COLUMNS = (
    "node", "strategy", "accuracy", "tpr", "tnr", "tp", "tn", "fp", "fn",
    "learn_us", "update_us", "detect_us", "total_us",
)


def _report_rows(report: RunReport) -> list[dict]:
    rows = []
    for n in report.nodes:
        rows.append({
            "node": n.label,
            "strategy": n.strategy,
            "accuracy": n.accuracy,
            "tpr": n.tpr,
            "tnr": n.tnr,
            "tp": n.tp,
            "tn": n.tn,
            "fp": n.fp,
            "fn": n.fn,
            "learn_us": n.mean_learn_us,
            "update_us": n.mean_update_us,
            "detect_us": n.mean_detect_us,
            "total_us": n.mean_total_us,
        })
    return rows


def emit_rows(rows: list[dict], fmt: str, fp: TextIO) -> None:
    """Write metric rows as a text table, JSON lines, or CSV."""
    if fmt == "table":
        cells = [[c for c in TABLE_COLUMNS]]
        for row in rows:
            cells.append([
                str(row["node"]), str(row["strategy"]),
                _fmt(row["accuracy"]), _fmt(row["tpr"]), _fmt(row["tnr"]),
                str(row["tp"]), str(row["tn"]), str(row["fp"]), str(row["fn"]),
                _fmt(row["learn_us"], 1), _fmt(row["update_us"], 1),
                _fmt(row["detect_us"], 1), _fmt(row["total_us"], 1),
            ])
        widths = [max(len(r[i]) for r in cells) for i in range(len(TABLE_COLUMNS))]
        for r in cells:
            fp.write("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() + "\n")
    elif fmt == "json_lines":
        for row in rows:
            fp.write(json.dumps(row, sort_keys=True) + "\n")
    elif fmt == "csv":
        writer = csv.writer(fp)
        writer.writerow(TABLE_COLUMNS)
        for row in rows:
            writer.writerow([
                row["node"], row["strategy"],
                *("n/a" if row[k] is None else repr(row[k]) if isinstance(row[k], float) else row[k]
                  for k in TABLE_COLUMNS[2:]),
            ])
    else:
        raise ValueError(f"unknown report format {fmt!r}; expected one of {REPORT_FORMATS}")


def emit_report(report: RunReport, fmt: str, fp: TextIO) -> None:
    emit_rows(_report_rows(report), fmt, fp)


def build_comparison(reports: Sequence[RunReport], strategies: Sequence[str] | None = None) -> list[dict]:
    """Per-node metric rows across runs, ready to redraw bar/box figures."""
    rows = []
    for report in reports:
        rows.extend(_report_rows(report))
    if strategies:
        wanted = set(strategies)
        rows = [r for r in rows if r["strategy"] in wanted]
    rows.sort(key=lambda r: (r["strategy"], r["node"]))
    return rows


def emit_update_time_pivot(rows: list[dict], fp: TextIO) -> None:
    """Mean federated-update time per window: strategy rows, node columns."""
    nodes = sorted({r["node"] for r in rows})
    strategies = sorted({r["strategy"] for r in rows})
    cells = [["update_us"] + [str(n) for n in nodes]]
    for strategy in strategies:
        row = [strategy]
        for node in nodes:
            match = [r for r in rows if r["strategy"] == strategy and r["node"] == node]
            row.append(_fmt(match[0]["update_us"], 1) if match else "n/a")
        cells.append(row)
    widths = [max(len(r[i]) for r in cells) for i in range(len(cells[0]))]
    for r in cells:
        fp.write("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() + "\n")


def write_runlog(records: Sequence[WindowRecord], fp: TextIO, config: dict | None = None) -> None:
    """Line-delimited run log: one meta line, then one line per (node, window)."""
    meta = {"type": "meta"}
    meta.update(config or {})
    fp.write(json.dumps(meta, sort_keys=True) + "\n")
    for rec in records:
        doc = {"type": "window"}
        doc.update(asdict(rec))
        fp.write(json.dumps(doc, sort_keys=True) + "\n")


def read_runlog(fp: TextIO) -> tuple[list[WindowRecord], dict]:
    """Parse a run log back into records plus the meta line."""
    meta: dict = {}
    records = []
    for line in fp:
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        kind = doc.pop("type", "window")
        if kind == "meta":
            meta = doc
            continue
        records.append(WindowRecord(**doc))
    return records, meta


def runlog_to_string(records: Sequence[WindowRecord], config: dict | None = None) -> str:
    buf = io.StringIO()
    write_runlog(records, buf, config)
    return buf.getvalue()
