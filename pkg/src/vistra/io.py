"""Portable serialization: JSONL signal records and graph directories.

One JSONL line per signal:

    {"label": "...", "snr_db": 20.0 | null, "dt": 0.01,
     "channels": {"I": [...], "Q": [...]},
     "times": {"I": [...]}}          # optional, compressed records only

Raw records (no "times") must have equal-length channels; compressed
records carry explicit per-channel timestamps and may have ragged lengths.
Floats are serialized with shortest round-trip repr, so write(read(path))
is lossless.

A graph directory holds one edge-list file per (signal, channel) plus an
index.json describing channel order and per-entry metadata; that index is
what lets embeddings and metrics re-associate graphs with labels.
"""

from dataclasses import dataclass
import json
import math
from pathlib import Path

import numpy as np

from .errors import DataFormatError
from .graphs import Graph, read_edgelist, write_edgelist
from .signals import MultiChannelSignal, TimeSeries

__all__ = [
    "SignalRecord",
    "read_signal_records",
    "write_signal_records",
    "validate_signals_file",
    "GraphDir",
    "GraphEntry",
]

_ALLOWED_KEYS = {"label", "snr_db", "dt", "channels", "times"}


@dataclass
class SignalRecord:
    """One signal: labeled channels, possibly compressed (ragged + times)."""

    label: str
    snr_db: float | None
    channels: dict[str, TimeSeries]

    @property
    def dt(self) -> float:
        return next(iter(self.channels.values())).dt

    def to_multichannel(self) -> MultiChannelSignal:
        return MultiChannelSignal(channels=dict(self.channels), label=self.label, snr_db=self.snr_db)

    @classmethod
    def from_multichannel(cls, sig: MultiChannelSignal) -> "SignalRecord":
        return cls(label=sig.label, snr_db=sig.snr_db, channels=dict(sig.channels))


def _parse_record(obj: dict, line: int, path: str) -> SignalRecord:
    if not isinstance(obj, dict):
        raise DataFormatError("record must be a JSON object", line=line, path=path)
    unknown = set(obj) - _ALLOWED_KEYS
    if unknown:
        raise DataFormatError(f"unknown keys {sorted(unknown)}", line=line, path=path)
    for key in ("label", "snr_db", "dt", "channels"):
        if key not in obj:
            raise DataFormatError(f"missing key {key!r}", line=line, path=path)
    label = obj["label"]
    if not isinstance(label, str) or not label:
        raise DataFormatError("label must be a non-empty string", line=line, path=path)
    snr = obj["snr_db"]
    if snr is not None and not isinstance(snr, (int, float)):
        raise DataFormatError("snr_db must be a number or null", line=line, path=path)
    if snr is not None and not math.isfinite(snr):
        raise DataFormatError("snr_db must be finite", line=line, path=path)
    dt = obj["dt"]
    if not isinstance(dt, (int, float)) or not math.isfinite(dt) or dt <= 0:
        raise DataFormatError("dt must be a positive number", line=line, path=path)
    chans = obj["channels"]
    if not isinstance(chans, dict) or not chans:
        raise DataFormatError("channels must be a non-empty object", line=line, path=path)
    times = obj.get("times")
    if times is not None:
        if not isinstance(times, dict) or set(times) != set(chans):
            raise DataFormatError("times must map exactly the channel names", line=line, path=path)
    out: dict[str, TimeSeries] = {}
    lengths = set()
    for name, vals in chans.items():
        if not isinstance(name, str) or not name:
            raise DataFormatError("channel names must be non-empty strings", line=line, path=path)
        if not isinstance(vals, list) or not vals:
            raise DataFormatError(f"channel {name!r} must be a non-empty array", line=line, path=path)
        try:
            arr = np.asarray(vals, dtype=np.float64)
        except (TypeError, ValueError):
            raise DataFormatError(f"channel {name!r} must hold finite numbers", line=line, path=path) from None
        if arr.ndim != 1 or not np.isfinite(arr).all():
            raise DataFormatError(f"channel {name!r} must hold finite numbers", line=line, path=path)
        lengths.add(arr.size)
        ts_times = None
        if times is not None:
            try:
                tv = np.asarray(times[name], dtype=np.float64)
            except (TypeError, ValueError):
                raise DataFormatError(f"times for channel {name!r} must be numeric",
                                      line=line, path=path) from None
            if tv.shape != arr.shape:
                raise DataFormatError(f"times for channel {name!r} must align with values",
                                      line=line, path=path)
            if not np.isfinite(tv).all() or (tv.size > 1 and not (np.diff(tv) > 0).all()):
                raise DataFormatError(f"times for channel {name!r} must be finite and strictly increasing",
                                      line=line, path=path)
            ts_times = tv
        try:
            out[name] = TimeSeries(arr, dt=float(dt), times=ts_times)
        except ValueError as exc:
            raise DataFormatError(f"channel {name!r}: {exc}", line=line, path=path) from None
    if times is None and len(lengths) != 1:
        raise DataFormatError("raw records need equal-length channels", line=line, path=path)
    return SignalRecord(label=label, snr_db=None if snr is None else float(snr), channels=out)


def read_signal_records(path) -> list[SignalRecord]:
    p = Path(path)
    records = []
    with p.open("r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"invalid JSON: {exc.msg}", line=line_no, path=str(p)) from None
            records.append(_parse_record(obj, line_no, str(p)))
    if not records:
        raise DataFormatError("no records found", line=1, path=str(p))
    return records


def record_to_obj(rec: SignalRecord) -> dict:
    obj: dict = {
        "label": rec.label,
        "snr_db": rec.snr_db,
        "dt": rec.dt,
        "channels": {name: ts.values.tolist() for name, ts in rec.channels.items()},
    }
    if any(ts.times is not None for ts in rec.channels.values()):
        obj["times"] = {name: ts.timestamps().tolist() for name, ts in rec.channels.items()}
    return obj


def write_signal_records(path, records: list[SignalRecord]) -> None:
    p = Path(path)
    with p.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_obj(rec), sort_keys=True) + "\n")


def validate_signals_file(path) -> int:
    """Parse and validate every record; returns the record count.

    Raises DataFormatError (with the line number) on the first problem.
    """
    return len(read_signal_records(path))


@dataclass
class GraphEntry:
    file: str
    signal: int
    channel: str
    label: str
    snr_db: float | None
    n: int


@dataclass
class GraphDir:
    """An on-disk set of edge lists plus the metadata to interpret them."""

    channels: list[str]
    method: str
    m: int
    alpha: dict[str, float] | None
    order: int  # 0 = base graphs, 1 = expanded
    entries: list[GraphEntry]

    def to_dict(self) -> dict:
        return {
            "channels": self.channels,
            "method": self.method,
            "m": self.m,
            "alpha": self.alpha,
            "order": self.order,
            "entries": [vars(e) for e in self.entries],
        }


def write_graph_dir(dirpath, index: GraphDir, graphs: list[Graph]) -> None:
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    if len(graphs) != len(index.entries):
        raise ValueError("one graph per index entry required")
    for entry, g in zip(index.entries, graphs):
        write_edgelist(g, d / entry.file)
    (d / "index.json").write_text(json.dumps(index.to_dict(), sort_keys=True, indent=2) + "\n")


def read_graph_dir(dirpath) -> tuple[GraphDir, list[Graph]]:
    d = Path(dirpath)
    index_path = d / "index.json"
    if not index_path.is_file():
        raise DataFormatError("missing index.json", path=str(d))
    try:
        obj = json.loads(index_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid index.json: {exc.msg}", path=str(index_path)) from None
    try:
        entries = tuple(GraphEntry(**e) for e in obj["entries"])
        index = GraphDir(channels=tuple(obj["channels"]), method=obj["method"], m=obj["m"],
                         alpha=obj["alpha"], order=obj["order"], entries=entries)
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"malformed index.json: {exc}", path=str(index_path)) from None
    graphs = [read_edgelist(d / e.file) for e in entries]
    return index, graphs
