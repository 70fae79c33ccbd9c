"""End-to-end orchestration: signals file in, evaluation report out.

Stages: ingest -> (optional) peak compression per window -> visibility
transform per channel -> (optional) edge-adjacency expansion -> embedding
and fusion -> (optional) PCA -> train/evaluate. Every stage's artifacts are
persisted under the output directory, and a manifest records the config
digest plus a content digest of every file written, so a finished directory
is self-describing and reruns can be compared byte for byte.

Per-signal work inside a stage runs in a bounded worker pool (VISTRA_THREADS
caps it); stage boundaries are barriers, and results are collected in input
order so parallelism never changes an artifact.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from .classify import EvalReport, ForestParams, evaluate_split, kfold_cv, rf_train
from .errors import DataFormatError, PipelineStageError
from .features import FeatureMatrix, WlConfig, fuse, pca_fit, pca_fit_variance, pca_transform, wl_embed
from .graphs import Graph, avg_clustering, degree_distribution, sgn1
from .io import GraphDir, GraphEntry, SignalRecord, read_graph_dir, read_signal_records, write_graph_dir, write_signal_records
from .signals import PeakDetectParams, TimeSeries, derive_channels, peak_compress
from .visibility import VgParams

__all__ = [
    "PipelineConfig",
    "run_pipeline",
    "parallel_map",
    "write_feature_csv",
    "read_feature_csv",
    "emit_accuracy_vs_snr",
    "emit_degree_histograms",
    "compute_graph_metrics",
]

_CONFIG_KEYS = {
    "dataset", "channels", "method", "windows", "sgn", "wl", "pca",
    "classifier", "eval", "seed", "out_dir",
}


def pool_size() -> int:
    """Worker-pool bound: VISTRA_THREADS when set, else a small default."""
    env = os.environ.get("VISTRA_THREADS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"VISTRA_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ValueError(f"VISTRA_THREADS must be at least 1, got {n}")
        return n
    return min(8, os.cpu_count() or 1)


def parallel_map(fn, items: list) -> list:
    """Map preserving input order, bounded by pool_size()."""
    items = list(items)
    size = pool_size()
    if size == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=size) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class PipelineConfig:
    """Validated pipeline settings; see from_dict for the JSON schema."""

    dataset: str
    channels: tuple[str, ...]
    method: str = "clpvg"
    m: int = 1
    alpha: dict | None = None  # channel -> alpha; None for straight-line methods
    windows: tuple[int, ...] = ()
    sgn: bool = True
    wl: WlConfig = field(default_factory=WlConfig)
    pca_theta: int | None = None
    pca_variance: float | None = 0.95
    classifier: ForestParams = field(default_factory=ForestParams)
    eval_mode: str = "split"
    eval_ratio: float = 0.8
    eval_k: int = 10
    seed: int = 0
    out_dir: str = "out"

    @classmethod
    def from_dict(cls, obj: dict, base_dir: str | None = None) -> "PipelineConfig":
        if not isinstance(obj, dict):
            raise ValueError("config must be a JSON object")
        unknown = set(obj) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("dataset", "channels"):
            if key not in obj:
                raise ValueError(f"config is missing {key!r}")
        dataset = obj["dataset"]
        if base_dir is not None and not os.path.isabs(dataset):
            dataset = os.path.join(base_dir, dataset)
        if not Path(dataset).is_file():
            raise ValueError(f"dataset path does not exist: {dataset}")
        channels = tuple(obj["channels"])
        if not channels or len(set(channels)) != len(channels):
            raise ValueError("channels must be a non-empty list of unique names")

        method_obj = obj.get("method", {})
        if not isinstance(method_obj, dict):
            raise ValueError("method must be an object")
        method = method_obj.get("method", "clpvg")
        m = method_obj.get("m", 1)
        raw_alpha = method_obj.get("alpha", 10.0)
        alpha: dict | None = None
        if method == "clpvg":
            if isinstance(raw_alpha, dict):
                missing = set(channels) - set(raw_alpha)
                if missing:
                    raise ValueError(f"alpha missing for channels {sorted(missing)}")
                alpha = {ch: float(raw_alpha[ch]) for ch in channels}
            else:
                alpha = {ch: float(raw_alpha) for ch in channels}
            for ch, a in alpha.items():
                VgParams(method="clpvg", m=int(m), alpha=a)  # validates
        else:
            VgParams(method=method, m=int(m), alpha=10.0)

        windows = tuple(int(w) for w in obj.get("windows", []))
        if any(w < 1 for w in windows):
            raise ValueError("window widths must be positive")
        if len(set(windows)) != len(windows):
            raise ValueError("window widths must be unique")

        wl_obj = obj.get("wl", {})
        wl = WlConfig(h=int(wl_obj.get("h", 3)), dim=int(wl_obj.get("dim", 128)))

        pca_obj = obj.get("pca", {"variance": 0.95})
        pca_theta = None
        pca_variance = None
        if pca_obj is not None:
            if not isinstance(pca_obj, dict) or ("theta" in pca_obj) == ("variance" in pca_obj):
                raise ValueError("pca must be null or set exactly one of theta/variance")
            if "theta" in pca_obj:
                pca_theta = int(pca_obj["theta"])
            else:
                pca_variance = float(pca_obj["variance"])

        cls_obj = obj.get("classifier", {})
        classifier = ForestParams(
            n_trees=int(cls_obj.get("n_trees", 200)),
            max_depth=cls_obj.get("max_depth"),
            min_leaf=int(cls_obj.get("min_leaf", 1)),
            feature_frac=cls_obj.get("feature_frac", "sqrt"),
            seed=int(obj.get("seed", 0)),
        )

        eval_obj = obj.get("eval", {"mode": "split", "ratio": 0.8})
        mode = eval_obj.get("mode", "split")
        if mode not in ("split", "cv"):
            raise ValueError(f"eval mode must be 'split' or 'cv', got {mode!r}")

        return cls(
            dataset=str(dataset),
            channels=channels,
            method=str(method),
            m=int(m),
            alpha=alpha,
            windows=windows,
            sgn=bool(obj.get("sgn", True)),
            wl=wl,
            pca_theta=pca_theta,
            pca_variance=pca_variance,
            classifier=classifier,
            eval_mode=mode,
            eval_ratio=float(eval_obj.get("ratio", 0.8)),
            eval_k=int(eval_obj.get("k", 10)),
            seed=int(obj.get("seed", 0)),
            out_dir=str(obj.get("out_dir", "out")),
        )

    def canonical_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "channels": list(self.channels),
            "method": {"method": self.method, "m": self.m, "alpha": self.alpha},
            "windows": list(self.windows),
            "sgn": self.sgn,
            "wl": {"h": self.wl.h, "dim": self.wl.dim},
            "pca": ({"theta": self.pca_theta} if self.pca_theta is not None
                    else {"variance": self.pca_variance} if self.pca_variance is not None
                    else None),
            "classifier": {
                "n_trees": self.classifier.n_trees,
                "max_depth": self.classifier.max_depth,
                "min_leaf": self.classifier.min_leaf,
                "feature_frac": self.classifier.feature_frac,
            },
            "eval": ({"mode": "split", "ratio": self.eval_ratio} if self.eval_mode == "split"
                     else {"mode": "cv", "k": self.eval_k}),
            "seed": self.seed,
            "out_dir": self.out_dir,
        }


def _prepare_channels(records: list[SignalRecord], channels: tuple[str, ...]) -> list[SignalRecord]:
    """Restrict each record to the requested channels, deriving amplitude (A)
    and phase (W) from I/Q when they are requested but absent."""
    out = []
    for i, rec in enumerate(records):
        chans = dict(rec.channels)
        need_derived = [ch for ch in channels if ch not in chans]
        if need_derived:
            if not set(need_derived) <= {"A", "W"} or not {"I", "Q"} <= set(chans):
                raise PipelineStageError("ingest", str(i), ValueError(
                    f"channels {need_derived} not present and not derivable"))
            amp, phase = derive_channels(chans["I"], chans["Q"])
            chans.setdefault("A", amp)
            chans.setdefault("W", phase)
        out.append(SignalRecord(label=rec.label, snr_db=rec.snr_db,
                                channels={ch: chans[ch] for ch in channels}))
    return out


def _compress_record(rec: SignalRecord, w: int, signal_id: int) -> SignalRecord:
    try:
        chans = {name: peak_compress(ts, PeakDetectParams(w=w)) for name, ts in rec.channels.items()}
    except ValueError as exc:
        raise PipelineStageError("compress", str(signal_id), exc) from exc
    return SignalRecord(label=rec.label, snr_db=rec.snr_db, channels=chans)


def _transform_record(rec: SignalRecord, cfg: PipelineConfig, signal_id: int) -> dict[str, Graph]:
    graphs = {}
    for ch, ts in rec.channels.items():
        try:
            params = VgParams(method=cfg.method, m=cfg.m,
                              alpha=cfg.alpha[ch] if cfg.alpha else 10.0)
            graphs[ch] = params.build(ts)
        except (ValueError, ArithmeticError) as exc:
            raise PipelineStageError("transform", f"{signal_id}:{ch}", exc) from exc
    return graphs


def _graph_dir_index(cfg: PipelineConfig, records, graphs_per_record, order: int) -> tuple[GraphDir, list[Graph]]:
    entries = []
    flat = []
    for i, (rec, graphs) in enumerate(zip(records, graphs_per_record)):
        for ch in cfg.channels:
            g = graphs[ch]
            entries.append(GraphEntry(file=f"{i:05d}_{ch}.edges", signal=i, channel=ch,
                                      label=rec.label, snr_db=rec.snr_db, n=g.n))
            flat.append(g)
    index = GraphDir(channels=list(cfg.channels), method=cfg.method, m=cfg.m,
                     alpha=cfg.alpha, order=order, entries=entries)
    return index, flat


def embed_graph_group(graphs_by_channel: dict[str, Graph], channels, wl_cfg: WlConfig,
                      with_sgn: bool, signal_id: int | None = None) -> np.ndarray:
    """Fuse one signal's channel graphs: order-0 blocks then order-1 blocks."""
    parts = [wl_embed(graphs_by_channel[ch], wl_cfg) for ch in channels]
    if with_sgn:
        for ch in channels:
            try:
                parts.append(wl_embed(sgn1(graphs_by_channel[ch]), wl_cfg))
            except ValueError as exc:
                raise PipelineStageError("sgn", f"{signal_id}:{ch}", exc) from exc
    return fuse(parts)


def _feature_meta(cfg: PipelineConfig, window_key: str) -> list[str]:
    meta = []
    orders = [0, 1] if cfg.sgn else [0]
    for order in orders:
        for ch in cfg.channels:
            meta.extend(f"{window_key}:{ch}:g{order}:{i}" for i in range(cfg.wl.dim))
    return meta


def _fmt_float(v: float) -> str:
    return repr(float(v))


def write_feature_csv(path, fm: FeatureMatrix) -> None:
    lines = ["label,snr_db," + ",".join(fm.column_meta)]
    snrs = fm.snr_db if fm.snr_db is not None else [None] * fm.rows.shape[0]
    for lab, snr, row in zip(fm.labels, snrs, fm.rows):
        snr_txt = "" if snr is None else _fmt_float(snr)
        lines.append(lab + "," + snr_txt + "," + ",".join(_fmt_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_feature_csv(path) -> FeatureMatrix:
    p = Path(path)
    lines = p.read_text().splitlines()
    if not lines:
        raise DataFormatError("empty feature file", line=1, path=str(p))
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "label" or header[1] != "snr_db":
        raise DataFormatError("expected header 'label,snr_db,<features...>'", line=1, path=str(p))
    meta = header[2:]
    labels = []
    snrs: list[float | None] = []
    rows = []
    for no, raw in enumerate(lines[1:], start=2):
        parts = raw.split(",")
        if len(parts) != len(header):
            raise DataFormatError(f"expected {len(header)} fields, got {len(parts)}", line=no, path=str(p))
        labels.append(parts[0])
        snrs.append(None if parts[1] == "" else float(parts[1]))
        try:
            rows.append([float(v) for v in parts[2:]])
        except ValueError:
            raise DataFormatError("non-numeric feature value", line=no, path=str(p)) from None
    if not rows:
        raise DataFormatError("no data rows", line=1, path=str(p))
    return FeatureMatrix(rows=np.asarray(rows, dtype=np.float64), labels=labels,
                         column_meta=meta, snr_db=snrs)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run_pipeline(cfg: PipelineConfig) -> EvalReport:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    records = read_signal_records(cfg.dataset)
    records = _prepare_channels(records, cfg.channels)
    write_signal_records(out / "signals.jsonl", records)

    window_keys: list[tuple[str, int | None]] = (
        [(f"w{w}", w) for w in cfg.windows] if cfg.windows else [("raw", None)]
    )

    per_window: list[FeatureMatrix] = []
    for key, w in window_keys:
        if w is None:
            stage_records = records
        else:
            stage_records = parallel_map(
                lambda pair: _compress_record(pair[1], w, pair[0]), list(enumerate(records)))
            (out / "compressed").mkdir(exist_ok=True)
            write_signal_records(out / "compressed" / f"{key}.jsonl", stage_records)

        graphs_per_record = parallel_map(
            lambda pair: _transform_record(pair[1], cfg, pair[0]), list(enumerate(stage_records)))
        index0, flat0 = _graph_dir_index(cfg, stage_records, graphs_per_record, order=0)
        write_graph_dir(out / "graphs" / key / "order0", index0, flat0)

        if cfg.sgn:
            def _expand(pair):
                i, graphs = pair
                expanded = {}
                for ch, g in graphs.items():
                    try:
                        expanded[ch] = sgn1(g)
                    except ValueError as exc:
                        raise PipelineStageError("sgn", f"{i}:{ch}", exc) from exc
                return expanded
            sgn_per_record = parallel_map(_expand, list(enumerate(graphs_per_record)))
            index1, flat1 = _graph_dir_index(cfg, stage_records, sgn_per_record, order=1)
            write_graph_dir(out / "graphs" / key / "order1", index1, flat1)

        rows = parallel_map(
            lambda pair: embed_graph_group(pair[1], cfg.channels, cfg.wl, cfg.sgn, pair[0]),
            list(enumerate(graphs_per_record)))
        fm = FeatureMatrix(
            rows=np.vstack(rows),
            labels=[r.label for r in stage_records],
            column_meta=_feature_meta(cfg, key),
            snr_db=[r.snr_db for r in stage_records],
        )
        (out / "features").mkdir(exist_ok=True)
        write_feature_csv(out / "features" / f"{key}.csv", fm)
        per_window.append(fm)

    fused = per_window[0] if len(per_window) == 1 else FeatureMatrix(
        rows=np.hstack([fm.rows for fm in per_window]),
        labels=per_window[0].labels,
        column_meta=[m for fm in per_window for m in fm.column_meta],
        snr_db=per_window[0].snr_db,
    )
    write_feature_csv(out / "features" / "fused.csv", fused)

    final = fused
    if cfg.pca_theta is not None or cfg.pca_variance is not None:
        model = (pca_fit(fused, cfg.pca_theta) if cfg.pca_theta is not None
                 else pca_fit_variance(fused, cfg.pca_variance))
        final = pca_transform(model, fused)
        write_feature_csv(out / "features" / "pca.csv", final)
        (out / "model").mkdir(exist_ok=True)
        (out / "model" / "pca.json").write_text(json.dumps({
            "mean": model.mean.tolist(),
            "components": model.components.tolist(),
            "explained_variance": model.explained_variance.tolist(),
        }, sort_keys=True) + "\n")

    if cfg.eval_mode == "split":
        report, forest = evaluate_split(final, cfg.eval_ratio, cfg.classifier, cfg.seed)
        (out / "model").mkdir(exist_ok=True)
        (out / "model" / "forest.json").write_text(
            json.dumps(forest.to_dict(), sort_keys=True) + "\n")
    else:
        report = kfold_cv(final, cfg.eval_k, cfg.classifier, cfg.seed)

    (out / "report.json").write_text(report.to_json())

    canonical = json.dumps(cfg.canonical_dict(), sort_keys=True, separators=(",", ":"))
    files = {}
    for path in sorted(out.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            files[str(path.relative_to(out))] = _sha256(path)
    manifest = {
        "config": cfg.canonical_dict(),
        "config_digest": hashlib.sha256(canonical.encode()).hexdigest(),
        "seed": cfg.seed,
        "files": files,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return report


def compute_graph_metrics(dirpath) -> list[dict]:
    """Per-graph structural metrics for a graph directory, in index order."""
    index, graphs = read_graph_dir(dirpath)
    out = []
    for entry, g in zip(index.entries, graphs):
        out.append({
            "signal": entry.signal,
            "channel": entry.channel,
            "method": index.method,
            "order": index.order,
            "label": entry.label,
            "n": g.n,
            "m_edges": g.m_edges,
            "avg_clustering": avg_clustering(g) if g.n else 0.0,
        })
    return out


def write_metrics_csv(path, metrics: list[dict]) -> None:
    cols = ["signal", "channel", "method", "order", "label", "n", "m_edges", "avg_clustering"]
    lines = [",".join(cols)]
    for row in metrics:
        lines.append(",".join(
            _fmt_float(row[c]) if c == "avg_clustering" else str(row[c]) for c in cols))
    Path(path).write_text("\n".join(lines) + "\n")


def emit_degree_histograms(dirpath, out_dir) -> list[Path]:
    """One 'degree,count' CSV per graph, named after its edge-list file."""
    index, graphs = read_graph_dir(dirpath)
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for entry, g in zip(index.entries, graphs):
        dd = degree_distribution(g)
        lines = ["degree,count"]
        lines.extend(f"{deg},{cnt}" for deg, cnt in sorted(dd.counts.items()))
        target = d / (Path(entry.file).stem + "_degree_hist.csv")
        target.write_text("\n".join(lines) + "\n")
        written.append(target)
    return written


def emit_accuracy_vs_snr(report_path, out_csv) -> Path:
    """Accuracy per SNR group from a report's per-sample predictions.

    Rows are sorted by SNR ascending with the clean group (null) last; the
    header is written even when the report has no samples.
    """
    obj = json.loads(Path(report_path).read_text())
    samples = obj.get("samples") or []
    groups: dict = {}
    for s in samples:
        groups.setdefault(s["snr_db"], []).append(s["label"] == s["pred"])
    lines = ["snr_db,count,accuracy"]
    numeric = sorted(k for k in groups if k is not None)
    for key in numeric + ([None] if None in groups else []):
        hits = groups[key]
        name = "clean" if key is None else _fmt_float(key)
        lines.append(f"{name},{len(hits)},{_fmt_float(sum(hits) / len(hits))}")
    target = Path(out_csv)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text("\n".join(lines) + "\n")
    return target
