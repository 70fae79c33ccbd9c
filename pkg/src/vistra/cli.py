"""Command-line interface.

Subcommands cover each stage (generate, convert-validate, compress,
transform, sgn, metrics, embed, pca, classify, plot-data) plus `pipeline`,
which runs everything from a JSON config. Exit codes: 0 success, 1 usage
errors, 2 malformed or missing data, 3 numeric failures.
"""

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .classify import ForestParams, evaluate_split, kfold_cv
from .errors import DataFormatError, NumericOverflowError, PipelineStageError
from .features import FeatureMatrix, WlConfig, pca_fit, pca_fit_variance, pca_transform
from .graphs import sgn1
from .io import GraphDir, GraphEntry, SignalRecord, read_graph_dir, read_signal_records, validate_signals_file, write_graph_dir, write_signal_records
from .pipeline import (
    PipelineConfig,
    compute_graph_metrics,
    embed_graph_group,
    emit_accuracy_vs_snr,
    emit_degree_histograms,
    read_feature_csv,
    run_pipeline,
    write_feature_csv,
    write_metrics_csv,
)
from .signals import (
    LORENZ_INIT,
    ROSSLER_INIT,
    PeakDetectParams,
    TimeSeries,
    add_awgn,
    gen_sinusoid,
    integrate_lorenz,
    integrate_rossler,
    peak_compress,
)
from .visibility import VgParams

_DEFAULT_DT = {"sin": 0.01, "lorenz": 0.01, "rossler": 0.1}


@click.group()
def cli():
    """Time series to visibility graphs to classification."""


@cli.command()
@click.option("--kind", type=click.Choice(["sin", "lorenz", "rossler"]), required=True)
@click.option("--n", type=int, default=1000, show_default=True, help="samples per signal")
@click.option("--dt", type=float, default=None, help="sample step (default depends on kind)")
@click.option("--init", "init_str", type=str, default=None,
              help="'x,y,z' for the flows, a phase offset for sin; random per signal when omitted")
@click.option("--snr-db", type=float, default=None, help="add noise at this SNR; omit for clean")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=1, show_default=True, help="signals to generate")
@click.option("--label", type=str, default=None, help="record label (defaults to the kind)")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def generate(kind, n, dt, init_str, snr_db, seed, count, label, out_path):
    """Generate labeled signals as JSONL (channel name 'x')."""
    if count < 1:
        raise click.UsageError("--count must be positive")
    dt = _DEFAULT_DT[kind] if dt is None else dt
    rng = np.random.default_rng(seed)
    fixed_init = None
    if init_str is not None:
        parts = [float(v) for v in init_str.split(",")]
        if kind == "sin":
            if len(parts) != 1:
                raise click.UsageError("--init for sin is a single phase offset")
            fixed_init = parts[0]
        else:
            if len(parts) != 3:
                raise click.UsageError("--init for the flows is 'x,y,z'")
            fixed_init = tuple(parts)
    records = []
    for _ in range(count):
        if kind == "sin":
            t0 = fixed_init if fixed_init is not None else float(rng.uniform(0.0, 0.4))
            ts = gen_sinusoid(n, dt, t0=t0)
        elif kind == "lorenz":
            init = fixed_init if fixed_init is not None else tuple(
                base + float(rng.uniform(-1.0, 1.0)) for base in LORENZ_INIT)
            ts = integrate_lorenz(n, dt, init=init)
        else:
            init = fixed_init if fixed_init is not None else tuple(
                base + float(rng.uniform(-1.0, 1.0)) for base in ROSSLER_INIT)
            ts = integrate_rossler(n, dt, init=init)
        noise_seed = int(rng.integers(0, 2**63 - 1))
        snr = None
        if snr_db is not None:
            ts = add_awgn(ts, snr_db, seed=noise_seed)
            snr = float(snr_db)
        # strip the phase offset: values carry it, the grid restarts at zero
        ts = TimeSeries(ts.values, dt=dt)
        records.append(SignalRecord(label=label or kind, snr_db=snr, channels={"x": ts}))
    write_signal_records(out_path, records)
    click.echo(f"wrote {len(records)} signal(s) to {out_path}")


@cli.command("convert-validate")
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
def convert_validate(in_path):
    """Validate a JSONL signals file; exit 2 with a line number on failure."""
    count = validate_signals_file(in_path)
    click.echo(f"validated {count} record(s)")


@cli.command()
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--w", type=int, required=True, help="half-window width")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def compress(in_path, w, out_path):
    """Peak-compress every channel; output keeps explicit timestamps."""
    params = PeakDetectParams(w=w)
    records = read_signal_records(in_path)
    out = []
    for i, rec in enumerate(records):
        try:
            chans = {name: peak_compress(ts, params) for name, ts in rec.channels.items()}
        except ValueError as exc:
            raise PipelineStageError("compress", str(i), exc) from exc
        out.append(SignalRecord(label=rec.label, snr_db=rec.snr_db, channels=chans))
    write_signal_records(out_path, out)
    click.echo(f"compressed {len(out)} record(s) to {out_path}")


def _parse_alpha(alpha_opts, channels):
    """--alpha accepts a plain value (all channels) or CH=VALUE per channel."""
    if not alpha_opts:
        return {ch: 10.0 for ch in channels}
    named = {}
    plain = None
    for raw in alpha_opts:
        if "=" in raw:
            name, _, val = raw.partition("=")
            named[name] = float(val)
        elif plain is None:
            plain = float(raw)
        else:
            raise click.UsageError("at most one plain --alpha value")
    out = {}
    for ch in channels:
        out[ch] = named.get(ch, plain if plain is not None else 10.0)
    extra = set(named) - set(channels)
    if extra:
        raise click.UsageError(f"--alpha names unknown channels: {sorted(extra)}")
    return out


@cli.command()
@click.option("--method", type=click.Choice(["vg", "lpvg", "clpvg"]), required=True)
@click.option("--m", type=int, default=1, show_default=True)
@click.option("--alpha", "alpha_opts", multiple=True,
              help="arc curvature; plain value or CH=VALUE, repeatable")
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--channel", "channels", multiple=True,
              help="channels to transform (default: all in the first record)")
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def transform(method, m, alpha_opts, in_path, channels, out_dir):
    """Build one visibility graph per signal per channel."""
    records = read_signal_records(in_path)
    channels = list(channels) if channels else list(records[0].channels)
    alpha = _parse_alpha(alpha_opts, channels)
    entries = []
    graphs = []
    for i, rec in enumerate(records):
        for ch in channels:
            if ch not in rec.channels:
                raise DataFormatError(f"record {i} lacks channel {ch!r}", path=in_path)
            params = VgParams(method=method, m=m, alpha=alpha[ch] if method == "clpvg" else 10.0)
            try:
                g = params.build(rec.channels[ch])
            except ValueError as exc:
                raise PipelineStageError("transform", f"{i}:{ch}", exc) from exc
            entries.append(GraphEntry(file=f"{i:05d}_{ch}.edges", signal=i, channel=ch,
                                      label=rec.label, snr_db=rec.snr_db, n=g.n))
            graphs.append(g)
    index = GraphDir(channels=channels, method=method, m=m,
                     alpha=alpha if method == "clpvg" else None, order=0, entries=entries)
    write_graph_dir(out_dir, index, graphs)
    click.echo(f"wrote {len(graphs)} graph(s) to {out_dir}")


@cli.command()
@click.option("--in-dir", type=click.Path(file_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--mapping/--no-mapping", default=False,
              help="also write node-id -> source-edge sidecar files")
def sgn(in_dir, out_dir, mapping):
    """Expand every graph to its edge-adjacency (line) graph."""
    index, graphs = read_graph_dir(in_dir)
    expanded = []
    for entry, g in zip(index.entries, graphs):
        try:
            expanded.append(sgn1(g))
        except ValueError as exc:
            raise DataFormatError(f"{entry.file}: {exc}", path=in_dir) from None
    out_index = GraphDir(channels=index.channels, method=index.method, m=index.m,
                         alpha=index.alpha, order=index.order + 1,
                         entries=[GraphEntry(file=e.file, signal=e.signal, channel=e.channel,
                                             label=e.label, snr_db=e.snr_db, n=g.n)
                                  for e, g in zip(index.entries, expanded)])
    write_graph_dir(out_dir, out_index, expanded)
    if mapping:
        for entry, g in zip(index.entries, graphs):
            side = Path(out_dir) / (Path(entry.file).stem + "_nodes.json")
            side.write_text(json.dumps([list(e) for e in g.edges]) + "\n")
    click.echo(f"expanded {len(expanded)} graph(s) to {out_dir}")


@cli.command()
@click.option("--in-dir", type=click.Path(file_okay=False), required=True)
@click.option("--out-csv", type=click.Path(dir_okay=False), required=True)
@click.option("--hist-dir", type=click.Path(file_okay=False), default=None,
              help="where to write per-graph degree histograms (default: alongside the CSV)")
def metrics(in_dir, out_csv, hist_dir):
    """Structural metrics per graph plus degree histograms."""
    rows = compute_graph_metrics(in_dir)
    write_metrics_csv(out_csv, rows)
    hist_dir = hist_dir or str(Path(out_csv).with_suffix("")) + "_hists"
    written = emit_degree_histograms(in_dir, hist_dir)
    click.echo(f"wrote {len(rows)} metric row(s) to {out_csv} and {len(written)} histogram(s) to {hist_dir}")


@cli.command()
@click.option("--in-dir", type=click.Path(file_okay=False), required=True)
@click.option("--h", type=int, default=3, show_default=True)
@click.option("--dim", type=int, default=128, show_default=True)
@click.option("--with-sgn/--no-sgn", default=True, show_default=True,
              help="append embeddings of the expanded graphs")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def embed(in_dir, h, dim, with_sgn, out_path):
    """Embed each signal's graphs into one fused feature row."""
    index, graphs = read_graph_dir(in_dir)
    cfg = WlConfig(h=h, dim=dim)
    by_signal: dict[int, dict[str, object]] = {}
    meta_by_signal: dict[int, tuple[str, float | None]] = {}
    for entry, g in zip(index.entries, graphs):
        by_signal.setdefault(entry.signal, {})[entry.channel] = g
        meta_by_signal[entry.signal] = (entry.label, entry.snr_db)
    rows = []
    labels = []
    snrs = []
    for sig in sorted(by_signal):
        group = by_signal[sig]
        missing = [ch for ch in index.channels if ch not in group]
        if missing:
            raise DataFormatError(f"signal {sig} lacks channels {missing}", path=in_dir)
        rows.append(embed_graph_group(group, index.channels, cfg, with_sgn, sig))
        label, snr = meta_by_signal[sig]
        labels.append(label)
        snrs.append(snr)
    meta = []
    for order in ([0, 1] if with_sgn else [0]):
        for ch in index.channels:
            meta.extend(f"{ch}:g{order}:{i}" for i in range(dim))
    fm = FeatureMatrix(rows=np.vstack(rows), labels=labels, column_meta=meta, snr_db=snrs)
    write_feature_csv(out_path, fm)
    click.echo(f"embedded {len(labels)} signal(s) to {out_path}")


@cli.command()
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--theta", type=int, default=None, help="component count")
@click.option("--variance", type=float, default=None, help="retained-variance target in (0, 1]")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--model-out", type=click.Path(dir_okay=False), default=None)
def pca(in_path, theta, variance, out_path, model_out):
    """Project a feature CSV onto its principal components."""
    if (theta is None) == (variance is None):
        raise click.UsageError("set exactly one of --theta / --variance")
    fm = read_feature_csv(in_path)
    model = pca_fit(fm, theta) if theta is not None else pca_fit_variance(fm, variance)
    write_feature_csv(out_path, pca_transform(model, fm))
    if model_out:
        Path(model_out).write_text(json.dumps({
            "mean": model.mean.tolist(),
            "components": model.components.tolist(),
            "explained_variance": model.explained_variance.tolist(),
        }, sort_keys=True) + "\n")
    click.echo(f"projected {fm.shape[0]} row(s) onto {model.theta} component(s)")


@cli.command()
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--mode", type=click.Choice(["split", "cv"]), default="split", show_default=True)
@click.option("--ratio", type=float, default=0.8, show_default=True, help="train fraction (split mode)")
@click.option("--k", type=int, default=10, show_default=True, help="fold count (cv mode)")
@click.option("--trees", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--report", "report_path", type=click.Path(dir_okay=False), required=True)
def classify(in_path, mode, ratio, k, trees, seed, report_path):
    """Train and evaluate the forest on a feature CSV."""
    fm = read_feature_csv(in_path)
    params = ForestParams(n_trees=trees, seed=seed)
    if mode == "split":
        report, _ = evaluate_split(fm, ratio, params, seed)
    else:
        report = kfold_cv(fm, k, params, seed)
    Path(report_path).write_text(report.to_json())
    click.echo(f"accuracy {report.accuracy:.4f} over {len(report.samples)} test sample(s)")
    for lab in report.labels:
        pc = report.per_class[lab]
        click.echo(f"  {lab}: precision {pc['precision']:.4f} recall {pc['recall']:.4f}")
    if report.fold_accuracies:
        folds = " ".join(f"{a:.4f}" for a in report.fold_accuracies)
        click.echo(f"  folds: {folds}")
    click.echo(f"report written to {report_path}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="override config out_dir")
@click.option("--seed", type=int, default=None, help="override config seed")
def pipeline(config_path, out_dir, seed):
    """Run the full pipeline from a JSON config."""
    try:
        obj = json.loads(Path(config_path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid config JSON: {exc.msg}", path=config_path) from None
    if not isinstance(obj, dict):
        raise DataFormatError("config must be a JSON object", path=config_path)
    if out_dir is not None:
        obj["out_dir"] = out_dir
    if seed is not None:
        obj["seed"] = seed
    cfg = PipelineConfig.from_dict(obj, base_dir=str(Path(config_path).parent))
    report = run_pipeline(cfg)
    click.echo(f"pipeline done: accuracy {report.accuracy:.4f}, artifacts in {cfg.out_dir}")


@cli.command("plot-data")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
@click.option("--graphs-dir", type=click.Path(file_okay=False), default=None)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def plot_data(report_path, graphs_dir, out_dir):
    """Plotting-ready CSVs: accuracy versus SNR and/or degree histograms."""
    if report_path is None and graphs_dir is None:
        raise click.UsageError("need --report and/or --graphs-dir")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wrote = []
    if report_path is not None:
        wrote.append(emit_accuracy_vs_snr(report_path, out / "accuracy_vs_snr.csv"))
    if graphs_dir is not None:
        wrote.extend(emit_degree_histograms(graphs_dir, out))
    click.echo(f"wrote {len(wrote)} file(s) to {out_dir}")


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except NumericOverflowError as exc:
        click.echo(f"numeric error: {exc}", err=True)
        return 3
    except PipelineStageError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3 if isinstance(exc.cause, (NumericOverflowError, ArithmeticError)) else 2
    except (DataFormatError, FileNotFoundError, IsADirectoryError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except ValueError as exc:
        click.echo(f"invalid arguments: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
