"""Command-line entry point: one subcommand per pipeline stage.

Stages hand off through files::

    synth -> frames/*.csv -> extract -> signals/*.csv -> preprocess
          -> features -> features.csv -> train / sweep / predict -> evaluate

Exit codes: 0 success, 2 input error, 3 numeric failure, 4 config error.
"""

import argparse
import io
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plotting
from ._io import atomic_write_bytes, atomic_write_text, dumps_json, fmt
from .clinical import clarke_boundaries, clarke_zone, evaluate
from .config import load_config
from .errors import ConfigError, InputError, NumericError, ParseError, SchemaError, ShapeError
from .features import (
    assemble_features,
    central_difference,
    detect_peaks,
    format_feature_csv,
    get_schema,
    parse_feature_csv,
)
from .ingest import (
    NOISY_CHANNELS,
    extract_ppg,
    format_frame_stats,
    format_signal,
    parse_frame_stats,
    parse_signal,
)
from .pipeline import dataset_from_vectors
from .preprocess import als_correct, gaussian_bandpass, preprocess_pipeline
from .regression import PcrModel, pcr_predict, pcr_train, sweep_components, train_test_split
from .synth import GlucoseMap, synth_dataset, to_frame_stats

log = logging.getLogger("ppglucose")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_CONFIG = 0, 2, 3, 4


def _read_text(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except IsADirectoryError:
        raise InputError(f"expected a file, got a directory: {path}") from None


def _expand(inputs):
    """Files as given; directories contribute their ``*.csv`` in name order."""
    out = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            out.extend(sorted(path.glob("*.csv")))
        else:
            out.append(path)
    if not out:
        raise InputError("no input files")
    return out


def _out_path(args, default_name, option=None):
    if option:
        return Path(option)
    return Path(args.out_dir or ".") / default_name


def _labelled(pairs, what):
    out = {}
    for item in pairs or ():
        label, sep, path = item.partition("=")
        if not sep:
            label, path = Path(item).stem, item
        if label in out:
            raise InputError(f"duplicate {what} label {label!r}")
        out[label] = path
    return out


# -- synth ---------------------------------------------------------------------


def cmd_synth(args, cfg):
    seed = args.seed if args.seed is not None else 0
    ds = synth_dataset(
        args.n,
        GlucoseMap(noise_sigma=args.glucose_noise),
        seed,
        noise_sigma=args.noise_sigma,
    )
    out = Path(args.out_dir or "synth")
    files = {out / "manifest.json": dumps_json(ds.manifest)}
    rows = ["trial_id,subject_id,glucose_ref,age,stomach_state"]
    for t in ds.trials:
        rows.append(f"{t.trial_id},{t.subject_id},{fmt(t.glucose_ref)},{fmt(t.age)},{t.stomach_state}")
        frames = to_frame_stats(t.signal, seed=t.params.seed)
        files[out / "frames" / f"{t.trial_id}.csv"] = format_frame_stats(frames)
    files[out / "trials.csv"] = "\n".join(rows) + "\n"
    for path, text in files.items():
        atomic_write_text(path, text)
    print(f"wrote {len(ds)} synthetic trials to {out}")


# -- extract / preprocess -------------------------------------------------------


def cmd_extract(args, cfg):
    inputs = _expand(args.inputs)
    if args.output and len(inputs) != 1:
        raise InputError("-o/--output needs exactly one input")
    results = {}
    for path in inputs:
        try:
            series = parse_frame_stats(io.StringIO(_read_text(path)))
        except ParseError as exc:
            raise ParseError(f"{path}: {exc}") from None
        signal = extract_ppg(series, args.channel, args.flip)
        dest = Path(args.output) if args.output else Path(args.out_dir or "signals") / path.name
        results[dest] = format_signal(signal)
    if args.channel in NOISY_CHANNELS:
        print(f"warning: the {args.channel} channel is usually too noisy for PPG", file=sys.stderr)
    for dest, text in results.items():
        atomic_write_text(dest, text)


def cmd_preprocess(args, cfg):
    inputs = _expand(args.inputs)
    if args.output and len(inputs) != 1:
        raise InputError("-o/--output needs exactly one input")
    out_dir = Path(args.out_dir or "preprocessed")
    outputs = {}
    for path in inputs:
        signal = parse_signal(io.StringIO(_read_text(path)))
        result = preprocess_pipeline(signal, cfg.als, cfg.gauss)
        dest = Path(args.output) if args.output else out_dir / path.name
        outputs[dest] = format_signal(result).encode()
        if args.plot:
            als = als_correct(signal, cfg.als)
            filtered = gaussian_bandpass(als, cfg.gauss)
            d1 = central_difference(result)
            stages = {"raw": signal, "ALS": als, "Gaussian": filtered, "1st derivative": d1}
            peaks = {
                "Gaussian": detect_peaks(
                    filtered,
                    cfg.peak.min_separation,
                    cfg.peak.prominence_frac,
                    relative_prominence=cfg.peak.relative_prominence,
                ),
            }
            outputs[dest.with_suffix(".svg")] = plotting.stages_svg(stages, peaks)
    for dest, data in outputs.items():
        atomic_write_bytes(dest, data)


# -- features -------------------------------------------------------------------


def _read_labels(path):
    labels = {}
    lines = _read_text(path).splitlines()
    if not lines:
        raise ParseError(f"{path}: empty labels file", 1)
    header = [h.strip() for h in lines[0].split(",")]
    if "trial_id" not in header:
        raise ParseError(f"{path}: header must name a trial_id column", 1)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields", lineno)
        row = dict(zip(header, parts))
        entry = {}
        try:
            if row.get("glucose_ref"):
                entry["glucose_ref"] = float(row["glucose_ref"])
            if row.get("age"):
                entry["age"] = float(row["age"])
        except ValueError:
            raise ParseError(f"{path}: non-numeric value", lineno) from None
        if row.get("stomach_state"):
            entry["stomach_state"] = row["stomach_state"]
        labels[row["trial_id"]] = entry
    return labels


def cmd_features(args, cfg):
    schema = get_schema(args.schema or cfg.schema_id)
    labels = _read_labels(args.labels) if args.labels else {}
    vectors = []
    for path in _expand(args.inputs):
        signal = parse_signal(io.StringIO(_read_text(path)))
        trial_id = path.stem
        vectors.append(
            assemble_features(signal, schema, cfg.peak, trial_id=trial_id, **labels.get(trial_id, {}))
        )
    vectors.sort(key=lambda v: v.trial_id)
    dest = _out_path(args, "features.csv", args.output)
    atomic_write_text(dest, format_feature_csv(vectors, schema))


# -- regression -----------------------------------------------------------------


def _load_dataset(path):
    schema, vectors = parse_feature_csv(io.StringIO(_read_text(path)))
    return schema, vectors


def _split(ds, cfg):
    return train_test_split(ds, cfg.split.train_frac, cfg.split.seed, cfg.split.by)


def cmd_train(args, cfg):
    _, vectors = _load_dataset(args.features)
    ds = dataset_from_vectors(vectors)
    train, _ = _split(ds, cfg)
    k = args.k if args.k is not None else cfg.k
    model = pcr_train(train, k, cfg.standardize)
    atomic_write_text(_out_path(args, "model.json", args.output), model.to_json())


def cmd_predict(args, cfg):
    model = PcrModel.from_json(_read_text(args.model))
    schema, vectors = _load_dataset(args.features)
    if model.schema_id and schema.schema_id != model.schema_id:
        raise SchemaError(f"model expects schema {model.schema_id!r}, features are {schema.schema_id!r}")
    if args.subset != "all":
        ds = dataset_from_vectors(vectors)
        train, test = _split(ds, cfg)
        keep = set((test if args.subset == "test" else train).trial_ids)
        vectors = [v for v in vectors if v.trial_id in keep]
    X = np.vstack([v.values for v in vectors])
    pred = pcr_predict(model, X, schema.schema_id)
    rows = ["trial_id,glucose_ref,predicted"]
    for v, p in zip(vectors, pred):
        ref = "" if v.glucose_ref is None else fmt(v.glucose_ref)
        rows.append(f"{v.trial_id},{ref},{fmt(p)}")
    atomic_write_text(_out_path(args, "predictions.csv", args.output), "\n".join(rows) + "\n")


def _read_predictions(path):
    ids, ref, pred = [], [], []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip() or line.startswith("trial_id"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ParseError(f"{path}: expected 3 fields", lineno)
        if not parts[1]:
            raise ShapeError(f"{path}: trial {parts[0]} has no glucose_ref to evaluate against")
        try:
            ref.append(float(parts[1]))
            pred.append(float(parts[2]))
        except ValueError:
            raise ParseError(f"{path}: non-numeric value", lineno) from None
        ids.append(parts[0])
    if not ids:
        raise ShapeError(f"{path}: no predictions")
    return ids, np.array(ref), np.array(pred)


def _read_sweep(path):
    rows = []
    for lineno, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip() or line.startswith("k,"):
            continue
        try:
            k, s, r = line.split(",")
            rows.append((int(k), float(s), float(r)))
        except ValueError:
            raise ParseError(f"{path}: expected k,sep,rmsep", lineno) from None
    return rows


def _sweep_csv(rows):
    lines = ["k,sep,rmsep"] + [f"{k},{fmt(s)},{fmt(r)}" for k, s, r in rows]
    return "\n".join(lines) + "\n"


def cmd_sweep(args, cfg):
    _, vectors = _load_dataset(args.features)
    ds = dataset_from_vectors(vectors)
    train, test = _split(ds, cfg)
    rows = sweep_components(train, test, args.k_max, cfg.standardize)
    dest = _out_path(args, "sweep.csv", args.output)
    svg = plotting.sweep_svg({args.label or Path(args.features).stem: rows})
    atomic_write_text(dest, _sweep_csv(rows))
    atomic_write_bytes(dest.with_suffix(".svg"), svg)


def cmd_evaluate(args, cfg):
    out = Path(args.out_dir or ".")
    ids, ref, pred = _read_predictions(args.predictions)
    report = evaluate(pred, ref)
    clipped = np.clip(pred, 0.0, 600.0)

    files = {}
    files[out / "report.json"] = dumps_json(report.to_dict()).encode()
    rows = ["trial_id,reference,predicted,zone"]
    rows += [f"{i},{fmt(r)},{fmt(p)},{clarke_zone(r, p)}" for i, r, p in zip(ids, ref, clipped)]
    files[out / "clarke.csv"] = ("\n".join(rows) + "\n").encode()
    rows = ["zone,x0,y0,x1,y1"]
    rows += [f"{z},{fmt(a[0])},{fmt(a[1])},{fmt(b[0])},{fmt(b[1])}" for z, (a, b) in clarke_boundaries()]
    files[out / "clarke_boundaries.csv"] = ("\n".join(rows) + "\n").encode()
    files[out / "clarke.svg"] = plotting.clarke_svg(ref, clipped)

    compare = _labelled(args.compare, "comparison")
    if compare:
        seps = {}
        for label, path in compare.items():
            _, r, p = _read_predictions(path)
            seps[label] = evaluate(p, r).sep
        seps.setdefault(args.label, report.sep)
        rows = ["approach,sep"] + [f"{k},{fmt(v)}" for k, v in seps.items()]
        files[out / "sep_comparison.csv"] = ("\n".join(rows) + "\n").encode()
        files[out / "sep_comparison.svg"] = plotting.sep_bars_svg(seps)

    sweeps = _labelled(args.sweep, "sweep")
    if sweeps:
        curves = {label: _read_sweep(path) for label, path in sweeps.items()}
        files[out / "sweep_comparison.svg"] = plotting.sweep_svg(curves)

    for path, data in files.items():
        atomic_write_bytes(path, data)
    z = report.zone_percentages
    print(
        f"n={report.n} SEP={report.sep:.2f} RMSEP={report.rmsep:.2f} mg/dL; "
        + " ".join(f"{k}={z[k]:.1f}%" for k in "ABCDE")
    )


# -- parser ---------------------------------------------------------------------


def _global_options(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="pipeline config (JSON)")
    parser.add_argument("--seed", type=int, default=default, help="seed for synthesis and the train/test split")
    parser.add_argument("--out-dir", default=default, help="directory for outputs")


def _split_option(parser):
    parser.add_argument(
        "--split-by",
        choices=("trial", "subject"),
        help="hold out whole trials (default) or whole subjects",
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="ppglucose", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        _global_options(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "generate a synthetic dataset as frame-stats CSVs")
    p.add_argument("--n", type=int, default=88, help="number of trials (default 88)")
    p.add_argument("--glucose-noise", type=float, default=5.0, help="label noise sigma, mg/dL")
    p.add_argument("--noise-sigma", type=float, default=None, help="fixed PPG noise level for every trial")

    p = add("extract", cmd_extract, "frame statistics -> raw PPG signal")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output")
    p.add_argument("--channel", choices=("red", "green", "blue"), default="red")
    flip = p.add_mutually_exclusive_group()
    flip.add_argument("--flip", dest="flip", action="store_true", default=None)
    flip.add_argument("--no-flip", dest="flip", action="store_false")
    p.set_defaults(flip=None)

    p = add("preprocess", cmd_preprocess, "ALS baseline removal then Gaussian band-pass")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output")
    p.add_argument("--plot", action="store_true", help="also write a stage figure per signal")

    p = add("features", cmd_features, "signals -> feature CSV")
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output")
    p.add_argument("--labels", help="CSV with trial_id, glucose_ref, age, stomach_state columns")
    p.add_argument("--schema", help="stats-v1 or resample-v1")

    p = add("train", cmd_train, "fit a PCR model on the training split")
    p.add_argument("features")
    p.add_argument("-o", "--output")
    p.add_argument("--k", type=int)
    _split_option(p)

    p = add("predict", cmd_predict, "apply a PCR model")
    p.add_argument("features")
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--output")
    p.add_argument("--subset", choices=("test", "train", "all"), default="test")
    _split_option(p)

    p = add("evaluate", cmd_evaluate, "SEP, Clarke grid and acceptability report")
    p.add_argument("predictions")
    p.add_argument("--label", default="model", help="name of the primary predictions in comparisons")
    p.add_argument("--compare", action="append", metavar="LABEL=PATH", help="extra predictions for the SEP bar chart")
    p.add_argument("--sweep", action="append", metavar="LABEL=PATH", help="sweep CSVs to overlay")

    p = add("sweep", cmd_sweep, "SEP against number of components")
    p.add_argument("features")
    p.add_argument("-o", "--output")
    p.add_argument("--k-max", type=int, default=11)
    p.add_argument("--label")
    _split_option(p)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if getattr(args, "split_by", None):
            cfg = replace(cfg, split=replace(cfg.split, by=args.split_by))
        args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
