"""Command line interface.

Subcommands cover the full pipeline: `convert` (WFDB records to a labeled
segment container), `segment` (merge/balance/split containers into train and
test sets), `detect-rr` (statistical verdict as JSON), `spectrogram`,
`train`, `eval` and `compare`. Exit codes: 0 success, 1 domain error
(one-line diagnostic on stderr), 2 usage error.

Heavy imports happen inside the handlers so `--threads` can cap the BLAS
pool before numpy initializes. Every run writes a `manifest.json` with the
full configuration, seed and input digests needed to reproduce it.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

_THREAD_ENV = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _snr(text: str):
    if text.lower() in ("none", "off"):
        return None
    return float(text)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest_payload(command: str, args: argparse.Namespace,
                      inputs: list[Path], outputs: list[str]) -> str:
    import afibkit
    from afibkit.nn_core import BACKEND

    config = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "config") and not k.startswith("_")
    }
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _digest(Path(p)) for p in inputs},
        "outputs": outputs,
        "afibkit_version": afibkit.__version__,
        "kernel_backend": BACKEND,
    }
    return json.dumps(manifest, sort_keys=True, indent=2) + "\n"


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace,
                    inputs: list[Path], outputs: list[str]) -> None:
    (out_dir / "manifest.json").write_text(_manifest_payload(command, args, inputs, outputs))


def _write_sidecar_manifest(out_file: str, command: str, args: argparse.Namespace,
                            inputs: list[Path]) -> None:
    """Subcommands without an --out-dir still record how their artifact was
    produced, next to the artifact itself."""
    payload = _manifest_payload(command, args, inputs, [Path(out_file).name])
    Path(str(out_file) + ".manifest.json").write_text(payload)


def _record_inputs(prefix: str) -> list[Path]:
    from afibkit.wfdb_io import parse_header

    p = Path(prefix)
    header = parse_header(p.with_suffix(".hea").read_text())
    files = [p.with_suffix(".hea")]
    files += sorted({p.parent / s.file_name for s in header.signals})
    atr = p.with_suffix(".atr")
    if atr.exists():
        files.append(atr)
    return files


def _prep_config(args: argparse.Namespace):
    from afibkit.signal_prep import PrepConfig

    return PrepConfig(
        window_seconds=args.window_s,
        label_threshold=args.label_threshold,
        downsample_factor=args.downsample,
        noise_snr_db=args.snr_db,
        wander_amplitude=args.wander,
        seed=args.seed,
    )


def cmd_convert(args: argparse.Namespace) -> int:
    from afibkit.container import write_container
    from afibkit.signal_prep import prepare_record
    from afibkit.wfdb_io import load_annotations, load_record, rhythm_intervals

    cfg = _prep_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    items = []
    sources = []
    effective_hz = None
    for prefix in args.record:
        record = load_record(prefix, checksum_mode=args.checksum)
        ann = load_annotations(prefix)
        intervals = rhythm_intervals(ann, record.header.num_samples)
        segments = prepare_record(record, intervals, cfg, channel=args.channel)
        for seg in segments:
            items.append((seg.label, seg.samples))
            sources.append([seg.source[0], seg.source[1]])
            effective_hz = seg.effective_hz
    if not items:
        from afibkit.errors import EmptyDataset

        raise EmptyDataset("no segments produced; records too short for the window?")

    manifest = {
        "kind": "segments",
        "records": list(args.record),
        "config": {
            "window_seconds": cfg.window_seconds,
            "label_threshold": cfg.label_threshold,
            "downsample_factor": cfg.downsample_factor,
            "noise_snr_db": cfg.noise_snr_db,
            "wander_amplitude": cfg.wander_amplitude,
            "channel": args.channel,
        },
        "seed": cfg.seed,
        "effective_hz": effective_hz,
        "sources": sources,
    }
    out_path = out_dir / "segments.bin"
    write_container(out_path, items, manifest)
    inputs = [f for prefix in args.record for f in _record_inputs(prefix)]
    _write_manifest(out_dir, "convert", args, inputs, [out_path.name])
    n_pos = sum(l for l, _ in items)
    print(f"wrote {len(items)} segments ({n_pos} AFIB) to {out_path}")
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    from afibkit.container import read_container, write_container
    from afibkit.errors import EmptyDataset
    from afibkit.signal_prep import Segment, balance_classes, split_dataset

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    segments = []
    hz = None
    src_manifests = []
    for path in args.inputs:
        items, manifest = read_container(path)
        src_manifests.append(manifest)
        hz = manifest.get("effective_hz", hz)
        sources = manifest.get("sources", [["", 0]] * len(items))
        for (label, values), src in zip(items, sources):
            segments.append(
                Segment(samples=values, label=label, source=(src[0], src[1]), effective_hz=hz or 0.0)
            )
    if not segments:
        raise EmptyDataset("input containers are empty")

    if args.balance:
        segments = balance_classes(segments, seed=args.seed)
    train, test = split_dataset(segments, train_fraction=args.train_fraction, seed=args.seed)

    base = {
        "kind": "segments",
        "records": sorted({r for m in src_manifests for r in m.get("records", [])}),
        "config": {"balance": args.balance, "train_fraction": args.train_fraction},
        "seed": args.seed,
        "effective_hz": hz,
    }
    for name, part in (("train.bin", train), ("test.bin", test)):
        if not part:
            continue
        manifest = dict(base, sources=[[s.source[0], s.source[1]] for s in part])
        write_container(out_dir / name, [(s.label, s.samples) for s in part], manifest)
    _write_manifest(out_dir, "segment", args, [Path(p) for p in args.inputs],
                    ["train.bin", "test.bin"])
    print(f"split {len(segments)} segments into {len(train)} train / {len(test)} test")
    return 0


def cmd_detect_rr(args: argparse.Namespace) -> int:
    from afibkit.rr_stats import classify_rr, detect_r_peaks, rr_from_peaks
    from afibkit.signal_prep import select_channel
    from afibkit.wfdb_io import load_record

    record = load_record(args.record, checksum_mode=args.checksum)
    hz = record.header.sampling_hz
    signal = select_channel(record, args.channel)
    start = int(args.start_s * hz)
    stop = signal.size if args.dur_s is None else min(signal.size, start + int(args.dur_s * hz))
    window = signal[start:stop]

    peaks = detect_r_peaks(window, hz)
    rr = rr_from_peaks(peaks, hz)
    verdict = classify_rr(rr, rule=args.rule)
    result = {
        "record": record.header.record_name,
        "start_s": args.start_s,
        "duration_s": (stop - start) / hz,
        "n_peaks": int(peaks.size),
        "rr_stats": {
            "max": verdict.max_rr,
            "min": verdict.min_rr,
            "cov": verdict.cov,
        },
        "classification": verdict.classification.value,
    }
    text = json.dumps(result, sort_keys=True, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
        _write_sidecar_manifest(args.out, "detect-rr", args, _record_inputs(args.record))
    return 0


def cmd_spectrogram(args: argparse.Namespace) -> int:
    from afibkit.container import read_container, write_container
    from afibkit.spectro import log_normalize, stft_power, write_pgm

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    items, manifest = read_container(args.input)
    hz = manifest.get("effective_hz")
    if hz is None:
        raise ValueError("input manifest lacks effective_hz; cannot scale frequency bins")

    specs = []
    for label, samples in items:
        spec = log_normalize(stft_power(samples, hz, window=args.window, hop=args.hop))
        specs.append((label, spec.values, spec))

    out_manifest = {
        "kind": "spectrograms",
        "records": manifest.get("records", []),
        "config": {"window": args.window, "hop": args.hop,
                   "bin_hz": specs[0][2].bin_hz, "frame_stride_s": specs[0][2].frame_stride_s},
        "seed": manifest.get("seed"),
        "effective_hz": hz,
        "sources": manifest.get("sources", []),
    }
    out_path = out_dir / "spectrograms.bin"
    write_container(out_path, [(l, v) for l, v, _ in specs], out_manifest)

    if args.pgm_dir:
        pgm_dir = Path(args.pgm_dir)
        pgm_dir.mkdir(parents=True, exist_ok=True)
        for i, (label, _, spec) in enumerate(specs[: args.pgm_limit]):
            write_pgm(spec, pgm_dir / f"seg{i:05d}_label{label}.pgm")

    _write_manifest(out_dir, "spectrogram", args, [Path(args.input)], [out_path.name])
    shape = specs[0][1].shape
    print(f"wrote {len(specs)} spectrograms of {shape[0]}x{shape[1]} to {out_path}")
    return 0


def _build_for_items(model_kind: str, items, seed: int):
    from afibkit.errors import ShapeMismatch
    from afibkit.models import build_cnn1d, build_cnn2d

    shape = items[0][1].shape
    if model_kind == "1d":
        if len(shape) != 1:
            raise ShapeMismatch(f"--model 1d needs a 1-D segment container, got {len(shape)}-D items")
        return build_cnn1d(shape[0], seed=seed)
    if len(shape) != 2:
        raise ShapeMismatch(f"--model 2d needs a spectrogram container, got {len(shape)}-D items")
    return build_cnn2d(shape[0], shape[1], seed=seed)


def cmd_train(args: argparse.Namespace) -> int:
    from afibkit.container import read_container
    from afibkit.models import TrainConfig, train, write_curves_csv

    if args.epochs is None:
        args.epochs = 100 if args.model == "1d" else 50
    if args.batch_size is None:
        args.batch_size = 128 if args.model == "1d" else 50

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_items, _ = read_container(args.train)
    val_items, _ = read_container(args.val)

    model = _build_for_items(args.model, train_items, args.seed)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, seed=args.seed)
    rows = train(model, train_items, val_items, cfg)

    weights_path = out_dir / "weights.bin"
    curves_path = out_dir / "curves.csv"
    model.net.save_weights(weights_path)
    write_curves_csv(curves_path, rows)
    (out_dir / "model_spec.json").write_text(
        json.dumps({"kind": model.spec.kind, "input_shape": list(model.spec.input_shape),
                    "layers": model.spec.layers}, sort_keys=True, indent=2) + "\n"
    )
    _write_manifest(out_dir, "train", args, [Path(args.train), Path(args.val)],
                    [weights_path.name, curves_path.name, "model_spec.json"])
    last = rows[-1]
    print(
        f"trained {model.spec.kind} for {last.epoch} epochs: "
        f"train loss {last.train_loss:.4f} acc {last.train_acc:.4f}, "
        f"val loss {last.val_loss:.4f} acc {last.val_acc:.4f}"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from afibkit.container import read_container
    from afibkit.models import evaluate

    items, _ = read_container(args.data)
    model = _build_for_items(args.model, items, seed=0)
    model.net.load_weights(args.weights)
    metrics, _ = evaluate(model, items, threshold=args.threshold)
    text = json.dumps(metrics.to_dict(), sort_keys=True, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
        _write_sidecar_manifest(args.out, "eval", args,
                                [Path(args.weights), Path(args.data)])
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    from afibkit.metrics import Metrics, compare_report

    def load(path: str) -> Metrics:
        d = json.loads(Path(path).read_text())
        return Metrics(
            tp=d["tp"], tn=d["tn"], fp=d["fp"], fn=d["fn"],
            accuracy=d["accuracy"], sensitivity=d["sensitivity"],
            specificity=d["specificity"], precision=d["precision"], f1=d["f1"],
        )

    report, table = compare_report(load(args.metrics_1d), load(args.metrics_2d))
    print(table)
    if args.out:
        Path(args.out).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
        _write_sidecar_manifest(args.out, "compare", args,
                                [Path(args.metrics_1d), Path(args.metrics_2d)])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afibkit",
        description="Atrial fibrillation detection from single-lead ECG recordings.",
    )
    parser.add_argument("--threads", type=_positive_int, default=None,
                        help="cap BLAS/OpenMP threads (set before numpy loads)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, out_dir=True):
        p.add_argument("--seed", type=int, default=42)
        if out_dir:
            p.add_argument("--out-dir", default="out")
        p.add_argument("--config", default=None,
                       help="JSON file of flag defaults; explicit flags still win")

    p = sub.add_parser("convert", help="WFDB records to a labeled segment container")
    p.add_argument("--record", action="append", required=True,
                   help="record path prefix (e.g. data/afdb/04015); repeatable")
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--window-s", type=float, default=10.0)
    p.add_argument("--label-threshold", type=float, default=0.5)
    p.add_argument("--downsample", type=_positive_int, default=2)
    p.add_argument("--snr-db", type=_snr, default=10.0, help="noise SNR in dB, or 'none'")
    p.add_argument("--wander", type=float, default=0.1, help="baseline wander amplitude (x RMS)")
    p.add_argument("--checksum", choices=("error", "warn", "ignore"), default="error")
    add_common(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("segment", help="merge, balance and split segment containers")
    p.add_argument("--in", dest="inputs", action="append", required=True)
    p.add_argument("--balance", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--train-fraction", type=float, default=0.9)
    add_common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("detect-rr", help="RR-interval statistical verdict as JSON")
    p.add_argument("--record", required=True)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--start-s", type=float, default=0.0)
    p.add_argument("--dur-s", type=float, default=None)
    p.add_argument("--rule", choices=("combined", "paper-minmax"), default="combined")
    p.add_argument("--checksum", choices=("error", "warn", "ignore"), default="error")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_detect_rr)

    p = sub.add_parser("spectrogram", help="segment container to spectrogram container")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--window", type=_positive_int, default=128)
    p.add_argument("--hop", type=_positive_int, default=64)
    p.add_argument("--pgm-dir", default=None, help="also export PGM images here")
    p.add_argument("--pgm-limit", type=_positive_int, default=16)
    add_common(p)
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("train", help="train a classifier on a segment/spectrogram container")
    p.add_argument("--model", choices=("1d", "2d"), required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--epochs", type=_positive_int, default=None,
                   help="default: 100 for 1d, 50 for 2d")
    p.add_argument("--batch-size", type=_positive_int, default=None,
                   help="default: 128 for 1d, 50 for 2d")
    p.add_argument("--lr", type=float, default=1e-3)
    add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate saved weights on a container")
    p.add_argument("--model", choices=("1d", "2d"), required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="side-by-side report from two metrics files")
    p.add_argument("--metrics-1d", required=True)
    p.add_argument("--metrics-2d", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    parser._subcommand_parsers = dict(sub.choices)   # for --config default injection
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)

    # apply --config before the real parse so explicit flags still win
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        try:
            overrides = json.loads(Path(known.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"--config {known.config}: {exc}")
        if not isinstance(overrides, dict):
            parser.error("--config must contain a JSON object")
        # subparsers parse into their own namespace, so defaults must be set
        # on each subparser that actually knows the flag
        consumed = set()
        for sub_parser in parser._subcommand_parsers.values():
            known_dests = {a.dest for a in sub_parser._actions}
            hits = {k: v for k, v in overrides.items() if k in known_dests}
            sub_parser.set_defaults(**hits)
            consumed.update(hits)
        unknown = set(overrides) - consumed - {a.dest for a in parser._actions}
        if unknown:
            parser.error(f"--config has unknown keys: {sorted(unknown)}")

    args = parser.parse_args(argv)
    if args.threads:
        for var in _THREAD_ENV:
            os.environ[var] = str(args.threads)

    from afibkit.errors import AfibkitError

    try:
        return args.func(args)
    except AfibkitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: FileNotFound: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: ValueError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
