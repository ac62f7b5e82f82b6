"""Acceptance suite: one test per release criterion, each at its stated
tolerance. A summary line per criterion is printed at the end of the run
(see the terminal-summary hook in conftest).

Criteria that need real PhysioNet records (c1, c4, c7, c8, c9) skip with an
explanatory message when the data directory is absent; everything they
exercise also runs against synthetic records elsewhere in the suite. The
expected layout is documented in the README (data/afdb/04015.hea ...,
data/mitdb/100.hea ...).
"""
import json
import os
import time
import numpy as np
import pytest

import pipeline_util
from conftest import data_dir, require_record


# --- c1: parser fidelity on AFDB records -----------------------------------

AFDB_RECORDS = ("04015", "04048")


def test_c1_parser_fidelity():
    from afibkit.signal_prep import select_channel
    from afibkit.wfdb_io import (
        afib_sample_count,
        load_annotations,
        load_record,
        parse_header,
        rhythm_intervals,
    )

    prefixes = [require_record("afdb", name) for name in AFDB_RECORDS]
    try:
        import wfdb
    except ImportError:
        wfdb = None

    start = time.perf_counter()
    for prefix in prefixes:
        header = parse_header(prefix.with_suffix(".hea").read_text())
        assert header.num_signals == 2        # AFDB is two-lead
        assert header.sampling_hz == 250.0    # at 250 Hz
        # read_record recomputes each channel's wrapping 16-bit sum and
        # compares it against the header checksum; no mismatch may raise
        record = load_record(prefix)
        assert all(len(c) == header.num_samples for c in record.channels)
        select_channel(record, 0)

        ann = load_annotations(prefix)
        samples = [a.sample_index for a in ann.annotations]
        assert samples == sorted(samples)
        intervals = rhythm_intervals(ann, header.num_samples)
        assert intervals[0].start_sample == 0
        assert intervals[-1].end_sample == header.num_samples
        afib_total = afib_sample_count(intervals)
        assert 0 < afib_total < header.num_samples

        if wfdb is not None:
            ref = wfdb.rdann(str(prefix), "atr")
            assert len(ann.annotations) == len(ref.sample)
            assert ann.annotations[0].sample_index == int(ref.sample[0])
            assert ann.annotations[-1].sample_index == int(ref.sample[-1])
            ref_sig, fields = wfdb.rdsamp(str(prefix))
            assert fields["fs"] == header.sampling_hz
            assert fields["n_sig"] == header.num_signals
            assert np.allclose(record.millivolts(0), ref_sig[:, 0], atol=1e-9, equal_nan=True)
            # reference AFIB total from the aux-labeled rhythm stream
            ref_total = 0
            current_afib = False
            last = 0
            for s, aux in zip(ref.sample, ref.aux_note):
                if aux and aux.startswith("("):
                    if current_afib:
                        ref_total += s - last
                    current_afib = aux.rstrip("\x00") == "(AFIB"
                    last = s
            if current_afib:
                ref_total += header.num_samples - last
            assert afib_total == ref_total
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"parsing took {elapsed:.2f}s, budget is 5s"


# --- c2: gradient correctness on every layer kind ---------------------------

def test_c2_gradcheck_all_layer_kinds():
    from afibkit.nn_core import (
        BatchNorm,
        Conv1D,
        Conv2D,
        Dense,
        Dropout,
        Flatten,
        MaxPool1D,
        MaxPool2D,
        Network,
        ReLU,
        Sigmoid,
        TemporalMean,
        gradcheck,
    )

    g = np.random.default_rng(2024)

    def data(shape, batch=4):
        x = g.normal(size=(batch, *shape))
        y = g.integers(0, 2, size=batch).astype(float)
        return x, y

    instances = {
        "conv1d": (Network([Conv1D(2, 3, kernel=3, padding="same", rng=g),
                            Flatten(), Dense(3 * 10, 1, rng=g)]), data((2, 10))),
        "conv2d": (Network([Conv2D(1, 2, kernel=(3, 3), padding="same", rng=g),
                            Flatten(), Dense(2 * 6 * 5, 1, rng=g)]), data((1, 6, 5))),
        "maxpool1d": (Network([Conv1D(1, 2, kernel=3, padding="same", rng=g),
                               MaxPool1D(2), Flatten(), Dense(2 * 6, 1, rng=g)]),
                      data((1, 12))),
        "maxpool2d": (Network([Conv2D(1, 2, kernel=(3, 3), padding="same", rng=g),
                               MaxPool2D(2), Flatten(), Dense(2 * 3 * 2, 1, rng=g)]),
                      data((1, 6, 5))),
        "batchnorm": (Network([BatchNorm(2), ReLU(), Flatten(), Dense(2 * 8, 1, rng=g)]),
                      data((2, 8), batch=6)),
        "dropout": (Network([Conv1D(1, 2, kernel=3, padding="same", rng=g),
                             Dropout(0.3, seed=5), Flatten(), Dense(2 * 8, 1, rng=g)]),
                    data((1, 8))),
        "dense": (Network([Flatten(), Dense(12, 6, rng=g), ReLU(), Dense(6, 1, rng=g)]),
                  data((1, 12))),
        "temporal_mean": (Network([Conv1D(2, 4, kernel=3, padding="same", rng=g),
                                   TemporalMean(), Dense(4, 1, rng=g)]), data((2, 9))),
        "sigmoid_bce": (Network([Flatten(), Dense(10, 1, rng=g), Sigmoid()]), data((1, 10))),
    }

    start = time.perf_counter()
    for name, (net, (x, y)) in instances.items():
        err = gradcheck(net, x, y, eps=1e-5)
        assert err < 1e-4, f"{name}: max relative gradient error {err:.3e} >= 1e-4"
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"gradcheck sweep took {elapsed:.1f}s, budget is 60s"


# --- c3: FFT against the direct-sum DFT -------------------------------------

def test_c3_fft_against_naive_dft():
    from afibkit.spectro import fft, hann_window

    rng = np.random.default_rng(7)
    n = 256
    k = np.arange(n)
    dft_matrix = np.exp(-2j * np.pi * np.outer(k, k) / n)
    worst = 0.0
    for _ in range(100):
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        worst = max(worst, float(np.max(np.abs(fft(x) - dft_matrix @ x))))
    assert worst < 1e-9, f"max |FFT - DFT| = {worst:.3e}"

    # Parseval per Hann-windowed frame, full-spectrum form
    for seed in range(10):
        frame = np.random.default_rng(seed).normal(size=128) * hann_window(128)
        spectrum = fft(frame)
        lhs = np.sum(frame**2)
        rhs = np.sum(np.abs(spectrum) ** 2) / 128
        assert abs(lhs - rhs) / lhs < 1e-9


# --- c4: R-peak detection on MIT-BIH Arrhythmia record 100 ------------------

def test_c4_rpeak_sensitivity_record_100():
    from afibkit.rr_stats import detect_r_peaks
    from afibkit.signal_prep import select_channel
    from afibkit.wfdb_io import BEAT_CODES, load_annotations, load_record

    prefix = require_record("mitdb", "100")
    record = load_record(prefix)
    hz = record.header.sampling_hz
    signal = select_channel(record, 0)[: int(60 * hz)]
    peaks = detect_r_peaks(signal, hz)
    ann = load_annotations(prefix)
    truth = np.array(
        [a.sample_index for a in ann.annotations
         if a.code in BEAT_CODES and a.sample_index < int(60 * hz)]
    )
    tol = int(0.150 * hz)
    sensitivity = sum(np.any(np.abs(peaks - t) <= tol) for t in truth) / truth.size
    ppv = sum(np.any(np.abs(truth - p) <= tol) for p in peaks) / peaks.size
    assert sensitivity >= 0.95, f"sensitivity {sensitivity:.3f}"
    assert ppv >= 0.95, f"positive predictivity {ppv:.3f}"


# --- c5: the RR statistical rule on synthetic rhythms ------------------------

def test_c5_rr_rule_synthetic_rhythms():
    from afibkit.rr_stats import Verdict, classify_rr

    for seed in range(100):
        rng = np.random.default_rng(seed)
        regular = 0.8 + rng.uniform(-0.010, 0.010, size=20)
        assert classify_rr(regular).classification is Verdict.NORMAL

    for seed in range(100):
        rng = np.random.default_rng(1_000 + seed)
        irregular = rng.uniform(0.4, 1.2, size=20)
        assert classify_rr(irregular).classification is Verdict.AFIB


# --- c6: overfit sanity for the 1-D model ------------------------------------

def test_c6_cnn1d_overfits_16_segments():
    from afibkit.models import TrainConfig, build_cnn1d, train

    items = pipeline_util.overfit_segments(16)
    assert sum(l for l, _ in items) == 8
    model = build_cnn1d(items[0][1].size, seed=7)
    cfg = TrainConfig(epochs=500, batch_size=16, lr=1e-3, seed=1,
                      eval_every=5, stop_train_loss=0.05)
    rows = train(model, items, items, cfg)
    steps = rows[-1].epoch                      # 1 optimizer step per epoch here
    assert rows[-1].train_loss < 0.05, f"train BCE {rows[-1].train_loss:.4f} after {steps} steps"
    assert steps <= 500


# --- c7 to c9: desk-scale run on AFDB ----------------------------------------

TIME_BUDGET_S = 20 * 60


@pytest.fixture(scope="session")
def desk_scale_run(tmp_path_factory):
    """Convert all local AFDB records, balance/split, train both models with
    the default (reported) schedules, evaluate. Shared by c7, c8 and c9."""
    afdb = data_dir() / "afdb"
    prefixes = sorted(p.with_suffix("") for p in afdb.glob("*.hea"))
    # a couple of AFDB records ship rhythm annotations but no signal file
    prefixes = [
        p for p in prefixes
        if p.with_suffix(".atr").exists() and p.with_suffix(".dat").exists()
    ]
    if not prefixes:
        pytest.skip(f"no AFDB records under {afdb}")

    work = tmp_path_factory.mktemp("desk_scale")
    conv = work / "converted"
    rc = pipeline_util.run_cli(
        "convert",
        *[f for p in prefixes for f in ("--record", str(p))],
        "--checksum", "warn",
        "--out-dir", str(conv),
        "--seed", "42",
    )
    assert rc == 0
    from afibkit.container import read_container

    items, _ = read_container(conv / "segments.bin")
    n_pos = sum(l for l, _ in items)
    balanced = 2 * min(n_pos, len(items) - n_pos)
    if balanced < 2000:
        pytest.skip(
            f"only {balanced} balanced segments from {len(prefixes)} records; "
            "criterion needs >= 2000 (add more AFDB records)"
        )

    split = work / "split"
    rc = pipeline_util.run_cli(
        "segment", "--in", str(conv / "segments.bin"), "--out-dir", str(split), "--seed", "42",
    )
    assert rc == 0

    result = {"work": work, "train": split / "train.bin", "test": split / "test.bin"}

    t0 = time.perf_counter()
    rc = pipeline_util.run_cli(
        "train", "--model", "1d", "--train", str(result["train"]),
        "--val", str(result["test"]), "--out-dir", str(work / "cnn1d"), "--seed", "42",
    )
    assert rc == 0
    result["time_1d"] = time.perf_counter() - t0
    rc = pipeline_util.run_cli(
        "eval", "--model", "1d", "--weights", str(work / "cnn1d" / "weights.bin"),
        "--data", str(result["test"]), "--out", str(work / "cnn1d" / "metrics.json"),
    )
    assert rc == 0

    for name, container in (("spec_train", result["train"]), ("spec_test", result["test"])):
        rc = pipeline_util.run_cli(
            "spectrogram", "--in", str(container), "--out-dir", str(work / name),
        )
        assert rc == 0
    t0 = time.perf_counter()
    rc = pipeline_util.run_cli(
        "train", "--model", "2d", "--train", str(work / "spec_train" / "spectrograms.bin"),
        "--val", str(work / "spec_test" / "spectrograms.bin"),
        "--out-dir", str(work / "cnn2d"), "--seed", "42",
    )
    assert rc == 0
    result["time_2d"] = time.perf_counter() - t0
    rc = pipeline_util.run_cli(
        "eval", "--model", "2d", "--weights", str(work / "cnn2d" / "weights.bin"),
        "--data", str(work / "spec_test" / "spectrograms.bin"),
        "--out", str(work / "cnn2d" / "metrics.json"),
    )
    assert rc == 0
    return result


def test_c7_desk_scale_accuracy_floors(desk_scale_run):
    work = desk_scale_run["work"]
    m1 = json.loads((work / "cnn1d" / "metrics.json").read_text())
    m2 = json.loads((work / "cnn2d" / "metrics.json").read_text())
    ordering = m1["accuracy"] >= m2["accuracy"]
    print(
        f"[desk-scale] cnn1d acc {m1['accuracy']:.3f} in {desk_scale_run['time_1d']:.0f}s, "
        f"cnn2d acc {m2['accuracy']:.3f} in {desk_scale_run['time_2d']:.0f}s, "
        f"1d>=2d ordering: {ordering} (reported, not asserted), "
        f"cpus={os.cpu_count()}"
    )
    assert m1["accuracy"] >= 0.75
    assert m2["accuracy"] >= 0.65
    assert desk_scale_run["time_1d"] <= TIME_BUDGET_S
    assert desk_scale_run["time_2d"] <= TIME_BUDGET_S


def test_c8_training_curve_shape(desk_scale_run):
    from afibkit.models import read_curves_csv

    for model in ("cnn1d", "cnn2d"):
        path = desk_scale_run["work"] / model / "curves.csv"
        header = path.read_text().splitlines()[0]
        assert header == "epoch,train_loss,train_acc,val_loss,val_acc"
        rows = read_curves_csv(path)
        assert rows[-1].train_loss < rows[0].train_loss


def test_c9_desk_scale_determinism(desk_scale_run):
    # the full schedule is repeated at --epochs 2: determinism cannot depend
    # on the step count, and two full 100-epoch runs would double the budget
    work = desk_scale_run["work"]
    blobs = []
    for run in range(2):
        out = work / f"det{run}"
        rc = pipeline_util.run_cli(
            "train", "--model", "1d", "--train", str(desk_scale_run["train"]),
            "--val", str(desk_scale_run["test"]), "--epochs", "2",
            "--out-dir", str(out), "--seed", "42",
        )
        assert rc == 0
        rc = pipeline_util.run_cli(
            "eval", "--model", "1d", "--weights", str(out / "weights.bin"),
            "--data", str(desk_scale_run["test"]), "--out", str(out / "metrics.json"),
        )
        assert rc == 0
        blobs.append(((out / "curves.csv").read_bytes(), (out / "metrics.json").read_bytes()))
    assert blobs[0] == blobs[1]
