import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))   # make the helper modules importable

import synthecg
import wfdbfix


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One line per acceptance criterion at the end of the run."""
    rows = {}
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid or rep.when not in ("call", "setup"):
                continue
            name = nodeid.split("::")[-1]
            detail = ""
            if outcome == "skipped" and rep.longrepr:
                detail = f"  ({str(rep.longrepr[-1]).removeprefix('Skipped: ')})"
            rows.setdefault(name, f"{outcome.upper()}{detail}")
    if rows:
        terminalreporter.section("acceptance criteria")
        for name in sorted(rows):
            terminalreporter.write_line(f"{name}: {rows[name]}")


def data_dir() -> Path:
    """Directory with real PhysioNet records (see README for the layout);
    tests needing them skip when it is absent."""
    return Path(os.environ.get("AFIBKIT_DATA", Path(__file__).resolve().parent.parent / "data"))


def require_record(subdir: str, name: str) -> Path:
    prefix = data_dir() / subdir / name
    if not prefix.with_suffix(".hea").exists():
        pytest.skip(f"PhysioNet record {subdir}/{name} not present under {data_dir()}")
    return prefix


@pytest.fixture(scope="session")
def synth_record(tmp_path_factory):
    """A two-channel synthetic record with one AFIB episode plus annotations.

    Layout at 250 Hz: 0-40 s normal, 40-80 s AFIB, 80-120 s normal, with
    rhythm marks and beat annotations at every R wave.
    """
    hz = 250.0
    root = tmp_path_factory.mktemp("wfdb")
    normal_a = synthecg.synthetic_ecg("normal", 40.0, hz, seed=1)
    afib = synthecg.synthetic_ecg("afib", 40.0, hz, seed=2)
    normal_b = synthecg.synthetic_ecg("normal", 40.0, hz, seed=3)
    mv = np.concatenate([normal_a, afib, normal_b])
    ch0 = wfdbfix.mv_to_adu(mv)
    ch1 = wfdbfix.mv_to_adu(0.5 * mv)
    prefix = wfdbfix.write_record(root, "s0001", [ch0, ch1], fs=hz)

    beats = np.concatenate(
        [
            synthecg.regular_beat_times(40.0, seed=1),
            40.0 + synthecg.afib_beat_times(40.0, seed=2),
            80.0 + synthecg.regular_beat_times(40.0, seed=3),
        ]
    )
    entries = [(int(round(t * hz)), 1, None) for t in beats]
    entries += [
        (0, 28, "(N"),
        (int(40.0 * hz), 28, "(AFIB"),
        (int(80.0 * hz), 28, "(N"),
    ]
    entries.sort(key=lambda e: e[0])
    wfdbfix.write_annotations(root, "s0001", entries)
    return prefix
