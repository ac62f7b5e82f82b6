"""Readers for WFDB records: `.hea` headers, format 212/16 signals, MIT annotations.

All parsing functions are pure functions of their byte inputs. Only signal
formats 212 (two 12-bit samples packed in 3 bytes) and 16 (little-endian
int16) are supported; anything else raises :class:`UnsupportedFormat` rather
than silently misreading.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ChecksumMismatch,
    MalformedAnnotation,
    MalformedHeader,
    TruncatedSignal,
    UnsupportedFormat,
)

DEFAULT_SAMPLING_HZ = 250.0   # WFDB convention when the fs field is 0/absent
DEFAULT_GAIN = 200.0          # adu per mV when the gain field is 0

RHYTHM_CODE = 28              # '+' rhythm change annotation
SKIP_CODE = 59
NUM_CODE = 60
SUB_CODE = 61
CHAN_CODE = 62
AUX_CODE = 63

# Annotation codes that mark an actual beat (QRS), per the standard WFDB code
# table; used when matching detector output against reference annotations.
BEAT_CODES = frozenset({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 25, 34, 35, 38, 41})


@dataclass
class SignalSpec:
    file_name: str
    format_code: int
    gain: float
    baseline: int
    initial_value: int
    checksum: int | None


@dataclass
class RecordHeader:
    record_name: str
    num_signals: int
    sampling_hz: float
    num_samples: int
    signals: list[SignalSpec]


@dataclass
class Record:
    header: RecordHeader
    channels: list[np.ndarray]    # raw adu, int32

    def millivolts(self, index: int) -> np.ndarray:
        spec = self.header.signals[index]
        return (self.channels[index].astype(np.float64) - spec.baseline) / spec.gain


@dataclass
class Annotation:
    sample_index: int
    code: int
    aux: str | None = None


@dataclass
class AnnotationSet:
    annotations: list[Annotation]
    sampling_hz: float

    def __len__(self) -> int:
        return len(self.annotations)


class Rhythm(enum.Enum):
    AFIB = "AFIB"
    OTHER = "OTHER"


@dataclass
class RhythmInterval:
    start_sample: int
    end_sample: int
    rhythm: Rhythm


def _int_field(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedHeader(f"non-numeric {what}: {token!r}") from None


def parse_header(text: str) -> RecordHeader:
    """Parse the text of a `.hea` file.

    Record line: `name nsig [fs [counter [base]] [nsamp ...]]`; one signal line
    per channel: `file format gain[(baseline)][/units] [adc_res [adc_zero
    [initial [checksum ...]]]]`. Trailing fields and `#` comment lines are
    ignored.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MalformedHeader("empty header")

    rec_tokens = lines[0].split()
    if len(rec_tokens) < 2:
        raise MalformedHeader(f"record line needs name and signal count: {lines[0]!r}")
    record_name = rec_tokens[0].split("/")[0]   # strip optional /nseg suffix
    num_signals = _int_field(rec_tokens[1], "signal count")
    if num_signals < 1:
        raise MalformedHeader(f"signal count must be >= 1, got {num_signals}")

    sampling_hz = DEFAULT_SAMPLING_HZ
    if len(rec_tokens) >= 3:
        # fs may carry a /counter_freq(base) suffix
        fs_token = rec_tokens[2].split("/")[0]
        try:
            fs = float(fs_token)
        except ValueError:
            raise MalformedHeader(f"non-numeric sampling rate: {rec_tokens[2]!r}") from None
        if fs > 0:
            sampling_hz = fs

    num_samples = 0
    if len(rec_tokens) >= 4:
        num_samples = _int_field(rec_tokens[3], "sample count")
        if num_samples < 0:
            raise MalformedHeader(f"negative sample count: {num_samples}")

    if len(lines) - 1 < num_signals:
        raise MalformedHeader(
            f"header declares {num_signals} signals but has {len(lines) - 1} signal lines"
        )

    signals = []
    for ln in lines[1 : 1 + num_signals]:
        tokens = ln.split()
        if len(tokens) < 3:
            raise MalformedHeader(f"signal line needs file, format and gain: {ln!r}")
        file_name = tokens[0]
        fmt_token = tokens[1]
        if not fmt_token.isdigit():
            raise MalformedHeader(f"non-numeric format: {fmt_token!r}")
        format_code = int(fmt_token)
        if format_code not in (212, 16):
            raise UnsupportedFormat(f"signal format {format_code} not supported")

        gain_token = tokens[2].split("/")[0]   # drop /units
        baseline: int | None = None
        if "(" in gain_token:
            gain_part, rest = gain_token.split("(", 1)
            if not rest.endswith(")"):
                raise MalformedHeader(f"unclosed baseline in {tokens[2]!r}")
            baseline = _int_field(rest[:-1], "baseline")
            gain_token = gain_part
        try:
            gain = float(gain_token)
        except ValueError:
            raise MalformedHeader(f"non-numeric gain: {tokens[2]!r}") from None
        if gain == 0:
            gain = DEFAULT_GAIN
        if gain < 0:
            raise MalformedHeader(f"negative gain: {gain}")

        adc_zero = _int_field(tokens[4], "adc zero") if len(tokens) >= 5 else 0
        if baseline is None:
            baseline = adc_zero
        initial_value = _int_field(tokens[5], "initial value") if len(tokens) >= 6 else 0
        checksum = None
        if len(tokens) >= 7:
            checksum = _int_field(tokens[6], "checksum")

        signals.append(
            SignalSpec(
                file_name=file_name,
                format_code=format_code,
                gain=gain,
                baseline=baseline,
                initial_value=initial_value,
                checksum=checksum,
            )
        )

    return RecordHeader(
        record_name=record_name,
        num_signals=num_signals,
        sampling_hz=sampling_hz,
        num_samples=num_samples,
        signals=signals,
    )


def decode_format212(data: bytes, n: int, channels: int = 2) -> list[np.ndarray]:
    """Decode format-212 bytes into `channels` arrays of `n` samples each.

    Each 3-byte group packs two 12-bit two's-complement samples:
    s1 = b0 | (b1 & 0x0F) << 8 and s2 = b2 | (b1 >> 4) << 8. Successive
    samples cycle through the channels.
    """
    total = n * channels
    needed = (total * 3 + 1) // 2
    if len(data) < needed:
        raise TruncatedSignal(f"need {needed} bytes for {total} samples, got {len(data)}")

    raw = np.frombuffer(data, dtype=np.uint8, count=needed)
    n_groups = total // 2
    grouped = raw[: n_groups * 3].reshape(-1, 3).astype(np.int32)
    s1 = grouped[:, 0] | ((grouped[:, 1] & 0x0F) << 8)
    s2 = grouped[:, 2] | ((grouped[:, 1] >> 4) << 8)
    flat = np.empty(n_groups * 2, dtype=np.int32)
    flat[0::2] = s1
    flat[1::2] = s2
    if total % 2:
        # odd tail: one extra sample in a final half-used group
        b0 = int(raw[n_groups * 3])
        b1 = int(raw[n_groups * 3 + 1])
        tail = b0 | ((b1 & 0x0F) << 8)
        flat = np.append(flat, np.int32(tail))
    flat = np.where(flat >= 2048, flat - 4096, flat)
    return [np.ascontiguousarray(flat[c::channels]) for c in range(channels)]


def encode_format212(channels: list[np.ndarray]) -> bytes:
    """Inverse of :func:`decode_format212`; only used for round-trip testing
    and fixture generation. Requires an even total sample count."""
    flat = np.stack([np.asarray(c, dtype=np.int64) for c in channels], axis=1).ravel()
    if flat.size % 2:
        raise ValueError("format 212 encoding requires an even total sample count")
    if flat.size and (flat.min() < -2048 or flat.max() > 2047):
        raise ValueError("samples outside 12-bit two's-complement range")
    u = np.where(flat < 0, flat + 4096, flat).astype(np.uint16)
    s1 = u[0::2]
    s2 = u[1::2]
    out = np.empty((s1.size, 3), dtype=np.uint8)
    out[:, 0] = s1 & 0xFF
    out[:, 1] = ((s1 >> 8) & 0x0F) | (((s2 >> 8) & 0x0F) << 4)
    out[:, 2] = s2 & 0xFF
    return out.tobytes()


def _decode_format16(data: bytes, n: int, channels: int) -> list[np.ndarray]:
    total = n * channels
    if len(data) < total * 2:
        raise TruncatedSignal(f"need {total * 2} bytes for {total} samples, got {len(data)}")
    flat = np.frombuffer(data, dtype="<i2", count=total).astype(np.int32)
    return [np.ascontiguousarray(flat[c::channels]) for c in range(channels)]


def signal_checksum(samples: np.ndarray) -> int:
    """Wrapping 16-bit sum of samples, as stored in the header checksum field."""
    total = int(np.sum(samples.astype(np.int64))) & 0xFFFF
    return total - 0x10000 if total >= 0x8000 else total


def read_record(header: RecordHeader, dat_bytes: bytes, checksum_mode: str = "error") -> Record:
    """Decode a `.dat` payload against its header and verify per-channel checksums.

    `checksum_mode` is one of "error", "warn", "ignore"; some distributed
    records have known checksum quirks, hence the downgrade option.
    """
    if checksum_mode not in ("error", "warn", "ignore"):
        raise ValueError(f"bad checksum_mode {checksum_mode!r}")
    formats = {s.format_code for s in header.signals}
    if len(formats) != 1:
        raise UnsupportedFormat("mixed signal formats within one record")
    fmt = formats.pop()

    n = header.num_samples
    if n == 0 and dat_bytes:
        # header without a sample count: infer from payload size
        if fmt == 212:
            n = (len(dat_bytes) * 2) // (3 * header.num_signals)
        else:
            n = len(dat_bytes) // (2 * header.num_signals)

    if fmt == 212:
        channels = decode_format212(dat_bytes, n, header.num_signals)
    else:
        channels = _decode_format16(dat_bytes, n, header.num_signals)

    for idx, (spec, ch) in enumerate(zip(header.signals, channels)):
        if spec.checksum is None or checksum_mode == "ignore":
            continue
        got = signal_checksum(ch)
        if (got & 0xFFFF) != (spec.checksum & 0xFFFF):
            if checksum_mode == "warn":
                warnings.warn(
                    f"record {header.record_name} channel {idx}: "
                    f"checksum {got} != header {spec.checksum}"
                )
            else:
                raise ChecksumMismatch(idx, spec.checksum, got)

    return Record(header=header, channels=channels)


def parse_annotations(data: bytes, sampling_hz: float) -> AnnotationSet:
    """Decode an MIT-format annotation stream (`.atr` payload).

    Little-endian 16-bit words: code = word >> 10, delta = word & 0x3FF. A
    running sample time accumulates deltas. SKIP consumes a 4-byte
    big-half-first offset, AUX consumes `delta` text bytes padded to even
    length and attaches to the preceding annotation, NUM/SUB/CHAN are
    consumed and ignored, and a zero word terminates the stream.
    """
    if len(data) % 2:
        raise MalformedAnnotation("odd byte count in annotation stream")
    words = np.frombuffer(data, dtype="<u2")

    annotations: list[Annotation] = []
    time = 0
    i = 0
    terminated = False
    while i < len(words):
        word = int(words[i])
        code = word >> 10
        delta = word & 0x3FF
        if word == 0:
            terminated = True
            break
        if code == SKIP_CODE:
            if i + 2 >= len(words):
                raise MalformedAnnotation("SKIP offset overruns buffer")
            high = int(words[i + 1])
            low = int(words[i + 2])
            offset = (high << 16) | low
            if offset & 0x80000000:
                offset -= 1 << 32
            time += offset
            i += 3
            continue
        if code == AUX_CODE:
            aux_len = delta
            n_words = (aux_len + 1) // 2
            if i + n_words >= len(words):
                raise MalformedAnnotation("aux string overruns buffer")
            raw = data[(i + 1) * 2 : (i + 1) * 2 + aux_len]
            text = raw.rstrip(b"\x00").decode("latin-1")
            if not annotations:
                raise MalformedAnnotation("aux with no preceding annotation")
            annotations[-1].aux = text
            i += 1 + n_words
            continue
        if code in (NUM_CODE, SUB_CODE, CHAN_CODE):
            i += 1
            continue
        time += delta
        annotations.append(Annotation(sample_index=time, code=code))
        i += 1
    if not terminated:
        raise MalformedAnnotation("annotation stream missing zero terminator")
    # some files lead with a NOTE carrying the sampling rate; reference
    # readers treat it as metadata, not an annotation
    if (
        annotations
        and annotations[0].sample_index == 0
        and annotations[0].code == 22
        and (annotations[0].aux or "").startswith("## time resolution:")
    ):
        annotations.pop(0)
    return AnnotationSet(annotations=annotations, sampling_hz=sampling_hz)


def rhythm_intervals(ann: AnnotationSet, num_samples: int) -> list[RhythmInterval]:
    """Partition [0, num_samples) into rhythm intervals.

    Rhythm annotations (code 28, aux beginning "(") open an interval that
    closes at the next rhythm annotation or at the end of the record; aux
    "(AFIB" marks AFIB, anything else (including the span before the first
    rhythm annotation) is OTHER.
    """
    marks: list[tuple[int, Rhythm]] = []
    for a in ann.annotations:
        if a.code != RHYTHM_CODE or not a.aux or not a.aux.startswith("("):
            continue
        label = Rhythm.AFIB if a.aux.strip() == "(AFIB" else Rhythm.OTHER
        marks.append((min(a.sample_index, num_samples), label))

    intervals: list[RhythmInterval] = []
    if num_samples <= 0:
        return intervals
    cursor = 0
    current = Rhythm.OTHER
    for sample, label in marks:
        if sample > cursor:
            intervals.append(RhythmInterval(cursor, sample, current))
            cursor = sample
        current = label
    if cursor < num_samples:
        intervals.append(RhythmInterval(cursor, num_samples, current))
    return intervals


def afib_sample_count(intervals: list[RhythmInterval]) -> int:
    return sum(iv.end_sample - iv.start_sample for iv in intervals if iv.rhythm is Rhythm.AFIB)


def load_record(path_prefix: str | Path, checksum_mode: str = "error") -> Record:
    """Read `<prefix>.hea` and its `.dat` payload from disk."""
    prefix = Path(path_prefix)
    header = parse_header(prefix.with_suffix(".hea").read_text())
    dat_names = {s.file_name for s in header.signals}
    if len(dat_names) != 1:
        raise UnsupportedFormat("records split across multiple signal files are not supported")
    dat_path = prefix.parent / dat_names.pop()
    return read_record(header, dat_path.read_bytes(), checksum_mode=checksum_mode)


def load_annotations(path_prefix: str | Path, extension: str = "atr") -> AnnotationSet:
    prefix = Path(path_prefix)
    header = parse_header(prefix.with_suffix(".hea").read_text())
    data = prefix.with_suffix("." + extension).read_bytes()
    return parse_annotations(data, header.sampling_hz)
