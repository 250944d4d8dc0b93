"""Turn per-frame video statistics into a raw PPG waveform.

The ingestion boundary is a small CSV of whole-frame channel means, one row
per decoded frame::

    #fps=30,channel_max=255
    0,120.5,80.1,60.2
    1,121.0,80.0,60.3

Video decoding happens outside this package. :func:`frame_mean` and
:func:`read_pgm` cover the case where a caller has per-channel pixel grids
instead of precomputed means.
"""

import enum
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._io import fmt, parse_header
from .errors import (
    DomainError,
    InsufficientDataError,
    OrderError,
    ParseError,
    RangeError,
)

CHANNELS = ("red", "green", "blue")
NOISY_CHANNELS = ("green", "blue")


class Stage(str, enum.Enum):
    RAW = "raw"
    ALS_CORRECTED = "als_corrected"
    GAUSSIAN_FILTERED = "gaussian_filtered"
    PREPROCESSED = "preprocessed"
    DERIVATIVE1 = "derivative1"
    DERIVATIVE2 = "derivative2"


@dataclass(frozen=True)
class FrameStatsSeries:
    """Whole-frame mean intensity of each colour channel, frame by frame."""

    frame_index: np.ndarray
    mean_red: np.ndarray
    mean_green: np.ndarray
    mean_blue: np.ndarray
    fps: float
    channel_max: float = 255.0

    def __post_init__(self):
        if not (math.isfinite(self.fps) and self.fps > 0):
            raise RangeError(f"fps must be positive, got {self.fps}")
        n = len(self.frame_index)
        for name in CHANNELS:
            values = np.asarray(getattr(self, f"mean_{name}"), dtype=float)
            if values.shape != (n,):
                raise RangeError(f"mean_{name} has {values.shape} entries, expected {n}")
            if not np.all(np.isfinite(values)):
                raise RangeError(f"mean_{name} contains non-finite values")
            if np.any(values < 0) or np.any(values > self.channel_max):
                raise RangeError(f"mean_{name} outside [0, {self.channel_max}]")
            object.__setattr__(self, f"mean_{name}", values)
        idx = np.asarray(self.frame_index, dtype=np.int64)
        if n > 1 and np.any(np.diff(idx) <= 0):
            raise OrderError("frame_index must be strictly increasing")
        object.__setattr__(self, "frame_index", idx)

    def __len__(self):
        return len(self.frame_index)

    @property
    def timestamps(self):
        return self.frame_index / self.fps

    def channel(self, name):
        if name not in CHANNELS:
            raise DomainError(f"unknown channel {name!r}; expected one of {CHANNELS}")
        return getattr(self, f"mean_{name}")


@dataclass(frozen=True)
class PpgSignal:
    """A uniformly sampled waveform in arbitrary intensity units.

    Waveforms need at least two samples. Derivative stages may hold one,
    since differencing a 3-sample signal leaves a single value.
    """

    samples: np.ndarray
    fs: float
    stage: Stage = Stage.RAW
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise DomainError("samples must be one-dimensional")
        stage = Stage(self.stage)
        minimum = 1 if stage in (Stage.DERIVATIVE1, Stage.DERIVATIVE2) else 2
        if len(samples) < minimum:
            raise InsufficientDataError(f"{stage.value} signal needs at least {minimum} samples, got {len(samples)}")
        if not np.all(np.isfinite(samples)):
            raise RangeError("signal contains non-finite samples")
        if not (math.isfinite(self.fs) and self.fs > 0):
            raise RangeError(f"fs must be positive, got {self.fs}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "stage", stage)

    def __len__(self):
        return len(self.samples)

    @property
    def times(self):
        return np.arange(len(self.samples)) / self.fs

    def with_samples(self, samples, stage):
        return PpgSignal(samples, self.fs, stage, dict(self.meta))


def _to_float(token, what, line):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"cannot parse {what} {token!r}", line) from None
    if not math.isfinite(value):
        raise RangeError(f"line {line}: {what} is not finite ({token!r})")
    return value


def parse_frame_stats(stream):
    """Read a frame-statistics CSV.

    Parameters
    ----------
    stream : file-like or str
        Text stream (or the full text) whose first line is
        ``#fps=<float>,channel_max=<float>``.

    Returns
    -------
    FrameStatsSeries

    Raises
    ------
    ParseError
        Missing header or a malformed row (the message carries the line number).
    OrderError
        ``frame_index`` is not strictly increasing.
    RangeError
        A non-finite or out-of-range value.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = iter(enumerate(stream, start=1))
    try:
        _, first = next(lines)
    except StopIteration:
        raise ParseError("empty input", 1) from None
    try:
        header = parse_header(first)
    except ValueError as exc:
        raise ParseError(str(exc), 1) from None
    if "fps" not in header:
        raise ParseError("header must declare fps", 1)
    fps = _to_float(header["fps"], "fps", 1)
    channel_max = _to_float(header.get("channel_max", "255"), "channel_max", 1)
    if fps <= 0:
        raise RangeError(f"line 1: fps must be positive, got {fps}")
    if channel_max <= 0:
        raise RangeError(f"line 1: channel_max must be positive, got {channel_max}")

    rows = []
    for lineno, raw in lines:
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        parts = [p.strip() for p in text.split(",")]
        if parts[0] == "frame_index":
            continue
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", lineno)
        try:
            idx = int(parts[0])
        except ValueError:
            raise ParseError(f"bad frame_index {parts[0]!r}", lineno) from None
        values = [_to_float(tok, name, lineno) for tok, name in zip(parts[1:], CHANNELS)]
        for value, name in zip(values, CHANNELS):
            if not 0 <= value <= channel_max:
                raise RangeError(f"line {lineno}: mean_{name}={value} outside [0, {channel_max}]")
        if rows and idx <= rows[-1][0]:
            raise OrderError(f"line {lineno}: frame_index {idx} does not increase")
        rows.append((idx, *values))

    arr = np.array(rows, dtype=float).reshape(-1, 4)
    return FrameStatsSeries(
        frame_index=arr[:, 0].astype(np.int64),
        mean_red=arr[:, 1],
        mean_green=arr[:, 2],
        mean_blue=arr[:, 3],
        fps=fps,
        channel_max=channel_max,
    )


def format_frame_stats(series):
    out = [f"#fps={fmt(series.fps)},channel_max={fmt(series.channel_max)}"]
    for i, r, g, b in zip(series.frame_index, series.mean_red, series.mean_green, series.mean_blue):
        out.append(f"{int(i)},{fmt(r)},{fmt(g)},{fmt(b)}")
    return "\n".join(out) + "\n"


def frame_mean(frame):
    """Mean of every pixel in a single-channel frame (no region of interest)."""
    grid = np.asarray(frame, dtype=float)
    if grid.size == 0:
        raise DomainError("frame is empty")
    return float(grid.mean())


def read_pgm(stream):
    """Parse a plain-text (P2) PGM grid into a 2-D array."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    tokens = []
    for line in stream:
        tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P2":
        raise ParseError("not a plain PGM (P2) file", 1)
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
        pixels = np.array([int(t) for t in tokens[4:]], dtype=float)
    except ValueError:
        raise ParseError("non-integer token in PGM body") from None
    if pixels.size != width * height:
        raise ParseError(f"expected {width * height} pixels, found {pixels.size}")
    if np.any(pixels < 0) or np.any(pixels > maxval):
        raise RangeError(f"pixel values outside [0, {maxval}]")
    return pixels.reshape(height, width)


def series_from_frames(frames, fps, channel_max=255.0):
    """Build a series from an iterable of ``(red, green, blue)`` pixel grids."""
    means = np.array([[frame_mean(r), frame_mean(g), frame_mean(b)] for r, g, b in frames])
    if means.size == 0:
        raise InsufficientDataError("no frames")
    return FrameStatsSeries(
        frame_index=np.arange(len(means)),
        mean_red=means[:, 0],
        mean_green=means[:, 1],
        mean_blue=means[:, 2],
        fps=fps,
        channel_max=channel_max,
    )


def extract_ppg(series, channel="red", flip=None):
    """Raw PPG from a channel's frame means with the series mean removed.

    The red channel darkens as blood volume rises, so it is sign-flipped by
    default. Green and blue are accepted but tagged as noisy in ``meta``.
    """
    if len(series) < 2:
        raise InsufficientDataError(f"need at least 2 frames, got {len(series)}")
    if flip is None:
        flip = channel == "red"
    values = series.channel(channel)
    centred = values - values.mean()
    samples = -centred if flip else centred
    meta = {"channel": channel, "flip": bool(flip), "noisy_channel": channel in NOISY_CHANNELS}
    return PpgSignal(samples, series.fps, Stage.RAW, meta)


def format_signal(signal):
    head = f"#fs={fmt(signal.fs)},stage={signal.stage.value}"
    for key in sorted(signal.meta):
        value = signal.meta[key]
        if isinstance(value, bool):
            value = int(value)
        head += f",{key}={value}"
    lines = [head, "index,sample"]
    lines.extend(f"{i},{fmt(v)}" for i, v in enumerate(signal.samples))
    return "\n".join(lines) + "\n"


def parse_signal(stream):
    """Read a signal CSV written by :func:`format_signal`."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = list(enumerate(stream, start=1))
    if not lines:
        raise ParseError("empty input", 1)
    try:
        header = parse_header(lines[0][1])
    except ValueError as exc:
        raise ParseError(str(exc), 1) from None
    if "fs" not in header:
        raise ParseError("header must declare fs", 1)
    fs = _to_float(header.pop("fs"), "fs", 1)
    try:
        stage = Stage(header.pop("stage", "raw"))
    except ValueError as exc:
        raise ParseError(str(exc), 1) from None
    meta = {}
    for key, value in header.items():
        if key in ("flip", "noisy_channel"):
            meta[key] = value in ("1", "true", "True")
        else:
            meta[key] = value
    samples = []
    for lineno, raw in lines[1:]:
        text = raw.strip()
        if not text or text.startswith("#") or text.startswith("index"):
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields, got {len(parts)}", lineno)
        samples.append(_to_float(parts[1], "sample", lineno))
    return PpgSignal(np.array(samples), fs, stage, meta)
