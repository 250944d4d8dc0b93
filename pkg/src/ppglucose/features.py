"""Cardiac-cycle landmarks and fixed-length feature vectors.

Peaks are found on the preprocessed waveform; each cycle runs from one
dominant (systolic) peak to the next and may carry one secondary (diastolic)
peak. Derivatives use the two-point central difference
``d[j] = (a[j + 1] - a[j - 1]) / 2`` with no time scaling.
"""

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import peak_prominences

from ._io import fmt, parse_header
from .errors import (
    ConfigError,
    DomainError,
    InsufficientCyclesError,
    InsufficientDataError,
    ParseError,
    RangeError,
    SchemaError,
)
from .ingest import PpgSignal, Stage

MIN_CYCLES = 3
STOMACH_STATES = ("full", "empty", "partial")


@dataclass(frozen=True)
class PeakParams:
    min_separation: float = 0.35
    prominence_frac: float = 0.25
    relative_prominence: float = 0.5
    # derivative peaks sit closer together than systolic peaks
    derivative_separation_frac: float = 0.25

    def __post_init__(self):
        if not self.min_separation > 0:
            raise ConfigError(f"peak.min_separation must be > 0, got {self.min_separation}")
        if not 0 < self.prominence_frac <= 1:
            raise ConfigError(f"peak.prominence_frac must lie in (0, 1], got {self.prominence_frac}")
        if not 0 <= self.relative_prominence <= 1:
            raise ConfigError(f"peak.relative_prominence must lie in [0, 1], got {self.relative_prominence}")
        if not 0 < self.derivative_separation_frac <= 1:
            raise ConfigError("peak.derivative_separation_frac must lie in (0, 1]")


@dataclass(frozen=True)
class PeakSet:
    systolic: np.ndarray
    diastolic: np.ndarray
    cycles: list
    # systolic index -> diastolic index, None when the cycle has no candidate
    pairs: list = field(default_factory=list)

    @property
    def flagged(self):
        """Indices of cycles without a diastolic peak."""
        return [i for i, (_, d) in enumerate(self.pairs) if d is None]

    @classmethod
    def empty(cls):
        empty = np.array([], dtype=np.int64)
        return cls(empty, empty.copy(), [], [])


def _as_samples(signal):
    return np.asarray(getattr(signal, "samples", signal), dtype=float)


def central_difference(signal):
    """First derivative by two-point central difference (interior points only).

    The output has ``n - 2`` samples; output ``j`` sits at input ``j + 1``.
    """
    a = signal.samples
    if len(a) < 3:
        raise InsufficientDataError(f"central difference needs 3 samples, got {len(a)}")
    d = (a[2:] - a[:-2]) / 2.0
    stage = Stage.DERIVATIVE2 if signal.stage in (Stage.DERIVATIVE1, Stage.DERIVATIVE2) else Stage.DERIVATIVE1
    meta = dict(signal.meta)
    meta["offset"] = int(meta.get("offset", 0)) + 1
    return PpgSignal(d, signal.fs, stage, meta)


def second_derivative(signal):
    if len(signal.samples) < 5:
        raise InsufficientDataError(f"second derivative needs 5 samples, got {len(signal.samples)}")
    first = central_difference(signal)
    second = central_difference(first)
    return PpgSignal(second.samples, second.fs, Stage.DERIVATIVE2, second.meta)


def local_maxima(x):
    """Indices of strict local maxima; a flat top reports its leftmost sample."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    out = []
    i = 1
    while i < n - 1:
        if x[i] > x[i - 1]:
            j = i
            while j + 1 < n and x[j + 1] == x[i]:
                j += 1
            if j + 1 < n and x[j + 1] < x[i]:
                out.append(i)
            i = j + 1
        else:
            i += 1
    return np.array(out, dtype=np.int64)


def detect_peaks(signal, min_separation=0.35, prominence_frac=0.25, fs=None, relative_prominence=0.5):
    """Dominant peaks of a waveform.

    Candidates are strict local maxima whose topographic prominence is at
    least ``prominence_frac * (p95 - p5)`` of the samples. Candidates are then
    accepted highest first, dropping any that fall closer than
    ``min_separation * fs`` samples to an already accepted peak. Finally,
    accepted peaks less prominent than ``relative_prominence`` times their
    median prominence are discarded; on slow rhythms this removes noise
    bumps in the long flat stretch between beats.

    Parameters
    ----------
    signal : PpgSignal or array-like
    min_separation : float
        Seconds.
    prominence_frac : float
        In ``(0, 1]``.
    fs : float, optional
        Required when ``signal`` is a bare array.
    relative_prominence : float
        In ``[0, 1]``; 0 disables the final gate.

    Returns
    -------
    numpy.ndarray
        Sorted sample indices; may be empty.
    """
    if not min_separation > 0:
        raise DomainError("min_separation must be positive")
    if not 0 < prominence_frac <= 1:
        raise DomainError("prominence_frac must lie in (0, 1]")
    if not 0 <= relative_prominence <= 1:
        raise DomainError("relative_prominence must lie in [0, 1]")
    x = _as_samples(signal)
    if fs is None:
        fs = signal.fs
    candidates = local_maxima(x)
    if candidates.size == 0:
        return candidates
    spread = np.percentile(x, 95) - np.percentile(x, 5)
    prominence = peak_prominences(x, candidates)[0]
    candidates = candidates[prominence >= prominence_frac * spread]

    min_gap = min_separation * fs
    order = sorted(candidates, key=lambda i: (-x[i], i))
    blocked = np.zeros(len(x), dtype=bool)
    kept = []
    for i in order:
        if blocked[i]:
            continue
        kept.append(i)
        # block every j with |j - i| < min_gap
        lo = max(int(math.floor(i - min_gap)) + 1, 0)
        hi = int(math.ceil(i + min_gap))
        blocked[lo:hi] = True
    kept = np.array(sorted(kept), dtype=np.int64)
    if relative_prominence > 0 and kept.size:
        prom = peak_prominences(x, kept)[0]
        kept = kept[prom >= relative_prominence * np.median(prom)]
    return kept


def segment_and_classify(signal, peaks):
    """Split the waveform into cycles between consecutive dominant peaks.

    Within each cycle ``[start, end)`` the largest sample is systolic. The
    diastolic peak is the strict local maximum after it and before ``end``
    that stands out most from the cycle, measured by prominence within the
    cycle segment; ties go to the higher sample. Cycles with no such maximum
    carry ``None`` and are listed by :attr:`PeakSet.flagged`.
    """
    x = _as_samples(signal)
    peaks = np.asarray(peaks, dtype=np.int64)
    if peaks.size < 2:
        return PeakSet.empty()
    if np.any(np.diff(peaks) <= 0):
        raise DomainError("peaks must be strictly increasing")

    systolic, diastolic, cycles, pairs = [], [], [], []
    for start, end in zip(peaks[:-1], peaks[1:]):
        start, end = int(start), int(end)
        segment = x[start:end]
        s = start + int(np.argmax(segment))
        tail = x[s:end + 1]
        cand = local_maxima(tail)
        cand = cand[cand < len(tail) - 1]
        d = None
        if cand.size:
            prom = peak_prominences(tail, cand)[0]
            best = max(range(len(cand)), key=lambda j: (prom[j], tail[cand[j]], -cand[j]))
            d = s + int(cand[best])
            diastolic.append(d)
        systolic.append(s)
        cycles.append((start, end))
        pairs.append((s, d))
    return PeakSet(
        np.array(systolic, dtype=np.int64),
        np.array(diastolic, dtype=np.int64),
        cycles,
        pairs,
    )


def compute_delt(peaks, fs):
    """Systolic-to-diastolic delay per cycle, in seconds."""
    return [(d - s) / fs for s, d in peaks.pairs if d is not None]


def derivative_peaks(derivative, params=PeakParams()):
    """Peaks of ``|derivative|`` with their signed amplitudes.

    Both upstroke and downstroke extremes count, which roughly doubles the
    number of landmarks relative to the waveform itself.
    """
    mag = np.abs(derivative.samples)
    idx = detect_peaks(
        mag,
        params.min_separation * params.derivative_separation_frac,
        params.prominence_frac,
        fs=derivative.fs,
        relative_prominence=0.0,
    )
    return idx, derivative.samples[idx]


@dataclass(frozen=True)
class FeatureSchema:
    schema_id: str
    names: tuple
    kind: str
    length: int
    source: str = "signal"


STATS_NAMES = tuple(
    f"{stat}_{name}"
    for name in (
        "systolic_amp",
        "diastolic_amp",
        "delt",
        "period",
        "d1_peak_amp",
        "d1_peak_spacing",
        "d2_peak_amp",
        "d2_peak_spacing",
    )
    for stat in ("mean", "std")
)
RESAMPLE_LENGTH = 128

STATS_V1 = FeatureSchema("stats-v1", STATS_NAMES, "stats", len(STATS_NAMES))
RESAMPLE_V1 = FeatureSchema(
    "resample-v1", tuple(f"s{i:03d}" for i in range(RESAMPLE_LENGTH)), "resample", RESAMPLE_LENGTH
)
SCHEMAS = {s.schema_id: s for s in (STATS_V1, RESAMPLE_V1)}


def get_schema(schema_id):
    try:
        return SCHEMAS[schema_id]
    except KeyError:
        raise SchemaError(f"unknown schema {schema_id!r}; known: {sorted(SCHEMAS)}") from None


@dataclass
class FeatureVector:
    values: np.ndarray
    schema_id: str
    glucose_ref: float = None
    trial_id: str = ""
    age: float = None
    stomach_state: str = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        schema = get_schema(self.schema_id)
        if self.values.shape != (schema.length,):
            raise SchemaError(
                f"{self.schema_id} expects {schema.length} values, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise RangeError("feature vector contains non-finite values")
        if self.stomach_state is not None and self.stomach_state not in STOMACH_STATES:
            raise DomainError(f"stomach_state must be one of {STOMACH_STATES}")


def _mean_std(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0, 0.0
    return float(values.mean()), float(values.std())


def resample(x, length=RESAMPLE_LENGTH):
    x = np.asarray(x, dtype=float)
    grid = np.linspace(0.0, len(x) - 1.0, length)
    return np.interp(grid, np.arange(len(x)), x)


def _stats_features(signal, params):
    x = signal.samples
    fs = signal.fs
    peaks = detect_peaks(
        signal, params.min_separation, params.prominence_frac, relative_prominence=params.relative_prominence
    )
    peakset = segment_and_classify(signal, peaks)
    n_cycles = len(peakset.cycles)
    if n_cycles < MIN_CYCLES:
        raise InsufficientCyclesError(n_cycles, MIN_CYCLES)

    sys_amp = x[peakset.systolic]
    dia_amp = x[peakset.diastolic] if peakset.diastolic.size else []
    delt = compute_delt(peakset, fs)
    period = np.diff(peaks) / fs

    d1 = central_difference(signal)
    d1_idx, d1_amp = derivative_peaks(d1, params)
    d2 = second_derivative(signal)
    d2_idx, d2_amp = derivative_peaks(d2, params)

    parts = [
        _mean_std(sys_amp),
        _mean_std(dia_amp),
        _mean_std(delt),
        _mean_std(period),
        _mean_std(np.abs(d1_amp)),
        _mean_std(np.diff(d1_idx) / fs),
        _mean_std(np.abs(d2_amp)),
        _mean_std(np.diff(d2_idx) / fs),
    ]
    values = np.array([v for pair in parts for v in pair])
    meta = {
        "n_cycles": n_cycles,
        "missing_diastolic": len(peakset.flagged),
        "n_systolic_peaks": int(peaks.size),
        "n_d1_peaks": int(d1_idx.size),
        "n_d2_peaks": int(d2_idx.size),
    }
    return values, meta


def assemble_features(signal, schema=STATS_V1, params=PeakParams(), **labels):
    """Build the feature vector for one trial.

    ``stats-v1`` summarises landmark amplitudes and timings (mean and
    standard deviation of each, 16 values). ``resample-v1`` linearly
    resamples the whole waveform onto 128 points.

    Extra keyword arguments (``glucose_ref``, ``trial_id``, ``age``,
    ``stomach_state``) are copied onto the returned vector.

    Raises
    ------
    InsufficientCyclesError
        ``stats-v1`` found fewer than three complete cycles.
    """
    if isinstance(schema, str):
        schema = get_schema(schema)
    if schema.kind == "stats":
        values, meta = _stats_features(signal, params)
    elif schema.kind == "resample":
        values, meta = resample(signal.samples, schema.length), {}
    else:
        raise SchemaError(f"unsupported schema kind {schema.kind!r}")
    return FeatureVector(values, schema.schema_id, meta=meta, **labels)


def _opt(x):
    return "" if x is None else fmt(x)


def format_feature_csv(vectors, schema):
    """Serialise feature vectors; rows keep the order given."""
    if isinstance(schema, str):
        schema = get_schema(schema)
    lines = [f"#schema_id={schema.schema_id}"]
    lines.append(",".join(("trial_id", "glucose_ref", *schema.names, "age", "stomach_state")))
    for v in vectors:
        if v.schema_id != schema.schema_id:
            raise SchemaError(f"vector {v.trial_id!r} has schema {v.schema_id!r}")
        row = [v.trial_id, _opt(v.glucose_ref), *(fmt(x) for x in v.values), _opt(v.age), v.stomach_state or ""]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def parse_feature_csv(stream):
    """Read a feature CSV; returns ``(schema, list of FeatureVector)``."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = list(enumerate(stream, start=1))
    if not lines:
        raise ParseError("empty input", 1)
    try:
        header = parse_header(lines[0][1])
        schema = get_schema(header["schema_id"])
    except (ValueError, KeyError):
        raise ParseError("first line must be '#schema_id=<id>'", 1) from None
    width = schema.length + 4
    vectors = []
    for lineno, raw in lines[1:]:
        text = raw.rstrip("\r\n")
        if not text.strip() or text.startswith("#") or text.startswith("trial_id,"):
            continue
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != width:
            raise ParseError(f"expected {width} fields, got {len(parts)}", lineno)

        def num(tok, what, optional=False):
            if tok == "" and optional:
                return None
            try:
                value = float(tok)
            except ValueError:
                raise ParseError(f"bad {what} {tok!r}", lineno) from None
            if not math.isfinite(value):
                raise RangeError(f"line {lineno}: {what} is not finite")
            return value

        glucose = num(parts[1], "glucose_ref", optional=True)
        values = [num(tok, name) for tok, name in zip(parts[2:-2], schema.names)]
        age = num(parts[-2], "age", optional=True)
        stomach = parts[-1] or None
        if stomach is not None and stomach not in STOMACH_STATES:
            raise ParseError(f"bad stomach_state {stomach!r}", lineno)
        vectors.append(
            FeatureVector(values, schema.schema_id, glucose, parts[0], age, stomach)
        )
    return schema, vectors
