"""Synthetic PPG trials with exact ground truth.

Each cardiac cycle is two Gaussian pulses: a systolic pulse ``rise_offset``
seconds after the cycle start and a diastolic pulse ``diastolic_lag`` seconds
after that. Baseline drift (linear plus one sinusoid) and white noise are
added on top. Everything is a pure function of the parameters and seed.

The glucose value attached to each synthetic trial is an affine function of
the pulse parameters. It only exists to exercise the calibration machinery
and says nothing about physiology.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParamError
from .ingest import FrameStatsSeries, PpgSignal, Stage

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state):
    """SplitMix64 output function applied to a 64-bit state."""
    z = state & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def trial_seed(seed, index):
    """Seed of trial ``index``: the ``index``-th output of SplitMix64 seeded with ``seed``."""
    return splitmix64((seed + (index + 1) * _GOLDEN) & _MASK64)


@dataclass(frozen=True)
class SynthParams:
    heart_rate: float = 72.0
    systolic_amp: float = 1.0
    diastolic_amp: float = 0.5
    diastolic_lag: float = 0.3
    pulse_width: float = 0.05
    drift_slope: float = 0.0
    drift_amp: float = 0.0
    drift_freq: float = 0.1
    noise_sigma: float = 0.0
    duration: float = 60.0
    fs: float = 30.0
    seed: int = 0
    rise_offset: float = 0.1

    def __post_init__(self):
        if not 30 <= self.heart_rate <= 220:
            raise ParamError(f"heart_rate must lie in [30, 220] bpm, got {self.heart_rate}")
        if self.systolic_amp < 0 or self.diastolic_amp < 0:
            raise ParamError("pulse amplitudes must be non-negative")
        period = 60.0 / self.heart_rate
        if not 0 <= self.diastolic_lag < period:
            raise ParamError(f"diastolic_lag must lie in [0, {period:.4g}) s")
        if not 0 <= self.rise_offset < period:
            raise ParamError(f"rise_offset must lie in [0, {period:.4g}) s")
        if not self.pulse_width > 0:
            raise ParamError("pulse_width must be positive")
        if self.noise_sigma < 0 or self.drift_amp < 0 or self.drift_freq < 0:
            raise ParamError("noise_sigma, drift_amp and drift_freq must be non-negative")
        if not self.duration > 0:
            raise ParamError("duration must be positive")
        if self.fs < 2 * (self.heart_rate / 60.0) * 4:
            raise ParamError(f"fs={self.fs} Hz cannot resolve pulse harmonics at {self.heart_rate} bpm")
        if int(self.duration * self.fs) < 2:
            raise ParamError("duration * fs must give at least 2 samples")

    @property
    def period(self):
        return 60.0 / self.heart_rate


@dataclass
class SynthTrial:
    signal: PpgSignal
    systolic_times: np.ndarray
    diastolic_times: np.ndarray
    template: np.ndarray
    params: SynthParams
    glucose_ref: float = None
    trial_id: str = ""
    subject_id: str = ""
    age: float = None
    stomach_state: str = None

    @property
    def systolic_indices(self):
        return np.rint(self.systolic_times * self.signal.fs).astype(np.int64)

    @property
    def diastolic_indices(self):
        return np.rint(self.diastolic_times * self.signal.fs).astype(np.int64)


def synth_ppg(params):
    """Generate one synthetic trial."""
    n = int(params.duration * params.fs)
    t = np.arange(n) / params.fs
    period = params.period
    n_cycles = int(math.ceil(params.duration / period)) + 1

    starts = np.arange(-1, n_cycles) * period
    sys_all = starts + params.rise_offset
    dia_all = sys_all + params.diastolic_lag
    inv = 1.0 / (2.0 * params.pulse_width ** 2)
    template = np.zeros(n)
    for ts, td in zip(sys_all, dia_all):
        template += params.systolic_amp * np.exp(-((t - ts) ** 2) * inv)
        template += params.diastolic_amp * np.exp(-((t - td) ** 2) * inv)

    drift = params.drift_slope * t + params.drift_amp * np.sin(2 * np.pi * params.drift_freq * t)
    rng = np.random.default_rng(params.seed)
    noise = rng.normal(0.0, params.noise_sigma, n) if params.noise_sigma > 0 else np.zeros(n)
    samples = template + drift + noise

    end = n / params.fs

    def in_range(times):
        return times[(times >= 0) & (times < end)]

    signal = PpgSignal(samples, params.fs, Stage.RAW, {"synthetic": True})
    return SynthTrial(signal, in_range(sys_all), in_range(dia_all), template, params)


def to_frame_stats(signal, seed=0, red_base=150.0, red_scale=10.0, channel_max=255.0):
    """Render a waveform as frame means, red channel inverted as in real video.

    Green and blue are flat with small seeded noise.
    """
    rng = np.random.default_rng(seed)
    n = len(signal.samples)
    red = np.clip(red_base - red_scale * signal.samples, 0.0, channel_max)
    green = np.clip(40.0 + rng.normal(0.0, 0.5, n), 0.0, channel_max)
    blue = np.clip(20.0 + rng.normal(0.0, 0.5, n), 0.0, channel_max)
    return FrameStatsSeries(np.arange(n), red, green, blue, signal.fs, channel_max)


@dataclass(frozen=True)
class GlucoseMap:
    """glucose = intercept + sum(coef * (feature - centre)) + N(0, noise_sigma)."""

    intercept: float = 140.0
    lag_coef: float = 300.0
    lag_centre: float = 0.29
    ratio_coef: float = 150.0
    ratio_centre: float = 0.45
    hr_coef: float = 1.2
    hr_centre: float = 75.0
    noise_sigma: float = 5.0

    def mean(self, params):
        ratio = params.diastolic_amp / params.systolic_amp if params.systolic_amp else 0.0
        return (
            self.intercept
            + self.lag_coef * (params.diastolic_lag - self.lag_centre)
            + self.ratio_coef * (ratio - self.ratio_centre)
            + self.hr_coef * (params.heart_rate - self.hr_centre)
        )


@dataclass(frozen=True)
class SynthRanges:
    """Uniform sampling ranges for per-trial parameters."""

    heart_rate: tuple = (55.0, 95.0)
    systolic_amp: tuple = (0.8, 1.2)
    ratio: tuple = (0.3, 0.6)
    diastolic_lag: tuple = (0.25, 0.33)
    pulse_width: tuple = (0.04, 0.06)
    drift_slope: tuple = (-0.04, 0.04)
    drift_amp: tuple = (0.0, 1.0)
    drift_freq: tuple = (0.05, 0.25)
    noise_sigma: tuple = (0.03, 0.12)
    duration: float = 60.0
    fs: float = 30.0
    trials_per_subject: int = 5


@dataclass
class SynthDataset:
    trials: list
    manifest: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.trials)


def _uniform(rng, bounds):
    lo, hi = bounds
    return float(rng.uniform(lo, hi)) if hi > lo else float(lo)


def synth_dataset(n, glucose_map=GlucoseMap(), seed=0, ranges=SynthRanges(), noise_sigma=None):
    """Draw ``n`` synthetic trials with affine glucose labels.

    Parameters
    ----------
    n : int
        Number of trials, at least 4.
    glucose_map : GlucoseMap
    seed : int
        Master seed; trial ``i`` uses :func:`trial_seed` ``(seed, i)``.
    ranges : SynthRanges
    noise_sigma : float, optional
        Fixed PPG noise level overriding ``ranges.noise_sigma``.
    """
    if n < 4:
        raise ParamError(f"need at least 4 trials, got {n}")
    trials = []
    records = []
    for i in range(n):
        s = trial_seed(seed, i)
        rng = np.random.default_rng(s)
        hr = _uniform(rng, ranges.heart_rate)
        sys_amp = _uniform(rng, ranges.systolic_amp)
        ratio = _uniform(rng, ranges.ratio)
        lag = min(_uniform(rng, ranges.diastolic_lag), 0.8 * 60.0 / hr)
        params = SynthParams(
            heart_rate=hr,
            systolic_amp=sys_amp,
            diastolic_amp=ratio * sys_amp,
            diastolic_lag=lag,
            pulse_width=_uniform(rng, ranges.pulse_width),
            drift_slope=_uniform(rng, ranges.drift_slope),
            drift_amp=_uniform(rng, ranges.drift_amp),
            drift_freq=_uniform(rng, ranges.drift_freq),
            noise_sigma=_uniform(rng, ranges.noise_sigma) if noise_sigma is None else float(noise_sigma),
            duration=ranges.duration,
            fs=ranges.fs,
            seed=int(rng.integers(0, 2**63 - 1)),
        )
        # always drawn so the other per-trial draws do not depend on the label noise level
        label_noise = float(rng.normal())
        glucose = glucose_map.mean(params) + glucose_map.noise_sigma * label_noise
        subject = i // ranges.trials_per_subject
        subject_rng = np.random.default_rng(trial_seed(seed ^ 0x5EED, subject))
        age = float(subject_rng.integers(15, 62))
        stomach = ("full", "empty", "partial")[int(rng.integers(0, 3))]

        trial = synth_ppg(params)
        trial.glucose_ref = glucose
        trial.subject_id = f"s{subject:03d}"
        trial.trial_id = f"{trial.subject_id}_t{i % ranges.trials_per_subject}"
        trial.age = age
        trial.stomach_state = stomach
        trials.append(trial)
        records.append(
            {
                "trial_id": trial.trial_id,
                "subject_id": trial.subject_id,
                "seed": s,
                "params": asdict(params),
                "glucose_ref": glucose,
                "age": age,
                "stomach_state": stomach,
            }
        )

    manifest = {
        "format_version": 1,
        "n": n,
        "seed": seed,
        "seed_hash": "splitmix64: trial i seed = (i+1)-th SplitMix64 output from master seed",
        "glucose_map": asdict(glucose_map),
        "ranges": asdict(ranges),
        "noise_sigma_override": noise_sigma,
        "trials": records,
    }
    return SynthDataset(trials, manifest)
