"""Glucose estimation from smartphone-video PPG.

Stages: frame statistics -> raw PPG (:mod:`.ingest`) -> ALS baseline removal
and Gaussian band-pass (:mod:`.preprocess`) -> landmarks and feature vectors
(:mod:`.features`) -> principal component regression (:mod:`.regression`) ->
Clarke error grid and acceptability (:mod:`.clinical`). :mod:`.synth`
generates ground-truth synthetic trials.
"""

from .clinical import clarke_summary, clarke_zone, clinical_acceptability, evaluate
from .features import (
    assemble_features,
    central_difference,
    compute_delt,
    detect_peaks,
    second_derivative,
    segment_and_classify,
)
from .ingest import FrameStatsSeries, PpgSignal, Stage, extract_ppg, frame_mean, parse_frame_stats
from .preprocess import (
    AlsConfig,
    GaussianConfig,
    als_baseline,
    als_correct,
    gaussian_bandpass,
    preprocess_pipeline,
)
from .regression import Dataset, PcrModel, pcr_predict, pcr_train, sep, sweep_components, train_test_split
from .synth import SynthParams, synth_dataset, synth_ppg

__version__ = "0.1.0"
