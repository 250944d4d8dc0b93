"""End-to-end helpers tying the stages together in memory."""

import numpy as np

from .config import PipelineConfig
from .errors import ShapeError
from .features import assemble_features, get_schema
from .ingest import extract_ppg
from .preprocess import preprocess_pipeline
from .regression import Dataset, pcr_predict, pcr_train, sep, train_test_split
from .synth import to_frame_stats

# name -> (signal stage fed to the features step, schema)
VARIANTS = {
    "raw": ("raw", "resample-v1"),
    "preprocessed": ("preprocessed", "resample-v1"),
    "features": ("preprocessed", "stats-v1"),
}


def dataset_from_vectors(vectors):
    """Stack labelled feature vectors into a :class:`Dataset`."""
    vectors = list(vectors)
    if not vectors:
        raise ShapeError("no feature vectors")
    missing = [v.trial_id for v in vectors if v.glucose_ref is None]
    if missing:
        raise ShapeError(f"trials without glucose_ref: {', '.join(missing[:5])}")
    schema = get_schema(vectors[0].schema_id)
    return Dataset(
        np.vstack([v.values for v in vectors]),
        np.array([v.glucose_ref for v in vectors]),
        [v.trial_id for v in vectors],
        schema.schema_id,
        schema.names,
    )


def trial_signals(trial, cfg=PipelineConfig()):
    """Raw and preprocessed signals for a synthetic trial via the frame-stats path."""
    raw = extract_ppg(to_frame_stats(trial.signal, seed=trial.params.seed))
    return {"raw": raw, "preprocessed": preprocess_pipeline(raw, cfg.als, cfg.gauss)}


def synthetic_datasets(synth, cfg=PipelineConfig(), variants=tuple(VARIANTS)):
    """Build one labelled dataset per comparison variant from a synthetic set."""
    per_variant = {name: [] for name in variants}
    for trial in synth.trials:
        signals = trial_signals(trial, cfg)
        labels = dict(
            glucose_ref=trial.glucose_ref,
            trial_id=trial.trial_id,
            age=trial.age,
            stomach_state=trial.stomach_state,
        )
        for name in variants:
            stage, schema = VARIANTS[name]
            per_variant[name].append(assemble_features(signals[stage], schema, cfg.peak, **labels))
    return {name: dataset_from_vectors(vs) for name, vs in per_variant.items()}


def calibrate(ds, cfg=PipelineConfig()):
    """Split, train with ``cfg.k`` components, and score the held-out trials.

    Returns ``(model, test_dataset, predictions, PredictionError)``.
    """
    train, test = train_test_split(ds, cfg.split.train_frac, cfg.split.seed, cfg.split.by)
    model = pcr_train(train, cfg.k, cfg.standardize)
    pred = pcr_predict(model, test.X, test.schema_id)
    return model, test, pred, sep(pred, test.y)
