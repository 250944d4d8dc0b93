"""Principal component regression: calibration, prediction and error metrics."""

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._io import dumps_json
from .errors import (
    ParseError,
    RankError,
    ScaleError,
    SchemaError,
    ShapeError,
    SplitError,
)

MODEL_FORMAT_VERSION = 1
DEFAULT_K = 7


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    trial_ids: list
    schema_id: str = ""
    feature_names: tuple = ()
    subject_ids: list = field(default=None)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        n = self.X.shape[0]
        if n < 1:
            raise ShapeError("dataset has no rows")
        if self.y.shape != (n,):
            raise ShapeError(f"y has {self.y.shape[0]} values for {n} rows")
        if len(self.trial_ids) != n:
            raise ShapeError(f"{len(self.trial_ids)} trial ids for {n} rows")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ShapeError("dataset contains non-finite entries")
        if self.feature_names and len(self.feature_names) != self.X.shape[1]:
            raise SchemaError(
                f"{len(self.feature_names)} feature names for {self.X.shape[1]} columns"
            )
        if self.subject_ids is None:
            self.subject_ids = [subject_of(t) for t in self.trial_ids]

    def __len__(self):
        return self.X.shape[0]

    def subset(self, rows):
        rows = list(rows)
        return Dataset(
            self.X[rows],
            self.y[rows],
            [self.trial_ids[i] for i in rows],
            self.schema_id,
            self.feature_names,
            [self.subject_ids[i] for i in rows],
        )


def subject_of(trial_id):
    """Subject part of a ``<subject>_<trial>`` identifier."""
    head, sep, _ = str(trial_id).rpartition("_")
    return head if sep else str(trial_id)


@dataclass(frozen=True)
class PcrModel:
    mu: np.ndarray
    sigma: np.ndarray
    loadings: np.ndarray
    beta_pc: np.ndarray
    intercept: float
    k: int
    schema_id: str = ""
    feature_names: tuple = ()
    standardize: bool = True

    @property
    def n_features(self):
        return self.mu.shape[0]

    def coefficients(self):
        """Equivalent coefficients on the original feature scale."""
        return self.loadings @ self.beta_pc / self.sigma

    def to_json(self):
        return dumps_json(
            {
                "format_version": MODEL_FORMAT_VERSION,
                "schema_id": self.schema_id,
                "k": int(self.k),
                "mu": self.mu,
                "sigma": self.sigma,
                "loadings": self.loadings,
                "beta_pc": self.beta_pc,
                "intercept": self.intercept,
                "standardize": self.standardize,
                "feature_names": list(self.feature_names),
            }
        )

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
            if data.get("format_version") != MODEL_FORMAT_VERSION:
                raise ParseError(f"unsupported model format_version {data.get('format_version')!r}")
            k = int(data["k"])
            loadings = np.array(data["loadings"], dtype=float).reshape(-1, k)
            return cls(
                mu=np.array(data["mu"], dtype=float),
                sigma=np.array(data["sigma"], dtype=float),
                loadings=loadings,
                beta_pc=np.array(data["beta_pc"], dtype=float),
                intercept=float(data["intercept"]),
                k=k,
                schema_id=data.get("schema_id", ""),
                feature_names=tuple(data.get("feature_names", ())),
                standardize=bool(data.get("standardize", True)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"malformed model file: {exc}") from None


def train_test_split(ds, train_frac=0.75, seed=0, by="trial"):
    """Seeded shuffle, first ``ceil(n * train_frac)`` units go to training.

    ``by="subject"`` shuffles subjects instead of trials so no subject
    appears on both sides.
    """
    if not 0 < train_frac < 1:
        raise SplitError(f"train_frac must lie in (0, 1), got {train_frac}")
    rng = np.random.default_rng(seed)
    if by == "trial":
        units = [[i] for i in range(len(ds))]
    elif by == "subject":
        groups = {}
        for i, s in enumerate(ds.subject_ids):
            groups.setdefault(s, []).append(i)
        units = [groups[s] for s in sorted(groups)]
    else:
        raise SplitError(f"split unit must be 'trial' or 'subject', got {by!r}")

    n_units = len(units)
    n_train = math.ceil(n_units * train_frac - 1e-9)
    if n_train >= n_units or n_train < 1:
        raise SplitError(f"train_frac={train_frac} leaves an empty side for {n_units} {by}s")
    order = rng.permutation(n_units)
    train_rows = sorted(i for u in order[:n_train] for i in units[u])
    test_rows = sorted(i for u in order[n_train:] for i in units[u])
    if len(train_rows) < 2:
        raise SplitError(f"training side has {len(train_rows)} rows, need at least 2")
    return ds.subset(train_rows), ds.subset(test_rows)


def _sign_convention(vt):
    # largest-magnitude entry of each direction made positive; first index wins ties
    idx = np.argmax(np.abs(vt), axis=1)
    signs = np.sign(vt[np.arange(vt.shape[0]), idx])
    signs[signs == 0] = 1.0
    return vt * signs[:, None]


def pcr_train(train, k=DEFAULT_K, standardize=True):
    """Fit a principal component regression with ``k`` components.

    Columns are centred (and scaled to unit sample standard deviation when
    ``standardize``), the top-``k`` right singular vectors of that matrix are
    the loadings, and ``y`` is regressed on the component scores. Scores are
    centred, so the intercept is ``mean(y)``.

    Raises
    ------
    ScaleError
        A feature column is constant.
    RankError
        ``k`` is outside ``[1, min(n - 1, p)]`` or exceeds the numerical rank.
    """
    X, y = train.X, train.y
    n, p = X.shape
    if n < 2:
        raise ShapeError(f"training needs at least 2 rows, got {n}")
    if not 1 <= k <= min(n - 1, p):
        raise RankError(f"k={k} outside [1, {min(n - 1, p)}] for {n} rows and {p} features")
    mu = X.mean(axis=0)
    centred = X - mu
    spread = X.std(axis=0, ddof=1)
    scale_tol = 1e-12 * np.maximum(np.abs(mu), 1.0)
    flat = np.flatnonzero(spread <= scale_tol)
    if flat.size:
        j = int(flat[0])
        name = train.feature_names[j] if train.feature_names else f"column {j}"
        raise ScaleError(f"feature {name} is constant", column=j)
    sigma = spread if standardize else np.ones(p)
    Xs = centred / sigma

    _, s, vt = np.linalg.svd(Xs, full_matrices=False)
    rank = int(np.sum(s > max(n, p) * np.finfo(float).eps * s[0]))
    if k > rank:
        raise RankError(f"k={k} exceeds the numerical rank {rank} of the training matrix")
    loadings = _sign_convention(vt[:k]).T
    scores = Xs @ loadings
    intercept = float(y.mean())
    beta, *_ = np.linalg.lstsq(scores, y - intercept, rcond=None)
    return PcrModel(
        mu=mu,
        sigma=sigma,
        loadings=loadings,
        beta_pc=beta,
        intercept=intercept,
        k=k,
        schema_id=train.schema_id,
        feature_names=tuple(train.feature_names),
        standardize=standardize,
    )


def pcr_predict(model, X, schema_id=None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if schema_id is not None and model.schema_id and schema_id != model.schema_id:
        raise SchemaError(f"model expects schema {model.schema_id!r}, got {schema_id!r}")
    if X.shape[1] != model.n_features:
        raise ShapeError(f"model expects {model.n_features} features, got {X.shape[1]}")
    scores = ((X - model.mu) / model.sigma) @ model.loadings
    return scores @ model.beta_pc + model.intercept


class PredictionError(NamedTuple):
    sep: float
    rmsep: float
    bias: float
    m: int


def sep(y_pred, y_ref):
    """Standard error of prediction and its companions.

    ``sep`` is the bias-corrected standard deviation of the residuals
    ``y_pred - y_ref`` (``m - 1`` denominator); ``rmsep`` is their root mean
    square and ``bias`` their mean.
    """
    if np.ndim(y_pred) != 1 or np.shape(y_pred) != np.shape(y_ref):
        raise ShapeError(f"length mismatch: {np.shape(y_pred)} vs {np.shape(y_ref)}")
    e = np.asarray(y_pred, dtype=float) - np.asarray(y_ref, dtype=float)
    m = e.size
    if m < 2:
        raise ShapeError(f"need at least 2 predictions, got {m}")
    bias = float(e.mean())
    return PredictionError(
        sep=float(np.sqrt(np.sum((e - bias) ** 2) / (m - 1))),
        rmsep=float(np.sqrt(np.mean(e ** 2))),
        bias=bias,
        m=m,
    )


def sweep_components(train, test, k_max, standardize=True):
    """SEP and RMSEP on ``test`` for every component count ``1..k_max``."""
    n, p = train.X.shape
    if k_max > min(n - 1, p):
        raise RankError(f"k_max={k_max} exceeds min(n - 1, p) = {min(n - 1, p)}")
    rows = []
    for k in range(1, k_max + 1):
        model = pcr_train(train, k, standardize)
        err = sep(pcr_predict(model, test.X), test.y)
        rows.append((k, err.sep, err.rmsep))
    return rows
