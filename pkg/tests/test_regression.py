import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import ols_standardized
from ppglucose.errors import RankError, ScaleError, SchemaError, ShapeError, SplitError
from ppglucose.regression import (
    Dataset,
    PcrModel,
    pcr_predict,
    pcr_train,
    sep,
    subject_of,
    sweep_components,
    train_test_split,
)


def make(X, y, ids=None, schema_id="", names=None):
    X = np.asarray(X, dtype=float)
    ids = ids or [f"t{i:03d}" for i in range(len(X))]
    return Dataset(X, np.asarray(y, dtype=float), ids, schema_id, names or tuple(f"f{j}" for j in range(X.shape[1])))


def random_instance(seed, n=40, p=10):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p)) * rng.uniform(0.5, 20, p) + rng.uniform(-50, 50, p)
    y = X @ rng.normal(size=p) + rng.normal(0, 2, n) + 120
    return X, y


# -- split ------------------------------------------------------------------------


def test_split_sizes_88():
    ds = make(np.random.default_rng(0).normal(size=(88, 3)), np.arange(88))
    train, test = train_test_split(ds, 0.75, seed=1)
    assert (len(train), len(test)) == (66, 22)
    assert sorted(train.trial_ids + test.trial_ids) == sorted(ds.trial_ids)


def test_split_is_deterministic():
    ds = make(np.arange(8.0).reshape(4, 2), [1, 2, 3, 4])
    a = train_test_split(ds, 0.75, seed=5)
    b = train_test_split(ds, 0.75, seed=5)
    assert a[0].trial_ids == b[0].trial_ids and a[1].trial_ids == b[1].trial_ids
    assert (len(a[0]), len(a[1])) == (3, 1)


def test_training_needs_two_rows():
    with pytest.raises(ShapeError):
        pcr_train(make([[1.0, 2.0]], [3.0]), k=1)


@pytest.mark.parametrize("frac", [1.0, 0.0, 1.5])
def test_split_rejects_degenerate(frac):
    ds = make(np.arange(8.0).reshape(4, 2), [1, 2, 3, 4])
    with pytest.raises(SplitError):
        train_test_split(ds, frac)


def test_split_by_subject_keeps_subjects_whole():
    ids = [f"s{s:03d}_t{t}" for s in range(8) for t in range(5)]
    ds = make(np.random.default_rng(1).normal(size=(40, 2)), np.arange(40), ids)
    train, test = train_test_split(ds, 0.75, seed=2, by="subject")
    assert not {subject_of(i) for i in train.trial_ids} & {subject_of(i) for i in test.trial_ids}
    assert (len(train), len(test)) == (30, 10)


def test_subject_of():
    assert subject_of("s003_t2") == "s003"
    assert subject_of("plain") == "plain"


# -- training -------------------------------------------------------------------------


def test_noiseless_full_rank_fit():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 3))
    y = X @ np.array([2.0, -1.0, 0.5])
    model = pcr_train(make(X, y), k=3)
    assert np.max(np.abs(pcr_predict(model, X) - y)) < 1e-8


def test_constant_response():
    X = np.random.default_rng(4).normal(size=(15, 4))
    model = pcr_train(make(X, np.full(15, 100.0)), k=2)
    assert model.intercept == pytest.approx(100.0, abs=1e-9)
    assert np.max(np.abs(model.beta_pc)) < 1e-9


def test_row_at_mean_predicts_intercept():
    X, y = random_instance(5)
    model = pcr_train(make(X, y), k=4)
    assert pcr_predict(model, model.mu[None, :])[0] == model.intercept


@pytest.mark.parametrize("seed", range(10))
def test_full_rank_pcr_equals_ols(seed):
    X, y = random_instance(seed)
    Xt, _ = random_instance(seed + 100, n=15)
    model = pcr_train(make(X, y), k=10)
    pred = pcr_predict(model, Xt)
    ref = ols_standardized(X, y, Xt)
    assert np.max(np.abs(pred - ref) / np.abs(ref)) < 1e-8


def test_loadings_orthonormal():
    X, y = random_instance(6, n=60, p=12)
    model = pcr_train(make(X, y), k=8)
    gram = model.loadings.T @ model.loadings
    assert np.max(np.abs(gram - np.eye(8))) < 1e-10


def test_sign_convention_largest_entry_positive():
    X, y = random_instance(7)
    model = pcr_train(make(X, y), k=5)
    for col in model.loadings.T:
        assert col[np.argmax(np.abs(col))] > 0


def test_training_is_bit_identical():
    X, y = random_instance(8)
    a = pcr_train(make(X, y), k=7)
    b = pcr_train(make(X.copy(), y.copy()), k=7)
    assert a.to_json() == b.to_json()
    assert a.loadings.tobytes() == b.loadings.tobytes()


@settings(max_examples=30, deadline=None)
@given(
    st.integers(0, 9),
    st.floats(0.01, 100) | st.floats(-100, -0.01),
    st.floats(-1000, 1000),
    st.integers(0, 2**16),
)
def test_affine_column_rescaling_is_absorbed(col, scale, shift, seed):
    X, y = random_instance(seed, n=30)
    Xt, _ = random_instance(seed + 1, n=10)
    base = pcr_predict(pcr_train(make(X, y), k=6), Xt)
    X2, Xt2 = X.copy(), Xt.copy()
    X2[:, col] = scale * X2[:, col] + shift
    Xt2[:, col] = scale * Xt2[:, col] + shift
    moved = pcr_predict(pcr_train(make(X2, y), k=6), Xt2)
    assert np.max(np.abs(moved - base) / np.abs(base)) < 1e-9


def test_constant_column_names_it():
    X, y = random_instance(9)
    X[:, 3] = 7.0
    with pytest.raises(ScaleError) as info:
        pcr_train(make(X, y), k=2)
    assert info.value.column == 3
    assert "f3" in str(info.value)


@pytest.mark.parametrize("k", [0, 11, 40])
def test_k_out_of_range(k):
    X, y = random_instance(10)
    with pytest.raises(RankError):
        pcr_train(make(X, y), k=k)


def test_k_above_numerical_rank():
    rng = np.random.default_rng(11)
    base = rng.normal(size=(30, 3))
    X = base @ rng.normal(size=(3, 6))  # rank 3
    with pytest.raises(RankError):
        pcr_train(make(X, rng.normal(size=30)), k=5)


def test_center_only_mode():
    X, y = random_instance(12)
    model = pcr_train(make(X, y), k=10, standardize=False)
    np.testing.assert_array_equal(model.sigma, np.ones(10))
    ref = ols_standardized(X, y, X)  # full-rank fits agree whatever the scaling
    assert np.max(np.abs(pcr_predict(model, X) - ref) / np.abs(ref)) < 1e-8


# -- prediction ---------------------------------------------------------------------------


def test_predict_checks_schema_and_shape():
    X, y = random_instance(13)
    model = pcr_train(make(X, y, schema_id="stats-v1"), k=3)
    with pytest.raises(SchemaError):
        pcr_predict(model, X, schema_id="resample-v1")
    with pytest.raises(ShapeError):
        pcr_predict(model, X[:, :5])


def test_heldout_sep_on_linear_data():
    rng = np.random.default_rng(14)
    n, p = 200, 8
    X = rng.normal(size=(n, p))
    y = 120 + X @ rng.uniform(5, 15, p) + rng.normal(0, 5, n)
    train, test = train_test_split(make(X, y), 0.75, seed=0)
    err = sep(pcr_predict(pcr_train(train, k=8), test.X), test.y)
    assert err.sep <= 7.0


def test_model_json_round_trip():
    X, y = random_instance(15)
    model = pcr_train(make(X, y, schema_id="stats-v1"), k=4)
    text = model.to_json()
    back = PcrModel.from_json(text)
    # the file keeps 12 significant digits
    np.testing.assert_allclose(pcr_predict(back, X), pcr_predict(model, X), rtol=1e-9)
    assert back.to_json() == text
    assert back.schema_id == "stats-v1" and back.k == 4
    for key in ("schema_id", "k", "mu", "sigma", "loadings", "beta_pc", "intercept", "format_version"):
        assert f'"{key}"' in text


# -- SEP ----------------------------------------------------------------------------------


def test_sep_identical():
    e = sep([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert e.sep == 0 and e.rmsep == 0


def test_sep_constant_offset():
    e = sep([5.0, 6.0, 7.0, 8.0], [0.0, 1.0, 2.0, 3.0])
    assert e.sep == 0 and e.rmsep == 5 and e.bias == 5


def test_sep_hand_example():
    e = sep([-2.0, 2.0], [0.0, 0.0])
    assert e.sep == pytest.approx(math.sqrt(8.0))
    assert e.rmsep == pytest.approx(2.0)


def test_sep_length_mismatch():
    with pytest.raises(ShapeError):
        sep([1.0, 2.0], [1.0, 2.0, 3.0])


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.integers(2, 50), elements=st.floats(-100, 100)))
def test_sep_rmsep_identity(e):
    r = sep(e, np.zeros_like(e))
    m = len(e)
    lhs = r.sep ** 2 + r.bias ** 2 * m / (m - 1)
    rhs = r.rmsep ** 2 * m / (m - 1)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


# -- sweep --------------------------------------------------------------------------------


def rank3_data(seed=16):
    rng = np.random.default_rng(seed)
    latent = rng.normal(size=(60, 3))
    X = latent @ rng.normal(size=(3, 6)) + 1e-3 * rng.normal(size=(60, 6))
    y = 100 + latent @ np.array([10.0, -6.0, 3.0])
    return X, y


def test_sweep_finds_three_directions():
    X, y = rank3_data()
    ds = make(X, y)
    train, test = train_test_split(ds, 0.75, seed=0)
    rows = sweep_components(train, test, 5)
    assert [k for k, _, _ in rows] == [1, 2, 3, 4, 5]
    seps = {k: s for k, s, _ in rows}
    assert seps[1] > seps[3]
    assert seps[3] < 0.05  # bounded by the 1e-3 column noise


def test_sweep_exact_rank3():
    rng = np.random.default_rng(17)
    latent = rng.normal(size=(40, 3))
    X = np.column_stack([latent, rng.normal(size=(40, 2))])
    y = 100 + latent @ np.array([10.0, -6.0, 3.0])
    train, test = train_test_split(make(X, y), 0.75, seed=0)
    rows = sweep_components(train, test, 5)
    assert all(s < 1e-6 for k, s, _ in rows if k == 5)
    assert rows[0][1] > rows[4][1]


def test_sweep_rejects_k_beyond_rank():
    X, y = random_instance(18, n=10, p=4)
    train, test = train_test_split(make(X, y), 0.75, seed=0)
    with pytest.raises(RankError):
        sweep_components(train, test, 5)


def test_sweep_unchanged_by_duplicated_rows():
    X, y = random_instance(19, n=50, p=8)
    train, test = train_test_split(make(X, y), 0.75, seed=0)
    doubled = make(np.vstack([train.X, train.X]), np.concatenate([train.y, train.y]))
    a = sweep_components(train, test, 8)
    b = sweep_components(doubled, test, 8)
    for (k1, s1, r1), (k2, s2, r2) in zip(a, b):
        assert k1 == k2
        assert s2 == pytest.approx(s1, rel=1e-9)
        assert r2 == pytest.approx(r1, rel=1e-9)
