import json

import numpy as np
import pytest

from crossal.adapt import CoralTransform, apply, fit_coral, sym_power
from crossal.errors import DimensionMismatch, InsufficientRows


def whitened(rng, n, d):
    """Sample with mean exactly 0 and sample covariance (ddof=1) exactly I."""
    Z = rng.standard_normal((n, d))
    Z -= Z.mean(axis=0)
    C = np.cov(Z, rowvar=False)
    vals, vecs = np.linalg.eigh(C)
    return Z @ vecs @ np.diag(vals ** -0.5) @ vecs.T


def rel_frob(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_scalar_diagonal_case(rng):
    Z = whitened(rng, 500, 24)
    Xs, Xt = 2.0 * Z, 3.0 * whitened(rng, 400, 24)
    np.testing.assert_allclose(np.cov(Xs, rowvar=False), 4 * np.eye(24), atol=1e-9)
    tf = fit_coral(Xs, Xt, lam=0.0)
    assert np.abs(tf.matrix - 1.5 * np.eye(24)).max() < 1e-9


def test_identical_data_gives_identity(rng):
    X = rng.standard_normal((300, 24)) @ rng.standard_normal((24, 24))
    for lam in (0.0, 1.0):
        tf = fit_coral(X, X, lam=lam)
        assert np.abs(tf.matrix - np.eye(24)).max() < 1e-9


def test_gaussian_covariance_matching():
    rng = np.random.default_rng(8)
    d, n = 8, 5000
    Ls, Lt = rng.standard_normal((d, d)), rng.standard_normal((d, d))
    Xs = rng.standard_normal((n, d)) @ Ls + 3.0
    Xt = rng.standard_normal((n, d)) @ Lt - 1.0
    tf = fit_coral(Xs, Xt, lam=0.0)
    ad = apply(tf, Xs)
    assert rel_frob(np.cov(ad, rowvar=False), np.cov(Xt, rowvar=False)) < 0.05
    np.testing.assert_allclose(ad.mean(axis=0), Xt.mean(axis=0), atol=1e-9)


def test_refit_on_adapted_is_identity(rng):
    Xs = rng.standard_normal((600, 24)) @ rng.standard_normal((24, 24))
    Xt = rng.standard_normal((500, 24)) * rng.uniform(0.5, 2, 24)
    ad = apply(fit_coral(Xs, Xt, lam=0.0), Xs)
    again = fit_coral(ad, Xt, lam=0.0)
    assert np.abs(again.matrix - np.eye(24)).max() < 1e-6


def test_identity_apply_unchanged(rng):
    X = rng.standard_normal((10, 24))
    np.testing.assert_array_equal(apply(CoralTransform.identity(24), X), X)


def test_single_row_apply(rng):
    tf = fit_coral(rng.standard_normal((50, 24)), rng.standard_normal((40, 24)))
    out = apply(tf, rng.standard_normal((1, 24)))
    assert out.shape == (1, 24)


def test_linearity_for_centred_transform(rng):
    tf = fit_coral(rng.standard_normal((80, 24)), 2 * rng.standard_normal((90, 24)), align_means=False)
    X, Y = rng.standard_normal((5, 24)), rng.standard_normal((5, 24))
    np.testing.assert_allclose(apply(tf, 2.0 * X - 0.5 * Y), 2.0 * apply(tf, X) - 0.5 * apply(tf, Y),
                               atol=1e-12)


def test_matrix_roots(rng):
    M = rng.standard_normal((24, 24))
    C = M @ M.T + 24 * np.eye(24)
    half = sym_power(C, 0.5)
    inv_half = sym_power(C, -0.5)
    assert np.abs(half @ half - C).max() < 1e-8
    assert np.abs(inv_half @ C @ inv_half - np.eye(24)).max() < 1e-8


def test_regularised_is_invertible_for_rank_deficient(rng):
    Xs = np.zeros((30, 24))
    Xs[:, 0] = rng.standard_normal(30)
    tf = fit_coral(Xs, rng.standard_normal((30, 24)), lam=1.0)
    assert np.isfinite(tf.matrix).all()
    assert abs(np.linalg.det(tf.matrix)) > 0


def test_errors(rng):
    with pytest.raises(InsufficientRows):
        fit_coral(rng.standard_normal((1, 24)), rng.standard_normal((5, 24)), lam=0.0)
    with pytest.raises(InsufficientRows):
        fit_coral(np.empty((0, 24)), rng.standard_normal((5, 24)))
    with pytest.raises(DimensionMismatch):
        fit_coral(rng.standard_normal((5, 24)), rng.standard_normal((5, 23)))
    fit_coral(rng.standard_normal((1, 24)), rng.standard_normal((1, 24)), lam=1.0)
    tf = fit_coral(rng.standard_normal((5, 24)), rng.standard_normal((5, 24)))
    with pytest.raises(DimensionMismatch):
        apply(tf, np.zeros((2, 3)))


def test_json_roundtrip(rng):
    tf = fit_coral(rng.standard_normal((30, 24)), rng.standard_normal((30, 24)))
    back = CoralTransform.from_json(tf.to_json())
    X = rng.standard_normal((4, 24))
    np.testing.assert_array_equal(apply(back, X), apply(tf, X))
    assert json.loads(tf.to_json())["lambda"] == 1.0
