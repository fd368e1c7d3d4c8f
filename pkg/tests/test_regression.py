"""Principal-component regression and plug-in covariance."""

import numpy as np
import pytest

from gridpcr import (
    AmbientSpace,
    BasisSet,
    ConformanceError,
    DegenerateDesignError,
    RegressionDesign,
    coefficient_element,
    coefficient_names,
    component_scores,
    fit_pcr,
    fit_precision,
    fit_subspace_pca,
    plugin_cov,
    predict,
    sandwich_cov,
)
from gridpcr.regression import design_matrix
from gridpcr.util import replicate_rng


def umat(x, scores):
    return np.column_stack([np.ones(len(x)), x, scores])


def toy_design(seed, n=40, d=2, m=3, treatment=False):
    rng = replicate_rng(8000, seed)
    x = rng.standard_normal((n, d))
    scores = rng.standard_normal((n, m)) * np.sqrt([3.0, 2.0, 1.0][:m])
    y = rng.standard_normal(n)
    arm = rng.random(n) < 0.5 if treatment else None
    return RegressionDesign(y=y, x=x, scores=scores, treatment=arm)


def test_design_validation():
    rng = replicate_rng(8001, 0)
    with pytest.raises(ConformanceError):
        RegressionDesign(y=rng.standard_normal(5), x=np.zeros((4, 1)), scores=np.zeros((5, 1)))
    with pytest.raises(ConformanceError):
        RegressionDesign(y=rng.standard_normal(5), x=np.zeros((5, 1)), scores=np.zeros((4, 1)))
    with pytest.raises(ConformanceError):
        RegressionDesign(y=np.array([1.0, np.nan]), x=np.zeros((2, 0)), scores=np.zeros((2, 1)))
    d = toy_design(0)
    assert (d.n, d.d, d.m) == (40, 2, 3)


def test_coefficient_names():
    assert coefficient_names(2, 3) == ["intercept", "x1", "x2", "z1", "z2", "z3"]
    assert coefficient_names(1, 1, treatment=True) == [
        "intercept", "x1", "z1", "treat", "treat:x1", "treat:z1",
    ]


def test_fit_matches_lstsq_oracle():
    for seed in range(5):
        design = toy_design(seed)
        fit = fit_pcr(design)
        u = np.column_stack([np.ones(design.n), design.x, design.scores])
        ref, *_ = np.linalg.lstsq(u, design.y, rcond=None)
        np.testing.assert_allclose(fit.theta, ref, atol=1e-10)
        np.testing.assert_allclose(fit.residuals, design.y - u @ fit.theta, atol=1e-10)
        assert fit.alpha == fit.theta[0]
        np.testing.assert_array_equal(fit.beta, fit.theta[1:3])
        np.testing.assert_array_equal(fit.gamma, fit.theta[3:])


def test_exact_recovery_with_oracle_scores():
    rng = replicate_rng(8100, 0)
    n, d, m = 60, 3, 4
    x = rng.standard_normal((n, d))
    scores = rng.standard_normal((n, m))
    theta0 = np.concatenate([[0.5], rng.uniform(-2, 2, d), rng.uniform(-2, 2, m)])
    y = umat(x, scores) @ theta0
    fit = fit_pcr(RegressionDesign(y=y, x=x, scores=scores))
    np.testing.assert_allclose(fit.theta, theta0, atol=1e-10)
    assert fit.sigma_hat.shape == (1 + d + m, 1 + d + m)
    np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-10)


def test_predict_linearity():
    design = toy_design(1)
    fit = fit_pcr(design)
    got = predict(fit, design.x, design.scores)
    u = umat(design.x, design.scores)
    np.testing.assert_allclose(got, u @ fit.theta, atol=1e-12)


def test_degenerate_design_rejected():
    design = toy_design(2)
    x = np.column_stack([design.x, design.x[:, 0]])  # exact duplicate column
    with pytest.raises(DegenerateDesignError) as err:
        fit_pcr(RegressionDesign(y=design.y, x=x, scores=design.scores))
    assert "nondegeneracy" in str(err.value)


def test_more_parameters_than_rows_rejected():
    rng = replicate_rng(8200, 0)
    with pytest.raises(DegenerateDesignError):
        fit_pcr(
            RegressionDesign(
                y=rng.standard_normal(4),
                x=rng.standard_normal((4, 3)),
                scores=rng.standard_normal((4, 2)),
            )
        )


def test_precision_fit_recovers_interactions():
    rng = replicate_rng(8300, 0)
    n, d, m = 400, 2, 2
    x = rng.standard_normal((n, d))
    scores = rng.standard_normal((n, m))
    arm = rng.random(n) < 0.5
    base = np.array([1.0, 0.5, -0.5, 2.0, 1.0])
    mod = np.array([0.25, -1.0, 0.75, 0.5, -0.25])
    u = umat(x, scores)
    y = u @ base + arm * (u @ mod)
    fit = fit_precision(RegressionDesign(y=y, x=x, scores=scores, treatment=arm))
    assert fit.block_size == 5
    np.testing.assert_allclose(fit.base, base, atol=1e-8)
    np.testing.assert_allclose(fit.modifier, mod, atol=1e-8)
    np.testing.assert_allclose(fit.theta, np.concatenate([base, mod]), atol=1e-8)


def test_precision_fit_requires_both_arms():
    design = toy_design(3)
    with pytest.raises(ConformanceError):
        fit_precision(design)  # no treatment column at all
    one_arm = RegressionDesign(
        y=design.y, x=design.x, scores=design.scores,
        treatment=np.zeros(design.n, dtype=bool),
    )
    with pytest.raises(DegenerateDesignError):
        fit_precision(one_arm)


def fitted_pipeline(seed, n=300):
    """Full pipeline on in-span data so plug-in pieces are well defined."""
    rng = replicate_rng(8400, seed)
    space = AmbientSpace.unit_domain((8, 8))
    raw = rng.standard_normal((3, space.size))
    q = np.linalg.qr((raw * np.sqrt(space.weights)).T)[0].T
    phis = q / np.sqrt(space.weights)
    lambdas = np.array([4.0, 2.0, 1.0])
    xi = rng.standard_normal((n, 3)) * np.sqrt(lambdas)
    sample = xi @ phis
    x = rng.standard_normal((n, 2))
    eps = rng.standard_normal(n)
    theta0 = np.array([1.0, 0.8, -0.6, 1.5, -1.0, 0.5])
    y = umat(x, xi) @ theta0 + eps
    basis = BasisSet(functions=phis, provenance={})
    model = fit_subspace_pca(space, basis, sample)
    scores = component_scores(model, space, sample)[:, :3]
    design = RegressionDesign(y=y, x=x, scores=scores)
    return space, sample, model, design


def test_plugin_cov_reduces_to_sandwich_when_noiseless_null():
    # eps = 0 and gamma = 0: residuals vanish, so both estimates are zero
    rng = replicate_rng(8500, 0)
    space, sample, model, design = fitted_pipeline(0)
    y = umat(design.x, design.scores)[:, :3] @ np.array([1.0, 0.8, -0.6])
    design0 = RegressionDesign(y=y, x=design.x, scores=design.scores)
    fit = fit_pcr(design0)
    plug = plugin_cov(fit, model, space, sample, design0)
    sand = sandwich_cov(fit, design0)
    np.testing.assert_allclose(plug, sand, atol=1e-18)
    np.testing.assert_allclose(plug, 0.0, atol=1e-18)


def test_plugin_cov_tracks_monte_carlo_truth():
    # the empirical sd of the full estimator is the ground truth; the naive
    # sandwich must miss the score block (its whole reason to exist) while
    # the corrected covariance matches every block
    space = AmbientSpace.unit_domain((8, 8))
    rng0 = replicate_rng(8400, 99)
    raw = rng0.standard_normal((3, space.size))
    q = np.linalg.qr((raw * np.sqrt(space.weights)).T)[0].T
    phis = q / np.sqrt(space.weights)
    lambdas = np.array([4.0, 2.0, 1.0])
    theta0 = np.array([1.0, 0.8, -0.6, 1.5, -1.0, 0.5])
    basis = BasisSet(functions=phis, provenance={})
    n = 600
    thetas, plugs, sands = [], [], []
    for rep in range(150):
        rng = replicate_rng(8600, rep)
        xi = rng.standard_normal((n, 3)) * np.sqrt(lambdas)
        sample = xi @ phis
        x = rng.standard_normal((n, 2))
        y = umat(x, xi) @ theta0 + rng.standard_normal(n)
        model = fit_subspace_pca(space, basis, sample)
        scores = component_scores(model, space, sample)[:, :3]
        flips = np.sign(model.eigenfunctions * space.weights @ phis.T).diagonal()
        scores = scores * flips
        design = RegressionDesign(y=y, x=x, scores=scores)
        fit = fit_pcr(design)
        plug = plugin_cov(fit, model, space, sample, design)
        np.testing.assert_allclose(plug, plug.T, atol=1e-15)
        assert np.all(np.linalg.eigvalsh(plug) > -1e-12)
        thetas.append(fit.theta)
        plugs.append(np.sqrt(np.diag(plug)))
        sands.append(np.sqrt(np.diag(sandwich_cov(fit, design))))
    emp = np.std(thetas, axis=0, ddof=1)
    plug_med = np.median(plugs, axis=0)
    sand_med = np.median(sands, axis=0)
    np.testing.assert_allclose(plug_med, emp, rtol=0.2)
    np.testing.assert_allclose(sand_med[:3], emp[:3], rtol=0.2)
    assert np.all(sand_med[3:] < 0.7 * emp[3:])


def test_plugin_cov_shrinks_like_one_over_n():
    space_a, sample_a, model_a, design_a = fitted_pipeline(2, n=400)
    space_b, sample_b, model_b, design_b = fitted_pipeline(2, n=3600)
    va = np.diag(plugin_cov(fit_pcr(design_a), model_a, space_a, sample_a, design_a))
    vb = np.diag(plugin_cov(fit_pcr(design_b), model_b, space_b, sample_b, design_b))
    ratio = va / vb
    assert np.all(ratio > 3.0) and np.all(ratio < 27.0)  # nominal 9


def test_coefficient_element_reconstruction():
    space, sample, model, design = fitted_pipeline(3)
    fit = fit_pcr(design)
    elem = coefficient_element(fit, model)
    manual = fit.gamma @ model.eigenfunctions[: design.m]
    np.testing.assert_allclose(elem, manual, atol=1e-12)
