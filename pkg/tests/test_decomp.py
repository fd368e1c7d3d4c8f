"""Subspace PCA, the projection diagnostic, and component selection."""

import numpy as np
import pytest

from gridpcr import (
    AmbientSpace,
    BasisSet,
    ConfigurationError,
    GridPcrError,
    NearMultiplicityError,
    SelectionInfeasibleError,
    bspline_tensor_basis,
    component_scores,
    diagnose_projection,
    eigenfunction_cov,
    eigenvalue_se,
    fit_subspace_pca,
    select_pve,
)
from gridpcr.decomp import centered_scores, check_gaps, EigenModel, PveSelection
from gridpcr.util import replicate_rng


def spanning_case(seed, max_dim=8):
    """Random small grid with a basis spanning the whole cell space."""
    rng = replicate_rng(7000, seed)
    dims = (int(rng.integers(2, max_dim + 1)), int(rng.integers(2, max_dim + 1)))
    space = AmbientSpace(
        dims=dims, weights=rng.uniform(0.3, 1.7, int(np.prod(dims)))
    )
    n_extra = int(rng.integers(0, 4))
    funcs = rng.standard_normal((space.size + n_extra, space.size))
    basis = BasisSet(functions=funcs, provenance={"kind": "custom"})
    n = int(rng.integers(space.size + 2, 40 + space.size))
    sample = rng.standard_normal((n, space.size)) * rng.uniform(0.5, 2.0)
    return space, basis, sample


def dense_eigenpairs(space, sample):
    """Oracle: eigenpairs of the weighted empirical covariance.

    Under the weighted inner product the covariance operator acts as C W;
    symmetrizing with W^(1/2) gives an ordinary symmetric eigenproblem whose
    vectors map back through W^(-1/2).
    """
    w = space.weights
    keep = w > 0
    dev = sample - sample.mean(axis=0)
    cov = dev.T @ dev / sample.shape[0]
    root = np.sqrt(w[keep])
    sym = root[:, None] * cov[np.ix_(keep, keep)] * root[None, :]
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    phis = np.zeros((sample.shape[1], vals.size))
    phis[keep] = vecs / root[:, None]
    return vals, phis.T


def align_signs(reference, candidate):
    flip = np.sign(np.sum(reference * candidate, axis=1))
    flip[flip == 0] = 1.0
    return candidate * flip[:, None]


def test_matches_dense_oracle_on_spanning_bases():
    for seed in range(20):
        space, basis, sample = spanning_case(seed)
        model = fit_subspace_pca(space, basis, sample)
        vals, phis = dense_eigenpairs(space, sample)
        j = model.n_components
        np.testing.assert_allclose(model.eigenvalues, vals[:j], atol=1e-8)
        aligned = align_signs(model.eigenfunctions, phis[:j])
        np.testing.assert_allclose(model.eigenfunctions, aligned, atol=1e-8)


def test_eigenfunctions_orthonormal_and_sign_convention():
    for seed in range(10):
        space, basis, sample = spanning_case(seed)
        model = fit_subspace_pca(space, basis, sample)
        g = model.eigenfunctions * space.weights @ model.eigenfunctions.T
        np.testing.assert_allclose(g, np.eye(model.n_components), atol=1e-9)
        for row in model.eigenfunctions:
            assert row[np.argmax(np.abs(row))] > 0


def test_total_variance_is_parseval_sum_when_spanning():
    space, basis, sample = spanning_case(3)
    model = fit_subspace_pca(space, basis, sample)
    assert model.total_variance == pytest.approx(model.eigenvalues.sum(), rel=1e-10)


def test_model_reproduces_sample_spectrum_shape():
    # planted two-component data: eigenvalues estimate the planted variances
    rng = replicate_rng(7100, 0)
    space = AmbientSpace.unit_domain((10, 10))
    raw = rng.standard_normal((2, space.size))
    q = np.linalg.qr((raw * np.sqrt(space.weights)).T)[0].T
    phis = q / np.sqrt(space.weights)
    n = 4000
    xi = rng.standard_normal((n, 2)) * np.sqrt([4.0, 1.0])
    sample = xi @ phis
    basis = bspline_tensor_basis(space, 2, 3)
    # the random plant is not inside the spline span; use a custom basis
    basis = BasisSet(functions=phis, provenance={"kind": "custom"})
    model = fit_subspace_pca(space, basis, sample)
    assert model.n_components == 2
    np.testing.assert_allclose(model.eigenvalues, [4.0, 1.0], rtol=0.15)


def test_invariant_to_basis_reparameterization():
    # same span, different rows: identical eigenpairs
    rng = replicate_rng(7200, 0)
    space = AmbientSpace.unit_domain((7, 6))
    funcs = rng.standard_normal((12, space.size))
    mix = rng.standard_normal((12, 12))  # invertible almost surely
    sample = rng.standard_normal((25, space.size))
    a = fit_subspace_pca(space, BasisSet(functions=funcs, provenance={}), sample)
    b = fit_subspace_pca(
        space, BasisSet(functions=mix @ funcs, provenance={}), sample
    )
    assert a.n_components == b.n_components
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-9)
    np.testing.assert_allclose(
        a.eigenfunctions, align_signs(a.eigenfunctions, b.eigenfunctions), atol=1e-7
    )


def test_component_scores_orthonormal_rows():
    space, basis, sample = spanning_case(5)
    model = fit_subspace_pca(space, basis, sample)
    scores = component_scores(model, space, model.eigenfunctions)
    np.testing.assert_allclose(scores, np.eye(model.n_components), atol=1e-9)
    assert np.all(component_scores(model, space, np.zeros((2, space.size))) == 0)
    manual = np.array(
        [
            [space.inner(z, phi) for phi in model.eigenfunctions]
            for z in sample[:4]
        ]
    )
    np.testing.assert_allclose(
        component_scores(model, space, sample[:4]), manual, atol=1e-10
    )


def test_centered_scores_mean_zero_variance_lambda():
    space, basis, sample = spanning_case(6)
    model = fit_subspace_pca(space, basis, sample)
    xi = centered_scores(model, space, sample)
    np.testing.assert_allclose(xi.mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(
        (xi**2).mean(axis=0), model.eigenvalues, rtol=1e-8
    )


def test_select_pve_worked_examples():
    def model_with(lams, total):
        lams = np.asarray(lams, dtype=float)
        return EigenModel(
            eigenvalues=lams,
            coords=np.zeros((lams.size, lams.size)),
            eigenfunctions=np.zeros((lams.size, 4)),
            mean=np.zeros(4),
            whitener=None,
            total_variance=total,
            n=10,
        )

    sel = select_pve(model_with([3.5, 3.0, 2.5, 2.0, 1.5, 1.0], 13.5), 0.95)
    assert isinstance(sel, PveSelection)
    assert sel.m == 6  # cumulative 12.5 fails the strict 12.825 cut, 13.5 passes
    np.testing.assert_allclose(sel.cumulative[-1], 1.0)

    assert select_pve(model_with([1.0], 1.0), 0.5).m == 1
    assert select_pve(model_with([2.0, 1.0], 3.0), 0.95).m == 2
    # threshold met strictly before the last component
    assert select_pve(model_with([9.0, 1.0], 10.0), 0.85).m == 1

    with pytest.raises(SelectionInfeasibleError) as err:
        select_pve(model_with([1.0, 0.5], 10.0), 0.95)
    assert err.value.achieved == pytest.approx(0.15)

    for bad in (0.0, 1.0, -2.0):
        with pytest.raises(ConfigurationError):
            select_pve(model_with([1.0], 1.0), bad)


def test_diagnostic_exact_span_and_orthogonal_basis():
    rng = replicate_rng(7300, 1)
    space = AmbientSpace.unit_domain((6, 6))
    funcs = rng.standard_normal((4, space.size))
    basis = BasisSet(functions=funcs, provenance={})
    inside = rng.standard_normal((30, 4)) @ funcs
    report = diagnose_projection(space, basis, inside, 0.05)
    assert report.delta_hat == pytest.approx(0.0, abs=1e-10)
    assert report.t_stat == pytest.approx(0.0, abs=1e-6)
    assert not report.reject

    # data orthogonal to the basis: delta equals the total variance
    q, _ = np.linalg.qr((funcs * np.sqrt(space.weights)).T, mode="complete")
    ortho = (q[:, 4:8] / np.sqrt(space.weights)[:, None]).T
    outside = rng.standard_normal((30, 4)) @ ortho
    report = diagnose_projection(space, basis, outside, 0.05)
    dev = outside - outside.mean(axis=0)
    total = np.mean([space.inner(d, d) for d in dev])
    assert report.delta_hat == pytest.approx(total, rel=1e-10)
    assert report.reject


def test_diagnostic_identity_and_statistic_arithmetic():
    for seed in range(20):
        rng = replicate_rng(7400, seed)
        dims = (int(rng.integers(3, 9)), int(rng.integers(3, 9)))
        space = AmbientSpace(
            dims=dims, weights=rng.uniform(0.2, 2.0, int(np.prod(dims)))
        )
        funcs = rng.standard_normal((int(rng.integers(2, 7)), space.size))
        basis = BasisSet(functions=funcs, provenance={})
        sample = rng.standard_normal((int(rng.integers(5, 25)), space.size))
        report = diagnose_projection(space, basis, sample, 0.04)
        # residual-norm form recomputed from scratch
        dev = sample - sample.mean(axis=0)
        sw = np.sqrt(space.weights)
        q, _ = np.linalg.qr((funcs * sw).T)
        resid = dev * sw - (dev * sw) @ q @ q.T
        norms2 = (resid**2).sum(axis=1)
        delta = norms2.mean()
        assert report.delta_hat == pytest.approx(delta, abs=1e-8 * max(1.0, delta))
        s2 = ((norms2 - delta) ** 2).mean()
        assert report.s2_hat == pytest.approx(s2, rel=1e-6)
        n = sample.shape[0]
        want_t = np.sqrt(n) * delta / np.sqrt(s2 + 1.0 / n)
        assert report.t_stat == pytest.approx(want_t, rel=1e-6)
        assert report.reject == (report.t_stat > report.critical)


def test_diagnostic_alpha_domain():
    space, basis, sample = spanning_case(8)
    for bad in (0.0, 0.06, 0.5, -0.01):
        with pytest.raises(ConfigurationError):
            diagnose_projection(space, basis, sample, bad)
    report = diagnose_projection(space, basis, sample, 0.01)
    assert report.alpha == 0.01


def test_diagnostic_degenerate_sample():
    space = AmbientSpace.unit_domain((4, 4))
    basis = BasisSet(functions=np.ones((1, 16)), provenance={})
    sample = np.tile(np.linspace(0, 1, 16), (5, 1))
    report = diagnose_projection(space, basis, sample, 0.05)
    assert report.delta_hat == pytest.approx(0.0, abs=1e-20)
    assert report.t_stat == pytest.approx(0.0, abs=1e-20)
    assert not report.reject


def test_eigenvalue_se_matches_formula_and_scale():
    rng = replicate_rng(7500, 0)
    space = AmbientSpace.unit_domain((8, 8))
    raw = rng.standard_normal((3, space.size))
    q = np.linalg.qr((raw * np.sqrt(space.weights)).T)[0].T
    phis = q / np.sqrt(space.weights)
    lambdas = np.array([5.0, 2.0, 1.0])
    n = 2000
    xi = rng.standard_normal((n, 3)) * np.sqrt(lambdas)
    sample = xi @ phis
    basis = BasisSet(functions=phis, provenance={})
    model = fit_subspace_pca(space, basis, sample)
    se = eigenvalue_se(model, space, sample)
    # definition: sd of squared centered scores over sqrt(n)
    xi_hat = centered_scores(model, space, sample)
    manual = (xi_hat**2).std(axis=0, ddof=0) / np.sqrt(n)
    np.testing.assert_allclose(se, manual, rtol=1e-10)
    # Gaussian scores: sd(xi^2) = lambda * sqrt(2)
    np.testing.assert_allclose(
        se, lambdas * np.sqrt(2.0 / n), rtol=0.15
    )


def test_eigenfunction_cov_against_loop_formula():
    rng = replicate_rng(7600, 0)
    space = AmbientSpace.unit_domain((9, 7))
    raw = rng.standard_normal((4, space.size))
    q = np.linalg.qr((raw * np.sqrt(space.weights)).T)[0].T
    phis = q / np.sqrt(space.weights)
    lambdas = np.array([6.0, 3.0, 1.5, 0.75])
    n = 800
    xi = rng.standard_normal((n, 4)) * np.sqrt(lambdas)
    sample = xi @ phis
    model = fit_subspace_pca(
        space, BasisSet(functions=phis, provenance={}), sample
    )
    out = eigenfunction_cov(model, space, sample, j=2)
    others = [0, 1, 3]
    assert list(out.others) == others
    xi_hat = centered_scores(model, space, sample)
    lam = model.eigenvalues
    for a, jp in enumerate(others):
        for b, jpp in enumerate(others):
            prod1 = xi_hat[:, jp] * xi_hat[:, 2]
            prod2 = xi_hat[:, jpp] * xi_hat[:, 2]
            emp = np.mean((prod1 - prod1.mean()) * (prod2 - prod2.mean()))
            want = emp / (n * (lam[2] - lam[jp]) * (lam[2] - lam[jpp]))
            assert out.cov[a, b] == pytest.approx(want, rel=1e-9)


def test_eigenfunction_cov_guards_near_multiplicity():
    rng = replicate_rng(7700, 0)
    space = AmbientSpace.unit_domain((6, 6))
    funcs = rng.standard_normal((5, space.size))
    xi = rng.standard_normal((50, 5))
    sample = xi @ funcs
    model = fit_subspace_pca(space, BasisSet(functions=funcs, provenance={}), sample)
    lam = model.eigenvalues
    with pytest.raises(NearMultiplicityError):
        check_gaps(model, model.n_components, gap_tol=abs(lam[0] - lam[1]) * 1.01)
    # a pair tied beyond the requested range must not block the range itself
    check_gaps(model, 1, gap_tol=min(abs(np.diff(lam))) * 0.5)


def test_fit_requires_two_rows():
    space = AmbientSpace.unit_domain((4, 4))
    basis = BasisSet(functions=np.ones((1, 16)), provenance={})
    with pytest.raises(GridPcrError):
        fit_subspace_pca(space, basis, np.zeros((1, 16)))
