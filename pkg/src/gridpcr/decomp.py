"""Subspace PCA for gridded samples.

The estimator projects samples onto the span of a finite basis, whitens the
basis against its Gram matrix, and eigendecomposes the projected empirical
covariance in the whitened coordinates. Eigenfunctions come back as grid
elements, orthonormal under the space inner product regardless of how
ill-conditioned the raw basis was.

A residual-variance diagnostic quantifies what the projection misses, and an
explained-variance rule picks how many components to carry into regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConformanceError,
    ConfigurationError,
    GridPcrError,
    NearMultiplicityError,
    SelectionInfeasibleError,
)
from .space import (
    DEFAULT_DROP_TOL,
    AmbientSpace,
    Whitener,
    as_sample,
    basis_rows,
    gram,
    project_scores,
    whiten,
)
from .util import norm_ppf

RETAIN_REL_TOL = 1e-12
DEFAULT_GAP_REL_TOL = 1e-6
_IDENTITY_TOL = 1e-8


@dataclass(frozen=True)
class EigenModel:
    """Fitted subspace principal components.

    Attributes
    ----------
    eigenvalues : ndarray, shape (J,)
        Retained variances, strictly positive and nonincreasing.
    coords : ndarray, shape (J, rank)
        Coordinates of each eigenfunction in the whitened frame.
    eigenfunctions : ndarray, shape (J, V)
        Eigenfunctions sampled on the grid, orthonormal in the space inner
        product. Signs follow the largest-|entry|-positive convention.
    mean : ndarray, shape (V,)
        Pointwise sample mean.
    whitener : Whitener
        Whitening factor of the basis Gram matrix used for the fit.
    total_variance : float
        Mean squared distance of the sample to its mean (full space, not
        just the projected part); sum(eigenvalues) <= total_variance.
    n : int
        Number of sample rows.
    """

    eigenvalues: np.ndarray
    coords: np.ndarray
    eigenfunctions: np.ndarray
    mean: np.ndarray
    whitener: Whitener
    total_variance: float
    n: int

    @property
    def n_components(self) -> int:
        return int(self.eigenvalues.size)


@dataclass(frozen=True)
class DiagnosticReport:
    """Result of the projection-adequacy test.

    ``delta_hat`` is the mean squared residual outside the basis span,
    ``t_stat`` its studentized version; ``reject`` means the basis is judged
    inadequate at level ``alpha``.
    """

    delta_hat: float
    s2_hat: float
    t_stat: float
    critical: float
    alpha: float
    reject: bool
    n: int
    basis_rank: int


@dataclass(frozen=True)
class PveSelection:
    """Component count chosen by explained variance.

    ``m`` is the smallest count whose eigenvalues sum past ``tau`` times the
    total sample variance (strict inequality); ``cumulative`` holds the
    explained fraction after each component.
    """

    m: int
    tau: float
    cumulative: np.ndarray


@dataclass(frozen=True)
class EigenfunctionCov:
    """Plug-in covariance of one estimated eigenfunction.

    The deviation of eigenfunction ``j`` lives (to first order) in the span
    of the other retained eigenfunctions; ``cov[a, b]`` estimates the
    covariance of its coefficients along ``others[a]`` and ``others[b]``,
    built from empirical score-product covariances weighted by inverse
    spectral gaps, already scaled by 1/n.
    """

    j: int
    others: np.ndarray
    cov: np.ndarray


def fit_subspace_pca(
    space: AmbientSpace, basis, sample, drop_tol: float = DEFAULT_DROP_TOL
) -> EigenModel:
    """Fit principal components of a sample through a projection basis.

    Stages: whiten the basis Gram matrix (dropping numerically dependent
    directions), form the projected empirical covariance in whitened
    coordinates, eigendecompose, and map retained eigenvectors back to grid
    elements. Components with eigenvalue <= 1e-12 * largest are discarded,
    so a constant sample yields zero components.
    """
    data = as_sample(space, sample)
    if data.shape[0] < 2:
        raise ConformanceError("subspace fit needs at least two sample rows")
    rows = basis_rows(basis)
    whitener = whiten(gram(space, basis), drop_tol)
    raw = project_scores(space, basis, data)
    white = raw @ whitener.factor.T
    centered = white - white.mean(axis=0)
    lams, coords = _eig_from_scores(centered)
    frame = whitener.factor @ rows
    phis = coords @ frame
    phis, coords = _fix_phi_signs(phis, coords)
    mean = data.mean(axis=0)
    dev = data - mean
    total = float(np.mean(np.sum(dev * dev * space.weights, axis=1)))
    return EigenModel(
        eigenvalues=lams,
        coords=coords,
        eigenfunctions=phis,
        mean=mean,
        whitener=whitener,
        total_variance=total,
        n=data.shape[0],
    )


def _eig_from_scores(centered, weights=None, retain_rel: float = RETAIN_REL_TOL):
    """Eigendecompose the (optionally weighted) covariance of whitened scores.

    ``centered`` is (n, rank), already centered under the same weights.
    Returns nonincreasing positive eigenvalues and eigenvector rows, signs
    not yet normalized. Shared by the direct fit and resampling replicates.
    """
    n = centered.shape[0]
    if weights is None:
        cov = centered.T @ centered / n
    else:
        cov = (centered * np.asarray(weights)[:, None]).T @ centered / n
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    top = vals[0] if vals.size else 0.0
    keep = (vals > 0.0) & (vals > retain_rel * max(top, 0.0))
    j = int(np.count_nonzero(keep))
    return vals[:j].copy(), vecs[:, :j].T.copy()


def _fix_phi_signs(phis: np.ndarray, coords: np.ndarray):
    """Flip each eigenfunction so its largest-|value| grid entry is positive."""
    if phis.shape[0] == 0:
        return phis, coords
    idx = np.argmax(np.abs(phis), axis=1)
    signs = np.sign(phis[np.arange(phis.shape[0]), idx])
    signs[signs == 0] = 1.0
    return phis * signs[:, None], coords * signs[:, None]


def component_scores(model: EigenModel, space: AmbientSpace, sample) -> np.ndarray:
    """Uncentered component scores <phi_j, Z_i> for every retained j."""
    data = as_sample(space, sample)
    return (data * space.weights) @ model.eigenfunctions.T


def select_pve(model: EigenModel, tau: float = 0.95) -> PveSelection:
    """Smallest component count explaining more than ``tau`` of total variance.

    The comparison is strict: m is the first index with
    sum_{j<=m} eigenvalue_j > tau * total_variance. When even all retained
    components fall short (a sign the projection basis misses real
    variance), ``SelectionInfeasibleError`` reports the achieved fraction.
    """
    if not 0.0 < tau < 1.0:
        raise ConfigurationError(f"tau must lie in (0, 1), got {tau}")
    if model.total_variance <= 0.0:
        raise ConfigurationError("selection needs positive total variance")
    cum = np.cumsum(model.eigenvalues) / model.total_variance
    above = np.flatnonzero(cum > tau)
    if above.size == 0:
        achieved = float(cum[-1]) if cum.size else 0.0
        raise SelectionInfeasibleError(
            f"retained components explain only {achieved:.6f} <= tau = {tau}; "
            "the projection basis may be inadequate",
            achieved=achieved,
        )
    return PveSelection(m=int(above[0]) + 1, tau=float(tau), cumulative=cum)


def diagnose_projection(
    space: AmbientSpace, basis, sample, alpha: float = 0.05
) -> DiagnosticReport:
    """Test whether the basis span captures the sample's variation.

    delta_hat is computed two ways -- mean squared residual after projecting
    centered rows onto the whitened frame, and total variance minus projected
    variance -- and the two must agree to 1e-8; the studentized statistic
    sqrt(n) * delta_hat / sqrt(s2_hat + 1/n) is compared against the normal
    quantile at 1 - alpha. Levels are restricted to (0, 0.05] because the
    statistic is one-sided and only small levels are meaningful for it.
    """
    if not 0.0 < alpha <= 0.05:
        raise ConfigurationError(f"alpha must lie in (0, 0.05], got {alpha}")
    data = as_sample(space, sample)
    n = data.shape[0]
    if n < 2:
        raise ConformanceError("projection diagnostic needs at least two rows")
    whitener = whiten(gram(space, basis))
    frame = whitener.factor @ basis_rows(basis)
    dev = data - data.mean(axis=0)
    white = (dev * space.weights) @ frame.T
    resid = dev - white @ frame
    resid_sq = np.sum(resid * resid * space.weights, axis=1)
    delta_resid = float(resid_sq.mean())
    total = float(np.mean(np.sum(dev * dev * space.weights, axis=1)))
    delta_var = total - float(np.mean(np.sum(white * white, axis=1)))
    if abs(delta_resid - delta_var) > 1e-8 * max(1.0, total):
        raise GridPcrError(
            "residual and variance-difference forms of delta_hat disagree: "
            f"{delta_resid} vs {delta_var}"
        )
    s2 = float(np.mean((resid_sq - delta_resid) ** 2))
    t_stat = float(np.sqrt(n) * delta_resid / np.sqrt(s2 + 1.0 / n))
    critical = norm_ppf(1.0 - alpha)
    return DiagnosticReport(
        delta_hat=delta_resid,
        s2_hat=s2,
        t_stat=t_stat,
        critical=critical,
        alpha=float(alpha),
        reject=bool(t_stat > critical),
        n=n,
        basis_rank=whitener.rank,
    )


def centered_scores(model: EigenModel, space: AmbientSpace, sample) -> np.ndarray:
    """Scores of sample rows against eigenfunctions after centering at the mean."""
    data = as_sample(space, sample)
    return ((data - model.mean) * space.weights) @ model.eigenfunctions.T


def eigenvalue_se(model: EigenModel, space: AmbientSpace, sample) -> np.ndarray:
    """Plug-in standard errors of the retained eigenvalues.

    The asymptotic variance of eigenvalue j is the variance of its squared
    centered score, so the estimate is sd(score_j^2) / sqrt(n) with the
    plug-in (population-style) standard deviation.
    """
    xi = centered_scores(model, space, sample)
    return np.std(xi**2, axis=0, ddof=0) / np.sqrt(xi.shape[0])


def gap_tolerance(model: EigenModel, gap_tol=None) -> float:
    if gap_tol is None:
        top = model.eigenvalues[0] if model.n_components else 0.0
        return DEFAULT_GAP_REL_TOL * float(top)
    if gap_tol <= 0:
        raise ConfigurationError("gap tolerance must be positive")
    return float(gap_tol)


def check_gaps(model: EigenModel, m: int, gap_tol=None) -> None:
    """Require separated eigenvalues for spectral-gap expansions.

    Components 1..m must be separated from every retained component by more
    than the tolerance (default 1e-6 times the leading eigenvalue).
    """
    tol = gap_tolerance(model, gap_tol)
    lams = model.eigenvalues
    for j in range(m):
        for k in range(model.n_components):
            if k != j and abs(lams[j] - lams[k]) <= tol:
                raise NearMultiplicityError(
                    f"eigenvalues {j + 1} and {k + 1} differ by "
                    f"{abs(lams[j] - lams[k]):.3e} <= gap tolerance {tol:.3e}; "
                    "the spectral-gap expansion is unstable"
                )


def eigenfunction_cov(
    model: EigenModel, space: AmbientSpace, sample, j: int, gap_tol=None
) -> EigenfunctionCov:
    """Plug-in covariance of eigenfunction ``j`` across the other components.

    First-order theory writes the estimation error of eigenfunction j as a
    combination of the other eigenfunctions with coefficients
    (score_k * score_j averaged) / (lambda_j - lambda_k); the returned matrix
    is the empirical covariance of those products, weighted by the inverse
    gaps and divided by n. Requires all retained gaps around j to clear the
    tolerance.
    """
    if not 0 <= j < model.n_components:
        raise ConformanceError(
            f"component index {j} outside retained range 0..{model.n_components - 1}"
        )
    check_gaps(model, model.n_components, gap_tol)
    xi = centered_scores(model, space, sample)
    n = xi.shape[0]
    others = np.array([k for k in range(model.n_components) if k != j], dtype=int)
    products = xi[:, others] * xi[:, [j]]
    centered = products - products.mean(axis=0)
    cov = centered.T @ centered / n
    gaps = model.eigenvalues[j] - model.eigenvalues[others]
    scale = np.outer(1.0 / gaps, 1.0 / gaps)
    return EigenfunctionCov(j=int(j), others=others, cov=cov * scale / n)
