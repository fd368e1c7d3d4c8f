"""Least-squares regression on scalar covariates and component scores.

The response is modeled as alpha + beta' X + sum_j gamma_j <phi_j, Z> with
the phi_j estimated by subspace PCA. Coefficients are plain least squares on
the combined design; what is not plain is the covariance: estimating the
eigenfunctions perturbs the scores, and the influence-function covariance
here carries the explicit correction for that, reducing to the classical
sandwich when the correction vanishes.

A two-arm variant interacts every regressor with a binary treatment
indicator, giving a base block and a modifier block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decomp import EigenModel, centered_scores, check_gaps
from .errors import ConformanceError, DegenerateDesignError
from .space import AmbientSpace, as_sample

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class RegressionDesign:
    """Aligned regression inputs.

    ``y`` is (n,), ``x`` is (n, d) scalar covariates (d may be 0), ``scores``
    is (n, m) component scores, and ``treatment`` is an optional boolean arm
    indicator for two-arm fits.
    """

    y: np.ndarray
    x: np.ndarray
    scores: np.ndarray
    treatment: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        n = y.size
        x = np.asarray(self.x, dtype=float)
        if x.size == 0:
            x = x.reshape(n, 0)
        if x.ndim == 1:
            x = x[:, None]
        scores = np.asarray(self.scores, dtype=float)
        if scores.size == 0:
            scores = scores.reshape(n, 0)
        if scores.ndim == 1:
            scores = scores[:, None]
        if n == 0:
            raise ConformanceError("design must contain at least one observation")
        if x.shape[0] != n or scores.shape[0] != n:
            raise ConformanceError(
                f"design rows disagree: y has {n}, x has {x.shape[0]}, "
                f"scores has {scores.shape[0]}"
            )
        for name, arr in (("y", y), ("x", x), ("scores", scores)):
            if not np.all(np.isfinite(arr)):
                raise ConformanceError(f"{name} contains non-finite values")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "scores", scores)
        if self.treatment is not None:
            a = np.asarray(self.treatment)
            if a.shape != (n,):
                raise ConformanceError("treatment must be one indicator per row")
            if a.dtype != bool and not np.all(np.isin(a, (0, 1))):
                raise ConformanceError("treatment must be binary")
            object.__setattr__(self, "treatment", a.astype(bool))

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def m(self) -> int:
        return self.scores.shape[1]


@dataclass(frozen=True)
class RegressionFit:
    """Least-squares fit of the combined design.

    ``theta`` is laid out as (alpha, beta_1..beta_d, gamma_1..gamma_m);
    ``sigma_hat`` is the empirical second-moment matrix of the regressors
    whose condition number was checked against the nondegeneracy limit.
    """

    theta: np.ndarray
    sigma_hat: np.ndarray
    residuals: np.ndarray
    condition: float
    n: int
    d: int
    m: int

    @property
    def alpha(self) -> float:
        return float(self.theta[0])

    @property
    def beta(self) -> np.ndarray:
        return self.theta[1 : 1 + self.d]

    @property
    def gamma(self) -> np.ndarray:
        return self.theta[1 + self.d :]


@dataclass(frozen=True)
class InteractionFit:
    """Two-arm fit: base coefficients plus treatment modifiers.

    ``theta`` stacks the base block then the modifier block, each laid out
    like a ``RegressionFit`` theta.
    """

    theta: np.ndarray
    sigma_hat: np.ndarray
    residuals: np.ndarray
    condition: float
    n: int
    d: int
    m: int

    @property
    def block_size(self) -> int:
        return 1 + self.d + self.m

    @property
    def base(self) -> np.ndarray:
        return self.theta[: self.block_size]

    @property
    def modifier(self) -> np.ndarray:
        return self.theta[self.block_size :]


def design_matrix(design: RegressionDesign) -> np.ndarray:
    """Stack intercept, scalar covariates, and scores into the regressor matrix."""
    return np.column_stack(
        [np.ones(design.n), design.x, design.scores]
    )


def coefficient_names(d: int, m: int, treatment: bool = False) -> list:
    names = ["intercept"] + [f"x{i + 1}" for i in range(d)] + [
        f"z{j + 1}" for j in range(m)
    ]
    if treatment:
        names = names + ["treat"] + [f"treat:{nm}" for nm in names[1:]]
    return names


def _solve_ls(u: np.ndarray, y: np.ndarray, weights=None):
    """Weighted least squares with the nondegeneracy check.

    Returns (theta, sigma_hat, condition); raises when the second-moment
    matrix of the (weighted) design is numerically singular.
    """
    n = u.shape[0]
    if weights is None:
        uw, yw = u, y
        sigma = u.T @ u / n
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,) or np.any(w < 0):
            raise ConformanceError("weights must be one nonnegative value per row")
        root = np.sqrt(w)
        uw = u * root[:, None]
        yw = y * root
        sigma = uw.T @ uw / n
    sigma = 0.5 * (sigma + sigma.T)
    condition = float(np.linalg.cond(sigma))
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise DegenerateDesignError(
            f"design second-moment matrix has condition {condition:.3e} "
            f"(limit {CONDITION_LIMIT:.0e}); the nondegeneracy assumption fails"
        )
    theta = np.linalg.lstsq(uw, yw, rcond=None)[0]
    return theta, sigma, condition


def fit_pcr(design: RegressionDesign, weights=None) -> RegressionFit:
    """Least squares of y on (1, X, scores).

    ``weights`` reweights the empirical measure (used by resampling); the
    stored residuals are always the unweighted y - U theta.
    """
    p = 1 + design.d + design.m
    if design.n <= p:
        raise DegenerateDesignError(
            f"need more than {p} observations to fit {p} coefficients, got {design.n}"
        )
    u = design_matrix(design)
    theta, sigma, condition = _solve_ls(u, design.y, weights)
    return RegressionFit(
        theta=theta,
        sigma_hat=sigma,
        residuals=design.y - u @ theta,
        condition=condition,
        n=design.n,
        d=design.d,
        m=design.m,
    )


def fit_precision(design: RegressionDesign, weights=None) -> InteractionFit:
    """Two-arm least squares: y on (U, A * U) with U = (1, X, scores).

    Both treatment arms must be populated, otherwise the modifier block is
    inestimable.
    """
    if design.treatment is None:
        raise ConformanceError("two-arm fit needs a treatment indicator")
    a = design.treatment.astype(float)
    n_treat = int(a.sum())
    if n_treat == 0 or n_treat == design.n:
        raise DegenerateDesignError(
            f"treatment arm sizes are {design.n - n_treat} and {n_treat}; "
            "both arms must be populated for the modifier block"
        )
    u = design_matrix(design)
    full = np.column_stack([u, u * a[:, None]])
    p = full.shape[1]
    if design.n <= p:
        raise DegenerateDesignError(
            f"need more than {p} observations to fit {p} coefficients, got {design.n}"
        )
    theta, sigma, condition = _solve_ls(full, design.y, weights)
    return InteractionFit(
        theta=theta,
        sigma_hat=sigma,
        residuals=design.y - full @ theta,
        condition=condition,
        n=design.n,
        d=design.d,
        m=design.m,
    )


def predict(fit: RegressionFit, x, scores) -> np.ndarray:
    """Evaluate the fitted regression at new covariates and scores."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        x = x.reshape(-1, 0)
    if x.ndim == 1:
        x = x[:, None]
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0:
        scores = scores.reshape(x.shape[0], 0)
    if scores.ndim == 1:
        scores = scores[:, None]
    if x.shape[1] != fit.d or scores.shape[1] != fit.m:
        raise ConformanceError(
            f"expected {fit.d} covariates and {fit.m} scores, "
            f"got {x.shape[1]} and {scores.shape[1]}"
        )
    if x.shape[0] != scores.shape[0]:
        raise ConformanceError("x and scores must have the same number of rows")
    return fit.alpha + x @ fit.beta + scores @ fit.gamma


def coefficient_element(fit: RegressionFit, model: EigenModel) -> np.ndarray:
    """Reconstruct the functional coefficient sum_j gamma_j phi_j on the grid."""
    if fit.m > model.n_components:
        raise ConformanceError(
            f"fit used {fit.m} scores but the model retains only "
            f"{model.n_components} components"
        )
    return fit.gamma @ model.eigenfunctions[: fit.m]


def plugin_cov(
    fit: RegressionFit,
    model: EigenModel,
    space: AmbientSpace,
    sample,
    design: RegressionDesign,
    gap_tol=None,
) -> np.ndarray:
    """Influence-function covariance of the fitted coefficients.

    Each observation contributes sigma_hat^{-1} (U_i eps_i + L0(K_i)) where
    L0 collects the first-order effect of re-estimating the eigenfunctions
    from the same data: rank-one covariance perturbations K_i propagated
    through inverse spectral gaps into the scores. Population moments are
    replaced by empirical plug-ins. The result is the sample covariance of
    the influence vectors divided by n; with exact eigenfunctions and zero
    residual noise the correction vanishes and the classical sandwich is
    recovered.
    """
    data = as_sample(space, sample)
    if data.shape[0] != design.n:
        raise ConformanceError("sample and design have different row counts")
    m = design.m
    n = design.n
    n_comp = model.n_components
    if m > n_comp:
        raise ConformanceError(
            f"design uses {m} scores but the model retains {n_comp} components"
        )
    check_gaps(model, m, gap_tol)
    u = design_matrix(design)
    eps = fit.residuals
    xi = centered_scores(model, space, sample)
    raw = (data * space.weights) @ model.eigenfunctions.T
    lams = model.eigenvalues
    # Inverse spectral gaps, zero on the diagonal: gaps[j, k] = 1/(l_j - l_k).
    gaps = np.zeros((m, n_comp))
    for j in range(m):
        for k in range(n_comp):
            if k != j:
                gaps[j, k] = 1.0 / (lams[j] - lams[k])

    def paired(v: np.ndarray) -> np.ndarray:
        # <v, L_{1j}(K_i)> for every i and j <= m, where v is expressed by
        # its projections onto the retained eigenfunctions.
        return xi[:, :m] * (xi @ (gaps * v).T)

    proj_mean = raw.mean(axis=0)
    proj_x = design.x.T @ raw / n
    proj_eps = eps @ raw / n
    proj_scores = design.scores.T @ raw / n
    gamma = fit.gamma
    q1 = -(paired(proj_mean) @ gamma)
    q2 = np.empty((n, design.d))
    for l in range(design.d):
        q2[:, l] = -(paired(proj_x[l]) @ gamma)
    q3 = paired(proj_eps)
    for l in range(m):
        q3[:, l] -= paired(proj_scores[l]) @ gamma
    correction = np.column_stack([q1, q2, q3])
    contributions = u * eps[:, None] + correction
    sigma_inv = np.linalg.inv(fit.sigma_hat)
    influence = contributions @ sigma_inv
    influence = influence - influence.mean(axis=0)
    return (influence.T @ influence / n) / n


def sandwich_cov(fit: RegressionFit, design: RegressionDesign) -> np.ndarray:
    """Classical heteroscedasticity-robust covariance, no score correction."""
    u = design_matrix(design)
    n = design.n
    meat = (u * fit.residuals[:, None] ** 2).T @ u / n
    sigma_inv = np.linalg.inv(fit.sigma_hat)
    return sigma_inv @ meat @ sigma_inv / n
