"""Scenario generation and Monte Carlo evaluation of the pipeline.

Samples follow a finite Karhunen-Loeve construction Z_i = sum_j
sqrt(lambda_j) U_ij phi_j with standard normal U and orthonormal phi_j from
one of two documented families: smooth Gaussian bumps on the unit square
(orthonormalized in a fixed order) and a quadratic/Gaussian radial pair on
the unit cube. Responses are linear in scalar AR(1) covariates and the
functional scores, with optional treatment-modifier blocks for two-arm
studies.

``run_monte_carlo`` repeats data generation and the full estimation chain
under replicate-keyed seeds and aggregates per-parameter mean squared errors,
interval coverage, and the distribution of the selected component count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bases import bspline_tensor_basis
from .decomp import component_scores, fit_subspace_pca, select_pve
from .errors import ConformanceError, ConfigurationError, GridPcrError, StudyError
from .regression import (
    RegressionDesign,
    coefficient_names,
    fit_pcr,
    fit_precision,
    plugin_cov,
)
from .resampling import (
    BootstrapSpec,
    JackknifeSpec,
    block_jackknife,
    bootstrap_theta,
)
from .space import AmbientSpace, as_sample
from .util import mix_seed, norm_ppf, replicate_rng, run_indexed

FAMILY_KINDS = ("synthetic2d", "quadratic_gauss3d")
MAX_MC_FAILURE_FRACTION = 0.05

# Gaussian bumps (center, width) on the unit square; the 2D family takes the
# first J of these and orthonormalizes them in order. Widths stay >= 0.14 so
# moderate spline bases represent every orthonormalized function well.
BUMPS_2D = (
    ((0.25, 0.25), 0.20),
    ((0.75, 0.30), 0.18),
    ((0.30, 0.75), 0.18),
    ((0.72, 0.72), 0.16),
    ((0.50, 0.48), 0.26),
    ((0.15, 0.55), 0.15),
    ((0.60, 0.12), 0.17),
    ((0.85, 0.55), 0.14),
)
_GS_BREAKDOWN_TOL = 1e-8


@dataclass(frozen=True)
class TreatmentConfig:
    """Two-arm extension of a scenario: Bernoulli arms and modifier truth."""

    alpha: float
    beta: tuple
    gamma: tuple
    prob: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.prob < 1.0:
            raise ConfigurationError("treatment probability must lie in (0, 1)")
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one simulated data-generating process."""

    family: str
    dims: tuple
    lambdas: tuple
    alpha0: float
    beta0: tuple
    gamma0: tuple
    corr: float = 0.0
    noise_sd: float = 1.0
    n: int = 100
    seed: int = 0
    treatment: TreatmentConfig | None = None

    def __post_init__(self):
        if self.family not in FAMILY_KINDS:
            raise ConfigurationError(
                f"family must be one of {FAMILY_KINDS}, got {self.family!r}"
            )
        dims = tuple(int(d) for d in self.dims)
        need = 2 if self.family == "synthetic2d" else 3
        if len(dims) != need:
            raise ConfigurationError(f"family {self.family} needs a {need}-D grid")
        lams = tuple(float(v) for v in self.lambdas)
        if len(lams) == 0 or any(v <= 0 for v in lams):
            raise ConfigurationError("lambdas must be positive")
        if any(a <= b for a, b in zip(lams, lams[1:])):
            raise ConfigurationError("lambdas must be strictly decreasing")
        gamma = tuple(float(g) for g in self.gamma0)
        if len(gamma) != len(lams):
            raise ConfigurationError("gamma0 needs one score per component")
        beta = tuple(float(b) for b in self.beta0)
        if self.treatment is not None:
            if len(self.treatment.beta) != len(beta):
                raise ConfigurationError("modifier beta must match beta0 length")
            if len(self.treatment.gamma) != len(gamma):
                raise ConfigurationError("modifier gamma must match gamma0 length")
        if not -1.0 < self.corr < 1.0:
            raise ConfigurationError(f"corr must lie in (-1, 1), got {self.corr}")
        if self.noise_sd < 0:
            raise ConfigurationError("noise_sd must be nonnegative")
        if int(self.n) < 1:
            raise ConfigurationError("n must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "beta0", beta)
        object.__setattr__(self, "gamma0", gamma)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def d(self) -> int:
        return len(self.beta0)

    @property
    def n_components(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class TrueFamily:
    """Orthonormal component functions of a scenario, sampled on the grid."""

    space: AmbientSpace
    phis: np.ndarray
    kind: str

    @property
    def n_components(self) -> int:
        return self.phis.shape[0]

    def gamma_element(self, scores) -> np.ndarray:
        scores = np.asarray(scores, dtype=float)
        if scores.shape != (self.n_components,):
            raise ConformanceError("one score per component required")
        return scores @ self.phis


@dataclass(frozen=True)
class PipelineOptions:
    """Estimation settings applied to every Monte Carlo replicate."""

    degree: int = 3
    interior_knots: int = 7
    drop_tol: float = 1e-10
    tau: float = 0.95
    m_override: int | None = None
    inference: str | None = None
    b_reps: int = 300
    boot_kind: str = "wild"
    level: float = 0.95
    r_blocks: int | None = None

    def __post_init__(self):
        if self.inference not in (None, "plugin", "bootstrap", "jackknife"):
            raise ConfigurationError(
                f"inference must be plugin, bootstrap, jackknife, or None, "
                f"got {self.inference!r}"
            )


@dataclass(frozen=True)
class MetricsTable:
    """Aggregated Monte Carlo metrics, one entry per parameter.

    ``coverage`` entries are NaN when no intervals were produced;
    ``covered_reps`` counts the replicates entering each coverage average
    (components a replicate did not select are excluded there, while their
    squared error counts the estimate as zero). ``mhat_counts`` maps each
    observed selected component count to its frequency.
    """

    names: list
    truth: np.ndarray
    mse: np.ndarray
    coverage: np.ndarray
    covered_reps: np.ndarray
    mhat_counts: dict
    completed: int
    failures: list = field(default_factory=list)

    def rows(self) -> list:
        out = []
        for i, name in enumerate(self.names):
            out.append(
                [
                    name,
                    float(self.truth[i]),
                    float(self.mse[i]),
                    float(self.coverage[i]),
                    int(self.covered_reps[i]),
                ]
            )
        return out


def scenario_space(config: ScenarioConfig) -> AmbientSpace:
    """Unit-domain space of a scenario (cell measure = product of 1/dim)."""
    return AmbientSpace.unit_domain(config.dims)


def make_family(space: AmbientSpace, kind: str, n_components: int) -> TrueFamily:
    """Orthonormalize a documented closed-form family on a grid.

    synthetic2d: the first ``n_components`` Gaussian bumps of ``BUMPS_2D``.
    quadratic_gauss3d: 20 * r^2 and exp(-15 r^2) with r the distance to the
    cube center (at most two components). Gram-Schmidt runs in the listed
    order under the space inner product and refuses to continue when a raw
    function is numerically dependent on its predecessors.
    """
    if kind not in FAMILY_KINDS:
        raise ConfigurationError(f"unknown family kind {kind!r}")
    axes = np.meshgrid(*space.centers(), indexing="ij")
    coords = [a.ravel() for a in axes]
    if kind == "synthetic2d":
        if len(space.dims) != 2:
            raise ConfigurationError("synthetic2d needs a 2-D grid")
        if not 1 <= n_components <= len(BUMPS_2D):
            raise ConfigurationError(
                f"synthetic2d offers up to {len(BUMPS_2D)} components"
            )
        raw = []
        for (cx, cy), width in BUMPS_2D[:n_components]:
            sq = (coords[0] - cx) ** 2 + (coords[1] - cy) ** 2
            raw.append(np.exp(-sq / (2.0 * width**2)))
    else:
        if len(space.dims) != 3:
            raise ConfigurationError("quadratic_gauss3d needs a 3-D grid")
        if not 1 <= n_components <= 2:
            raise ConfigurationError("quadratic_gauss3d offers up to 2 components")
        sq = sum((c - 0.5) ** 2 for c in coords)
        raw = [20.0 * sq, np.exp(-15.0 * sq)][:n_components]
    phis = _gram_schmidt(space, np.array(raw))
    return TrueFamily(space=space, phis=phis, kind=kind)


def _gram_schmidt(space: AmbientSpace, raw: np.ndarray) -> np.ndarray:
    out = np.empty_like(raw)
    w = space.weights
    for i, func in enumerate(raw):
        orig = float(np.sqrt(np.sum(func * func * w)))
        vec = func.copy()
        for prev in out[:i]:
            vec -= np.sum(vec * prev * w) * prev
        norm = float(np.sqrt(np.sum(vec * vec * w)))
        if orig == 0.0 or norm < _GS_BREAKDOWN_TOL * orig:
            raise ConfigurationError(
                f"family function {i + 1} is numerically dependent on its "
                "predecessors; orthonormalization broke down"
            )
        out[i] = vec / norm
    return out


def kl_sample(
    family: TrueFamily, lambdas, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw n mean-zero sample rows with variances ``lambdas`` along the family."""
    lams = np.asarray(lambdas, dtype=float)
    if lams.shape != (family.n_components,):
        raise ConformanceError("one variance per family component required")
    if np.any(lams <= 0):
        raise ConfigurationError("variances must be positive")
    factors = rng.standard_normal((n, lams.size))
    return (factors * np.sqrt(lams)) @ family.phis


def ar_covariates(
    n: int, d: int, corr: float, rng: np.random.Generator
) -> np.ndarray:
    """Scalar covariates with AR(1)-structured correlation corr^|l - l'|."""
    if d == 0:
        return np.zeros((n, 0))
    if not -1.0 < corr < 1.0:
        raise ConfigurationError(f"corr must lie in (-1, 1), got {corr}")
    omega = corr ** np.abs(np.subtract.outer(np.arange(d), np.arange(d)))
    root = np.linalg.cholesky(omega)
    return rng.standard_normal((n, d)) @ root.T


def gen_response(
    family: TrueFamily,
    sample,
    x,
    alpha0: float,
    beta0,
    gamma0,
    noise_sd: float,
    rng: np.random.Generator,
    treatment=None,
    modifier: TreatmentConfig | None = None,
) -> np.ndarray:
    """Linear response alpha + beta'X + <gamma, Z> (+ treatment block) + noise."""
    data = as_sample(family.space, sample)
    x = np.asarray(x, dtype=float).reshape(data.shape[0], -1)
    beta0 = np.asarray(beta0, dtype=float)
    gamma_fn = family.gamma_element(gamma0)
    y = alpha0 + x @ beta0 + (data * family.space.weights) @ gamma_fn
    if modifier is not None:
        if treatment is None:
            raise ConformanceError("modifier truth needs a treatment indicator")
        a = np.asarray(treatment, dtype=float)
        mod_fn = family.gamma_element(np.asarray(modifier.gamma))
        y = y + a * (
            modifier.alpha
            + x @ np.asarray(modifier.beta)
            + (data * family.space.weights) @ mod_fn
        )
    if noise_sd > 0:
        y = y + noise_sd * rng.standard_normal(data.shape[0])
    return y


def generate_dataset(config: ScenarioConfig, replicate: int):
    """One replicate's (space, family, sample, x, y, treatment).

    Randomness is keyed by (config.seed, replicate); the same pair always
    reproduces the same dataset regardless of what else has run.
    """
    rng = replicate_rng(config.seed, replicate)
    space = scenario_space(config)
    family = make_family(space, config.family, config.n_components)
    x = ar_covariates(config.n, config.d, config.corr, rng)
    sample = kl_sample(family, config.lambdas, config.n, rng)
    treatment = None
    if config.treatment is not None:
        treatment = rng.random(config.n) < config.treatment.prob
    y = gen_response(
        family,
        sample,
        x,
        config.alpha0,
        config.beta0,
        config.gamma0,
        config.noise_sd,
        rng,
        treatment=treatment,
        modifier=config.treatment,
    )
    return space, family, sample, x, y, treatment


def _true_theta(config: ScenarioConfig) -> np.ndarray:
    base = np.concatenate([[config.alpha0], config.beta0, config.gamma0])
    if config.treatment is None:
        return base
    mod = np.concatenate(
        [[config.treatment.alpha], config.treatment.beta, config.treatment.gamma]
    )
    return np.concatenate([base, mod])


def _metric_names(config: ScenarioConfig) -> list:
    coef = coefficient_names(
        config.d, config.n_components, config.treatment is not None
    )
    lam = [f"lambda{j + 1}" for j in range(config.n_components)]
    return lam + coef


def run_replicate(
    config: ScenarioConfig, options: PipelineOptions, replicate: int
) -> dict:
    """Generate one dataset, run the estimation chain, and score it.

    Returns the selected component count, squared errors for every true
    parameter (eigenvalues first, then coefficients), and interval coverage
    indicators where inference was requested. Eigen-block comparisons are
    sign-aligned to the true eigenfunctions; components beyond the selected
    count are scored as zero estimates and skipped for coverage.
    """
    space, family, sample, x, y, treatment = generate_dataset(config, replicate)
    basis = bspline_tensor_basis(space, options.degree, options.interior_knots)
    model = fit_subspace_pca(space, basis, sample, options.drop_tol)
    if options.m_override is not None:
        m = int(options.m_override)
        if not 1 <= m <= model.n_components:
            raise ConformanceError(
                f"m_override {m} outside 1..{model.n_components}"
            )
    else:
        m = select_pve(model, options.tau).m
    j_true = config.n_components
    scores = component_scores(model, space, sample)[:, :m]
    design = RegressionDesign(y=y, x=x, scores=scores, treatment=treatment)
    fit = fit_precision(design) if treatment is not None else fit_pcr(design)

    # Sign alignment of estimated components to the true family.
    k_cmp = min(m, j_true)
    signs = np.ones(j_true)
    for j in range(k_cmp):
        inner = float(
            np.sum(model.eigenfunctions[j] * family.phis[j] * space.weights)
        )
        signs[j] = 1.0 if inner >= 0 else -1.0

    lam_err = np.zeros(j_true)
    for j in range(j_true):
        est = model.eigenvalues[j] if j < model.n_components else 0.0
        lam_err[j] = (est - config.lambdas[j]) ** 2

    truth = _true_theta(config)
    block = 1 + config.d + j_true
    est_theta = np.zeros(truth.size)
    est_theta[: 1 + config.d] = fit.theta[: 1 + config.d]
    for j in range(k_cmp):
        est_theta[1 + config.d + j] = signs[j] * fit.theta[1 + config.d + j]
    if treatment is not None:
        fit_block = 1 + config.d + m
        est_theta[block : block + 1 + config.d] = fit.theta[
            fit_block : fit_block + 1 + config.d
        ]
        for j in range(k_cmp):
            est_theta[block + 1 + config.d + j] = (
                signs[j] * fit.theta[fit_block + 1 + config.d + j]
            )
    theta_err = (est_theta - truth) ** 2

    covered = np.full(truth.size, np.nan)
    if options.inference is not None:
        lower, upper = _interval_bounds(
            config, options, space, basis, sample, y, x, m, treatment,
            model, fit, design, scores, replicate,
        )
        covered = _coverage_from_bounds(
            config, truth, lower, upper, signs, m, treatment is not None
        )
    return {
        "m": m,
        "lam_err": lam_err,
        "theta_err": theta_err,
        "covered": covered,
    }


def _interval_bounds(
    config, options, space, basis, sample, y, x, m, treatment,
    model, fit, design, scores, replicate,
):
    """Lower/upper interval bounds in the fit's own coordinate layout."""
    if options.inference == "bootstrap":
        spec = BootstrapSpec(
            kind=options.boot_kind,
            b_reps=options.b_reps,
            base_seed=mix_seed(config.seed, replicate),
            level=options.level,
        )
        res = bootstrap_theta(
            space, basis, sample, y, x, m, spec, treatment=treatment
        )
        return res.table.lower, res.table.upper
    if options.inference == "jackknife":
        p = fit.theta.size
        r = options.r_blocks if options.r_blocks is not None else p + 2
        res = block_jackknife(
            space, basis, sample, y, x, m,
            JackknifeSpec(r=r, level=options.level), treatment=treatment,
        )
        return res.table.lower, res.table.upper
    if treatment is not None:
        raise ConfigurationError(
            "plugin intervals cover the single-arm fit; use bootstrap or "
            "jackknife for two-arm designs"
        )
    cov = plugin_cov(fit, model, space, sample, design)
    se = np.sqrt(np.diag(cov))
    z = norm_ppf(0.5 * (1.0 + options.level))
    return fit.theta - z * se, fit.theta + z * se


def _coverage_from_bounds(config, truth, lower, upper, signs, m, two_arm):
    """Map interval bounds to per-true-parameter coverage indicators.

    Gamma intervals are sign-aligned like the estimates; components beyond
    the selected count have no interval and stay NaN.
    """
    j_true = config.n_components
    covered = np.full(truth.size, np.nan)
    blocks = [(0, 0)]
    if two_arm:
        blocks.append((1 + config.d + j_true, 1 + config.d + m))
    for out_base, fit_base in blocks:
        for i in range(1 + config.d):
            lo, hi = lower[fit_base + i], upper[fit_base + i]
            covered[out_base + i] = float(lo <= truth[out_base + i] <= hi)
        for j in range(min(m, j_true)):
            lo = signs[j] * lower[fit_base + 1 + config.d + j]
            hi = signs[j] * upper[fit_base + 1 + config.d + j]
            lo, hi = min(lo, hi), max(lo, hi)
            covered[out_base + 1 + config.d + j] = float(
                lo <= truth[out_base + 1 + config.d + j] <= hi
            )
    return covered


def run_monte_carlo(
    config: ScenarioConfig,
    reps: int,
    options: PipelineOptions | None = None,
    threads: int = 1,
) -> MetricsTable:
    """Repeat the scenario ``reps`` times and aggregate the metrics.

    Replicates are keyed by (config.seed, replicate), so results are
    bitwise-reproducible for any thread count. Replicate failures are
    tolerated up to 5% of the study and listed in the result; more than
    that raises ``StudyError``.
    """
    if reps < 1:
        raise ConfigurationError("need at least one replicate")
    options = options or PipelineOptions()

    def one(b):
        try:
            return run_replicate(config, options, b)
        except GridPcrError as exc:
            return (b, str(exc))

    results = run_indexed(one, reps, threads)
    metrics, failures = [], []
    for res in results:
        if isinstance(res, tuple):
            failures.append(res)
        else:
            metrics.append(res)
    if len(failures) > MAX_MC_FAILURE_FRACTION * reps:
        detail = "; ".join(f"replicate {b}: {msg}" for b, msg in failures[:5])
        raise StudyError(
            f"{len(failures)} of {reps} Monte Carlo replicates failed; "
            f"first failures: {detail}",
            failures=failures,
        )
    j_true = config.n_components
    names = _metric_names(config)
    truth = np.concatenate([config.lambdas, _true_theta(config)])
    errs = np.array(
        [np.concatenate([r["lam_err"], r["theta_err"]]) for r in metrics]
    )
    mse = errs.mean(axis=0)
    cov_rows = np.array(
        [
            np.concatenate([np.full(j_true, np.nan), r["covered"]])
            for r in metrics
        ]
    )
    with np.errstate(invalid="ignore"):
        denom = np.sum(~np.isnan(cov_rows), axis=0)
        coverage = np.where(
            denom > 0, np.nansum(np.where(np.isnan(cov_rows), 0, cov_rows), axis=0)
            / np.maximum(denom, 1), np.nan,
        )
    mhat_counts: dict = {}
    for r in metrics:
        mhat_counts[r["m"]] = mhat_counts.get(r["m"], 0) + 1
    return MetricsTable(
        names=names,
        truth=truth,
        mse=mse,
        coverage=coverage,
        covered_reps=denom,
        mhat_counts=dict(sorted(mhat_counts.items())),
        completed=len(metrics),
        failures=failures,
    )
