"""Resampling inference for the subspace-PCA regression pipeline.

Every replicate reruns the whole estimation chain -- eigenfunctions,
component scores, regression -- under a reweighted or resampled empirical
measure, so the intervals account for eigenfunction estimation, not just
regression noise. The basis Gram matrix and whitener do not depend on
observation weights, so replicates reuse them and work in whitened
coordinates; this is an exact algebraic shortcut, not an approximation.

Replicate randomness is keyed by (base_seed, replicate index), making every
study reproducible for any worker count and any execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decomp import _eig_from_scores, fit_subspace_pca
from .errors import (
    ConformanceError,
    ConfigurationError,
    GridPcrError,
    StudyError,
)
from .regression import (
    RegressionDesign,
    coefficient_names,
    fit_pcr,
    fit_precision,
)
from .space import AmbientSpace, as_sample, basis_rows, project_scores
from .util import norm_ppf, replicate_rng, run_indexed

BOOTSTRAP_KINDS = ("nonparametric", "wild")
WILD_LAWS = ("exponential_unit",)
MAX_FAILURE_FRACTION = 0.05


@dataclass(frozen=True)
class BootstrapSpec:
    """Configuration of a bootstrap study.

    ``kind`` chooses multinomial resampling or positive multiplier (wild)
    weights; the only wild law offered is unit-mean, unit-variance
    exponential, which satisfies the positivity the theory requires.
    """

    kind: str = "wild"
    b_reps: int = 300
    base_seed: int = 0
    wild_law: str = "exponential_unit"
    level: float = 0.95

    def __post_init__(self):
        if self.kind not in BOOTSTRAP_KINDS:
            raise ConfigurationError(
                f"bootstrap kind must be one of {BOOTSTRAP_KINDS}, got {self.kind!r}"
            )
        if self.wild_law not in WILD_LAWS:
            raise ConfigurationError(
                f"wild law must be one of {WILD_LAWS}, got {self.wild_law!r}"
            )
        if int(self.b_reps) < 2:
            raise ConfigurationError("bootstrap needs at least two replicates")
        if not 0.0 < self.level < 1.0:
            raise ConfigurationError(f"level must lie in (0, 1), got {self.level}")
        object.__setattr__(self, "b_reps", int(self.b_reps))
        object.__setattr__(self, "base_seed", int(self.base_seed))


@dataclass(frozen=True)
class JackknifeSpec:
    """Configuration of a block-jackknife study: ``r`` disjoint blocks."""

    r: int
    level: float = 0.95

    def __post_init__(self):
        if int(self.r) < 2:
            raise ConfigurationError("jackknife needs at least two blocks")
        if not 0.0 < self.level < 1.0:
            raise ConfigurationError(f"level must lie in (0, 1), got {self.level}")
        object.__setattr__(self, "r", int(self.r))


@dataclass(frozen=True)
class CiTable:
    """Per-parameter point estimates, interval bounds, and standard errors."""

    names: list
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    se: np.ndarray
    level: float
    method: str
    completed: int

    def __post_init__(self):
        k = len(self.names)
        for label, arr in (
            ("point", self.point),
            ("lower", self.lower),
            ("upper", self.upper),
            ("se", self.se),
        ):
            if np.asarray(arr).shape != (k,):
                raise ConformanceError(f"{label} must have one entry per name")
        if np.any(self.lower > self.upper):
            raise ConformanceError("interval bounds are not ordered")


@dataclass(frozen=True)
class BootstrapResult:
    """Completed bootstrap draws plus the percentile interval table."""

    draws: np.ndarray
    table: CiTable
    failures: list = field(default_factory=list)


@dataclass(frozen=True)
class JackknifeResult:
    """Block-jackknife replicates, covariance, and normal-interval table."""

    replicates: np.ndarray
    cov: np.ndarray
    table: CiTable
    kept: int


def gen_weights(spec: BootstrapSpec, n: int, replicate: int) -> np.ndarray:
    """Observation weights of one bootstrap replicate.

    Nonparametric: multinomial(n, 1/n) counts. Wild: i.i.d. exponential
    draws divided by their replicate mean, so each replicate's weights are
    strictly positive and average exactly one.
    """
    if n < 1:
        raise ConformanceError("need at least one observation to reweight")
    rng = replicate_rng(spec.base_seed, replicate)
    if spec.kind == "nonparametric":
        counts = rng.multinomial(n, np.full(n, 1.0 / n))
        return counts.astype(float)
    draws = rng.standard_exponential(n)
    return draws / draws.mean()


def _indices_from_counts(counts: np.ndarray) -> np.ndarray:
    """Expand multinomial counts into the equivalent resampled index vector."""
    return np.repeat(np.arange(counts.size), counts.astype(int))


class _PreparedPipeline:
    """Cached quantities shared by every replicate of one dataset.

    Holds the whitened raw scores and the point estimate; a replicate only
    has to re-center, re-eigendecompose, and re-solve the regression under
    its weights.
    """

    def __init__(self, space, basis, sample, y=None, x=None, m=None, treatment=None):
        self.space = space
        self.data = as_sample(space, sample)
        self.n = self.data.shape[0]
        self.model = fit_subspace_pca(space, basis, self.data)
        rows = basis_rows(basis)
        raw = project_scores(space, basis, self.data)
        self.white = raw @ self.model.whitener.factor.T
        self.frame = self.model.whitener.factor @ rows
        self.y = None if y is None else np.asarray(y, dtype=float).ravel()
        arr = np.zeros((self.n, 0)) if x is None else np.asarray(x, dtype=float)
        self.x = arr.reshape(self.n, -1) if arr.size else arr.reshape(self.n, 0)
        self.treatment = (
            None if treatment is None else np.asarray(treatment).astype(bool)
        )
        self.m = m
        self.point_fit = None
        if y is not None:
            if m is None or not 1 <= m <= self.model.n_components:
                raise ConformanceError(
                    f"score count m={m} outside 1..{self.model.n_components}"
                )
            scores = self.white @ self.model.coords[:m].T
            design = RegressionDesign(
                y=self.y, x=self.x, scores=scores, treatment=self.treatment
            )
            self.point_fit = (
                fit_precision(design)
                if self.treatment is not None
                else fit_pcr(design)
            )

    def replicate_eigs(self, spec: BootstrapSpec, b: int):
        """Re-estimated (eigenvalues, coords, weights, indices) for replicate b."""
        weights = gen_weights(spec, self.n, b)
        if spec.kind == "nonparametric":
            idx = _indices_from_counts(weights)
            white = self.white[idx]
            centered = white - white.mean(axis=0)
            lams, coords = _eig_from_scores(centered)
            return lams, coords, None, idx
        centered = self.white - np.average(self.white, axis=0, weights=weights)
        lams, coords = _eig_from_scores(centered, weights=weights)
        return lams, coords, weights, None

    def align(self, coords: np.ndarray, m: int) -> np.ndarray:
        """Flip replicate eigenvector signs to match the point estimate."""
        ref = self.model.coords
        k = min(m, coords.shape[0], ref.shape[0])
        signs = np.sign(np.sum(coords[:k] * ref[:k], axis=1))
        signs[signs == 0] = 1.0
        out = coords[:k] * signs[:, None]
        return out

    def replicate_theta(self, spec: BootstrapSpec, b: int) -> np.ndarray:
        lams, coords, weights, idx = self.replicate_eigs(spec, b)
        if coords.shape[0] < self.m:
            raise GridPcrError(
                f"replicate {b} retained {coords.shape[0]} components, "
                f"fewer than the {self.m} the design needs"
            )
        coords = self.align(coords, self.m)
        if idx is not None:
            scores = self.white[idx] @ coords.T
            design = RegressionDesign(
                y=self.y[idx],
                x=self.x[idx],
                scores=scores,
                treatment=None if self.treatment is None else self.treatment[idx],
            )
            fit = (
                fit_precision(design)
                if self.treatment is not None
                else fit_pcr(design)
            )
        else:
            scores = self.white @ coords.T
            design = RegressionDesign(
                y=self.y, x=self.x, scores=scores, treatment=self.treatment
            )
            fit = (
                fit_precision(design, weights=weights)
                if self.treatment is not None
                else fit_pcr(design, weights=weights)
            )
        return fit.theta


def percentile_ci(draws, level: float):
    """Percentile interval bounds from bootstrap draws.

    Quantiles use linear interpolation between order statistics (position
    (B - 1) q + 1); at least two finite draws per column are required.
    """
    if not 0.0 < level < 1.0:
        raise ConfigurationError(f"level must lie in (0, 1), got {level}")
    arr = np.asarray(draws, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] < 2:
        raise ConformanceError("need at least two draws for a percentile interval")
    if not np.all(np.isfinite(arr)):
        raise ConformanceError("draws contain non-finite values")
    half = 0.5 * (1.0 - level)
    lower, upper = np.quantile(arr, [half, 1.0 - half], axis=0, method="linear")
    return lower, upper


def _run_study(spec, draw_fn, width, threads):
    """Run all replicates, collecting draws and tolerated failures."""

    def one(b):
        try:
            return draw_fn(b)
        except GridPcrError as exc:
            return (b, str(exc))

    results = run_indexed(one, spec.b_reps, threads)
    draws, failures = [], []
    for res in results:
        if isinstance(res, tuple):
            failures.append(res)
        else:
            draws.append(res)
    if len(failures) > MAX_FAILURE_FRACTION * spec.b_reps:
        detail = "; ".join(f"replicate {b}: {msg}" for b, msg in failures[:5])
        raise StudyError(
            f"{len(failures)} of {spec.b_reps} bootstrap replicates failed "
            f"(tolerance {MAX_FAILURE_FRACTION:.0%}); first failures: {detail}",
            failures=failures,
        )
    return np.array(draws).reshape(len(draws), width), failures


def bootstrap_theta(
    space: AmbientSpace,
    basis,
    sample,
    y,
    x,
    m: int,
    spec: BootstrapSpec,
    treatment=None,
    threads: int = 1,
) -> BootstrapResult:
    """Bootstrap the full pipeline and return percentile intervals for theta.

    Each replicate re-estimates the eigenfunctions under its weights (signs
    aligned to the point estimate), rebuilds the scores, and refits the
    regression; ``m`` stays fixed at the point estimate's choice. Failed
    replicates are tolerated up to 5% of the study and reported; beyond that
    the study errors out.
    """
    prep = _PreparedPipeline(
        space, basis, sample, y=y, x=x, m=m, treatment=treatment
    )
    width = prep.point_fit.theta.size
    draws, failures = _run_study(
        spec, lambda b: prep.replicate_theta(spec, b), width, threads
    )
    lower, upper = percentile_ci(draws, spec.level)
    names = coefficient_names(prep.x.shape[1], m, treatment is not None)
    table = CiTable(
        names=names,
        point=prep.point_fit.theta.copy(),
        lower=lower,
        upper=upper,
        se=draws.std(axis=0, ddof=1),
        level=spec.level,
        method=f"bootstrap-{spec.kind}",
        completed=draws.shape[0],
    )
    return BootstrapResult(draws=draws, table=table, failures=failures)


def bootstrap_eigenvalues(
    space: AmbientSpace,
    basis,
    sample,
    spec: BootstrapSpec,
    threads: int = 1,
) -> BootstrapResult:
    """Bootstrap the retained eigenvalues of the subspace fit.

    Replicate spectra are truncated or zero-padded to the point estimate's
    component count, so draw j always refers to the j-th largest variance.
    """
    prep = _PreparedPipeline(space, basis, sample)
    j = prep.model.n_components
    if j == 0:
        raise ConformanceError("point estimate retains no components")

    def one(b):
        lams = prep.replicate_eigs(spec, b)[0]
        out = np.zeros(j)
        take = min(j, lams.size)
        out[:take] = lams[:take]
        return out

    draws, failures = _run_study(spec, one, j, threads)
    lower, upper = percentile_ci(draws, spec.level)
    table = CiTable(
        names=[f"lambda{k + 1}" for k in range(j)],
        point=prep.model.eigenvalues.copy(),
        lower=lower,
        upper=upper,
        se=draws.std(axis=0, ddof=1),
        level=spec.level,
        method=f"bootstrap-{spec.kind}",
        completed=draws.shape[0],
    )
    return BootstrapResult(draws=draws, table=table, failures=failures)


def block_jackknife(
    space: AmbientSpace,
    basis,
    sample,
    y,
    x,
    m: int,
    spec: JackknifeSpec,
    treatment=None,
) -> JackknifeResult:
    """Grouped-jackknife covariance of theta from r systematic blocks.

    With k = floor(n / r), block l removes observations {l, l + r, l + 2r,
    ...} (k of them) from the first r * k rows; trailing rows beyond r * k
    are excluded from every replicate. Each replicate reruns the full
    pipeline on the kept rows. The covariance is ((r - 1) / r) times the
    replicate scatter around the replicate mean, and intervals are normal
    around the full-sample point estimate.
    """
    prep = _PreparedPipeline(
        space, basis, sample, y=y, x=x, m=m, treatment=treatment
    )
    width = prep.point_fit.theta.size
    if spec.r <= width + 1:
        raise ConfigurationError(
            f"jackknife needs more blocks than coefficients + 1 "
            f"(r = {spec.r}, coefficients = {width})"
        )
    k = prep.n // spec.r
    if k < 2:
        raise ConfigurationError(
            f"jackknife with r = {spec.r} blocks leaves fewer than two "
            f"observations per block at n = {prep.n}"
        )
    used = spec.r * k
    reps = np.empty((spec.r, width))
    for block in range(spec.r):
        keep = np.ones(used, dtype=bool)
        keep[block::spec.r] = False
        idx = np.flatnonzero(keep)
        white = prep.white[idx]
        centered = white - white.mean(axis=0)
        lams, coords = _eig_from_scores(centered)
        if coords.shape[0] < m:
            raise GridPcrError(
                f"jackknife block {block} retained {coords.shape[0]} components, "
                f"fewer than the {m} the design needs"
            )
        coords = prep.align(coords, m)
        design = RegressionDesign(
            y=prep.y[idx],
            x=prep.x[idx],
            scores=white @ coords.T,
            treatment=None if treatment is None else prep.treatment[idx],
        )
        fit = fit_precision(design) if treatment is not None else fit_pcr(design)
        reps[block] = fit.theta
    center = reps.mean(axis=0)
    dev = reps - center
    cov = (spec.r - 1) / spec.r * (dev.T @ dev)
    se = np.sqrt(np.diag(cov))
    z = norm_ppf(0.5 * (1.0 + spec.level))
    point = prep.point_fit.theta
    table = CiTable(
        names=coefficient_names(prep.x.shape[1], m, treatment is not None),
        point=point.copy(),
        lower=point - z * se,
        upper=point + z * se,
        se=se,
        level=spec.level,
        method=f"jackknife-r{spec.r}",
        completed=spec.r,
    )
    return JackknifeResult(replicates=reps, cov=cov, table=table, kept=used - k)
