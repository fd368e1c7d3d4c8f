"""Small numeric and execution helpers used across modules."""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ConfigurationError


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write a file via temp-file-then-rename so readers never see partials."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-gridpcr-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))

THREADS_ENV_VAR = "GRIDPCR_THREADS"

# Rational approximation coefficients for the standard normal quantile
# (central region and tails), |error| < 1.2e-9 before polishing.
_PPF_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_PPF_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_PPF_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_PPF_D = (
    7.784695709041462e-03, 3.224671290700398e-01,
    2.445134137142996e00, 3.754408661907416e00,
)
_PPF_SPLIT = 0.02425


def norm_ppf(p: float) -> float:
    """Standard normal quantile, dependency-free.

    Rational approximation with one Halley refinement through ``math.erfc``;
    absolute error is near machine precision, well inside the documented
    1e-9 contract. Valid for 0 < p < 1.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ConfigurationError(f"quantile level must lie in (0, 1), got {p}")
    if p < _PPF_SPLIT:
        q = math.sqrt(-2.0 * math.log(p))
        x = -_ppf_tail(q)
    elif p > 1.0 - _PPF_SPLIT:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = _ppf_tail(q)
    else:
        q = p - 0.5
        r = q * q
        a, b = _PPF_A, _PPF_B
        num = ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]
        den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        x = num * q / den
    # One Halley step against the exact CDF expressed via erfc. For p >= 1/2
    # use the complementary tail: 1 - p is exact there and erfc keeps the
    # small tail mass in full relative precision, avoiding cancellation.
    if p < 0.5:
        err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    else:
        err = (1.0 - p) - 0.5 * math.erfc(x / math.sqrt(2.0))
    u = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def _ppf_tail(q: float) -> float:
    c, d = _PPF_C, _PPF_D
    num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
    den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
    return -num / den


def mix_seed(base_seed: int, salt: int) -> int:
    """Derive a child seed deterministically (splitmix64-style round)."""
    z = (int(base_seed) * 0x9E3779B97F4A7C15 + int(salt) + 1) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def replicate_rng(base_seed: int, replicate: int) -> np.random.Generator:
    """Counter-keyed generator for one replicate of a seeded study.

    Streams are keyed by (base_seed, replicate), so draws depend only on the
    pair, never on execution order or worker count.
    """
    if replicate < 0:
        raise ConfigurationError("replicate index must be nonnegative")
    key = np.array(
        [np.uint64(base_seed & 0xFFFFFFFFFFFFFFFF), np.uint64(replicate)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigurationError(
            f"{THREADS_ENV_VAR} must be an integer, got {raw!r}"
        ) from None
    return max(1, n)


def run_indexed(fn, count: int, threads: int = 1) -> list:
    """Evaluate ``fn(i)`` for i in range(count), results in index order.

    With ``threads > 1`` the calls run on a thread pool; each call must be
    independent (replicate-keyed RNG makes that hold), so the result list is
    identical for any worker count.
    """
    if count < 0:
        raise ConfigurationError("count must be nonnegative")
    threads = max(1, int(threads))
    if threads == 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))
