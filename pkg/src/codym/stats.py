"""Statistical primitives: entropy, two-sample KS, Spearman, one-sided z p-values."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as _sps

from .errors import ValidationError

EXACT_SPEARMAN_MAX_N = 8


def shannon_entropy(freqs: Sequence[float], tol: float = 1e-9) -> float:
    """Entropy in bits of a probability vector, with 0 log 0 = 0."""
    f = np.asarray(freqs, dtype=float).ravel()
    if f.size == 0 or np.any(f < 0):
        raise ValidationError("frequencies must be nonnegative")
    if abs(f.sum() - 1.0) > tol:
        raise ValidationError(f"frequencies sum to {f.sum()!r}, expected 1")
    nz = f[f > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


@dataclass(frozen=True)
class KsResult:
    d_statistic: float
    p_value: float
    n: int
    m: int


def kolmogorov_q(lam: float, terms: int = 200) -> float:
    """Kolmogorov tail ``Q(lam) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2)``."""
    if lam < 0.15:
        # Q(0.15) = 1 - 3e-23; below that the alternating series converges too slowly
        return 1.0
    total, sign = 0.0, 1.0
    a = -2.0 * lam * lam
    for k in range(1, terms + 1):
        term = math.exp(a * k * k)
        total += sign * term
        if term < 1e-16 * abs(total):
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def ecdf_distance(xs, ys) -> float:
    """``sup |F_x - F_y|`` evaluated on the merged sample points.

    Computed on integer counts, ``max |c_x m - c_y n| / (n m)``, so the single
    final division is the correctly rounded value of the exact rational.
    """
    x = np.sort(np.asarray(xs, dtype=float))
    y = np.sort(np.asarray(ys, dtype=float))
    n, m = x.size, y.size
    pts = np.concatenate([x, y])
    cx = np.searchsorted(x, pts, side="right").astype(np.int64)
    cy = np.searchsorted(y, pts, side="right").astype(np.int64)
    return int(np.max(np.abs(cx * m - cy * n))) / (n * m)


def ks_two_sample(xs, ys) -> KsResult:
    n, m = len(xs), len(ys)
    if n == 0 or m == 0:
        raise ValidationError("KS test needs two nonempty samples")
    d = ecdf_distance(xs, ys)
    ne = n * m / (n + m)
    sq = math.sqrt(ne)
    lam = (sq + 0.12 + 0.11 / sq) * d
    return KsResult(d, kolmogorov_q(lam), n, m)


@dataclass(frozen=True)
class CorrResult:
    rho: float
    p_value: float
    n: int
    method: str  # "exact_permutation" or "t_approx"


def _pearson(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pearson r between vector ``a`` and each row of ``b``."""
    a = a - a.mean()
    b = b - b.mean(axis=-1, keepdims=True)
    return (b @ a) / np.sqrt((a @ a) * (b * b).sum(axis=-1))


def spearman(xs, ys, method: str = "auto") -> CorrResult:
    """Spearman rank correlation with a two-sided p-value.

    ``method="auto"`` uses exact permutation for n <= 8 and the Student-t
    approximation otherwise; ``"exact"`` or ``"t"`` forces one of them.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    n = x.size
    if y.size != n:
        raise ValidationError("spearman needs samples of equal length")
    if n < 3:
        raise ValidationError("spearman needs n >= 3")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValidationError("rho is undefined for a constant input")
    rx = _sps.rankdata(x)
    ry = _sps.rankdata(y)
    rho = float(np.clip(_pearson(rx, ry[None, :])[0], -1.0, 1.0))

    if method == "auto":
        method = "exact" if n <= EXACT_SPEARMAN_MAX_N else "t"
    if method == "exact":
        if n > 10:
            raise ValidationError("exact permutation p is limited to n <= 10")
        perms = np.array(list(itertools.permutations(ry)))
        r_all = _pearson(rx, perms)
        p = float(np.mean(np.abs(r_all) >= abs(rho) - 1e-12))
        return CorrResult(rho, p, n, "exact_permutation")
    if method == "t":
        return CorrResult(rho, spearman_t_pvalue(rho, n), n, "t_approx")
    raise ValidationError(f"unknown method {method!r}")


def spearman_t_pvalue(rho: float, n: int) -> float:
    if abs(rho) >= 1.0:
        return 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return float(min(1.0, 2.0 * _sps.t.sf(abs(t), n - 2)))


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def one_sided_z_p(mu: float, sigma: float, mu0: float = 50.0) -> float:
    """``P(Z > (mu - mu0) / sigma)`` under a standard normal."""
    if not sigma > 0:
        raise ValidationError("sigma must be > 0")
    return 0.5 * math.erfc(((mu - mu0) / sigma) / math.sqrt(2.0))
