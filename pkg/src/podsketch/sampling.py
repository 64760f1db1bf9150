"""Probability distributions over matrix columns/rows, seeded sampling with
replacement, and the duplicate-collapsing rescalings that preserve Gram
matrices.

Sampling is inverse-CDF: one uniform variate per draw, binary search over
the cumulative weight vector.  The generator is a ``numpy.random.Generator``
owned by the caller; a fixed seed gives byte-identical draws.  Zero-weight
candidates are never drawn (their CDF segment has zero length), and the
cumulative vector is pinned to 1.0 at the last positive weight so no variate
can fall off the end.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import DegenerateDistributionError, ParameterError, PodsketchError


@dataclasses.dataclass(frozen=True)
class Distribution:
    """Probability vector over a set of candidate indices.

    ``indices`` are distinct and stored sorted ascending; ``weights`` are
    nonnegative and normalized to sum to 1 at construction.
    """

    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float64)
        if idx.ndim != 1 or w.shape != idx.shape:
            raise ParameterError("indices and weights must be 1-D and equal length")
        if idx.size == 0:
            raise ParameterError("distribution needs at least one candidate")
        if np.unique(idx).size != idx.size:
            raise ParameterError("candidate indices must be distinct")
        order = np.argsort(idx, kind="stable")
        idx, w = idx[order], w[order]
        if w.min() < 0:
            raise ParameterError("weights must be nonnegative")
        total = w.sum()
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(f"weights must sum to 1 (got {total!r})")
        w = w / total
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, indices, raw_weights, *, what="candidate"):
        """Normalize nonnegative raw weights into a Distribution.

        Raises :class:`DegenerateDistributionError` when every weight is
        zero (there is nothing to sample).
        """
        raw = np.asarray(raw_weights, dtype=np.float64)
        total = raw.sum()
        if not total > 0.0:
            raise DegenerateDistributionError(f"all {what} weights are zero")
        return cls(np.asarray(indices, dtype=np.int64), raw / total)

    @property
    def size(self):
        return int(self.indices.shape[0])

    def weight_of(self, wanted):
        """Weights for the given indices (must all be candidates)."""
        wanted = np.asarray(wanted, dtype=np.int64)
        pos = np.searchsorted(self.indices, wanted)
        pos = np.clip(pos, 0, self.size - 1)
        if not np.array_equal(self.indices[pos], wanted):
            raise ParameterError("index not present in the distribution")
        return self.weights[pos]


@dataclasses.dataclass(frozen=True)
class SampleDraw:
    """The result of drawing ``total`` indices with replacement, collapsed
    to distinct indices with their occurrence counts."""

    unique_indices: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        idx = np.asarray(self.unique_indices, dtype=np.int64)
        cnt = np.asarray(self.counts, dtype=np.int64)
        if idx.ndim != 1 or cnt.shape != idx.shape:
            raise ParameterError("unique_indices and counts must match in shape")
        if np.unique(idx).size != idx.size:
            raise ParameterError("unique_indices must be distinct")
        if cnt.size and cnt.min() < 1:
            raise ParameterError("counts must be positive")
        if int(cnt.sum()) != int(self.total):
            raise ParameterError("counts must sum to the requested total")
        object.__setattr__(self, "unique_indices", idx)
        object.__setattr__(self, "counts", cnt)
        object.__setattr__(self, "total", int(self.total))

    @property
    def ndistinct(self):
        return int(self.unique_indices.shape[0])


def column_norm_distribution(a, candidates=None):
    """Distribution over columns proportional to squared Euclidean norms.

    Parameters
    ----------
    a : ndarray
        The matrix whose columns are candidates.
    candidates : array_like of int, optional
        Subset of column indices; defaults to all columns.

    Raises
    ------
    DegenerateDistributionError
        If every candidate column is identically zero.
    """
    a = np.asarray(a)
    if candidates is None:
        candidates = np.arange(a.shape[1])
    candidates = np.asarray(candidates, dtype=np.int64)
    if candidates.size == 0:
        raise ParameterError("candidate set is empty")
    if candidates.size == a.shape[1] and np.array_equal(
        candidates, np.arange(a.shape[1])
    ):
        # whole-matrix case: skip the gather, which would transiently copy
        # the full matrix (twice) -- ruinous for out-of-core block sweeps
        norms2 = np.einsum("ij,ij->j", a, a)
    else:
        cols = a[:, candidates]
        norms2 = np.einsum("ij,ij->j", cols, cols)
    return Distribution.from_weights(candidates, norms2, what="candidate column")


def row_norm_distribution(d):
    """Distribution over all rows of ``d`` proportional to squared norms."""
    d = np.asarray(d)
    norms2 = np.einsum("ij,ij->i", d, d)
    return Distribution.from_weights(np.arange(d.shape[0]), norms2, what="row")


def uniform_distribution(candidates):
    """Equal weight on every candidate index."""
    candidates = np.asarray(candidates, dtype=np.int64)
    if candidates.size == 0:
        raise ParameterError("candidate set is empty")
    return Distribution(candidates, np.full(candidates.size, 1.0 / candidates.size))


def residual_distribution(a, u, candidates=None, *, degenerate_rtol=1e-14):
    """Weights proportional to the squared residual of each candidate column
    after projection onto the span of ``u``.

    ``u`` must have orthonormal columns; with zero columns this reduces to
    :func:`column_norm_distribution`.  When the candidates are essentially
    captured by ``u`` already (total residual below
    ``degenerate_rtol * ||a||_F^2``) a DegenerateDistributionError is raised
    and the caller is expected to fall back to uniform sampling.
    """
    a = np.asarray(a)
    u = np.asarray(u)
    if candidates is None:
        candidates = np.arange(a.shape[1])
    candidates = np.asarray(candidates, dtype=np.int64)
    if candidates.size == 0:
        raise ParameterError("candidate set is empty")
    cols = a[:, candidates]
    if u.ndim != 2 or u.shape[0] != a.shape[0]:
        raise ParameterError("u must be 2-D with the same row count as a")
    if u.shape[1] == 0:
        return column_norm_distribution(a, candidates)
    resid = cols - u @ (u.T @ cols)
    res2 = np.einsum("ij,ij->j", resid, resid)
    total = res2.sum()
    if total <= degenerate_rtol * np.einsum("ij,ij->", a, a):
        raise DegenerateDistributionError(
            "candidate columns are fully captured by the current basis"
        )
    return Distribution(candidates, res2 / total)


def leverage_distribution(u):
    """Row distribution from leverage scores of an orthonormal basis.

    weight_i = ||row i of u||^2 / k for an m-by-k orthonormal ``u``; the
    weights sum to 1 because the squared row norms of an orthonormal basis
    sum to k.
    """
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[1] == 0:
        raise ParameterError("u must be 2-D with at least one column")
    lev = np.einsum("ij,ij->i", u, u) / u.shape[1]
    return Distribution.from_weights(np.arange(u.shape[0]), lev, what="leverage")


def sample_with_replacement(dist, count, rng):
    """Draw ``count`` indices i.i.d. from ``dist`` and collapse duplicates.

    Consumes exactly one batch of ``count`` uniform variates from ``rng``
    (``rng.random(count)``), which keeps draws reproducible and lets tests
    substitute a stub generator.
    """
    if count < 1:
        raise ParameterError("sample count must be >= 1")
    u = rng.random(int(count))
    cum = np.cumsum(dist.weights)
    last = np.nonzero(dist.weights)[0][-1]
    # Pin the CDF to exactly 1 at the last positive weight: rounding in the
    # cumsum can otherwise strand a variate past the end, and trailing
    # zero-weight candidates must stay unreachable.
    cum[last:] = 1.0
    picked = dist.indices[np.searchsorted(cum, u, side="right")]
    uniq, counts = np.unique(picked, return_counts=True)
    return SampleDraw(uniq, counts, int(count))


def _scale_factors(dist, draw, total, dedup):
    p = dist.weight_of(draw.unique_indices)
    if np.any(p <= 0.0):
        raise PodsketchError("drawn index has zero weight; sampler invariant broken")
    if dedup:
        return np.sqrt(draw.counts / (total * p))
    return 1.0 / np.sqrt(total * np.repeat(p, draw.counts))


def scale_sampled_columns(a, draw, dist, c, dedup=True):
    """Materialize and scale the sampled columns.

    dedup=False returns C: one column per draw (duplicates repeated), each
    scaled by 1/sqrt(c p).  dedup=True returns D: one column per distinct
    index, scaled by sqrt(t_i)/sqrt(c p_i) where t_i is the occurrence
    count, so that D D^T = C C^T exactly.
    """
    a = np.asarray(a)
    f = _scale_factors(dist, draw, c, dedup)
    idx = draw.unique_indices if dedup else np.repeat(draw.unique_indices, draw.counts)
    return np.asfortranarray(a[:, idx] * f)


def scale_sampled_rows(c, draw, dist, w, dedup=True):
    """Row counterpart of :func:`scale_sampled_columns`.

    dedup=True returns Y: one row per distinct index scaled by
    sqrt(t_i/(w q_i)), so Y^T Y equals the with-duplicates W^T W exactly;
    dedup=False returns that W.
    """
    c_mat = np.asarray(c)
    f = _scale_factors(dist, draw, w, dedup)
    idx = draw.unique_indices if dedup else np.repeat(draw.unique_indices, draw.counts)
    return np.asfortranarray(c_mat[idx, :] * f[:, None])


def _check_count_params(k, epsilon, delta):
    if k < 1 or int(k) != k:
        raise ParameterError("k must be a positive integer")
    if not epsilon > 0:
        raise ParameterError("epsilon must be > 0")
    if not 0 < delta < 1:
        raise ParameterError("delta must lie strictly between 0 and 1")


def _ltsvd_count_raw(k, epsilon, delta):
    return 4.0 * k * (1.0 + math.sqrt(8.0 * math.log(1.0 / delta))) ** 2 / epsilon**2


def _ctsvd_count_raw(k, epsilon, delta):
    return float(k * k) * (1.0 + math.sqrt(math.log(2.0 / delta))) ** 2 / epsilon**4


def ltsvd_sample_count(k, epsilon, delta):
    """Column budget c = ceil(4k (1 + sqrt(8 ln(1/delta)))^2 / epsilon^2).

    The logarithm is natural, which the ceiling inherits; failure
    probability delta must lie in (0, 1).
    """
    _check_count_params(k, epsilon, delta)
    return int(math.ceil(_ltsvd_count_raw(k, epsilon, delta)))


def ctsvd_sample_count(k, epsilon, delta):
    """Row/column budget c = w = ceil(k^2 (1 + sqrt(ln(2/delta)))^2 / epsilon^4)."""
    _check_count_params(k, epsilon, delta)
    return int(math.ceil(_ctsvd_count_raw(k, epsilon, delta)))
