"""Single-round sampled SVD baselines.

Both algorithms sample columns, form the small Gram matrix of the sample,
and lift its right singular vectors back through the sampled columns:

* :func:`ltsvd` — columns only; SVD of C^T C.
* :func:`ctsvd` — columns, then rows of the sampled block; SVD of W^T W,
  with an energy filter that drops modes below gamma * ||W||_F^2 where
  gamma = epsilon / (100 k).

The left vectors u_i = C v_i / sigma_i are exactly orthonormal for the
column-only path and approximately orthonormal (~1e-6) when rows were
sampled; callers needing strict orthonormality re-orthonormalize.
The same Gram-and-lift kernel is reused by the iterative algorithm's
per-round update.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import ParameterError
from .matcore import GRAM_EIG_RTOL, ZERO_SIGMA_RTOL, TruncatedFactor, fix_signs
from .sampling import (
    row_norm_distribution,
    sample_with_replacement,
    scale_sampled_columns,
    scale_sampled_rows,
)


def gram_spectrum(mat):
    """Singular values and right singular vectors of ``mat`` via its Gram
    matrix (eigendecomposition of mat^T mat), descending.

    Returns ``(sigma, v)``.  Eigenvalue dust from rounding -- negative or of
    order eps * lambda_1, as left behind by exactly rank-deficient samples --
    is zeroed before the square root so downstream rank cuts see true zeros.
    """
    gram = mat.T @ mat
    w, v = sla.eigh(gram)
    w = np.clip(w[::-1], 0.0, None)
    if w.size:
        w[w <= GRAM_EIG_RTOL * max(w[0], np.finfo(float).tiny)] = 0.0
    return np.sqrt(w), np.asfortranarray(v[:, ::-1])


def lift_left_vectors(source, sigma, v, keep):
    """Left singular vectors u_i = source @ v_i / sigma_i for i < keep.

    ``keep`` is reduced to the number of numerically nonzero sigmas
    (threshold ZERO_SIGMA_RTOL * sigma_1) since division by a zero sigma is
    undefined.  Returns a TruncatedFactor without V.
    """
    if sigma.size == 0 or sigma[0] <= 0.0:
        return TruncatedFactor.empty(source.shape[0])
    rank = int(np.count_nonzero(sigma > ZERO_SIGMA_RTOL * sigma[0]))
    keep = min(keep, rank)
    u = source @ v[:, :keep]
    u /= sigma[:keep]
    u, _ = fix_signs(u)
    return TruncatedFactor(u, sigma[:keep].copy())


def ltsvd(a, dist, k, c, rng, dedup=True):
    """Sampled truncated SVD from c column draws.

    Parameters
    ----------
    a : ndarray
        Data matrix (m x n).
    dist : Distribution
        Column distribution, typically column norms over all n columns.
    k : int
        Number of modes wanted.
    c : int
        Number of column draws (with replacement).
    rng : numpy.random.Generator
        Seeded generator; consumed once.
    dedup : bool
        Collapse duplicate draws with the Gram-preserving rescaling
        (identical output up to rounding; smaller intermediate matrix).

    Returns
    -------
    TruncatedFactor
        min(k, rank of the sample) modes; fewer than k when the sample is
        rank deficient (warned).
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    if c < k:
        warnings.warn(
            f"sampling c={c} columns for k={k} modes; expect a rank shortfall",
            stacklevel=2,
        )
    draw = sample_with_replacement(dist, c, rng)
    mat = scale_sampled_columns(a, draw, dist, c, dedup=dedup)
    sigma, v = gram_spectrum(mat)
    factor = lift_left_vectors(mat, sigma, v, k)
    if factor.nmodes < k:
        warnings.warn(
            f"sample has rank {factor.nmodes} < k={k}; returning fewer modes",
            stacklevel=2,
        )
    return factor


def ctsvd(a, dist, k, c, w, epsilon, rng, dedup=True):
    """Sampled truncated SVD from c column draws followed by w row draws.

    Rows are drawn from the squared row norms of the sampled block, so the
    Gram matrix handed to the SVD is w x ... independent of m.  Modes whose
    squared singular value falls below gamma * ||W||_F^2, with
    gamma = epsilon/(100 k), are discarded; when that leaves fewer than k
    modes the shortfall is warned, not raised.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    if w < 1:
        raise ParameterError("w must be >= 1")
    if not epsilon > 0:
        raise ParameterError("epsilon must be > 0")
    draw = sample_with_replacement(dist, c, rng)
    mat_c = scale_sampled_columns(a, draw, dist, c, dedup=dedup)
    row_dist = row_norm_distribution(mat_c)
    row_draw = sample_with_replacement(row_dist, w, rng)
    mat_w = scale_sampled_rows(mat_c, row_draw, row_dist, w, dedup=dedup)
    sigma, v = gram_spectrum(mat_w)
    gamma = epsilon / (100.0 * k)
    frob2 = float(np.sum(sigma * sigma))
    passing = int(np.count_nonzero(sigma * sigma >= gamma * frob2))
    factor = lift_left_vectors(mat_c, sigma, v, min(k, passing))
    if factor.nmodes < k:
        warnings.warn(
            f"energy filter kept {factor.nmodes} of k={k} modes",
            stacklevel=2,
        )
    return factor
