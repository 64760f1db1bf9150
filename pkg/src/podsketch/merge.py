"""Merge-and-truncate: combining truncated SVD factors of adjacent column
blocks, the spectral-norm error bound for a chain of such merges, and a
flop-count model for the merge-based SVD.

Given factors (U1, S1) and (U2, S2) of blocks X1, X2, the merge computes
the top-r factor of [X1 X2] without touching the blocks again: project U2
off U1, QR the remainder, assemble the small (l1+l2) square matrix

    E = [[S1, (U1^T U2) S2],
         [0,        R    S2]]

whose SVD rotates [U1 U_o] into the merged left vectors.  Right vectors are
never computed here.
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np
import scipy.linalg as sla

from .errors import ParameterError
from .matcore import ZERO_SIGMA_RTOL, TruncatedFactor, _svd, fix_signs

#: Dense-SVD flop constant (flops ~ beta * n^3 for a square SVD); enters the
#: chain cost model below as the 32*beta coefficient of the n^3/P^2 term.
SVD_FLOP_BETA = 6

#: Orthogonality loss threshold that triggers the corrective second
#: projection pass inside block_merge.
_REORTH_TOL = 1e-8


def block_merge(f1, f2, r):
    """Merge two truncated factors of adjacent blocks at rank ``r``.

    Both inputs are truncated to r first; the result keeps
    min(r, number of nonzero singular values) modes, where "nonzero" means
    above ZERO_SIGMA_RTOL times the largest.  An empty factor is the
    identity element.  No right vectors are produced.

    For nearly parallel subspaces a single projection pass can leave the
    computed complement visibly non-orthogonal to U1; when
    max |U1^T U_o| exceeds 1e-8 a second projection pass folds the leak
    back into the E matrix, which keeps the merged U orthonormal without
    changing what it represents.
    """
    if r < 1:
        raise ParameterError("merge rank r must be >= 1")
    f1 = f1.truncate(r)
    f2 = f2.truncate(r)
    if f1.is_empty:
        return f2
    if f2.is_empty:
        return f1
    u1, u2 = f1.u, f2.u
    if u1.shape[0] != u2.shape[0]:
        raise ParameterError(
            f"factors live in different row spaces ({u1.shape[0]} vs {u2.shape[0]})"
        )
    l1, l2 = f1.nmodes, f2.nmodes
    m = u1.T @ u2
    # the residual is consumed by the QR; letting LAPACK overwrite it keeps
    # the transient footprint at one block-factor-sized array, which the
    # out-of-core driver's memory budget depends on
    resid = u2 - u1 @ m
    q, rr = sla.qr(resid, mode="economic", overwrite_a=True)
    del resid
    leak = np.abs(u1.T @ q).max()
    if leak > _REORTH_TOL:
        m2 = u1.T @ q
        resid = q - u1 @ m2
        q, r2 = sla.qr(resid, mode="economic", overwrite_a=True)
        del resid
        m = m + m2 @ rr
        rr = r2 @ rr
    e = np.zeros((l1 + l2, l1 + l2), order="F")
    e[:l1, :l1] = np.diag(f1.sigma)
    e[:l1, l1:] = m * f2.sigma
    e[l1:, l1:] = rr * f2.sigma
    ue, se, _ = _svd(e)
    keep = min(r, int(np.count_nonzero(se > ZERO_SIGMA_RTOL * max(se[0], 1e-300))))
    stack = np.hstack([u1, q])
    del q
    u = stack @ ue[:, :keep]
    del stack
    u, _ = fix_signs(u)
    return TruncatedFactor(u, se[:keep].copy())


def merge_chain(factors, r):
    """Left fold of :func:`block_merge` over an ordered factor list."""
    factors = list(factors)
    if not factors:
        raise ParameterError("merge_chain needs at least one factor")
    acc = factors[0].truncate(r)
    for f in factors[1:]:
        acc = block_merge(acc, f, r)
    return acc


@dataclasses.dataclass(frozen=True)
class MergeBoundInput:
    """Inputs of the chain error bound: partition count P and the (r+1)-th
    singular value of the full matrix."""

    partitions: int
    sigma_r_plus_1: float

    def __post_init__(self):
        if self.partitions < 1:
            raise ParameterError("partitions must be >= 1")
        if self.sigma_r_plus_1 < 0:
            raise ParameterError("sigma_{r+1} must be >= 0")


def mat_error_bound(bound_input):
    """Spectral-norm bound (2^(P+1) - 3) * sigma_{r+1} for a P-partition
    merge chain of exact rank-r block factors.

    The coefficient is computed in exact integer arithmetic; beyond P = 60
    it exceeds the range where binary64 holds integers exactly, so the
    result is the rounded (for astronomically large P, infinite) float and
    a warning marks the saturation.
    """
    p = bound_input.partitions
    coeff = (1 << (p + 1)) - 3
    if p > 60:
        warnings.warn(
            f"bound coefficient 2^{p + 1}-3 exceeds exact float range; "
            "result is saturated",
            stacklevel=2,
        )
    try:
        coeff_f = float(coeff)
    except OverflowError:
        coeff_f = math.inf
    return coeff_f * bound_input.sigma_r_plus_1


def mat_flops_estimate(m, n, p, beta=SVD_FLOP_BETA):
    """Flop count model 14 m n^2 / P + 32 beta n^3 / P^2 for the P-partition
    merge-based truncated SVD (the default beta=6 gives the usual
    192 n^3 / P^2 cubic term).

    Informational only — reports quote it next to measured wall time.
    """
    if m < 1 or n < 1 or p < 1:
        raise ParameterError("m, n, p must all be >= 1")
    m, n, p = float(m), float(n), float(p)
    return 14.0 * m * n * n / p + 32.0 * beta * n**3 / (p * p)
