"""Dense matrix core: storage conventions, centering, QR/SVD primitives,
and the exact Gram-based reference path for POD modes.

Matrices are numpy float64 arrays held in column-major (Fortran) order so
that copying a set of sampled columns is contiguous.  Arrays returned by
:func:`as_dense` are marked read-only; every operation here is a pure
function of its inputs.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.linalg as sla

from .errors import ParameterError

#: Relative threshold below which a singular value counts as zero.
ZERO_SIGMA_RTOL = 1e-14

#: Relative threshold for eigenvalues of a Gram matrix.  Exact rank
#: deficiency leaves eigenvalue dust of order eps * lambda_1, which after the
#: square root sits near 1e-8 * sigma_1 -- far above ZERO_SIGMA_RTOL -- so
#: rank decisions on Gram paths must happen at the eigenvalue level.
GRAM_EIG_RTOL = 1e-12


def as_dense(a, *, copy=False):
    """Validate and normalize a matrix to read-only column-major float64.

    Parameters
    ----------
    a : array_like
        Two-dimensional real matrix.
    copy : bool
        Force a copy even when ``a`` already has the right layout.

    Returns
    -------
    ndarray
        Fortran-ordered float64 array with the writeable flag cleared.

    Raises
    ------
    ParameterError
        If ``a`` is not 2-D, is empty, or contains NaN/Inf entries.
    """
    arr = np.array(a, dtype=np.float64, order="F", copy=copy or None)
    if arr.ndim != 2:
        raise ParameterError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.size == 0:
        raise ParameterError("matrix must have at least one row and column")
    if not np.isfinite(arr).all():
        raise ParameterError("matrix contains non-finite entries")
    if arr is a:
        # Freeze a view instead of flipping the caller's writeable flag.
        arr = arr.view()
    arr.flags.writeable = False
    return arr


@dataclasses.dataclass(frozen=True)
class TruncatedFactor:
    """A truncated SVD-like factor (U, sigma, optional V).

    ``u`` is m-by-l with (approximately) orthonormal columns, ``sigma`` holds
    l nonincreasing nonnegative values and ``v``, when present, is n-by-l.
    How close ``u`` is to orthonormal depends on the producer; use
    :meth:`validate` with the tolerance appropriate to the context.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray | None = None

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if u.ndim != 2 or sigma.ndim != 1:
            raise ParameterError("u must be 2-D and sigma 1-D")
        if u.shape[1] != sigma.shape[0]:
            raise ParameterError(
                f"u has {u.shape[1]} columns but sigma has {sigma.shape[0]} entries"
            )
        if u.shape[1] > u.shape[0]:
            raise ParameterError("factor cannot carry more modes than rows")
        if sigma.size:
            if sigma.min() < 0:
                raise ParameterError("sigma entries must be nonnegative")
            slack = ZERO_SIGMA_RTOL * max(sigma[0], 1.0)
            if np.any(np.diff(sigma) > slack):
                raise ParameterError("sigma must be nonincreasing")
        if self.v is not None:
            v = np.asarray(self.v, dtype=np.float64)
            if v.ndim != 2 or v.shape[1] != sigma.shape[0]:
                raise ParameterError("v must be 2-D with one column per sigma")
            if v.shape[1] > v.shape[0]:
                raise ParameterError("factor cannot carry more modes than v rows")
            object.__setattr__(self, "v", v)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "sigma", sigma)

    @property
    def nmodes(self):
        return int(self.sigma.shape[0])

    @property
    def is_empty(self):
        return self.nmodes == 0

    @classmethod
    def empty(cls, m, with_v=None):
        """Zero-mode factor for an m-row matrix (merge identity element)."""
        v = np.zeros((with_v, 0)) if with_v is not None else None
        return cls(np.zeros((m, 0)), np.zeros(0), v)

    def truncate(self, r):
        """Keep at most the leading ``r`` modes."""
        if r < 0:
            raise ParameterError("truncation rank must be nonnegative")
        if r >= self.nmodes:
            return self
        return TruncatedFactor(
            self.u[:, :r].copy(),
            self.sigma[:r].copy(),
            None if self.v is None else self.v[:, :r].copy(),
        )

    def validate(self, tol=1e-8):
        """Check column orthonormality of ``u`` (and ``v``) to ``tol``.

        Returns the factor itself so calls can be chained; raises
        ``ParameterError`` on violation.
        """
        for name, mat in (("u", self.u), ("v", self.v)):
            if mat is None or mat.shape[1] == 0:
                continue
            gram = mat.T @ mat
            err = np.abs(gram - np.eye(mat.shape[1])).max()
            if err > tol:
                raise ParameterError(
                    f"{name} columns deviate from orthonormal by {err:.3e} (> {tol:.1e})"
                )
        return self


def fix_signs(u, v=None):
    """Canonicalize singular-vector signs in place of an ambiguous SVD output.

    The entry of largest magnitude in each column of ``u`` is made positive;
    the matching column of ``v`` is flipped alongside so the product is
    unchanged.  Returns ``(u, v)`` as new arrays.
    """
    u = np.array(u, order="F")
    if u.shape[1]:
        hero = np.abs(u).argmax(axis=0)
        flip = u[hero, np.arange(u.shape[1])] < 0
        u[:, flip] *= -1.0
    else:
        flip = np.zeros(0, dtype=bool)
    if v is not None:
        v = np.array(v, order="F")
        v[:, flip] *= -1.0
    return u, v


def mean_center_rows(a):
    """Subtract each row's mean so every row sums to zero.

    Idempotent: centering an already-centered matrix is the identity up to
    rounding.
    """
    a = as_dense(a)
    return as_dense(a - a.mean(axis=1, keepdims=True))


def _svd(a):
    # gesdd is fast but occasionally fails to converge; gesvd is the sturdier
    # fallback.  Both raise LinAlgError rather than returning garbage.
    try:
        return sla.svd(a, full_matrices=False, lapack_driver="gesdd")
    except sla.LinAlgError:
        return sla.svd(a, full_matrices=False, lapack_driver="gesvd")


def dense_svd(a):
    """Full thin SVD of ``a`` as a :class:`TruncatedFactor` with V present.

    Signs follow the largest-entry-positive convention so repeated runs and
    different backends produce comparable vectors.  Backend non-convergence
    surfaces as ``scipy.linalg.LinAlgError``.
    """
    a = as_dense(a)
    u, s, vt = _svd(a)
    u, v = fix_signs(u, vt.T)
    return TruncatedFactor(u, s, v)


def thin_qr(a):
    """Economy QR factorization ``a = q @ r`` with ``rows >= cols``.

    Rank deficiency is permitted; ``r`` simply carries (near-)zero diagonal
    entries.
    """
    a = as_dense(a)
    if a.shape[0] < a.shape[1]:
        raise ParameterError("thin_qr requires rows >= cols")
    q, r = sla.qr(a, mode="economic")
    return q, r


def pod_via_gram(a, k):
    """Top-``k`` POD modes through the Gram matrix (eigendecomposition of
    ``a.T @ a``), with left vectors recovered as ``a @ v_i / sigma_i``.

    Faster than a thin SVD for tall matrices, at the price of squaring the
    condition number; tiny singular values are unreliable on this path, and
    exact zeros are dropped (the returned factor may have fewer than ``k``
    modes).

    Raises
    ------
    ParameterError
        If ``k`` exceeds ``min(m, n)``.
    """
    a = as_dense(a)
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise ParameterError(f"k={k} outside 1..min(m, n)={min(m, n)}")
    gram = a.T @ a
    # eigh returns ascending eigenvalues; we want the top-k, descending.
    w, v = sla.eigh(gram, subset_by_index=(n - k, n - 1))
    w = np.clip(w[::-1], 0.0, None)
    v = v[:, ::-1]
    sigma = np.sqrt(w)
    keep = w > GRAM_EIG_RTOL * max(w[0], np.finfo(float).tiny)
    sigma, v = sigma[keep], v[:, keep]
    u = (a @ v) / sigma
    u, v = fix_signs(u, v)
    return TruncatedFactor(u, sigma, v)


def orthonormalize(u):
    """Restore orthonormal columns via QR followed by an SVD of R.

    Returns ``(q, s)`` where ``q = Q @ U_R`` spans the same subspace with
    orthonormal columns and ``s`` holds the singular values of R (all 1 when
    the input was already orthonormal; trailing zeros reveal rank loss).
    """
    q0, r = thin_qr(u)
    ur, s, _ = _svd(r)
    q, _ = fix_signs(q0 @ ur)
    return q, s
