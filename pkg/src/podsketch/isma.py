"""Iterative sampling and merging: dominant left singular vectors of a
dense matrix by repeatedly sampling columns (optionally rows), factoring
the sample through its Gram matrix, and merging with the running
approximation at a fixed rank r.

The first round always samples by squared column norms (and, with row
sampling on, rows of the sampled block by squared row norms).  From the
second round the configured strategy takes over:

========  =======================================  ==========================
strategy  columns                                  rows (when sampled)
========  =======================================  ==========================
l2n       squared norms, renormalized over the     (row sampling not
          shrinking candidate set                  supported)
unf       uniform                                  block row norms
ort       squared residual against the current     block row norms
          basis (falls back to uniform when the
          basis already captures every candidate)
ls        uniform                                  leverage scores of the
                                                   current top-k basis
========  =======================================  ==========================

Convergence is declared when the cosines between successive top-k
approximations (per mode, or of the principal angles between subspaces)
all reach tau.  Sampled columns enter unscaled — only sampled rows carry
the 1/sqrt(w q) scaling — so the singular values of the iterate are biased
low; the optional finalize step recomputes Sigma and V exactly from A and
the converged basis via a QR of A^T U.
"""

from __future__ import annotations

import dataclasses
import time

import numpy as np

from .baselines import gram_spectrum, lift_left_vectors
from .errors import DegenerateDistributionError, ParameterError
from .matcore import TruncatedFactor, _svd, as_dense, fix_signs, orthonormalize, thin_qr
from .merge import block_merge
from .sampling import (
    Distribution,
    column_norm_distribution,
    ctsvd_sample_count,
    leverage_distribution,
    ltsvd_sample_count,
    residual_distribution,
    row_norm_distribution,
    sample_with_replacement,
    scale_sampled_rows,
    uniform_distribution,
)

STRATEGIES = ("l2n", "unf", "ort", "ls")
CRITERIA = ("modes", "subspace")


@dataclasses.dataclass(frozen=True)
class IsmaConfig:
    """Parameters of an iterative run.

    r defaults to 3k.  c and w, when given, override the per-round column
    and row draw counts that are otherwise computed from (k, epsilon,
    delta) by the sample-count formulas.  tau=0 degenerates to exactly one
    update round past the bootstrap.
    """

    k: int
    r: int | None = None
    epsilon: float = 0.7
    delta: float = 0.6
    tau: float = 0.99
    strategy: str = "unf"
    rows: bool = False
    criterion: str = "modes"
    seed: int = 0
    finalize: bool = True
    c: int | None = None
    w: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("k must be >= 1")
        r = 3 * self.k if self.r is None else self.r
        if r < self.k:
            raise ParameterError(f"r={r} must be >= k={self.k}")
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be > 0")
        if not 0 < self.delta < 1:
            raise ParameterError("delta must lie strictly between 0 and 1")
        if not 0 <= self.tau <= 1:
            raise ParameterError("tau must lie in [0, 1]")
        strategy = str(self.strategy).lower()
        if strategy not in STRATEGIES:
            raise ParameterError(f"strategy must be one of {STRATEGIES}")
        criterion = str(self.criterion).lower()
        if criterion not in CRITERIA:
            raise ParameterError(f"criterion must be one of {CRITERIA}")
        if strategy == "ls" and not self.rows:
            raise ParameterError("strategy 'ls' samples rows; set rows=True")
        if strategy == "l2n" and self.rows:
            raise ParameterError("strategy 'l2n' is column-only; rows must be False")
        for name, val in (("c", self.c), ("w", self.w)):
            if val is not None and val < 1:
                raise ParameterError(f"{name} override must be >= 1")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "strategy", strategy)
        object.__setattr__(self, "criterion", criterion)

    def column_budget(self):
        if self.c is not None:
            return int(self.c)
        return ltsvd_sample_count(self.k, self.epsilon, self.delta)

    def row_budget(self):
        if self.w is not None:
            return int(self.w)
        return ctsvd_sample_count(self.k, self.epsilon, self.delta)


@dataclasses.dataclass(frozen=True)
class IterationTrace:
    """Diagnostics of one update round.

    cosines is empty for the bootstrap round (there is no previous factor
    to compare against) and has length k afterwards.
    """

    iteration: int
    columns_sampled: int
    rows_sampled: int
    remaining: int
    cosines: np.ndarray
    wall_time: float

    def __post_init__(self):
        cos = np.asarray(self.cosines, dtype=np.float64)
        if cos.size and (cos.min() < -1.0 or cos.max() > 1.0):
            raise ParameterError("cosines must lie in [-1, 1]")
        object.__setattr__(self, "cosines", cos)


def get_update(a, s, u_prev, dist, c, w, rows, rng, r):
    """One sampling round: draw c column indices from ``dist``, factor the
    distinct sampled columns, and retire them from the candidate set.

    With rows=False the factor comes from the SVD of D^T D for the distinct
    (unscaled) columns D.  With rows=True, w row indices are drawn — from
    D's squared row norms, or from leverage scores when a previous top-k
    basis ``u_prev`` is supplied — and the SVD runs on the much smaller
    Y^T Y of the scaled unique rows; left vectors are lifted through D
    either way.  Up to r modes are returned.

    Returns ``(factor, remaining, g, h)`` where g/h count distinct sampled
    columns/rows.  An empty candidate set returns ``(None, s, 0, 0)``,
    signalling natural termination.
    """
    s = np.asarray(s, dtype=np.int64)
    if s.size == 0:
        return None, s, 0, 0
    draw = sample_with_replacement(dist, c, rng)
    d = np.asfortranarray(np.asarray(a)[:, draw.unique_indices])
    remaining = np.setdiff1d(s, draw.unique_indices, assume_unique=True)
    if not rows:
        sigma, v = gram_spectrum(d)
        h = 0
    else:
        if u_prev is None or u_prev.is_empty:
            q_dist = row_norm_distribution(d)
        else:
            q_dist = leverage_distribution(u_prev.u)
        row_draw = sample_with_replacement(q_dist, w, rng)
        y = scale_sampled_rows(d, row_draw, q_dist, w, dedup=True)
        sigma, v = gram_spectrum(y)
        h = row_draw.ndistinct
    factor = lift_left_vectors(d, sigma, v, r)
    return factor, remaining, draw.ndistinct, h


def convergence_cosines(prev, next_, k, criterion):
    """Cosines between successive top-k approximations, length k.

    criterion "modes": xi_i = |u_i(prev) . u_i(next)| per matched mode;
    criterion "subspace": singular values of prev_k^T next_k (cosines of
    the principal angles).  Modes missing from either factor contribute 0,
    which keeps the iteration going.
    """
    kk = min(k, prev.nmodes, next_.nmodes)
    xi = np.zeros(k)
    if kk == 0:
        return xi
    up = prev.u[:, :kk]
    un = next_.u[:, :kk]
    if criterion == "modes":
        xi[:kk] = np.abs(np.einsum("ij,ij->j", up, un))
    elif criterion == "subspace":
        xi[:kk] = np.linalg.svd(up.T @ un, compute_uv=False)
    else:
        raise ParameterError(f"criterion must be one of {CRITERIA}")
    return np.clip(xi, 0.0, 1.0)


def _strategy_distribution(a, s, norms2, factor, config):
    """Column distribution over the remaining candidates for rounds >= 2.

    Returns None when the distribution is degenerate in a way that means
    no further progress is possible (l2n with only zero-norm columns
    left); ort degenerates to uniform instead.
    """
    if config.strategy == "l2n":
        try:
            return Distribution.from_weights(s, norms2[s], what="candidate column")
        except DegenerateDistributionError:
            return None
    if config.strategy == "ort":
        try:
            return residual_distribution(a, factor.u, s)
        except DegenerateDistributionError:
            return uniform_distribution(s)
    # unf and ls both sample columns uniformly from the second round.
    return uniform_distribution(s)


def isma_run(a, config, rng=None, keep=None):
    """Run the full iteration on an in-memory matrix.

    Parameters
    ----------
    a : ndarray
        Data matrix, m x n.  Row-mean centering, when wanted, is the
        caller's job.
    config : IsmaConfig
    rng : numpy.random.Generator, optional
        Externally owned generator (used by the out-of-core driver to
        thread one stream through several runs); defaults to a fresh
        PCG64 seeded with config.seed.
    keep : int, optional
        Number of leading modes to return, default k.  The run itself
        always operates at rank r; keep just widens the returned slice
        (e.g. k+1 when the caller wants a Wedin measure).

    Returns
    -------
    (TruncatedFactor, list of IterationTrace)
        The factor carries V exactly when config.finalize is set.
    """
    a = as_dense(a)
    m, n = a.shape
    k = config.k
    if k > min(m, n):
        raise ParameterError(f"k={k} exceeds min(m, n)={min(m, n)}")
    keep = k if keep is None else int(keep)
    if not 1 <= keep <= config.r:
        raise ParameterError(f"keep={keep} outside 1..r={config.r}")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    c = config.column_budget()
    w = config.row_budget() if config.rows else 0
    norms2 = np.einsum("ij,ij->j", a, a)
    traces = []

    t0 = time.perf_counter()
    s = np.arange(n)
    dist = column_norm_distribution(a, s)
    factor, s, g, h = get_update(a, s, None, dist, c, w, config.rows, rng, config.r)
    if config.rows and not factor.is_empty:
        q, _ = orthonormalize(factor.u)
        factor = TruncatedFactor(q, factor.sigma)
    traces.append(
        IterationTrace(0, g, h, s.size, np.zeros(0), time.perf_counter() - t0)
    )

    xi = np.zeros(k)
    it = 0
    while s.size and (it == 0 or bool(np.any(xi < config.tau))):
        it += 1
        t0 = time.perf_counter()
        dist = _strategy_distribution(a, s, norms2, factor, config)
        if dist is None:
            break
        u_for_rows = None
        if config.rows and config.strategy == "ls" and factor.nmodes:
            u_for_rows = factor.truncate(k)
        update, s, g, h = get_update(
            a, s, u_for_rows, dist, c, w, config.rows, rng, config.r
        )
        merged = block_merge(factor, update, config.r)
        xi = convergence_cosines(factor, merged, k, config.criterion)
        factor = merged
        traces.append(
            IterationTrace(it, g, h, s.size, xi.copy(), time.perf_counter() - t0)
        )

    if config.finalize and factor.nmodes:
        q, rr = thin_qr(a.T @ factor.u)
        ur, sr, vrt = _svd(rr)
        u_new = factor.u @ vrt.T
        v_new = q @ ur
        u_new, v_new = fix_signs(u_new, v_new)
        factor = TruncatedFactor(u_new, sr, v_new)

    return factor.truncate(keep), traces
