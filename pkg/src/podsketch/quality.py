"""Accuracy metrics for computed factors: per-mode angles, principal
angles between subspaces, and an a-posteriori Wedin-style error measure.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import ParameterError
from .matcore import ZERO_SIGMA_RTOL

#: Shown by the CLI when the Wedin denominator degenerates.
DEGENERATE_OMEGA_ADVICE = (
    "sigma_k and sigma_{k+1} are (numerically) equal, so the error measure "
    "is unbounded; increase k by one or two and rerun"
)


def _top_k_bases(exact, approx, k):
    if k < 1:
        raise ParameterError("k must be >= 1")
    if exact.u.shape[0] != approx.u.shape[0]:
        raise ParameterError(
            f"factors have different row counts "
            f"({exact.u.shape[0]} vs {approx.u.shape[0]})"
        )
    if exact.nmodes < k or approx.nmodes < k:
        raise ParameterError(
            f"both factors need at least k={k} modes "
            f"(have {exact.nmodes} and {approx.nmodes})"
        )
    return exact.u[:, :k], approx.u[:, :k]


def mode_angles(exact, approx, k):
    """Per-mode angles in degrees between matched left singular vectors.

    theta_i = arccos(|u_i . u~_i|), so a global sign flip of either vector
    does not register as error.
    """
    ue, ua = _top_k_bases(exact, approx, k)
    cos = np.abs(np.einsum("ij,ij->j", ue, ua))
    return np.degrees(np.arccos(np.clip(cos, 0.0, 1.0)))


def principal_angles(exact, approx, k):
    """Principal angles in degrees between the top-k left subspaces.

    The cosines are the singular values of approx_k^T exact_k; the result
    is nondecreasing and lies in [0, 90].
    """
    ue, ua = _top_k_bases(exact, approx, k)
    cos = np.linalg.svd(ua.T @ ue, compute_uv=False)
    return np.degrees(np.arccos(np.clip(cos, 0.0, 1.0)))


@dataclasses.dataclass(frozen=True)
class WedinReport:
    """Residual norms and the resulting subspace-error bound.

    measure bounds sqrt(||sin Theta||_F^2 + ||sin Phi||_F^2) over the left
    and right top-k subspaces; values approaching ceiling = sqrt(2k) mean
    the bound is vacuous.  When omega_hat vanishes (degenerate=True) the
    measure is +inf and callers should surface DEGENERATE_OMEGA_ADVICE.
    """

    r_norm: float
    s_norm: float
    omega_hat: float
    measure: float
    ceiling: float
    degenerate: bool

    @property
    def advisory(self):
        return DEGENERATE_OMEGA_ADVICE if self.degenerate else None


def wedin_measure(a, factor, k):
    """Wedin-style error measure of a truncated factor against the data.

    Needs k+1 singular values (for the gap estimate) and right vectors:
    R = A V_k - U_k S_k, S = A^T U_k - V_k S_k, and
    omega_hat = min(|sigma_k - sigma_{k+1}|, sigma_k) standing in for the
    true spectral gap.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    if factor.v is None:
        raise ParameterError("factor must carry right singular vectors")
    if factor.nmodes < k + 1:
        raise ParameterError(
            f"need k+1={k + 1} singular values, factor has {factor.nmodes}"
        )
    a = np.asarray(a)
    if a.shape[0] != factor.u.shape[0] or a.shape[1] != factor.v.shape[0]:
        raise ParameterError("factor dimensions do not match the matrix")
    uk = factor.u[:, :k]
    vk = factor.v[:, :k]
    sk = factor.sigma[:k]
    r = a @ vk - uk * sk
    s = a.T @ uk - vk * sk
    r_norm = float(np.linalg.norm(r))
    s_norm = float(np.linalg.norm(s))
    omega_hat = float(min(abs(factor.sigma[k - 1] - factor.sigma[k]), factor.sigma[k - 1]))
    degenerate = bool(omega_hat <= ZERO_SIGMA_RTOL * max(factor.sigma[0], 1e-300))
    measure = math.inf if degenerate else math.hypot(r_norm, s_norm) / omega_hat
    return WedinReport(
        r_norm=r_norm,
        s_norm=s_norm,
        omega_hat=omega_hat,
        measure=measure,
        ceiling=math.sqrt(2.0 * k),
        degenerate=degenerate,
    )
