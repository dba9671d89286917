"""Subset kernels evaluated on m x k column submatrices.

A kernel is a column-permutation-invariant function of a submatrix.  Four
variants are supported:

- ``ric``:              max(sigma2_max - 1, 1 - sigma2_min), the restricted-
                        isometry kernel (its max over subsets is the RIC for
                        unit-norm columns)
- ``sigma_max_sq``:     largest squared singular value
- ``neg_sigma_min_sq``: negated smallest squared singular value, so that
                        exceedance {value > t} at t = -a is the event
                        {sigma2_min < a}
- ``coherence``:        normalized absolute inner product of two columns
                        (k = 2 only)

Indicators are strict: 1{value > a}, ties resolved as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VARIANTS = ("ric", "sigma_max_sq", "neg_sigma_min_sq", "coherence")


@dataclass(frozen=True)
class KernelId:
    """Which subset function is evaluated."""

    variant: str

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown kernel variant {self.variant!r}; expected one of {VARIANTS}")

    @property
    def needs_pair(self):
        return self.variant == "coherence"


RIC = KernelId("ric")
SIGMA_MAX_SQ = KernelId("sigma_max_sq")
NEG_SIGMA_MIN_SQ = KernelId("neg_sigma_min_sq")
COHERENCE = KernelId("coherence")


def _checked(a_sub):
    a = np.asarray(a_sub, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("submatrix must be a nonempty 2-d array")
    if not np.all(np.isfinite(a)):
        raise ValueError("submatrix contains non-finite entries")
    return a


def gram_extremes(grams: np.ndarray):
    """(min, max) eigenvalues of a stack of symmetric PSD Gram matrices.

    Uses the closed-form 2x2 solution when k <= 2, symmetric eigendecomposition
    otherwise.  Round-off below zero is clamped at 0.
    """
    g = np.asarray(grams, dtype=np.float64)
    k = g.shape[-1]
    if k == 1:
        v = np.maximum(g[..., 0, 0], 0.0)
        return v, v
    if k == 2:
        gii, gjj, gij = g[..., 0, 0], g[..., 1, 1], g[..., 0, 1]
        half_tr = 0.5 * (gii + gjj)
        half_disc = 0.5 * np.sqrt((gii - gjj) ** 2 + 4.0 * gij**2)
        return np.maximum(half_tr - half_disc, 0.0), np.maximum(half_tr + half_disc, 0.0)
    w = np.linalg.eigvalsh(g)
    return np.maximum(w[..., 0], 0.0), np.maximum(w[..., -1], 0.0)


def squared_singular_extremes(a_sub) -> tuple[float, float]:
    """(sigma2_min, sigma2_max) of a submatrix.

    Works on the smaller of the two Gram matrices; for k > m the minimum
    squared singular value is 0 by rank deficiency.
    """
    a = _checked(a_sub)
    m, k = a.shape
    if k <= m:
        smin, smax = gram_extremes(a.T @ a)
        return float(smin), float(smax)
    _, smax = gram_extremes(a @ a.T)
    return 0.0, float(smax)


def ric_kernel(a_sub) -> float:
    """Restricted-isometry kernel max(sigma2_max - 1, 1 - sigma2_min); always >= 0."""
    smin, smax = squared_singular_extremes(a_sub)
    return max(smax - 1.0, 1.0 - smin)


def coherence_kernel(a_sub) -> float:
    """|a1.a2| / (||a1|| ||a2||) for an m x 2 submatrix; in [0, 1] by Cauchy-Schwarz."""
    a = _checked(a_sub)
    if a.shape[1] != 2:
        raise ValueError("coherence kernel requires exactly 2 columns")
    n1 = float(np.linalg.norm(a[:, 0]))
    n2 = float(np.linalg.norm(a[:, 1]))
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("degenerate input: coherence kernel needs nonzero columns")
    return min(abs(float(a[:, 0] @ a[:, 1])) / (n1 * n2), 1.0)


def kernel_value(kernel: KernelId, a_sub) -> float:
    """Evaluate one kernel variant on one submatrix."""
    if kernel.variant == "coherence":
        return coherence_kernel(a_sub)
    if kernel.variant == "ric":
        return ric_kernel(a_sub)
    smin, smax = squared_singular_extremes(a_sub)
    if kernel.variant == "sigma_max_sq":
        return smax
    return -smin


def indicator(kernel: KernelId, a_sub, a: float) -> int:
    """Strict exceedance indicator 1{kernel_value(a_sub) > a}.

    For ``neg_sigma_min_sq`` the kernel value is -sigma2_min, so passing the
    negated threshold a = -a0 tests the event {sigma2_min < a0}.
    """
    return int(kernel_value(kernel, a_sub) > a)
