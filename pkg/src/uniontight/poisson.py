"""Poisson approximation of the no-exceedance probability and its error bounds.

For a marginal tail p(a) over C(n, k) subsets, lambda = C(n, k) * p(a) is the
union-bound total and exp(-lambda) approximates Pr{no subset exceeds a}.  The
Stein-Chen approximation error admits three nested closed forms, ordered
eps_full <= eps_mid <= eps_single whenever the joint tails are monotone in the
overlap (q_r <= q_{k-1}):

  eps_full   = (1 - e^-lam) * { p*[C(n,k) - C(n-k,k)]
                                + sum_r C(k,r) C(n-k,k-r) q_r / p }
  eps_mid    = (1 - e^-lam) * p*[C(n,k) - C(n-k,k)]
                                + sum_r C(k,r) C(n-k,k-r) C(n,k) q_r
  eps_single = (1 - e^-lam) * p*[C(n,k) - C(n-k,k)]
                 + 2^k (e(2k-1)/(k-1))^(k-1) (e n/(2k-1))^(2k-1) q_{k-1}

All binomial products are accumulated in the log domain with one final
exponentiation, saturating at the LARGE sentinel instead of overflowing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.special import gammaln, logsumexp

LARGE = 1e300           # saturation sentinel for exponentiated log-domain values
_LOG_LARGE = math.log(LARGE)


def _sat_exp(log_value):
    if log_value >= _LOG_LARGE:
        return LARGE
    return math.exp(log_value)


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k) via log-gamma; exact to ~1e-10 relative for n up to 1e4."""
    if k < 0 or n < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def lambda_n(n: int, k: int, p: float) -> float:
    """Union-bound total C(n, k) * p, computed in the log domain."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if p == 0.0:
        return 0.0
    return _sat_exp(log_binomial(n, k) + math.log(p))


def poisson_zero_approx(lam: float) -> float:
    """exp(-lambda), the Poisson approximation of the no-exceedance probability."""
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    return math.exp(-lam) if lam < math.inf else 0.0


def poisson_nonzero_approx(lam: float) -> float:
    """1 - exp(-lambda), the companion approximation of the exceedance probability."""
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    return -math.expm1(-lam) if lam < math.inf else 1.0


def _log_subset_deficit(n, k):
    # ln(C(n,k) - C(n-k,k)): count of size-k subsets meeting a fixed one.
    # The two binomials are nearly equal for k << n, so the difference is
    # taken in exact integer arithmetic instead of log space.
    return math.log(math.comb(n, k) - math.comb(n - k, k))


def _check_pq(p, q):
    if not 0.0 < p <= 1.0:
        raise ValueError(f"marginal tail p must be in (0, 1], got {p}")
    flagged = False
    for r, qr in enumerate(q, start=1):
        if not 0.0 <= qr <= 1.0:
            raise ValueError(f"joint tail q_{r} must be in [0, 1], got {qr}")
        if qr > p:
            flagged = True
    if flagged:
        # statistically impossible but reachable through MC noise; accept
        warnings.warn("joint tail exceeds marginal tail (q_r > p)", stacklevel=3)


def eps_full(n: int, k: int, p: float, q) -> float:
    """Tightest approximation-error bound; q holds q_1..q_{k-1} (empty for k = 1)."""
    q = tuple(q)
    if len(q) != k - 1:
        raise ValueError(f"expected {k - 1} joint tails q_1..q_{k - 1}, got {len(q)}")
    _check_pq(p, q)
    lam = lambda_n(n, k, p)
    logs = [math.log(p) + _log_subset_deficit(n, k)]
    for r, qr in enumerate(q, start=1):
        # C(n-k, k-r) = 0 when k - r > n - k: that overlap cannot occur
        if qr > 0.0 and k - r <= n - k:
            logs.append(
                log_binomial(k, r) + log_binomial(n - k, k - r) + math.log(qr) - math.log(p)
            )
    return min(poisson_nonzero_approx(lam) * _sat_exp(float(logsumexp(logs))), LARGE)


def eps_mid(n: int, k: int, p: float, q) -> float:
    """Intermediate bound with the joint sum pulled out of the (1 - e^-lam) factor."""
    q = tuple(q)
    if len(q) != k - 1:
        raise ValueError(f"expected {k - 1} joint tails q_1..q_{k - 1}, got {len(q)}")
    _check_pq(p, q)
    lam = lambda_n(n, k, p)
    first = poisson_nonzero_approx(lam) * _sat_exp(math.log(p) + _log_subset_deficit(n, k))
    logs = [
        log_binomial(k, r) + log_binomial(n - k, k - r) + log_binomial(n, k) + math.log(qr)
        for r, qr in enumerate(q, start=1)
        if qr > 0.0 and k - r <= n - k
    ]
    second = _sat_exp(float(logsumexp(logs))) if logs else 0.0
    return min(first + second, LARGE)


def eps_single(n: int, k: int, p: float, q_top: float) -> float:
    """Loosest bound, depending on the single top-overlap joint tail q_{k-1}.

    Undefined for k = 1 (the (k-1) exponent degenerates).
    """
    if k < 2:
        raise ValueError("eps_single requires k >= 2")
    _check_pq(p, (q_top,))
    lam = lambda_n(n, k, p)
    first = poisson_nonzero_approx(lam) * _sat_exp(math.log(p) + _log_subset_deficit(n, k))
    if q_top == 0.0:
        return min(first, LARGE)
    log_coeff = (
        k * math.log(2.0)
        + (k - 1) * (1.0 + math.log((2.0 * k - 1.0) / (k - 1.0)))
        + (2 * k - 1) * (1.0 + math.log(n / (2.0 * k - 1.0)))
    )
    return min(first + _sat_exp(log_coeff + math.log(q_top)), LARGE)


def eps_std_err(kind: str, n: int, k: int, p: float, q, p_se: float, q_se) -> float:
    """First-order MC error propagation for one eps bound.

    Returns sqrt((d eps/dp * p_se)^2 + sum_r (d eps/dq_r * q_se_r)^2) with
    partial derivatives taken by central finite differences.  ``q`` and
    ``q_se`` are the q_1..q_{k-1} vectors (for ``kind="single"`` only the last
    entry is used).
    """
    if kind not in ("full", "mid", "single"):
        raise ValueError(f"unknown eps kind {kind!r}")
    q = tuple(q)
    q_se = tuple(q_se)

    def evaluate(pv, qv):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if kind == "full":
                return eps_full(n, k, pv, qv)
            if kind == "mid":
                return eps_mid(n, k, pv, qv)
            return eps_single(n, k, pv, qv[-1])

    def partial(index):
        # index -1 is p, otherwise q[index]
        base = p if index < 0 else q[index]
        h = max(abs(base), 1e-12) * 1e-6
        lo, hi = base - h, base + h
        if index < 0:
            lo = max(lo, 1e-300)
            f_hi, f_lo = evaluate(hi, q), evaluate(lo, q)
        else:
            lo = max(lo, 0.0)
            qs_hi = q[:index] + (hi,) + q[index + 1 :]
            qs_lo = q[:index] + (lo,) + q[index + 1 :]
            f_hi, f_lo = evaluate(p, qs_hi), evaluate(p, qs_lo)
        return (f_hi - f_lo) / (hi - lo)

    var = (partial(-1) * p_se) ** 2
    for idx, se in enumerate(q_se):
        if kind == "single" and idx != len(q) - 1:
            continue
        var += (partial(idx) * se) ** 2
    return math.sqrt(var)


@dataclass(frozen=True)
class PoissonReport:
    """Per-threshold bundle: tails, lambda, e^-lambda and the three error bounds.

    ``eps_*`` fields are None when undefined: all three for p = 0 (the bounds
    require a positive marginal), eps_single for k = 1.
    """

    a: float
    p: float
    q: tuple
    lam: float
    approx_zero: float
    eps_full: float | None
    eps_mid: float | None
    eps_single: float | None


def poisson_report(n: int, k: int, a: float, p: float, q) -> PoissonReport:
    """Assemble the Poisson approximation bundle for one threshold."""
    q = tuple(q)
    lam = lambda_n(n, k, p)
    if p == 0.0:
        return PoissonReport(a, p, q, lam, 1.0, None, None, None)
    full = eps_full(n, k, p, q)
    mid = eps_mid(n, k, p, q)
    single = eps_single(n, k, p, q[-1]) if k >= 2 else None
    return PoissonReport(a, p, q, lam, poisson_zero_approx(lam), full, mid, single)
