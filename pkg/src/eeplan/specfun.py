"""Special functions behind the closed-form network metrics.

Only the argument pattern the network model needs is supported: real
parameters and a non-positive hypergeometric argument.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError, NonConvergent

SERIES_RTOL = 1e-14
SERIES_MAX_TERMS = 10_000
# Above this SIR threshold the interference factor uses the 1/gamma expansion.
LARGE_GAMMA = 2.0

# Gauss-Kronrod 7/15 abscissae on [-1, 1] (non-negative half) and weights.
_GK_X = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
)
_GK_WK = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
# Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
_GK_WG = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)

# Bernoulli-number coefficients B_2k / (2k (2k-1)) of the Stirling series.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_STIRLING_SHIFT = 10


@dataclass(frozen=True)
class Shorthands:
    """Recurring constants of the closed forms, all in linear SI units."""

    upsilon: float
    eta: float
    sigma_n2: float


def _gk15(f: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fc = f(centre)
    kronrod = _GK_WK[7] * fc
    gauss = _GK_WG[3] * fc
    for i in range(7):
        dx = half * _GK_X[i]
        fsum = f(centre - dx) + f(centre + dx)
        kronrod += _GK_WK[i] * fsum
        if i % 2 == 1:
            gauss += _GK_WG[i // 2] * fsum
    return kronrod * half, abs((kronrod - gauss) * half)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    abs_tol: float = 1e-12,
    max_intervals: int = 5000,
) -> float:
    """Globally adaptive Gauss-Kronrod (7/15) quadrature of ``f`` over [a, b].

    The interval with the largest error estimate is bisected until the summed
    estimate drops below ``abs_tol``.
    """
    if a == b:
        return 0.0
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("integrate needs finite limits; map infinite tails first")
    value, err = _gk15(f, a, b)
    heap = [(-err, a, b, value)]
    total, total_err = value, err
    while total_err > abs_tol:
        if len(heap) >= max_intervals:
            raise NonConvergent(
                f"quadrature error {total_err:.3e} above {abs_tol:.1e} "
                f"after {max_intervals} intervals"
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # Interval can no longer be split in floating point.
            heapq.heappush(heap, (0.0, lo, hi, val))
            break
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total += v1 + v2 - val
        total_err += e1 + e2 + neg_err
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
    # Re-sum to shed the drift of the running update.
    return math.fsum(item[3] for item in heap)


def _series_2f1(a: float, b: float, c: float, w: float) -> float:
    """Defining power series of 2F1(a, b; c; w) for |w| < 1."""
    total = 1.0
    term = 1.0
    for n in range(SERIES_MAX_TERMS):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0)) * w
        term *= ratio
        total += term
        if term == 0.0:
            return total
        # Bound the tail by a geometric series with the current term ratio.
        rho = abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2.0)) * w)
        tail = abs(term) * (rho / (1.0 - rho) if rho < 1.0 else math.inf)
        if tail <= SERIES_RTOL * abs(total):
            return total
    raise NonConvergent(
        f"2F1({a}, {b}; {c}; {w}) series did not converge in {SERIES_MAX_TERMS} terms"
    )


def gauss_2f1_neg(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z <= 0.

    Near the origin the defining series is summed directly. Further out the
    Pfaff transformation maps z to w = z / (z - 1) in [1/3, 1), keeping the
    smaller of a, b so the transformed terms decay fastest.
    """
    if c <= 0 and float(c).is_integer():
        raise DomainError(f"c = {c} is a non-positive integer")
    if z > 0:
        raise DomainError(f"z = {z} must be <= 0")
    if z == 0.0:
        return 1.0
    if z > -0.5:
        return _series_2f1(a, b, c, z)
    keep, other = (a, b) if a <= b else (b, a)
    w = z / (z - 1.0)
    return (1.0 - z) ** (-keep) * _series_2f1(keep, c - other, c, w)


def _check_beta_gamma(beta: float, gamma_d: float) -> None:
    if not beta > 2.0:
        raise DomainError(f"path-loss exponent beta = {beta} must exceed 2")
    if not gamma_d >= 0.0:
        raise DomainError(f"SIR threshold gamma_d = {gamma_d} must be >= 0")


@lru_cache(maxsize=4096)
def upsilon(beta: float, gamma_d: float) -> float:
    """Interference factor 2F1(-2/beta, 1; 1 - 2/beta; -gamma_d) - 1."""
    _check_beta_gamma(beta, gamma_d)
    if gamma_d == 0.0:
        return 0.0
    delta = 2.0 / beta
    if gamma_d <= LARGE_GAMMA:
        value = gauss_2f1_neg(-delta, 1.0, 1.0 - delta, -gamma_d)
    else:
        # Expansion in 1/gamma: the Pfaff series stalls as its argument nears 1.
        # The leading coefficient Gamma(1-d) Gamma(1+d) equals pi d / sin(pi d).
        lead = math.pi * delta / math.sin(math.pi * delta) * gamma_d**delta
        rest = delta / (1.0 + delta) / gamma_d * _series_2f1(
            1.0, 1.0 + delta, 2.0 + delta, -1.0 / gamma_d)
        value = lead + rest
    return max(0.0, value - 1.0)


def upsilon_quad(beta: float, gamma_d: float, abs_tol: float = 1e-12) -> float:
    """Quadrature route to the interference factor.

    Evaluates gamma^(2/beta) * int_s^inf du / (1 + u^(beta/2)) with
    s = gamma^(-2/beta). The tail is mapped onto (0, 1] by u = s * x^(-m);
    choosing m > 2 / (beta - 2) keeps the mapped integrand bounded at x = 0.
    """
    _check_beta_gamma(beta, gamma_d)
    if gamma_d == 0.0:
        return 0.0
    delta = 2.0 / beta
    half_beta = 0.5 * beta
    s = gamma_d ** (-delta)
    m = 2.0 / (beta - 2.0) + 1.0
    s_pow = s**half_beta

    # Mapped integrand s m x^(m b/2 - m - 1) / (x^(m b/2) + s^(b/2)).
    def mapped(x: float) -> float:
        if x == 0.0:
            return 0.0
        lx = math.log(x)
        num = math.exp((m * half_beta - m - 1.0) * lx)
        return s * m * num / (math.exp(m * half_beta * lx) + s_pow)

    scale = gamma_d**delta
    return scale * integrate(mapped, 0.0, 1.0, abs_tol=abs_tol / scale)


def log_gamma(x):
    """Natural log of the gamma function for x > 0 (scalar or array).

    Shifts the argument up by ten and applies the Stirling series, which is
    then accurate to roughly machine precision.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0.0)):
        raise DomainError("log_gamma is defined here only for x > 0")
    shifted = arr + _STIRLING_SHIFT
    inv = 1.0 / shifted
    inv2 = inv * inv
    series = 0.0
    for coeff in reversed(_STIRLING):
        series = series * inv2 + coeff
    result = (shifted - 0.5) * np.log(shifted) - shifted + _HALF_LOG_2PI + series * inv
    correction = np.zeros_like(arr)
    for k in range(_STIRLING_SHIFT):
        correction = correction + np.log(arr + k)
    result = result - correction
    if result.ndim == 0:
        return float(result)
    return result


def shorthands(beta: float, kappa: float, bandwidth_hz: float, n0_w_per_hz: float,
               gamma_d: float, gamma_a: float) -> Shorthands:
    """Bundle the interference factor, noise power and association constant."""
    if bandwidth_hz <= 0 or n0_w_per_hz <= 0:
        raise DomainError("bandwidth and noise density must be positive")
    if gamma_a < 0:
        raise DomainError("SNR threshold must be >= 0")
    sigma_n2 = bandwidth_hz * n0_w_per_hz
    return Shorthands(
        upsilon=upsilon(beta, gamma_d),
        eta=kappa * sigma_n2 * gamma_a,
        sigma_n2=sigma_n2,
    )
