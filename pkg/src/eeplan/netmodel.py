"""Auxiliary functions of the network model and their derivatives.

Everything here works in linear SI units: Watts, Hz, points per square metre
and linear power ratios. Densities enter mostly through the load ratio
``x = lambda_mt / lambda_bs``, the mean number of users per base station.

Most functions accept numpy arrays as well as floats and return a float when
every argument is scalar.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import specfun
from .errors import DomainError

DEFAULT_ALPHA = 3.5
# Tail mass left out when the cell-load distribution is summed.
PMF_TAIL_MASS = 1e-10


class LoadModel(enum.Enum):
    """How a loaded base station shares its resources.

    LM1 serves one randomly chosen user with the whole band; LM2 splits the
    band evenly and pays circuit power per served user.
    """

    LM1 = 1
    LM2 = 2


@dataclass(frozen=True)
class SystemParams:
    beta: float
    kappa: float
    bandwidth_hz: float
    n0_w_per_hz: float
    gamma_d: float
    gamma_a: float
    lambda_mt: float
    alpha: float = DEFAULT_ALPHA
    _short: specfun.Shorthands = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.beta > 2.0:
            raise DomainError(f"beta = {self.beta} must exceed 2")
        for name in ("kappa", "bandwidth_hz", "n0_w_per_hz", "lambda_mt"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be strictly positive")
        if not (self.gamma_d >= 0.0 and self.gamma_a >= 0.0):
            raise DomainError("thresholds gamma_d and gamma_a must be >= 0")
        if not self.alpha > 1.0:
            raise DomainError(f"alpha = {self.alpha} must exceed 1")
        short = specfun.shorthands(
            self.beta, self.kappa, self.bandwidth_hz, self.n0_w_per_hz,
            self.gamma_d, self.gamma_a,
        )
        object.__setattr__(self, "_short", short)

    @property
    def upsilon(self) -> float:
        return self._short.upsilon

    @property
    def eta(self) -> float:
        """Transmit power needed to reach the SNR threshold at unit distance."""
        return self._short.eta

    @property
    def sigma_n2(self) -> float:
        return self._short.sigma_n2

    @property
    def delta(self) -> float:
        return 2.0 / self.beta


@dataclass(frozen=True)
class PowerProfile:
    """Per-BS transmit, circuit and idle power in Watts."""

    p_tx_w: float
    p_circ_w: float
    p_idle_w: float

    def __post_init__(self):
        if self.p_tx_w < 0:
            raise DomainError("p_tx_w must be >= 0")
        if not 0.0 <= self.p_idle_w <= self.p_circ_w:
            raise DomainError(
                f"need 0 <= p_idle ({self.p_idle_w}) <= p_circ ({self.p_circ_w})"
            )

    @property
    def delta_p_w(self) -> float:
        return self.p_circ_w - self.p_idle_w


def _ret(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def kappa_from_carrier(fc_hz: float) -> float:
    """Free-space path-loss constant (4 pi f_c / c)^2 with c = 3e8 m/s."""
    return (4.0 * math.pi * fc_hz / 3e8) ** 2


def _tail_pow(x, alpha, power):
    """(1 + x/alpha)^(-power) evaluated as exp(-power * log1p(x/alpha))."""
    return np.exp(-power * np.log1p(x / alpha))


def aux_L(x, alpha: float = DEFAULT_ALPHA):
    """Probability that a BS has at least one user, at load ratio ``x``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("load ratio must be >= 0")
    with np.errstate(over="ignore"):
        out = np.where(np.isinf(x), 1.0, -np.expm1(-alpha * np.log1p(x / alpha)))
    return _ret(out)


def aux_M(x, load: LoadModel, alpha: float = DEFAULT_ALPHA):
    """Extra circuit-power factor: 0 for LM1, ``x - L(x)`` for LM2."""
    L = aux_L(x, alpha)
    if load is LoadModel.LM1:
        return _ret(np.zeros_like(np.asarray(L)))
    x = np.asarray(x, dtype=float)
    # x - L = (x - s) + (s - (1 - e^-s)) with s = alpha log1p(x / alpha); both
    # brackets are O(x^2), so small ratios go through their series.
    with np.errstate(invalid="ignore"):
        y = x / alpha
        s = alpha * np.log1p(y)
        k = np.arange(2, 12).reshape((-1,) + (1,) * x.ndim)
        small = np.abs(y) < 1e-2
        ys = np.where(small, y, 0.0)
        ss = np.where(small, s, 0.0)
        x_minus_s = np.where(
            small,
            alpha * np.sum((-1.0) ** k * ys ** k / k, axis=0),
            x - s,
        )
        fact = np.cumprod(np.arange(1.0, 12.0))[1:].reshape(k.shape)
        s_minus_l = np.where(small, np.sum((-ss) ** k / fact, axis=0), s + np.expm1(-s))
        out = np.where(np.isinf(x), np.inf, x_minus_s + s_minus_l)
    return _ret(np.maximum(out, 0.0))


def tx_idle_probabilities(ratio, alpha: float = DEFAULT_ALPHA):
    """(P[transmitting], P[idle]) for a BS at load ratio ``ratio``."""
    L = aux_L(ratio, alpha)
    return L, _ret(1.0 - np.asarray(L))


def _ratio(lambda_bs, lambda_mt):
    lam = np.asarray(lambda_bs, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(lam > 0, lambda_mt / np.where(lam > 0, lam, 1.0), np.inf)


def _exponent(lambda_bs, p_tx_w, params: SystemParams):
    """pi lambda (P/eta)^delta (1 + Upsilon L): the argument of the exponential."""
    lam = np.asarray(lambda_bs, dtype=float)
    p = np.asarray(p_tx_w, dtype=float)
    L = np.asarray(aux_L(_ratio(lam, params.lambda_mt), params.alpha))
    with np.errstate(over="ignore", invalid="ignore"):
        return math.pi * lam * (p / params.eta) ** params.delta * (1.0 + params.upsilon * L)


def aux_Q(lambda_bs, p_tx_w, params: SystemParams):
    """Probability that the serving BS clears the SNR association threshold.

    Equals 1 for a zero SNR threshold, and 0 at zero power or zero density.
    """
    lam = np.asarray(lambda_bs, dtype=float)
    p = np.asarray(p_tx_w, dtype=float)
    if np.any(lam < 0) or np.any(p < 0):
        raise DomainError("lambda_bs and p_tx_w must be >= 0")
    if params.gamma_a == 0.0:
        return _ret(np.ones(np.broadcast(lam, p).shape))
    t = _exponent(lam, p, params)
    with np.errstate(invalid="ignore"):
        out = np.where((lam == 0) | (p == 0), 0.0, -np.expm1(-t))
    return _ret(out)


def aux_Q_dP(lambda_bs, p_tx_w, params: SystemParams):
    """First and second derivatives of ``aux_Q`` with respect to power."""
    p = np.asarray(p_tx_w, dtype=float)
    lam = np.asarray(lambda_bs, dtype=float)
    if params.gamma_a == 0.0:
        zero = _ret(np.zeros(np.broadcast(lam, p).shape))
        return zero, zero
    if np.any(p <= 0):
        raise DomainError("power derivatives are singular at p_tx = 0")
    d = params.delta
    t = _exponent(lam, p, params)
    e = np.exp(-t)
    first = d * t * e / p
    second = d * t * e / (p * p) * ((d - 1.0) - d * t)
    return _ret(first), _ret(second)


def aux_L_dlambda(lambda_bs, lambda_mt: float, alpha: float = DEFAULT_ALPHA):
    """First and second derivatives of L(lambda_mt / lambda_bs) in lambda_bs."""
    lam = np.asarray(lambda_bs, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("lambda_bs must be > 0")
    x = lambda_mt / lam
    a1 = _tail_pow(x, alpha, alpha + 1.0)
    first = -(x / lam) * a1
    second = (x / (lam * lam)) * a1 * (2.0 - (1.0 + alpha) / alpha * x / (1.0 + x / alpha))
    return _ret(first), _ret(second)


def aux_M_dlambda(lambda_bs, lambda_mt: float, alpha: float, load: LoadModel):
    """First and second derivatives of M(lambda_mt / lambda_bs) in lambda_bs."""
    lam = np.asarray(lambda_bs, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("lambda_bs must be > 0")
    if load is LoadModel.LM1:
        zero = _ret(np.zeros_like(lam))
        return zero, zero
    x = lambda_mt / lam
    one_minus = -np.expm1(-(alpha + 1.0) * np.log1p(x / alpha))
    first = -(x / lam) * one_minus
    second = (2.0 * x / (lam * lam)) * one_minus + (1.0 + alpha) / alpha * (
        x * x / (lam * lam)
    ) * _tail_pow(x, alpha, alpha + 2.0)
    return _ret(first), _ret(second)


def aux_Q_dlambda(lambda_bs, p_tx_w, params: SystemParams):
    """Derivative of ``aux_Q`` with respect to the BS density."""
    lam = np.asarray(lambda_bs, dtype=float)
    p = np.asarray(p_tx_w, dtype=float)
    if params.gamma_a == 0.0:
        return _ret(np.zeros(np.broadcast(lam, p).shape))
    if np.any(lam <= 0) or np.any(p <= 0):
        raise DomainError("lambda_bs and p_tx_w must be > 0")
    x = params.lambda_mt / lam
    L = np.asarray(aux_L(x, params.alpha))
    dL, _ = aux_L_dlambda(lam, params.lambda_mt, params.alpha)
    c = math.pi * (p / params.eta) ** params.delta
    u = params.upsilon
    return _ret(c * (1.0 + u * L + u * lam * dL) * np.exp(-lam * c * (1.0 + u * L)))


def _q_over_dq_power(lambda_bs, p_tx_w, params):
    # Q / Q' = P expm1(t) / (delta t), finite for all t > 0.
    t = _exponent(lambda_bs, p_tx_w, params)
    with np.errstate(over="ignore"):
        return p_tx_w * np.expm1(t) / (params.delta * t)


def stationary_gap_power(p_tx_w, lambda_bs, params: SystemParams,
                         power: PowerProfile, load: LoadModel):
    """Signed gap of the first-order condition in transmit power, in Watts.

    Positive where energy efficiency still grows with power, negative where it
    falls, zero at the unique stationary point. With a zero SNR threshold the
    efficiency only decreases in power and the gap is ``-inf``.
    """
    p = np.asarray(p_tx_w, dtype=float)
    lam = np.asarray(lambda_bs, dtype=float)
    if np.any(p <= 0):
        raise DomainError("p_tx_w must be > 0")
    if params.gamma_a == 0.0:
        return _ret(np.full(np.broadcast(p, lam).shape, -np.inf))
    x = _ratio(lam, params.lambda_mt)
    L = np.asarray(aux_L(x, params.alpha))
    M = np.asarray(aux_M(x, load, params.alpha))
    ratio = _q_over_dq_power(lam, p, params)
    s_p = L * (ratio - (p + power.delta_p_w)) - power.p_circ_w * M
    return _ret(power.p_idle_w - s_p)


def stationary_gap_density(lambda_bs, p_tx_w, params: SystemParams,
                           power: PowerProfile, load: LoadModel):
    """Signed gap of the first-order condition in BS density, in Watts.

    Shares its sign with the derivative of energy efficiency in density.
    """
    lam = np.asarray(lambda_bs, dtype=float)
    p = np.asarray(p_tx_w, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("lambda_bs must be > 0")
    a = params.alpha
    u = params.upsilon
    x = params.lambda_mt / lam
    L = np.asarray(aux_L(x, a))
    M = np.asarray(aux_M(x, load, a))
    dL, _ = aux_L_dlambda(lam, params.lambda_mt, a)
    dM, _ = aux_M_dlambda(lam, params.lambda_mt, a, load)
    load_term = L * (p + power.delta_p_w)
    s_d = (
        power.p_circ_w / dL * (L * dM - dL * M)
        + u * L * load_term
        + u * power.p_circ_w * L * L * dM / dL
    )
    if params.gamma_a > 0.0:
        if np.any(p <= 0):
            raise DomainError("p_tx_w must be > 0")
        # Q'/Q = c g / expm1(t), with t the exponent and c g the prefactor of Q'.
        c = math.pi * (p / params.eta) ** params.delta
        g = 1.0 + u * L + u * lam * dL
        t = lam * c * (1.0 + u * L)
        with np.errstate(over="ignore"):
            dq_over_q = c * g / np.expm1(t)
        s_d = s_d - (L * dq_over_q / dL) * (1.0 + u * L) * (
            load_term + power.p_idle_w + power.p_circ_w * M
        )
    return _ret(s_d - power.p_idle_w)


def pmf_cell_load(u, ratio, alpha: float = DEFAULT_ALPHA):
    """Probability that ``u`` other users share the typical user's cell.

    Negative-binomial form with shape alpha + 1, evaluated in log space.
    """
    u_arr = np.asarray(u, dtype=float)
    r = float(ratio)
    if np.any(u_arr < 0) or np.any(u_arr != np.floor(u_arr)):
        raise DomainError("u must be a non-negative integer")
    if r < 0:
        raise DomainError("ratio must be >= 0")
    if r == 0.0:
        return _ret(np.where(u_arr == 0, 1.0, 0.0))
    shape = alpha + 1.0
    log_p = (
        specfun.log_gamma(u_arr + shape)
        - specfun.log_gamma(shape)
        - specfun.log_gamma(u_arr + 1.0)
        + shape * math.log(alpha / (alpha + r))
        + u_arr * math.log(r / (alpha + r))
    )
    return _ret(np.exp(log_p))


def pmf_support(ratio, alpha: float = DEFAULT_ALPHA, tail_mass: float = PMF_TAIL_MASS) -> int:
    """Smallest count U such that the mass above U is below ``tail_mass``.

    Past the mode the term ratio (u + alpha + 1) q / (u + 1), q = r / (alpha + r),
    falls toward q, so the tail beyond u is at most pmf(u + 1) / (1 - ratio).
    The bound avoids the cancellation in 1 - cumulative sum.
    """
    if ratio == 0:
        return 0
    q = ratio / (alpha + ratio)
    start = 0
    block = max(64, int(8 * ratio) + 64)
    while True:
        u = np.arange(start, start + block, dtype=float)
        nxt = pmf_cell_load(u + 1.0, ratio, alpha)
        rho = (u + alpha + 2.0) * q / (u + 2.0)
        with np.errstate(divide="ignore"):
            tail = np.where(rho < 1.0, nxt / (1.0 - rho), np.inf)
        hit = np.nonzero(tail <= tail_mass)[0]
        if hit.size:
            return start + int(hit[0])
        start += block


def expected_inverse_load(ratio, alpha: float = DEFAULT_ALPHA,
                          tail_mass: float = PMF_TAIL_MASS) -> float:
    """E[1 / (N + 1)] under the cell-load distribution, by truncated summation."""
    if ratio == 0:
        return 1.0
    u = np.arange(pmf_support(ratio, alpha, tail_mass) + 1)
    return math.fsum(pmf_cell_load(u, ratio, alpha) / (u + 1.0))
