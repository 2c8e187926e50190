"""Closed-form coverage, spectral efficiency, power consumption and EE."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNetwork, DomainError
from .netmodel import (
    LoadModel,
    PowerProfile,
    SystemParams,
    _ratio,
    _ret,
    aux_L,
    aux_M,
    aux_Q,
)


@dataclass(frozen=True)
class NetworkMetrics:
    coverage: float
    pse_bits_per_sec_m2: float
    p_grid_w_per_m2: float
    ee_bits_per_joule: float


def _rate_per_hz(params: SystemParams) -> float:
    return params.bandwidth_hz * math.log2(1.0 + params.gamma_d)


def coverage_probability(p_tx_w, lambda_bs, params: SystemParams):
    """Coverage of the typical user, given it is the one scheduled."""
    L = np.asarray(aux_L(_ratio(lambda_bs, params.lambda_mt), params.alpha))
    Q = np.asarray(aux_Q(lambda_bs, p_tx_w, params))
    return _ret(Q / (1.0 + params.upsilon * L))


def pse(p_tx_w, lambda_bs, params: SystemParams):
    """Potential spectral efficiency in bit/s/m^2 (same for both load models)."""
    lam = np.asarray(lambda_bs, dtype=float)
    L = np.asarray(aux_L(_ratio(lam, params.lambda_mt), params.alpha))
    Q = np.asarray(aux_Q(lam, p_tx_w, params))
    return _ret(_rate_per_hz(params) * lam * L / (1.0 + params.upsilon * L) * Q)


def pse_baseline(lambda_bs, params: SystemParams):
    """Fully loaded, noise-free spectral efficiency; independent of power."""
    lam = np.asarray(lambda_bs, dtype=float)
    return _ret(_rate_per_hz(params) * lam / (1.0 + params.upsilon))


def power_grid(p_tx_w, lambda_bs, params: SystemParams, power: PowerProfile,
               load: LoadModel):
    """Network power consumption per unit area in W/m^2."""
    lam = np.asarray(lambda_bs, dtype=float)
    p = np.asarray(p_tx_w, dtype=float)
    if np.any(lam < 0) or np.any(p < 0):
        raise DomainError("lambda_bs and p_tx_w must be >= 0")
    L = np.asarray(aux_L(_ratio(lam, params.lambda_mt), params.alpha))
    idle = lam * power.p_idle_w * (1.0 - L)
    if load is LoadModel.LM1:
        out = lam * (p + power.p_circ_w) * L + idle
    else:
        out = lam * p * L + params.lambda_mt * power.p_circ_w * (lam > 0) + idle
    return _ret(out)


def energy_efficiency(p_tx_w, lambda_bs, params: SystemParams, power: PowerProfile,
                      load: LoadModel):
    """Energy efficiency in bit/Joule, the ratio of PSE to grid power.

    Returns 0 in the empty-network limit (zero density). Raises
    DegenerateNetwork when a non-empty network draws no power at all.
    """
    lam = np.asarray(lambda_bs, dtype=float)
    num = np.asarray(pse(p_tx_w, lam, params))
    den = np.asarray(power_grid(p_tx_w, lam, params, power, load))
    if np.any((den == 0) & (lam > 0)):
        raise DegenerateNetwork("grid power is zero; energy efficiency undefined")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(lam > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return _ret(out)


def evaluate(p_tx_w: float, lambda_bs: float, params: SystemParams, power: PowerProfile,
             load: LoadModel) -> NetworkMetrics:
    return NetworkMetrics(
        coverage=coverage_probability(p_tx_w, lambda_bs, params),
        pse_bits_per_sec_m2=pse(p_tx_w, lambda_bs, params),
        p_grid_w_per_m2=power_grid(p_tx_w, lambda_bs, params, power, load),
        ee_bits_per_joule=energy_efficiency(p_tx_w, lambda_bs, params, power, load),
    )
