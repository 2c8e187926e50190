"""EE-optimal transmit power and BS density.

Energy efficiency is unimodal in each variable separately, so each scalar
problem reduces to finding the single sign change of a stationary gap. The
joint problem alternates the two scalar solves until EE stops improving.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import BracketFailure, DomainError, MaxIterations
from .metrics import energy_efficiency
from .netmodel import (
    LoadModel,
    PowerProfile,
    SystemParams,
    stationary_gap_density,
    stationary_gap_power,
)

BRACKET_DECADES = 6
_MAX_ROOT_STEPS = 200


class Clamp(enum.Enum):
    Interior = "interior"
    AtPMin = "p_min"
    AtPMax = "p_max"
    AtLambdaMin = "lambda_min"
    AtLambdaMax = "lambda_max"
    MultipleClamps = "multiple"


class Problem(enum.Enum):
    PowerOnly = "power"
    DensityOnly = "density"
    Joint = "joint"


@dataclass(frozen=True)
class OptimizationBounds:
    p_min_w: float
    p_max_w: float
    lambda_min: float
    lambda_max: float
    root_tol: float = 1e-10
    alt_eps: float = 1e-6
    max_alt_iters: int = 100
    # Optional extra stop rule: relative move of both P and lambda in one round.
    step_tol: float | None = None

    def __post_init__(self):
        if not 0.0 < self.p_min_w < self.p_max_w:
            raise DomainError("need 0 < p_min_w < p_max_w")
        if not 0.0 < self.lambda_min < self.lambda_max:
            raise DomainError("need 0 < lambda_min < lambda_max")
        if not (self.root_tol > 0 and self.alt_eps > 0 and self.max_alt_iters >= 1):
            raise DomainError("tolerances must be positive and max_alt_iters >= 1")
        if self.step_tol is not None and not self.step_tol > 0:
            raise DomainError("step_tol must be positive when given")


@dataclass(frozen=True)
class OptimumReport:
    p_opt_w: float
    lambda_opt: float
    ee_opt: float
    iterations: int
    clamped: Clamp
    ee_trace: tuple[float, ...] = field(default_factory=tuple)
    # Stationary point before clamping, for single-variable solves.
    root: float | None = None


def _solve_decreasing_sign(gap: Callable[[float], float], lo: float, hi: float,
                           rel_tol: float) -> tuple[float, int]:
    """Root of ``gap`` on [lo, hi] given gap(lo) > 0 > gap(hi).

    Works in log coordinates. Each step tries a Newton update built from a
    finite-difference slope and falls back to bisection whenever that update
    leaves the bracket or fails to shrink it enough.
    """
    a, b = math.log(lo), math.log(hi)
    y = 0.5 * (a + b)
    last_step = b - a
    steps = 0
    while steps < _MAX_ROOT_STEPS:
        steps += 1
        g = gap(math.exp(y))
        if g == 0.0:
            return math.exp(y), steps
        if g > 0:
            a = y
        else:
            b = y
        if b - a <= rel_tol:
            break
        h = 1e-6 * min(b - a, 1.0)
        slope = (gap(math.exp(y + h)) - gap(math.exp(y - h))) / (2.0 * h)
        step = g / slope if math.isfinite(slope) and slope != 0.0 else math.nan
        if math.isfinite(step) and a < y - step < b and abs(step) <= 0.5 * last_step:
            last_step = abs(step)
            # Once Newton is within tolerance, overshoot slightly so the next
            # evaluation lands on the far side and closes the bracket.
            if abs(step) < 0.5 * rel_tol:
                step = math.copysign(0.5 * rel_tol, step)
            y = min(max(y - step, a + 0.25 * rel_tol), b - 0.25 * rel_tol)
        else:
            last_step = b - a
            y = 0.5 * (a + b)
    return math.exp(0.5 * (a + b)), steps


def _bracket(gap: Callable[[float], float], lo: float, hi: float) -> tuple[float, float]:
    """Expand [lo, hi] by decades until gap(lo) > 0 > gap(hi)."""
    lo_limit = lo * 10.0 ** (-BRACKET_DECADES)
    hi_limit = hi * 10.0**BRACKET_DECADES
    glo = gap(lo)
    while not glo > 0:
        if lo <= lo_limit * (1 + 1e-12):
            raise BracketFailure(f"gap not positive down to {lo:.3e}")
        hi, lo = lo, max(lo / 10.0, lo_limit)
        glo = gap(lo)
    ghi = gap(hi)
    while not ghi < 0:
        if hi >= hi_limit * (1 - 1e-12):
            raise BracketFailure(f"gap not negative up to {hi:.3e}")
        lo, hi = hi, min(hi * 10.0, hi_limit)
        ghi = gap(hi)
    return lo, hi


def _clamp(value: float, lower: float, upper: float, at_lower: Clamp,
           at_upper: Clamp) -> tuple[float, Clamp]:
    if value <= lower:
        return lower, at_lower
    if value >= upper:
        return upper, at_upper
    return value, Clamp.Interior


def optimal_power(lambda_bs: float, params: SystemParams, power: PowerProfile,
                  load: LoadModel, bounds: OptimizationBounds) -> OptimumReport:
    """EE-maximizing transmit power at a fixed BS density, clamped to bounds."""
    if params.gamma_a == 0.0:
        # Without an SNR threshold EE only falls with power.
        p = bounds.p_min_w
        ee = energy_efficiency(p, lambda_bs, params, power, load)
        return OptimumReport(p, lambda_bs, ee, 0, Clamp.AtPMin, (ee,), None)

    def gap(p):
        return stationary_gap_power(p, lambda_bs, params, power, load)

    lo, hi = _bracket(gap, bounds.p_min_w, bounds.p_max_w)
    root, steps = _solve_decreasing_sign(gap, lo, hi, bounds.root_tol)
    p, where = _clamp(root, bounds.p_min_w, bounds.p_max_w, Clamp.AtPMin, Clamp.AtPMax)
    ee = energy_efficiency(p, lambda_bs, params, power, load)
    return OptimumReport(p, lambda_bs, ee, steps, where, (ee,), root)


def optimal_density(p_tx_w: float, params: SystemParams, power: PowerProfile,
                    load: LoadModel, bounds: OptimizationBounds) -> OptimumReport:
    """EE-maximizing BS density at a fixed transmit power, clamped to bounds."""

    def gap(lam):
        return stationary_gap_density(lam, p_tx_w, params, power, load)

    lo, hi = _bracket(gap, bounds.lambda_min, bounds.lambda_max)
    root, steps = _solve_decreasing_sign(gap, lo, hi, bounds.root_tol)
    lam, where = _clamp(root, bounds.lambda_min, bounds.lambda_max,
                        Clamp.AtLambdaMin, Clamp.AtLambdaMax)
    ee = energy_efficiency(p_tx_w, lam, params, power, load)
    return OptimumReport(p_tx_w, lam, ee, steps, where, (ee,), root)


def _combine(a: Clamp, b: Clamp) -> Clamp:
    if a is Clamp.Interior:
        return b
    if b is Clamp.Interior:
        return a
    return Clamp.MultipleClamps


def joint_optimize(params: SystemParams, power: PowerProfile, load: LoadModel,
                   bounds: OptimizationBounds, initial_lambda: float) -> OptimumReport:
    """Alternate power and density solves until the relative EE change is small."""
    if not bounds.lambda_min <= initial_lambda <= bounds.lambda_max:
        raise DomainError("initial_lambda must lie inside the density bounds")
    lam = initial_lambda
    p_prev = math.nan
    value = 0.0
    trace: list[float] = []
    best = None
    for iteration in range(1, bounds.max_alt_iters + 1):
        previous = value
        lam_prev = lam
        by_power = optimal_power(lam, params, power, load, bounds)
        by_density = optimal_density(by_power.p_opt_w, params, power, load, bounds)
        lam = by_density.lambda_opt
        moved = max(abs(by_power.p_opt_w / p_prev - 1.0), abs(lam / lam_prev - 1.0))
        p_prev = by_power.p_opt_w
        value = by_density.ee_opt
        trace.append(value)
        best = OptimumReport(
            p_opt_w=by_power.p_opt_w,
            lambda_opt=lam,
            ee_opt=value,
            iterations=iteration,
            clamped=_combine(by_power.clamped, by_density.clamped),
            ee_trace=tuple(trace),
        )
        settled = bounds.step_tol is None or moved <= bounds.step_tol
        if value > 0 and abs(value - previous) / value <= bounds.alt_eps and settled:
            return best
    raise MaxIterations(
        f"no convergence to {bounds.alt_eps:g} in {bounds.max_alt_iters} rounds", best
    )


def _sign(value: float, scale: float, tol: float) -> int:
    if abs(value) <= tol * scale:
        return 0
    return 1 if value > 0 else -1


def shift_sign_power(p_opt_at_old_lambda: float, new_lambda: float, params: SystemParams,
                     power: PowerProfile, load: LoadModel, tol: float = 1e-7) -> int:
    """Direction the power optimum moves when the density changes.

    +1: the optimum at ``new_lambda`` lies above the old optimum, -1: below,
    0: unchanged (gap within ``tol`` relative to the circuit-plus-idle scale).
    """
    gap = stationary_gap_power(p_opt_at_old_lambda, new_lambda, params, power, load)
    scale = power.p_circ_w + power.p_idle_w + p_opt_at_old_lambda
    return _sign(gap, scale, tol)


def shift_sign_density(lambda_opt_at_old_p: float, new_p: float, params: SystemParams,
                       power: PowerProfile, load: LoadModel, tol: float = 1e-7) -> int:
    """Direction the density optimum moves when the transmit power changes."""
    gap = stationary_gap_density(lambda_opt_at_old_p, new_p, params, power, load)
    scale = power.p_circ_w + power.p_idle_w + new_p
    return _sign(gap, scale, tol)


def _log_grid(lo: float, hi: float, n: int) -> np.ndarray:
    if n < 1:
        raise DomainError("grid sizes must be >= 1")
    if n == 1:
        return np.array([lo])
    return np.logspace(math.log10(lo), math.log10(hi), n)


def brute_force_grid(problem: Problem, grid_sizes: int | Sequence[int], params: SystemParams,
                     power: PowerProfile, load: LoadModel, bounds: OptimizationBounds,
                     lambda_bs: float | None = None, p_tx_w: float | None = None
                     ) -> OptimumReport:
    """Exhaustive search of EE on a log-spaced grid spanning the bounds.

    ``PowerOnly`` needs ``lambda_bs`` and ``DensityOnly`` needs ``p_tx_w``;
    ``Joint`` takes a pair of grid sizes (power, density).
    """
    sizes = (grid_sizes,) if isinstance(grid_sizes, int) else tuple(grid_sizes)
    if problem is Problem.Joint:
        n_p, n_l = sizes if len(sizes) == 2 else (sizes[0], sizes[0])
        ps = _log_grid(bounds.p_min_w, bounds.p_max_w, n_p)
        lams = _log_grid(bounds.lambda_min, bounds.lambda_max, n_l)
        ee = energy_efficiency(ps[:, None], lams[None, :], params, power, load)
        i, j = np.unravel_index(int(np.argmax(ee)), np.shape(ee))
        p, lam = float(ps[i]), float(lams[j])
    elif problem is Problem.PowerOnly:
        if lambda_bs is None:
            raise DomainError("PowerOnly search needs lambda_bs")
        ps = _log_grid(bounds.p_min_w, bounds.p_max_w, sizes[0])
        ee = np.atleast_1d(energy_efficiency(ps, lambda_bs, params, power, load))
        p, lam = float(ps[int(np.argmax(ee))]), lambda_bs
    else:
        if p_tx_w is None:
            raise DomainError("DensityOnly search needs p_tx_w")
        lams = _log_grid(bounds.lambda_min, bounds.lambda_max, sizes[0])
        ee = np.atleast_1d(energy_efficiency(p_tx_w, lams, params, power, load))
        p, lam = p_tx_w, float(lams[int(np.argmax(ee))])
    best = float(energy_efficiency(p, lam, params, power, load))
    where = Clamp.Interior
    if problem is not Problem.DensityOnly:
        where = _combine(where, _edge(p, bounds.p_min_w, bounds.p_max_w,
                                      Clamp.AtPMin, Clamp.AtPMax))
    if problem is not Problem.PowerOnly:
        where = _combine(where, _edge(lam, bounds.lambda_min, bounds.lambda_max,
                                      Clamp.AtLambdaMin, Clamp.AtLambdaMax))
    return OptimumReport(p, lam, best, 1, where, (best,))


def _edge(value, lower, upper, at_lower, at_upper):
    if value <= lower:
        return at_lower
    if value >= upper:
        return at_upper
    return Clamp.Interior
