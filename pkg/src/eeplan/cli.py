"""Command-line front end: unit conversion, sweeps, optimization and MC runs.

Configuration is a flat ``key = value`` file in human units (dBm, dB, GHz,
MHz, metres, users per km^2). Every command writes one CSV file whose header
names each column together with its unit.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import mcsim, metrics, optimizer
from .errors import ConfigError
from .netmodel import LoadModel, PowerProfile, SystemParams, kappa_from_carrier

DEFAULT_CONFIG: dict[str, float] = {
    "beta": 3.5,
    "fc_ghz": 2.1,
    "bw_mhz": 20.0,
    "n0_dbm_hz": -174.0,
    "p_circ_dbm": 51.14,
    "p_idle_dbm": 48.75,
    "p_tx_dbm": 43.0,
    "r_cell_m": 250.0,
    "lambda_mt_per_km2": 121.0,
    "gamma_d_db": 5.0,
    "gamma_a_db": 5.0,
    "alpha": 3.5,
}

PRESETS: dict[str, dict[str, float]] = {
    "reference": {},
    # Steep path loss with sparse users: power optimum moves non-monotonically.
    "steep-pathloss": {"beta": 6.5, "lambda_mt_per_km2": 21.0},
}

COMMANDS = (
    "eval",
    "sweep-power",
    "sweep-density",
    "sweep-mt-density",
    "sweep-threshold",
    "optimize",
    "tradeoff",
    "mc-validate",
    "convergence-study",
)

# Default sweep ranges per command: (start, stop, points, log spacing).
DEFAULT_GRIDS = {
    "sweep-power": (-20.0, 60.0, 81, False),
    "sweep-density": (10.0, 2000.0, 100, True),
    "sweep-mt-density": (10.0, 200.0, 40, True),
    "sweep-threshold": (-10.0, 20.0, 31, False),
    "tradeoff": (-10.0, 30.0, 41, False),
    "mc-validate": (23.0, 53.0, 4, False),
}

DEFAULT_EPS_LIST = (1e-8, 1e-6, 1e-4, 1e-2)


def dbm_to_w(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def w_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0 if watts > 0 else -math.inf


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0 else -math.inf


def radius_to_density(radius_m: float) -> float:
    """Points per m^2 whose mean Voronoi cell has the area of a disc of this radius."""
    return 1.0 / (math.pi * radius_m * radius_m)


def density_to_radius(density: float) -> float:
    return 1.0 / math.sqrt(math.pi * density)


@dataclass(frozen=True)
class ExperimentSpec:
    command: str
    config: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_CONFIG))
    load: LoadModel | None = None
    p_min_dbm: float = -20.0
    p_max_dbm: float = 60.0
    r_cell_min_m: float = 10.0
    r_cell_max_m: float = 2000.0
    grid: tuple[float, float, int, bool] | None = None
    out: str | None = None
    seed: int = 0
    mc_realizations: int = 20_000
    eps: float = 1e-6
    eps_list: tuple[float, ...] = DEFAULT_EPS_LIST
    trials: int = 1000
    mode: str = "joint"

    @property
    def loads(self) -> tuple[LoadModel, ...]:
        return (self.load,) if self.load else (LoadModel.LM1, LoadModel.LM2)


@dataclass(frozen=True)
class Converted:
    params: SystemParams
    power: PowerProfile
    lambda_bs: float
    bounds: optimizer.OptimizationBounds
    grid: np.ndarray | None


def parse_config_text(text: str, source: str = "<config>") -> dict[str, float]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = _parse_value(key, value, f"{source}:{lineno}")
    return values


def _parse_value(key: str, value: str, where: str) -> float:
    if key not in DEFAULT_CONFIG:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{where}: {key} must be a number, got {value!r}") from None


def _grid(start: float, stop: float, points: int, log: bool) -> np.ndarray:
    if points < 1:
        raise ConfigError("grid: points must be >= 1")
    if log:
        if start <= 0 or stop <= 0:
            raise ConfigError("grid: log-spaced grids need positive end points")
        return np.logspace(math.log10(start), math.log10(stop), points)
    return np.linspace(start, stop, points)


def convert_units(spec: ExperimentSpec) -> Converted:
    """Turn the human-unit spec into SI parameters, bounds and sweep grid."""
    cfg = spec.config
    for key in DEFAULT_CONFIG:
        if key not in cfg:
            raise ConfigError(f"{key}: missing")
    try:
        params = SystemParams(
            beta=cfg["beta"],
            kappa=kappa_from_carrier(cfg["fc_ghz"] * 1e9),
            bandwidth_hz=cfg["bw_mhz"] * 1e6,
            n0_w_per_hz=dbm_to_w(cfg["n0_dbm_hz"]),
            gamma_d=db_to_linear(cfg["gamma_d_db"]),
            gamma_a=db_to_linear(cfg["gamma_a_db"]),
            lambda_mt=cfg["lambda_mt_per_km2"] * 1e-6,
            alpha=cfg["alpha"],
        )
        power = PowerProfile(
            p_tx_w=dbm_to_w(cfg["p_tx_dbm"]),
            p_circ_w=dbm_to_w(cfg["p_circ_dbm"]),
            p_idle_w=dbm_to_w(cfg["p_idle_dbm"]),
        )
        if cfg["r_cell_m"] <= 0:
            raise ConfigError("r_cell_m: must be positive")
        bounds = optimizer.OptimizationBounds(
            p_min_w=dbm_to_w(spec.p_min_dbm),
            p_max_w=dbm_to_w(spec.p_max_dbm),
            lambda_min=radius_to_density(spec.r_cell_max_m),
            lambda_max=radius_to_density(spec.r_cell_min_m),
            alt_eps=spec.eps,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    grid_def = spec.grid or DEFAULT_GRIDS.get(spec.command)
    grid = _grid(*grid_def) if grid_def else None
    return Converted(params, power, radius_to_density(cfg["r_cell_m"]), bounds, grid)


def to_human(params: SystemParams, power: PowerProfile, lambda_bs: float) -> dict[str, float]:
    """Inverse of ``convert_units`` for the configuration keys."""
    fc_hz = math.sqrt(params.kappa) * 3e8 / (4.0 * math.pi)
    return {
        "beta": params.beta,
        "fc_ghz": fc_hz / 1e9,
        "bw_mhz": params.bandwidth_hz / 1e6,
        "n0_dbm_hz": w_to_dbm(params.n0_w_per_hz),
        "p_circ_dbm": w_to_dbm(power.p_circ_w),
        "p_idle_dbm": w_to_dbm(power.p_idle_w),
        "p_tx_dbm": w_to_dbm(power.p_tx_w),
        "r_cell_m": density_to_radius(lambda_bs),
        "lambda_mt_per_km2": params.lambda_mt * 1e6,
        "gamma_d_db": linear_to_db(params.gamma_d),
        "gamma_a_db": linear_to_db(params.gamma_a),
        "alpha": params.alpha,
    }


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


class Table:
    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns) + ["error"]
        self.rows: list[list[str]] = []

    def add(self, values: dict, error: str = "") -> None:
        self.rows.append([_fmt(values.get(c, "")) for c in self.columns[:-1]] + [error])

    def render(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        return buf.getvalue()


def _lm(load: LoadModel) -> str:
    return load.name.lower()


def _row_or_error(table: Table, base: dict, compute: Callable[[], dict]) -> None:
    try:
        values = dict(base)
        values.update(compute())
        table.add(values)
    except Exception as exc:  # keep sweeping; the row records what failed
        table.add(base, f"{type(exc).__name__}: {exc}")


def _metric_columns(loads: Iterable[LoadModel]) -> list[str]:
    cols = ["coverage", "pse_bit_s_m2"]
    for load in loads:
        cols += [f"p_grid_{_lm(load)}_w_m2", f"ee_{_lm(load)}_bit_j"]
    return cols


def _metric_values(p: float, lam: float, conv: Converted, loads) -> dict:
    out = {
        "coverage": metrics.coverage_probability(p, lam, conv.params),
        "pse_bit_s_m2": metrics.pse(p, lam, conv.params),
    }
    for load in loads:
        out[f"p_grid_{_lm(load)}_w_m2"] = metrics.power_grid(p, lam, conv.params, conv.power, load)
        out[f"ee_{_lm(load)}_bit_j"] = metrics.energy_efficiency(p, lam, conv.params, conv.power, load)
    return out


def _cmd_eval(spec: ExperimentSpec, conv: Converted) -> Table:
    table = Table(["p_tx_w", "lambda_bs_per_m2"] + _metric_columns(spec.loads))
    p, lam = conv.power.p_tx_w, conv.lambda_bs
    _row_or_error(table, {"p_tx_w": p, "lambda_bs_per_m2": lam},
                  lambda: _metric_values(p, lam, conv, spec.loads))
    return table


def _cmd_sweep_power(spec: ExperimentSpec, conv: Converted) -> Table:
    table = Table(["p_tx_dbm", "p_tx_w"] + _metric_columns(spec.loads))
    for dbm in conv.grid:
        p = dbm_to_w(dbm)
        _row_or_error(table, {"p_tx_dbm": dbm, "p_tx_w": p},
                      lambda: _metric_values(p, conv.lambda_bs, conv, spec.loads))
    return table


def _cmd_sweep_density(spec: ExperimentSpec, conv: Converted) -> Table:
    table = Table(["r_cell_m", "lambda_bs_per_m2"] + _metric_columns(spec.loads))
    for r_cell in conv.grid:
        lam = radius_to_density(r_cell)
        _row_or_error(table, {"r_cell_m": r_cell, "lambda_bs_per_m2": lam},
                      lambda: _metric_values(conv.power.p_tx_w, lam, conv, spec.loads))
    return table


def _joint_columns(loads) -> list[str]:
    cols = []
    for load in loads:
        tag = _lm(load)
        cols += [f"p_opt_{tag}_dbm", f"r_cell_opt_{tag}_m", f"ee_opt_{tag}_bit_j",
                 f"pse_opt_{tag}_bit_s_m2", f"iterations_{tag}", f"clamped_{tag}"]
    return cols


def _joint_values(params: SystemParams, conv: Converted, loads) -> dict:
    out = {}
    start = math.sqrt(conv.bounds.lambda_min * conv.bounds.lambda_max)
    for load in loads:
        tag = _lm(load)
        rep = optimizer.joint_optimize(params, conv.power, load, conv.bounds, start)
        out[f"p_opt_{tag}_dbm"] = w_to_dbm(rep.p_opt_w)
        out[f"r_cell_opt_{tag}_m"] = density_to_radius(rep.lambda_opt)
        out[f"ee_opt_{tag}_bit_j"] = rep.ee_opt
        out[f"pse_opt_{tag}_bit_s_m2"] = metrics.pse(rep.p_opt_w, rep.lambda_opt, params)
        out[f"iterations_{tag}"] = rep.iterations
        out[f"clamped_{tag}"] = rep.clamped.value
    return out


def _cmd_sweep_mt_density(spec: ExperimentSpec, conv: Converted) -> Table:
    table = Table(["r_mt_m", "lambda_mt_per_m2"] + _joint_columns(spec.loads))
    for r_mt in conv.grid:
        lam_mt = radius_to_density(r_mt)

        def compute(lam_mt=lam_mt):
            return _joint_values(replace(conv.params, lambda_mt=lam_mt), conv, spec.loads)

        _row_or_error(table, {"r_mt_m": r_mt, "lambda_mt_per_m2": lam_mt}, compute)
    return table


def _cmd_sweep_threshold(spec: ExperimentSpec, conv: Converted) -> Table:
    table = Table(["gamma_db"] + _joint_columns(spec.loads))
    for gamma_db in conv.grid:
        gamma = db_to_linear(gamma_db)

        def compute(gamma=gamma):
            params = replace(conv.params, gamma_d=gamma, gamma_a=gamma)
            return _joint_values(params, conv, spec.loads)

        _row_or_error(table, {"gamma_db": gamma_db}, compute)
    return table


def _cmd_optimize(spec: ExperimentSpec, conv: Converted) -> Table:
    loads = spec.loads
    if spec.mode == "joint":
        table = Table(_joint_columns(loads))
        _row_or_error(table, {}, lambda: _joint_values(conv.params, conv, loads))
        return table
    if spec.mode == "power":
        grid = conv.grid if spec.grid else _grid(spec.r_cell_min_m, spec.r_cell_max_m, 50, True)
        cols = ["r_cell_m"]
        for load in loads:
            cols += [f"p_opt_{_lm(load)}_dbm", f"ee_opt_{_lm(load)}_bit_j", f"clamped_{_lm(load)}"]
        table = Table(cols)
        for r_cell in grid:
            def compute(r_cell=r_cell):
                out = {}
                for load in loads:
                    rep = optimizer.optimal_power(radius_to_density(r_cell), conv.params,
                                                  conv.power, load, conv.bounds)
                    out[f"p_opt_{_lm(load)}_dbm"] = w_to_dbm(rep.p_opt_w)
                    out[f"ee_opt_{_lm(load)}_bit_j"] = rep.ee_opt
                    out[f"clamped_{_lm(load)}"] = rep.clamped.value
                return out

            _row_or_error(table, {"r_cell_m": r_cell}, compute)
        return table
    if spec.mode == "density":
        grid = conv.grid if spec.grid else _grid(spec.p_min_dbm, spec.p_max_dbm, 81, False)
        cols = ["p_tx_dbm"]
        for load in loads:
            cols += [f"r_cell_opt_{_lm(load)}_m", f"ee_opt_{_lm(load)}_bit_j", f"clamped_{_lm(load)}"]
        table = Table(cols)
        for dbm in grid:
            def compute(dbm=dbm):
                out = {}
                for load in loads:
                    rep = optimizer.optimal_density(dbm_to_w(dbm), conv.params, conv.power,
                                                    load, conv.bounds)
                    out[f"r_cell_opt_{_lm(load)}_m"] = density_to_radius(rep.lambda_opt)
                    out[f"ee_opt_{_lm(load)}_bit_j"] = rep.ee_opt
                    out[f"clamped_{_lm(load)}"] = rep.clamped.value
                return out

            _row_or_error(table, {"p_tx_dbm": dbm}, compute)
        return table
    raise ConfigError(f"mode: expected power, density or joint, got {spec.mode!r}")


def _cmd_tradeoff(spec: ExperimentSpec, conv: Converted) -> Table:
    # Each point is the joint EE optimum; moving the common reliability
    # threshold trades PSE against EE.
    return _cmd_sweep_threshold(spec, conv)


def _cmd_mc_validate(spec: ExperimentSpec, conv: Converted) -> Table:
    names = ("coverage", "pse", "p_grid", "ee")
    units = {"coverage": "", "pse": "_bit_s_m2", "p_grid": "_w_m2", "ee": "_bit_j"}
    cols = ["p_tx_dbm", "load_model"]
    for name in names:
        u = units[name]
        cols += [f"{name}_closed{u}", f"{name}_mc{u}", f"{name}_half_width{u}",
                 f"{name}_rel_gap", f"{name}_in_ci"]
    cols += ["realizations"]
    table = Table(cols)
    config = mcsim.SimConfig(num_realizations=spec.mc_realizations, rng_seed=spec.seed)
    powers = [dbm_to_w(d) for d in conv.grid]
    try:
        results = mcsim.run_campaign(conv.lambda_bs, conv.params, conv.power, config,
                                     powers, spec.loads)
    except Exception as exc:
        table.add({}, f"{type(exc).__name__}: {exc}")
        return table
    for dbm, p in zip(conv.grid, powers):
        for load in spec.loads:
            est = results[(p, load)]
            closed = metrics.evaluate(p, conv.lambda_bs, conv.params, conv.power, load)
            reference = {
                "coverage": closed.coverage,
                "pse": closed.pse_bits_per_sec_m2,
                "p_grid": closed.p_grid_w_per_m2,
                "ee": closed.ee_bits_per_joule,
            }
            row = {"p_tx_dbm": dbm, "load_model": _lm(load), "realizations": spec.mc_realizations}
            for name in names:
                m = getattr(est, name)
                u = units[name]
                row[f"{name}_closed{u}"] = reference[name]
                row[f"{name}_mc{u}"] = m.mean
                row[f"{name}_half_width{u}"] = m.half_width
                row[f"{name}_rel_gap"] = abs(reference[name] - m.mean) / abs(m.mean) if m.mean else math.inf
                row[f"{name}_in_ci"] = m.contains(reference[name])
            table.add(row)
    return table


def convergence_study(params: SystemParams, power: PowerProfile, load: LoadModel,
                      bounds: optimizer.OptimizationBounds, eps_values: Sequence[float],
                      trials: int, seed: int) -> list[dict]:
    """Mean alternating-loop iterations per tolerance over random starting densities."""
    rng = np.random.default_rng(seed)
    starts = 10.0 ** rng.uniform(math.log10(bounds.lambda_min), math.log10(bounds.lambda_max), trials)
    rows = []
    for eps in eps_values:
        b = replace(bounds, alt_eps=eps)
        counts, failures = [], 0
        for start in starts:
            try:
                counts.append(optimizer.joint_optimize(params, power, load, b, float(start)).iterations)
            except Exception:
                failures += 1
        rows.append({
            "eps": eps,
            "load_model": _lm(load),
            "mean_iterations": float(np.mean(counts)) if counts else math.nan,
            "max_iterations": int(max(counts)) if counts else 0,
            "trials": trials,
            "failures": failures,
        })
    return rows


def _cmd_convergence(spec: ExperimentSpec, conv: Converted) -> Table:
    table = Table(["eps", "load_model", "mean_iterations", "max_iterations", "trials", "failures"])
    for load in spec.loads:
        for row in convergence_study(conv.params, conv.power, load, conv.bounds,
                                     spec.eps_list, spec.trials, spec.seed):
            table.add(row, f"{row['failures']} runs failed" if row["failures"] else "")
    return table


_DISPATCH = {
    "eval": _cmd_eval,
    "sweep-power": _cmd_sweep_power,
    "sweep-density": _cmd_sweep_density,
    "sweep-mt-density": _cmd_sweep_mt_density,
    "sweep-threshold": _cmd_sweep_threshold,
    "optimize": _cmd_optimize,
    "tradeoff": _cmd_tradeoff,
    "mc-validate": _cmd_mc_validate,
    "convergence-study": _cmd_convergence,
}


def run(spec: ExperimentSpec) -> str:
    """Execute ``spec`` and return the CSV text (also written to ``spec.out``)."""
    if spec.command not in _DISPATCH:
        raise ConfigError(f"command: unknown {spec.command!r}")
    conv = convert_units(spec)
    text = _DISPATCH[spec.command](spec, conv).render()
    if spec.out:
        Path(spec.out).write_text(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eeplan",
        description="Energy-efficiency analysis and optimization of PPP cellular networks.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value file in human units")
    parser.add_argument("--preset", choices=sorted(PRESETS), default="reference")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--load-model", type=int, choices=(1, 2))
    parser.add_argument("--mc-realizations", type=int, default=20_000)
    parser.add_argument("--eps", type=float, default=1e-6,
                        help="relative EE tolerance of the alternating optimizer")
    parser.add_argument("--eps-list", type=float, nargs="+", default=list(DEFAULT_EPS_LIST))
    parser.add_argument("--trials", type=int, default=1000)
    parser.add_argument("--mode", choices=("power", "density", "joint"), default="joint")
    parser.add_argument("--from", dest="grid_from", type=float)
    parser.add_argument("--to", dest="grid_to", type=float)
    parser.add_argument("--points", type=int)
    parser.add_argument("--p-min-dbm", type=float, default=-20.0)
    parser.add_argument("--p-max-dbm", type=float, default=60.0)
    parser.add_argument("--r-cell-min-m", type=float, default=10.0)
    parser.add_argument("--r-cell-max-m", type=float, default=2000.0)
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    config = dict(DEFAULT_CONFIG)
    config.update(PRESETS[args.preset])
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
        config.update(parse_config_text(text, args.config))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set: expected KEY=VALUE, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        config[key] = _parse_value(key, value, "--set")
    grid = None
    if any(v is not None for v in (args.grid_from, args.grid_to, args.points)):
        default = DEFAULT_GRIDS.get(args.command, (0.0, 1.0, 2, False))
        grid = (
            default[0] if args.grid_from is None else args.grid_from,
            default[1] if args.grid_to is None else args.grid_to,
            default[2] if args.points is None else args.points,
            default[3],
        )
    return ExperimentSpec(
        command=args.command,
        config=config,
        load=LoadModel(args.load_model) if args.load_model else None,
        p_min_dbm=args.p_min_dbm,
        p_max_dbm=args.p_max_dbm,
        r_cell_min_m=args.r_cell_min_m,
        r_cell_max_m=args.r_cell_max_m,
        grid=grid,
        out=args.out,
        seed=args.seed,
        mc_realizations=args.mc_realizations,
        eps=args.eps,
        eps_list=tuple(args.eps_list),
        trials=args.trials,
        mode=args.mode,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = spec_from_args(args)
        text = run(spec)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not spec.out:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
