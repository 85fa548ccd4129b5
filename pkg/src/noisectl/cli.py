"""noisectl command line: configure, simulate, verify.

Subcommands:

* ``simulate``  -- run a single trajectory or an ensemble from a JSON config
  (flags override file values) and write trajectories.csv, summary.csv and
  report.txt into the output directory.
* ``threshold`` -- analytic threshold report only, no simulation.
* ``sweep``     -- grid over one or two scalar parameters, emitting a
  fraction-converged/fraction-trapped table.
* ``verify``    -- run the acceptance suite (closed-form checks plus the
  figure sweep).

Exit codes: 0 success, 2 configuration/validation error, 1 internal error.
The environment variable NOISECTL_SEED, when set, overrides master_seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .control import (
    Constant,
    ContinuousBound,
    ControlScheme,
    DestabilizeK,
    DestabilizeZero,
    DiscreteBound,
    SigmaProfile,
    StabilizeK,
    StabilizeZero,
    check_destabilize,
    check_stabilize_K,
    check_stabilize_zero,
    check_trap,
)
from .distributions import (
    DiscreteUniform,
    DomainError,
    NoiseSpec,
    PiecewiseUniform,
    PolynomialSymmetric,
)
from .engine import EngineOptions, run_ensemble
from .maps import Logistic, MapSpec, ModifiedBevertonHolt, PiecewiseBH, Ricker, Shifted
from .reporting import write_report_txt, write_summary_csv, write_trajectories_csv

__all__ = ["ExperimentConfig", "ConfigError", "execute", "main"]

MAP_NAMES = ("ricker", "logistic", "beverton-holt", "piecewise-bh")
NOISE_NAMES = ("poly", "discrete", "piecewise")
SCHEME_NAMES = ("stabilize-zero", "stabilize-k", "destabilize-zero", "destabilize-k")
PROFILE_NAMES = ("constant", "discrete-bound", "continuous-bound")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the constraint."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; serializes 1:1 to the JSON config file."""

    map: str = "ricker"
    r: float = 1.0
    noise: str = "poly"
    s: int = 0
    l: int = 1
    delta: float = 0.05
    scheme: str = "stabilize-zero"
    sigma: float = 1.0
    K: float | None = None
    profile: str = "discrete-bound"
    margin: float = 0.01
    truncation_b: float | None = None
    clamp: bool = True
    window: list | None = None
    x0: list | float = 0.5
    n_steps: int = 10_000
    n_runs: int = 1
    master_seed: int = 12345
    thread_hint: int | None = None
    eps_conv: float = 1e-8
    conv_window: int = 50
    x_max: float = 1e8
    target: float | None = None
    trap: list | None = None
    thin: int = 1
    out_dir: str = "noisectl-out"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    # -- construction of the domain objects ---------------------------------

    def build_map(self) -> MapSpec:
        if self.map == "ricker":
            return Ricker(self.r)
        if self.map == "logistic":
            return Logistic(self.r)
        if self.map == "beverton-holt":
            return ModifiedBevertonHolt()
        if self.map == "piecewise-bh":
            return PiecewiseBH()
        raise ConfigError(f"unknown map {self.map!r}; choose from {MAP_NAMES}")

    def build_noise(self) -> NoiseSpec:
        try:
            if self.noise == "poly":
                return PolynomialSymmetric(self.s)
            if self.noise == "discrete":
                return DiscreteUniform(self.l)
            if self.noise == "piecewise":
                return PiecewiseUniform(self.l, self.delta)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"unknown noise {self.noise!r}; choose from {NOISE_NAMES}")

    def build_profile(self) -> SigmaProfile:
        if self.profile == "constant":
            return Constant(self.sigma)
        if self.profile == "discrete-bound":
            return DiscreteBound(self.l, margin=self.margin)
        if self.profile == "continuous-bound":
            return ContinuousBound(margin=self.margin)
        raise ConfigError(f"unknown profile {self.profile!r}; choose from {PROFILE_NAMES}")

    def build_scheme(self) -> ControlScheme:
        window = tuple(self.window) if self.window is not None else None
        if self.scheme == "stabilize-zero":
            return StabilizeZero(self.sigma)
        if self.scheme == "stabilize-k":
            return StabilizeK(self._require_K(), self.sigma)
        if self.scheme == "destabilize-zero":
            return DestabilizeZero(self.build_profile(), truncation_b=self.truncation_b,
                                   clamp=self.clamp and self.truncation_b is not None,
                                   window=window)
        if self.scheme == "destabilize-k":
            return DestabilizeK(self._require_K(), self.build_profile(), window=window)
        raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEME_NAMES}")

    def _require_K(self) -> float:
        if self.K is None:
            raise ConfigError(f"scheme {self.scheme!r} requires K (the target equilibrium)")
        return self.K

    def engine_options(self) -> EngineOptions:
        return EngineOptions(eps_conv=self.eps_conv, window=self.conv_window,
                             x_max=self.x_max, target=self.target,
                             trap=tuple(self.trap) if self.trap is not None else None,
                             thin=self.thin)

    def x0_list(self) -> list[float]:
        return list(self.x0) if isinstance(self.x0, (list, tuple)) else [float(self.x0)]

    def validate(self) -> None:
        noise = self.build_noise()
        map_spec = self.build_map()
        scheme = self.build_scheme()  # raises ConfigError on structural problems
        self.engine_options()
        if self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.n_runs < 1:
            raise ConfigError(f"n_runs must be >= 1, got {self.n_runs}")
        if isinstance(scheme, (StabilizeZero, StabilizeK)):
            if self.sigma < 0:
                raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
            if (isinstance(noise, (DiscreteUniform, PiecewiseUniform))
                    and abs(self.sigma - 1.0) < 1e-12):
                raise ConfigError(
                    "discrete and piecewise noise require sigma < 1 for the stabilized "
                    "recurrence: at sigma = 1 the factor 1 + sigma*xi vanishes on an atom "
                    "and E ln|1 + sigma*xi| = -inf"
                )
        if isinstance(scheme, (StabilizeK, DestabilizeK)):
            fK = map_spec.f(self.K)
            if abs(fK - 1.0) > 1e-9:
                raise ConfigError(
                    f"K = {self.K} is not an equilibrium of {self.map}: f(K) = {fK:.9g} != 1"
                )


def _threshold_sections(cfg: ExperimentConfig) -> list[str]:
    """Analytic report sections for the configured scheme (best effort)."""
    map_spec = cfg.build_map()
    noise = cfg.build_noise()
    interval = map_spec.working_interval
    sections = []
    try:
        if cfg.scheme == "stabilize-zero":
            rep = check_stabilize_zero(map_spec, interval, noise, cfg.sigma)
            sections.append("stabilize-zero threshold check\n" + rep.describe())
        elif cfg.scheme == "stabilize-k":
            rep = check_stabilize_K(map_spec, cfg.K, noise, cfg.sigma)
            sections.append(f"stabilize-K threshold check (K = {cfg.K})\n" + rep.describe())
        else:
            profile = cfg.build_profile()
            if cfg.scheme == "destabilize-k":
                shifted = Shifted(map_spec, cfg.K)
                chk = check_destabilize(shifted, shifted.working_interval, noise, profile)
                label = f"destabilize-K condition (K = {cfg.K}, shifted map)"
            else:
                lo = -cfg.truncation_b if cfg.truncation_b is not None else interval[0]
                hi = cfg.truncation_b if cfg.truncation_b is not None else interval[1]
                chk = check_destabilize(map_spec, (lo, hi), noise, profile)
                label = "destabilize-zero condition"
            sections.append(
                f"{label}\nsup E|f + sigma xi|^(-alpha) = {chk.worst_expectation:.6g}"
                f" (alpha = {chk.alpha})\nsatisfied = {chk.ok}"
            )
            if cfg.trap is not None:
                b, d = cfg.trap
                trap = check_trap(map_spec, b, d, profile)
                sections.append(
                    f"trap check [b, d] = [{b:.6g}, {d:.6g}]\n"
                    f"F-invariant = {trap.invariant}; f positive = {trap.f_positive}; "
                    f"no-jump condition = {trap.jump_ok} (sup jump = {trap.sup_jump})"
                )
    except DomainError as exc:
        sections.append(f"analytic check unavailable: {exc}")
    return sections


def execute(cfg: ExperimentConfig) -> int:
    """Run the configured experiment and write the three output files."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    scheme = cfg.build_scheme()
    map_spec = cfg.build_map()
    noise = cfg.build_noise()
    opts = cfg.engine_options()

    all_trajs = []
    rows = []
    for x0 in cfg.x0_list():
        summary, trajs = run_ensemble(scheme, map_spec, noise, x0, cfg.n_steps,
                                      cfg.n_runs, cfg.master_seed,
                                      thread_hint=cfg.thread_hint, options=opts,
                                      return_trajectories=True)
        all_trajs.extend(trajs)
        row = {"x0": x0, "n_steps": cfg.n_steps, "master_seed": cfg.master_seed}
        row.update(summary.to_row())
        rows.append(row)

    write_trajectories_csv(out / "trajectories.csv", all_trajs)
    write_summary_csv(out / "summary.csv", rows)
    sections = ["configuration\n" + cfg.to_json()] + _threshold_sections(cfg)
    write_report_txt(out / "report.txt", sections)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_shared_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", choices=MAP_NAMES)
    p.add_argument("--r", type=float, help="growth parameter for ricker/logistic")
    p.add_argument("--noise", choices=NOISE_NAMES)
    p.add_argument("--s", type=int, help="polynomial noise exponent parameter")
    p.add_argument("--l", type=int, help="number of atom pairs for discrete/piecewise noise")
    p.add_argument("--delta", type=float, help="window half-width for piecewise noise")
    p.add_argument("--sigma", type=float)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisectl", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run trajectories/ensembles from a config")
    sim.add_argument("--config", help="JSON config file")
    _add_shared_model_args(sim)
    sim.add_argument("--scheme", choices=SCHEME_NAMES)
    sim.add_argument("--equilibrium", "--K", dest="K", type=float)
    sim.add_argument("--profile", choices=PROFILE_NAMES)
    sim.add_argument("--margin", type=float)
    sim.add_argument("--truncation-b", dest="truncation_b", type=float)
    sim.add_argument("--clamp", dest="clamp", action="store_true", default=None)
    sim.add_argument("--no-clamp", dest="clamp", action="store_false", default=None)
    sim.add_argument("--window", nargs=2, type=float, metavar=("P", "Q"))
    sim.add_argument("--x0", type=float, nargs="+")
    sim.add_argument("--steps", dest="n_steps", type=int)
    sim.add_argument("--runs", dest="n_runs", type=int)
    sim.add_argument("--seed", dest="master_seed", type=int)
    sim.add_argument("--threads", dest="thread_hint", type=int)
    sim.add_argument("--eps-conv", dest="eps_conv", type=float)
    sim.add_argument("--conv-window", dest="conv_window", type=int)
    sim.add_argument("--x-max", dest="x_max", type=float)
    sim.add_argument("--target", type=float)
    sim.add_argument("--trap", nargs=2, type=float, metavar=("B", "D"))
    sim.add_argument("--thin", type=int)
    sim.add_argument("--out-dir", dest="out_dir")
    sim.add_argument("--dump-config", action="store_true",
                     help="print the resolved config JSON to stdout before running")

    thr = sub.add_parser("threshold", help="analytic threshold report only")
    _add_shared_model_args(thr)
    thr.add_argument("--equilibrium", "--K", dest="K", type=float,
                     help="check stabilization of this equilibrium instead of zero")
    thr.add_argument("--interval", nargs=2, type=float, metavar=("LO", "HI"))
    thr.add_argument("--out", help="also write the report to this file")

    swp = sub.add_parser("sweep", help="grid over one or two config parameters")
    swp.add_argument("--config", help="JSON config file with the base experiment")
    swp.add_argument("--param", required=True)
    swp.add_argument("--values", required=True,
                     help="comma-separated values, e.g. 0.94,0.96,0.98")
    swp.add_argument("--param2")
    swp.add_argument("--values2")
    swp.add_argument("--out-dir", dest="out_dir")

    ver = sub.add_parser("verify", help="run the acceptance suite")
    ver.add_argument("--write-reference", action="store_true",
                     help="regenerate the pinned-seed figure reference table")
    return parser


_CONFIG_FLAGS = [f.name for f in fields(ExperimentConfig)]


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    cfg = ExperimentConfig.from_dict(data)
    overrides = {}
    for name in _CONFIG_FLAGS:
        val = getattr(args, name, None)
        if val is not None:
            overrides[name] = val
    if "window" in overrides:
        overrides["window"] = list(overrides["window"])
    if "trap" in overrides:
        overrides["trap"] = list(overrides["trap"])
    if "x0" in overrides and len(overrides["x0"]) == 1:
        overrides["x0"] = overrides["x0"][0]
    cfg = replace(cfg, **overrides)
    env_seed = os.environ.get("NOISECTL_SEED")
    if env_seed is not None:
        cfg = replace(cfg, master_seed=int(env_seed))
    return cfg


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    if args.dump_config:
        print(cfg.to_json())
    return execute(cfg)


def _cmd_threshold(args: argparse.Namespace) -> int:
    data = {}
    for name in ("map", "r", "noise", "s", "l", "delta", "sigma", "K"):
        val = getattr(args, name, None)
        if val is not None:
            data[name] = val
    if "K" in data:
        data["scheme"] = "stabilize-k"
    cfg = ExperimentConfig.from_dict(data)
    map_spec = cfg.build_map()
    noise = cfg.build_noise()
    interval = tuple(args.interval) if args.interval else map_spec.working_interval
    if cfg.K is not None:
        fK = map_spec.f(cfg.K)
        if abs(fK - 1.0) > 1e-9:
            raise ConfigError(
                f"K = {cfg.K} is not an equilibrium of {cfg.map}: f(K) = {fK:.9g} != 1")
        rep = check_stabilize_K(map_spec, cfg.K, noise, cfg.sigma)
        header = f"stabilize-K threshold check (K = {cfg.K})"
    else:
        rep = check_stabilize_zero(map_spec, interval, noise, cfg.sigma)
        header = "stabilize-zero threshold check"
    text = header + "\n" + rep.describe()
    print(text)
    if args.out:
        write_report_txt(args.out, [text])
    return 0


def _parse_values(spec: str) -> list[float]:
    try:
        return [float(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --values list {spec!r}: {exc}") from exc


def _with_param(cfg: ExperimentConfig, name: str, value: float) -> ExperimentConfig:
    if name not in _CONFIG_FLAGS:
        raise ConfigError(f"unknown sweep parameter {name!r}")
    if name in ("s", "l", "n_steps", "n_runs", "master_seed"):
        value = int(value)
    return replace(cfg, **{name: value})


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    values = _parse_values(args.values)
    values2 = _parse_values(args.values2) if args.param2 else [None]
    if args.param2 and not args.values2:
        raise ConfigError("--param2 requires --values2")
    out = Path(args.out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for v1 in values:
        for v2 in values2:
            c = _with_param(cfg, args.param, v1)
            if args.param2:
                c = _with_param(c, args.param2, v2)
            c.validate()
            scheme, map_spec, noise = c.build_scheme(), c.build_map(), c.build_noise()
            summary = run_ensemble(scheme, map_spec, noise, c.x0_list()[0], c.n_steps,
                                   c.n_runs, c.master_seed, thread_hint=c.thread_hint,
                                   options=c.engine_options())
            row = {args.param: v1}
            if args.param2:
                row[args.param2] = v2
            row["convergence_fraction"] = summary.convergence_fraction
            row["trapped_fraction"] = summary.trapped_fraction
            row["escaped_fraction"] = summary.escaped_fraction
            rows.append(row)
            print("  ".join(f"{k}={v}" for k, v in row.items()))
    write_summary_csv(out / "sweep.csv", rows)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    from . import verification

    if args.write_reference:
        table = verification.write_reference()
        print(f"wrote reference table with {len(table['panels'])} panels")
        return 0
    results = verification.run_all()
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "threshold":
            return _cmd_threshold(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "verify":
            return _cmd_verify(args)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
