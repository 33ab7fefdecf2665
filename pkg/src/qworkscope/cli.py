"""Command-line front end.

    qworkscope <dist|moments|sweep|jarzynski|oracle> [--config FILE] [--out FILE] [overrides]

Configuration is a flat ``key = value`` file with ``#`` comments; command-line
flags override file values. Every CSV starts with a comment line echoing the
resolved configuration, followed by a header row.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .detector import CutoffError, GridCoverageError, l1_distance, oracle_work_distribution
from .protocol import ConvergenceError
from .spin import (
    STATE_KINDS,
    SpinParams,
    fig2_profile,
    initial_state,
    log_grid,
    spin_free_energy_change,
    spin_protocol,
    spin_snapshot,
    sweep_duration,
)
from .work import (
    NotThermalError,
    analytic_moments,
    build_work_distribution,
    characteristic_function,
    density,
    fdt_residual,
    jarzynski_residual,
    jarzynski_rhs,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

COMMANDS = ("dist", "moments", "sweep", "jarzynski", "oracle")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    nu0: float = 1.0
    nu_t: float = 1.8
    t_prime: float = 1.0
    t_primes: Optional[str] = None
    beta: float = 0.01
    sigma: float = 1.0
    state: Optional[str] = None
    tol: float = 1e-9
    cutoff: Optional[int] = None
    w_min: float = -10.0
    w_max: float = 10.0
    w_points: int = 401

    def params(self) -> SpinParams:
        return SpinParams(nu0=self.nu0, nuT=self.nu_t, tPrime=self.t_prime, beta=self.beta, sigma=self.sigma)

    def t_prime_list(self) -> list[float]:
        if self.t_primes is None:
            return [float(t) for t in log_grid()]
        return [float(v) for v in self.t_primes.split(",") if v.strip()]

    def echo(self) -> str:
        return " ".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self))


_FIELD_TYPES = {
    "nu0": float,
    "nu_t": float,
    "t_prime": float,
    "t_primes": str,
    "beta": float,
    "sigma": float,
    "state": str,
    "tol": float,
    "cutoff": int,
    "w_min": float,
    "w_max": float,
    "w_points": int,
}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def resolve_config(command: str, file_values: dict, overrides: dict) -> RunConfig:
    merged = {**file_values, **{k: v for k, v in overrides.items() if v is not None}}
    kwargs = {}
    for key, value in merged.items():
        try:
            kwargs[key] = _FIELD_TYPES[key](value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot parse {value!r} as {_FIELD_TYPES[key].__name__}") from None
    cfg = RunConfig(**kwargs)
    if cfg.state is None:
        cfg.state = "thermal" if command == "jarzynski" else "coherent-gibbs"
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    for key in ("nu0", "nu_t", "t_prime", "sigma", "tol"):
        val = getattr(cfg, key)
        if not (np.isfinite(val) and val > 0):
            raise ConfigError(f"{key}: must be positive, got {val}")
    if not (np.isfinite(cfg.beta) and cfg.beta >= 0):
        raise ConfigError(f"beta: must be >= 0, got {cfg.beta}")
    if cfg.state not in STATE_KINDS:
        raise ConfigError(f"state: must be one of {', '.join(STATE_KINDS)}, got {cfg.state!r}")
    if cfg.cutoff is not None and cfg.cutoff < 2:
        raise ConfigError(f"cutoff: must be >= 2, got {cfg.cutoff}")
    if cfg.w_points < 2 or not cfg.w_max > cfg.w_min:
        raise ConfigError("w_min/w_max/w_points: need w_max > w_min and w_points >= 2")
    try:
        tps = cfg.t_prime_list()
    except ValueError:
        raise ConfigError(f"t_primes: cannot parse {cfg.t_primes!r}") from None
    if not tps or any(t <= 0 for t in tps) or tps != sorted(tps):
        raise ConfigError("t_primes: must be positive and ascending")


def fmt(x) -> str:
    # repr of a Python float is the shortest round-trip form
    if isinstance(x, str):
        return x
    return repr(float(x))


def _writer(buf):
    return csv.writer(buf, lineterminator="\n")


def cmd_dist(cfg: RunConfig, buf) -> None:
    w = np.linspace(cfg.w_min, cfg.w_max, cfg.w_points)
    snap = spin_snapshot(cfg.params(), cfg.state, tol=cfg.tol)
    out = _writer(buf)
    out.writerow(["W", "total", "incoherent", "coherent"])
    for row in fig2_profile(cfg.params(), w, snap=snap):
        out.writerow([fmt(v) for v in row])


def cmd_moments(cfg: RunConfig, buf) -> None:
    p = cfg.params()
    snap = spin_snapshot(p, cfg.state, tol=cfg.tol)
    m = analytic_moments(snap)
    df = spin_free_energy_change(p) if p.beta > 0 else float("nan")
    fdt = fdt_residual(snap, p.beta, df) if p.beta > 0 else float("nan")
    thermal = snap.with_state(initial_state(p, "thermal"))
    jar = jarzynski_residual(thermal, p.beta) if p.beta > 0 else float("nan")
    out = _writer(buf)
    out.writerow(
        ["t_prime", "mean_w", "second_moment", "variance", "energy_change_variance",
         "delta_f", "fdt_residual", "jarzynski_residual_thermal"]
    )
    out.writerow([fmt(v) for v in (p.tPrime, m.mean, m.second, m.variance, m.energy_change_variance, df, fdt, jar)])


def cmd_sweep(cfg: RunConfig, buf) -> None:
    rows = sweep_duration(cfg.params(), cfg.t_prime_list(), cfg.state, cfg.tol)
    out = _writer(buf)
    out.writerow(["t_prime", "w_incoherent", "half_beta_var", "w_coherent", "fdt_residual", "jarzynski_residual"])
    failed = []
    for row in rows:
        out.writerow([fmt(v) for v in row[:6]])
        if row.error:
            failed.append(f"t_prime={row.t_prime}: {row.error}")
    for msg in failed:
        buf.write(f"# error {msg}\n")


def cmd_jarzynski(cfg: RunConfig, buf) -> None:
    p = cfg.params()
    if not p.beta > 0:
        raise ConfigError("beta: the Jarzynski check needs beta > 0")
    snap = spin_snapshot(p, cfg.state, tol=cfg.tol)
    try:
        res = jarzynski_residual(snap, p.beta)
    except NotThermalError as exc:
        raise ConfigError(f"state: {exc}") from None
    lhs = characteristic_function(snap, 1j * p.beta).real
    out = _writer(buf)
    out.writerow(["t_prime", "delta_f", "lhs", "rhs", "residual"])
    out.writerow([fmt(v) for v in (p.tPrime, spin_free_energy_change(p), lhs, jarzynski_rhs(snap, p.beta), res)])


def cmd_oracle(cfg: RunConfig, buf) -> None:
    p = cfg.params()
    snap = spin_snapshot(p, cfg.state, tol=cfg.tol)
    res = oracle_work_distribution(snap, spin_protocol(p), cutoff=cfg.cutoff)
    closed = density(build_work_distribution(snap), res.w)
    out = _writer(buf)
    out.writerow(["W", "closed_form", "oracle", "abs_diff"])
    for w, c, o in zip(res.w, closed, res.density):
        out.writerow([fmt(w), fmt(c), fmt(o), fmt(abs(c - o))])
    buf.write(f"# cutoff = {res.config.cutoff}\n")
    buf.write(f"# l1_distance = {fmt(l1_distance(res.w, closed, res.density))}\n")


HANDLERS = {
    "dist": cmd_dist,
    "moments": cmd_moments,
    "sweep": cmd_sweep,
    "jarzynski": cmd_jarzynski,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qworkscope", description="Work statistics of the rf-driven spin model.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--out", help="output CSV path (default: stdout)")
    parser.add_argument("--t-prime", dest="t_prime")
    parser.add_argument("--t-primes", dest="t_primes", help="comma-separated durations for sweep")
    parser.add_argument("--sigma")
    parser.add_argument("--beta")
    parser.add_argument("--state", help="thermal | coherent-gibbs")
    parser.add_argument("--nu0")
    parser.add_argument("--nu-t", dest="nu_t")
    parser.add_argument("--tol")
    parser.add_argument("--cutoff")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    overrides = {
        k: getattr(args, k)
        for k in ("t_prime", "t_primes", "sigma", "beta", "state", "nu0", "nu_t", "tol", "cutoff")
    }
    try:
        file_values = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    file_values = parse_config_text(fh.read())
            except OSError as exc:
                raise ConfigError(f"config: {exc}") from None
        cfg = resolve_config(args.command, file_values, overrides)
        buf = io.StringIO()
        buf.write(f"# qworkscope {args.command} {cfg.echo()}\n")
        HANDLERS[args.command](cfg, buf)
    except ConfigError as exc:
        print(f"qworkscope: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, CutoffError, GridCoverageError, ArithmeticError) as exc:
        stage = getattr(exc, "stage", type(exc).__name__)
        print(f"qworkscope: numerical failure [{stage}]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
