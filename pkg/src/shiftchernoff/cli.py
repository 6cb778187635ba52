"""Command-line front end.

Each subcommand takes one flat ``key = value`` config file::

    shiftchernoff solve     scenario.cfg [--out-dir DIR]
    shiftchernoff converge  scenario.cfg [--out-dir DIR]
    shiftchernoff tangency  scenario.cfg [--out-dir DIR]
    shiftchernoff bench     scenario.cfg [--out-dir DIR]

Lines starting with ``#`` are comments.  Unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass

from . import exprlang
from .chernoff import ChernoffParams, chernoff_iterate, tangency_study
from .fields import CoefficientSet, ScalarField
from .griddata import Extension, Grid, Scheme, sample, write_csv
from .study import ORACLES, Scenario, run_benchmark, run_convergence

__all__ = ["ConfigError", "Config", "parse_config", "load_config", "run", "main"]

KEYS = ("name", "a", "b", "c", "u0", "xmin", "xmax", "points", "extension", "t", "n",
        "ns", "scheme", "oracle", "out", "target", "cn_steps")

_COMMON = ("a", "b", "c", "u0", "xmin", "xmax", "points")
REQUIRED = {
    "solve": _COMMON + ("t", "n"),
    "converge": _COMMON + ("t", "ns", "oracle"),
    "tangency": _COMMON,
    "bench": _COMMON + ("t", "oracle", "target"),
}

TANGENCY_TAUS = (1e-1, 1e-2, 1e-3, 1e-4)


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"config error ({', '.join(where)})" if where else "config error"
        super().__init__(f"{prefix}: {message}")


@dataclass
class Config:
    values: dict[str, str]
    lines: dict[str, int]
    path: str = "<config>"

    def has(self, key: str) -> bool:
        return key in self.values

    def raw(self, key: str) -> str:
        return self.values[key]

    def _error(self, key, message):
        return ConfigError(message, key, self.lines.get(key))

    def expr(self, key: str) -> ScalarField:
        try:
            return ScalarField.from_text(self.values[key], key)
        except exprlang.ExpressionError as exc:
            raise self._error(key, str(exc)) from None

    def real(self, key: str) -> float:
        try:
            value = float(self.values[key])
        except ValueError:
            raise self._error(key, f"expected a number, got {self.values[key]!r}") from None
        if math.isnan(value):
            raise self._error(key, "NaN is not allowed")
        return value

    def count(self, key: str) -> int:
        try:
            return int(self.values[key])
        except ValueError:
            raise self._error(key, f"expected an integer, got {self.values[key]!r}") from None

    def counts(self, key: str) -> list[int]:
        try:
            ns = [int(v) for v in self.values[key].split(",") if v.strip()]
        except ValueError:
            raise self._error(key, f"expected a comma list of integers, got "
                                   f"{self.values[key]!r}") from None
        if not ns:
            raise self._error(key, "empty list")
        return ns

    def choice(self, key: str, enum_cls, default):
        if key not in self.values:
            return default
        try:
            return enum_cls(self.values[key])
        except ValueError:
            options = ", ".join(e.value for e in enum_cls)
            raise self._error(key, f"expected one of {options}, got "
                                   f"{self.values[key]!r}") from None


def parse_config(text: str, path: str = "<config>") -> Config:
    values, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}",
                              stripped.split()[0], lineno)
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in KEYS:
            raise ConfigError("unknown key", key, lineno)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", key, lineno)
        if not value:
            raise ConfigError("empty value", key, lineno)
        values[key] = value
        lines[key] = lineno
    return Config(values, lines, path)


def load_config(path) -> Config:
    with open(path) as fh:
        return parse_config(fh.read(), str(path))


def _require(cfg: Config, subcommand: str) -> None:
    for key in REQUIRED[subcommand]:
        if not cfg.has(key):
            raise ConfigError(f"missing required key for '{subcommand}'", key)


def _grid(cfg: Config) -> Grid:
    try:
        return Grid(cfg.real("xmin"), cfg.real("xmax"), cfg.count("points"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), "points", cfg.lines.get("points")) from None


def _field_on_grid(cfg: Config, key: str, grid: Grid) -> ScalarField:
    field = cfg.expr(key)
    try:
        field.values(grid.nodes)
    except exprlang.ExprDomainError as exc:
        raise cfg._error(key, str(exc)) from None
    return field


def _coeffs(cfg: Config, grid: Grid) -> CoefficientSet:
    a, b, c = (_field_on_grid(cfg, key, grid) for key in ("a", "b", "c"))
    return CoefficientSet.for_grid(a, b, c, grid)


def _scenario(cfg: Config, grid: Grid, coeffs: CoefficientSet) -> Scenario:
    oracle = cfg.raw("oracle")
    if oracle not in ORACLES:
        raise ConfigError(f"expected one of {', '.join(ORACLES)}, got {oracle!r}",
                          "oracle", cfg.lines.get("oracle"))
    kwargs = {}
    if cfg.has("cn_steps"):
        kwargs["cn_steps"] = cfg.count("cn_steps")
    name = cfg.raw("name") if cfg.has("name") else os.path.splitext(os.path.basename(cfg.path))[0]
    return Scenario(name, coeffs, cfg.expr("u0"), grid, cfg.real("t"), oracle,
                    cfg.choice("extension", Extension, Extension.CONSTANT_HOLD),
                    cfg.choice("scheme", Scheme, Scheme.CUBIC), **kwargs)


def _output_path(cfg: Config, subcommand: str, out_dir: str | None) -> str:
    path = cfg.raw("out") if cfg.has("out") else f"{subcommand}.csv"
    if out_dir is not None:
        path = os.path.join(out_dir, os.path.basename(path))
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def run(subcommand: str, config_path, out_dir: str | None = None) -> str:
    """Run one subcommand and return the path of the CSV it wrote."""
    if subcommand not in REQUIRED:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    cfg = load_config(config_path)
    _require(cfg, subcommand)
    grid = _grid(cfg)
    coeffs = _coeffs(cfg, grid)
    out = _output_path(cfg, subcommand, out_dir)

    if subcommand == "solve":
        extension = cfg.choice("extension", Extension, Extension.CONSTANT_HOLD)
        scheme = cfg.choice("scheme", Scheme, Scheme.CUBIC)
        u0 = sample(_field_on_grid(cfg, "u0", grid), grid, extension)
        params = ChernoffParams(cfg.real("t"), cfg.count("n"), scheme)
        write_csv(chernoff_iterate(u0, params, coeffs).u, out)
    elif subcommand == "converge":
        report = run_convergence(_scenario(cfg, grid, coeffs), cfg.counts("ns"))
        report.to_csv(out)
    elif subcommand == "tangency":
        residuals, slope = tangency_study(cfg.expr("u0"), coeffs, grid, TANGENCY_TAUS)
        with open(out, "w", newline="") as fh:
            fh.write(f"# slope={slope:.6g}\n")
            fh.write("tau,residual\n")
            for tau, r in zip(TANGENCY_TAUS, residuals):
                fh.write(f"{tau:.17g},{r:.17g}\n")
    else:
        record = run_benchmark(_scenario(cfg, grid, coeffs), cfg.real("target"))
        record.to_csv(out)
        print(f"chernoff n={record.chernoff_n} {record.chernoff_seconds:.4g}s | "
              f"crank-nicolson steps={record.cn_steps} {record.cn_seconds:.4g}s")
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shiftchernoff",
        description="Shift-operator Chernoff approximations for 1D parabolic equations.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in [
        ("solve", "write the approximate solution u(t, x) as x,u CSV"),
        ("converge", "convergence study over ns against the scenario oracle"),
        ("tangency", "tangency residuals over a decade ladder of tau"),
        ("bench", "time the method against Crank-Nicolson at a target error"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a key=value config file")
        p.add_argument("--out-dir", default=None, help="directory for the output CSV")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        out = run(args.subcommand, args.config, args.out_dir)
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"shiftchernoff {args.subcommand}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
