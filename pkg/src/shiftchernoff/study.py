"""Convergence studies, rate fitting and the timing comparison against
Crank-Nicolson."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .chernoff import ChernoffParams, ShiftStencil, chernoff_iterate
from .fields import CoefficientSet, ScalarField
from .griddata import Extension, Grid, GridFunction, Scheme, interior_mask, sample
from .oracles import (
    crank_nicolson,
    growth_analytic,
    heat_analytic,
    transport_analytic,
    tree_evaluate,
)

log = logging.getLogger(__name__)

__all__ = [
    "ORACLES",
    "ScenarioError",
    "Scenario",
    "ConvergenceRow",
    "ConvergenceReport",
    "BenchmarkRecord",
    "fit_rate",
    "run_convergence",
    "run_benchmark",
    "BOUNDARY_EXIT_LIMIT",
    "MAX_COMPOSITIONS",
]

ORACLES = ("analytic-heat", "analytic-transport", "analytic-growth",
           "crank-nicolson", "tree", "none")
BOUNDARY_EXIT_LIMIT = 0.01
MAX_COMPOSITIONS = 2**20
TREE_PROBES = 9


class ScenarioError(ValueError):
    pass


def _gaussian_initial_datum(u0: ScalarField, grid: Grid) -> bool:
    x = grid.nodes
    return bool(np.max(np.abs(u0.values(x) - np.exp(-x * x))) <= 1e-14)


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    coeffs: CoefficientSet
    u0: ScalarField
    grid: Grid
    t: float
    oracle: str = "none"
    extension: Extension = Extension.CONSTANT_HOLD
    scheme: Scheme = Scheme.CUBIC
    cn_steps: int = 2048

    def __post_init__(self):
        object.__setattr__(self, "extension", Extension(self.extension))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.oracle not in ORACLES:
            raise ScenarioError(f"unknown oracle {self.oracle!r}; choose from {', '.join(ORACLES)}")
        if not self.t >= 0.0:
            raise ScenarioError("t must be >= 0")
        a, b, c = self.coeffs.a, self.coeffs.b, self.coeffs.c
        if self.oracle == "analytic-heat":
            if a.constant_value() is None or a.constant_value() == 0.0:
                raise ScenarioError("analytic-heat needs a nonzero constant a")
            if not (b.is_zero() and c.is_zero()):
                raise ScenarioError("analytic-heat needs b = c = 0")
            if not _gaussian_initial_datum(self.u0, self.grid):
                raise ScenarioError("analytic-heat needs u0 = exp(-x^2)")
        elif self.oracle == "analytic-transport":
            if not (a.is_zero() and c.is_zero()) or b.constant_value() is None:
                raise ScenarioError("analytic-transport needs a = c = 0 and constant b")
        elif self.oracle == "analytic-growth":
            if not (a.is_zero() and b.is_zero()) or c.constant_value() is None:
                raise ScenarioError("analytic-growth needs a = b = 0 and constant c")
        elif self.oracle == "crank-nicolson" and self.cn_steps < 1:
            raise ScenarioError("cn_steps must be >= 1")

    def initial(self) -> GridFunction:
        return sample(self.u0, self.grid, self.extension)

    def probe_indices(self) -> np.ndarray:
        idx = np.flatnonzero(interior_mask(self.grid))
        return idx[np.linspace(0, len(idx) - 1, TREE_PROBES).round().astype(int)]

    def reference(self) -> tuple[np.ndarray, np.ndarray]:
        """Node indices and oracle values there; the exact solution at time t."""
        x = self.grid.nodes
        idx = np.flatnonzero(interior_mask(self.grid))
        if self.oracle == "analytic-heat":
            D = self.coeffs.a.constant_value() ** 2
            return idx, heat_analytic(D, self.t, x[idx])
        if self.oracle == "analytic-transport":
            beta = self.coeffs.b.constant_value()
            return idx, transport_analytic(self.u0, beta, self.t, x[idx])
        if self.oracle == "analytic-growth":
            kappa = self.coeffs.c.constant_value()
            return idx, growth_analytic(self.u0, kappa, self.t, x[idx])
        if self.oracle == "crank-nicolson":
            ref = crank_nicolson(self.initial(), self.coeffs, self.t, self.cn_steps)
            return idx, ref.values[idx]
        raise ScenarioError(f"oracle {self.oracle!r} has no exact reference")


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    error: float
    seconds: float


@dataclass
class ConvergenceReport:
    scenario: str
    rows: list[ConvergenceRow]
    fitted_rate: float
    warnings: list[str] = field(default_factory=list)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# scenario={self.scenario} fitted_rate={self.fitted_rate:.6g}\n")
            fh.write("n,error,seconds\n")
            for r in self.rows:
                fh.write(f"{r.n},{r.error:.17g},{r.seconds:.6g}\n")


def fit_rate(rows) -> float:
    """Negated least-squares slope of log(error) against log(n).

    ``rows`` is a sequence of ``(n, error)`` pairs or :class:`ConvergenceRow`.
    """
    pairs = [(r.n, r.error) if isinstance(r, ConvergenceRow) else tuple(r) for r in rows]
    if len(pairs) < 2:
        raise ValueError("need at least two rows to fit a rate")
    ns = np.array([p[0] for p in pairs], dtype=float)
    errs = np.array([p[1] for p in pairs], dtype=float)
    if np.any(errs <= 0.0):
        raise ValueError("errors must be positive to fit a rate")
    if np.ptp(ns) == 0.0:
        raise ValueError("need at least two distinct n")
    return float(-np.polyfit(np.log(ns), np.log(errs), 1)[0])


def _interior_error(scenario: Scenario, n: int, reference) -> tuple[float, float]:
    u0 = scenario.initial()
    params = ChernoffParams(scenario.t, n, scenario.scheme)
    start = time.perf_counter()
    result = chernoff_iterate(u0, params, scenario.coeffs)
    seconds = time.perf_counter() - start
    if scenario.oracle == "tree":
        idx = scenario.probe_indices()
        x = scenario.grid.nodes
        ref = np.array([tree_evaluate(x[i], scenario.t, n, scenario.coeffs, scenario.u0)
                        for i in idx])
    else:
        idx, ref = reference
    return float(np.max(np.abs(result.u.values[idx] - ref))), seconds


def _exit_warning(scenario: Scenario, n: int) -> str | None:
    if scenario.t == 0.0:
        return None
    stencil = ShiftStencil(scenario.grid, scenario.t / n, scenario.coeffs,
                           scenario.scheme, scenario.extension)
    if stencil.exit_fraction > BOUNDARY_EXIT_LIMIT:
        msg = (f"n={n}: {100 * stencil.exit_fraction:.2f}% of shift targets leave "
               f"the window [{scenario.grid.x_min}, {scenario.grid.x_max}]")
        log.warning("%s: %s", scenario.name, msg)
        return msg
    return None


def run_convergence(scenario: Scenario, ns) -> ConvergenceReport:
    """Interior sup error of the grid solver against the scenario's oracle for each n."""
    ns = sorted(int(n) for n in ns)
    if not ns or ns[0] < 1:
        raise ValueError("ns must be a nonempty list of positive counts")
    if scenario.oracle == "none":
        raise ScenarioError(f"scenario {scenario.name!r} has no oracle")
    reference = None if scenario.oracle == "tree" else scenario.reference()
    rows, warnings = [], []
    for n in ns:
        error, seconds = _interior_error(scenario, n, reference)
        rows.append(ConvergenceRow(n, error, seconds))
        msg = _exit_warning(scenario, n)
        if msg:
            warnings.append(msg)
    try:
        rate = fit_rate(rows)
    except ValueError:
        rate = float("nan")
    return ConvergenceReport(scenario.name, rows, rate, warnings)


@dataclass(frozen=True)
class BenchmarkRecord:
    scenario: str
    target_error: float
    chernoff_n: int
    chernoff_error: float
    chernoff_seconds: float
    chernoff_reached: bool
    cn_steps: int
    cn_error: float
    cn_seconds: float
    cn_reached: bool

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# scenario={self.scenario} target_error={self.target_error:.6g}\n")
            fh.write("method,parameter,error,seconds,reached\n")
            fh.write(f"chernoff,{self.chernoff_n},{self.chernoff_error:.17g},"
                     f"{self.chernoff_seconds:.6g},{int(self.chernoff_reached)}\n")
            fh.write(f"crank-nicolson,{self.cn_steps},{self.cn_error:.17g},"
                     f"{self.cn_seconds:.6g},{int(self.cn_reached)}\n")


def _best_of(fn, repeats: int = 3) -> float:
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _search(run, target: float, cap: int):
    """Double the count from 1 until ``run(count)`` meets the target or the cap."""
    count = 1
    while True:
        error = run(count)
        if error <= target:
            return count, error, True
        if count * 2 > cap:
            return count, error, False
        count *= 2


def run_benchmark(scenario: Scenario, target_error: float,
                  cap: int = MAX_COMPOSITIONS) -> BenchmarkRecord:
    """Smallest power-of-two n (Chernoff) and steps (Crank-Nicolson) meeting the target.

    Times are the best of three runs at the chosen parameters.  Running out of
    budget is reported through the ``*_reached`` flags, not raised.
    """
    if scenario.oracle in ("none", "tree"):
        raise ScenarioError(f"benchmark needs an exact oracle, scenario {scenario.name!r} "
                            f"has {scenario.oracle!r}")
    idx, ref = scenario.reference()
    u0 = scenario.initial()

    def chernoff_error(n):
        params = ChernoffParams(scenario.t, n, scenario.scheme)
        u = chernoff_iterate(u0, params, scenario.coeffs).u
        return float(np.max(np.abs(u.values[idx] - ref)))

    def cn_error(steps):
        u = crank_nicolson(u0, scenario.coeffs, scenario.t, steps)
        return float(np.max(np.abs(u.values[idx] - ref)))

    n, n_err, n_ok = _search(chernoff_error, target_error, cap)
    steps, s_err, s_ok = _search(cn_error, target_error, cap)
    n_time = _best_of(lambda: chernoff_iterate(u0, ChernoffParams(scenario.t, n, scenario.scheme),
                                               scenario.coeffs))
    s_time = _best_of(lambda: crank_nicolson(u0, scenario.coeffs, scenario.t, steps))
    record = BenchmarkRecord(scenario.name, float(target_error), n, n_err, n_time, n_ok,
                             steps, s_err, s_time, s_ok)
    log.info("benchmark %s: chernoff n=%d (%.3gs), crank-nicolson steps=%d (%.3gs)",
             scenario.name, n, n_time, steps, s_time)
    return record
