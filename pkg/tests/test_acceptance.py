"""Acceptance criteria.  Each test records one PASS/FAIL line, printed in the
terminal summary:

    pytest tests/test_acceptance.py -v
"""

import math
import random
import re
import struct
import sys

import numpy as np
import pytest

from conftest import CONFIGS, ROOT
from exprgen import random_tree
from shiftchernoff import cli
from shiftchernoff.chernoff import (
    ChernoffParams,
    apply_S,
    chernoff_iterate,
    norm_bound_check,
    tangency_study,
)
from shiftchernoff.exprlang import ExprDomainError, evaluate, parse, to_source, to_source_full
from shiftchernoff.fields import CoefficientSet, ScalarField
from shiftchernoff.griddata import Grid, GridFunction, interior_mask, interpolate, sample
from shiftchernoff.oracles import crank_nicolson, heat_analytic, tree_evaluate
from shiftchernoff.study import Scenario, run_convergence

GAUSS = ScalarField.from_text("exp(-x^2)")
A_VAR, B_VAR, C_VAR = "0.5+0.1*sin(x)", "0.2*cos(x)", "-0.1"


def strictly_decreasing(errors, inversions=0, slack=0.0):
    """At most ``inversions`` adjacent increases, each below ``slack`` relative."""
    ups = [(e0, e1) for e0, e1 in zip(errors, errors[1:]) if e1 >= e0]
    return len(ups) <= inversions and all(e1 <= e0 * (1 + slack) for e0, e1 in ups)


def test_criterion_1_identity_and_norm_bound(verdict):
    rng = np.random.default_rng(20241016)
    grid = Grid(-8, 8, 257)
    worst_margin = -math.inf
    failures = 0
    identity_ok = constant_ok = True
    for _ in range(100):
        f = GridFunction(grid, rng.uniform(-1, 1, grid.points) * rng.uniform(0.1, 10))
        tau = float(10 ** rng.uniform(-4, 0.5))
        a0, a1, b0, c0, c1 = rng.uniform(-2, 2), rng.uniform(0, 0.5), rng.uniform(-3, 3), \
            rng.uniform(-1, 1), rng.uniform(0, 0.5)
        coeffs = CoefficientSet.for_grid(f"{a0!r} + {a1!r}*sin(x)", f"{b0!r}*cos(x/3)",
                                         f"{c0!r} + {c1!r}*cos(2*x)", grid)
        lhs, rhs, holds = norm_bound_check(f, tau, coeffs, "linear")
        failures += not holds
        worst_margin = max(worst_margin, (lhs - rhs) / rhs)
        identity_ok &= np.array_equal(apply_S(f, 0.0, coeffs, "linear").values, f.values)
        no_c = CoefficientSet.for_grid(f"{a0!r} + {a1!r}*sin(x)", f"{b0!r}*cos(x/3)", "0", grid)
        one = apply_S(sample(ScalarField.from_text("1"), grid), tau, no_c, "linear")
        constant_ok &= bool(np.all(one.values == 1.0))
    verdict(failures == 0 and identity_ok and constant_ok,
            f"norm bound held in {100 - failures}/100 draws (max (lhs-rhs)/rhs = {worst_margin:.2e}); "
            f"S(0)f == f: {identity_ok}; S(tau)1 == 1 with c=0: {constant_ok}")


def _tangency(a):
    grid = Grid(-8, 8, 1025)
    coeffs = CoefficientSet.for_grid(a, B_VAR, C_VAR, grid)
    return tangency_study(GAUSS, coeffs, grid, (1e-1, 1e-2, 1e-3, 1e-4))


def test_criterion_2_tangency_rate_variable_a(verdict):
    residuals, slope = _tangency(A_VAR)
    decreasing = strictly_decreasing(residuals)
    verdict(decreasing and 0.4 <= slope <= 0.7,
            f"residuals {np.array2string(residuals, precision=3)}, decreasing: {decreasing}, "
            f"log-log slope {slope:.4f} (required [0.4, 0.7])")


def test_criterion_2_tangency_rate_a_zero(verdict):
    residuals, slope = _tangency("0")
    decreasing = strictly_decreasing(residuals)
    verdict(decreasing and 0.9 <= slope <= 1.1,
            f"residuals {np.array2string(residuals, precision=3)}, decreasing: {decreasing}, "
            f"log-log slope {slope:.4f} (required [0.9, 1.1])")


def test_criterion_3_growth_oracle(verdict):
    grid = Grid(-8, 8, 129)
    coeffs = CoefficientSet.constant(0, 0, 0.3)
    u0 = sample(ScalarField.from_text("1"), grid)
    worst = 0.0
    final = None
    for n in (1, 2, 10, 100, 1000):
        u = chernoff_iterate(u0, ChernoffParams(1.0, n), coeffs).u.values
        closed = (1 + 0.3 / n) ** n
        worst = max(worst, float(np.max(np.abs(u - closed) / closed)))
        final = u
    gap = float(np.max(np.abs(final - math.exp(0.3))))
    verdict(worst < 1e-12 and gap < 1e-4,
            f"max relative deviation from (1+0.3/n)^n = {worst:.2e} (< 1e-12); "
            f"|u - e^0.3| at n=1000 = {gap:.3e} (< 1e-4)")


def test_criterion_4_transport_oracle(verdict):
    scenario = Scenario("transport", CoefficientSet.constant(0, 1, 0), GAUSS,
                        Grid.with_spacing(-8, 8, 1 / 128), 0.5, "analytic-transport")
    report = run_convergence(scenario, [64, 256, 1024, 2048])
    errs = report.errors
    verdict(strictly_decreasing(errs) and errs[-1] < 1e-2,
            f"errors {np.array2string(errs, precision=3)}, final < 1e-2, "
            f"fitted rate {report.fitted_rate:.3f}")


def test_criterion_5_heat_oracle(verdict):
    scenario = Scenario("heat", CoefficientSet.constant(0.5, 0, 0), GAUSS,
                        Grid.with_spacing(-8, 8, 1 / 128), 1.0, "analytic-heat")
    report = run_convergence(scenario, [64, 256, 1024, 4096])
    errs = report.errors
    verdict(strictly_decreasing(errs, inversions=1, slack=0.05) and errs[-1] < 1e-2,
            f"errors {np.array2string(errs, precision=3)}, final < 1e-2, "
            f"fitted rate {report.fitted_rate:.3f} (reported only)")


def test_criterion_6_tree_oracle_equivalence(verdict):
    grid = Grid.with_spacing(-8, 8, 1 / 512)
    coeffs = CoefficientSet.for_grid(A_VAR, B_VAR, C_VAR, grid)
    u0 = sample(GAUSS, grid)
    probe = np.linspace(-7.9, 7.9, 20001)
    interp_err = float(np.max(np.abs(interpolate(u0, probe, "cubic") - np.exp(-probe**2))))
    t = 0.5
    scenario = Scenario("tree", coeffs, GAUSS, grid, t, "tree")
    idx = scenario.probe_indices()
    worst = 0.0
    for n in range(1, 7):
        u = chernoff_iterate(u0, ChernoffParams(t, n), coeffs).u.values
        for i in idx:
            worst = max(worst, abs(u[i] - tree_evaluate(grid.nodes[i], t, n, coeffs, GAUSS)))
    verdict(interp_err < 1e-7 and worst <= 1e-6,
            f"cubic interpolation error {interp_err:.2e} (< 1e-7); "
            f"max |grid - tree| over n=1..6, {len(idx)} probes = {worst:.2e} (<= 1e-6)")


def test_criterion_7_cross_method_agreement(verdict, tmp_path):
    grid = Grid.with_spacing(-8, 8, 1 / 128)
    coeffs = CoefficientSet.for_grid(A_VAR, B_VAR, C_VAR, grid)
    u0 = sample(GAUSS, grid)
    chern = chernoff_iterate(u0, ChernoffParams(0.5, 4096), coeffs).u.values
    cn = crank_nicolson(u0, coeffs, 0.5, 2048).values
    m = interior_mask(grid)
    gap = float(np.max(np.abs(chern[m] - cn[m])))
    status = cli.main(["bench", str(CONFIGS / "variable.cfg"), "--out-dir", str(tmp_path)])
    record = (tmp_path / "variable.csv").read_text().splitlines() if status == 0 else []
    emitted = (len(record) == 4 and record[1] == "method,parameter,error,seconds,reached"
               and record[2].startswith("chernoff,") and record[3].startswith("crank-nicolson,"))
    verdict(gap <= 2e-2 and emitted,
            f"interior |chernoff(n=4096) - crank-nicolson(2048 steps)| = {gap:.2e} (<= 2e-2); "
            f"bench record: {record[2:] if emitted else 'missing'}")


def test_criterion_8_crank_nicolson_self_validation(verdict):
    errs = []
    for dx, steps in [(1 / 64, 1024), (1 / 128, 2048)]:
        grid = Grid.with_spacing(-8, 8, dx)
        u = crank_nicolson(sample(GAUSS, grid), CoefficientSet.constant(0.5, 0, 0), 1.0, steps)
        m = interior_mask(grid)
        errs.append(float(np.max(np.abs(u.values[m] - heat_analytic(0.25, 1.0, grid.nodes[m])))))
    ratio = errs[0] / errs[1]
    verdict(errs[0] < 1e-4 and 3.5 <= ratio <= 4.5,
            f"error at (dx=1/64, 1024 steps) = {errs[0]:.3e} (< 1e-4); "
            f"reduction under dx, dt halving = {ratio:.3f} (within [3.5, 4.5])")


def _outcome(node, x):
    try:
        return struct.pack("<d", evaluate(node, x))
    except ExprDomainError as exc:
        return exc.reason


def test_criterion_9_parser_suite(verdict, tmp_path, capsys):
    rng = random.Random(9)
    round_trip = precedence = 0
    total = 1000
    for _ in range(total):
        tree = random_tree(rng, depth=5)
        minimal = parse(to_source(tree))
        full = parse(to_source_full(tree))
        round_trip += minimal == tree and full == tree
        x = rng.uniform(-4, 4)
        precedence += _outcome(full, x) == _outcome(minimal, x)

    configs = sorted(CONFIGS.glob("*.cfg"))
    parsed = 0
    for path in configs:
        cfg = cli.load_config(path)
        for key in ("a", "b", "c", "u0"):
            cfg.expr(key)
        parsed += 1

    bad = sorted((ROOT / "tests" / "fixtures" / "bad").glob("*.cfg"))
    located = 0
    for path in bad:
        status = cli.main(["solve", str(path), "--out-dir", str(tmp_path)])
        err = capsys.readouterr().err
        located += status != 0 and bool(re.search(r"key '[^']+'|offset \d+", err))

    verdict(round_trip == total and precedence == total and parsed == len(configs) > 0
            and located == len(bad) > 0,
            f"round trip {round_trip}/{total}, precedence {precedence}/{total}, "
            f"configs parsed {parsed}/{len(configs)}, "
            f"malformed diagnostics located {located}/{len(bad)}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
