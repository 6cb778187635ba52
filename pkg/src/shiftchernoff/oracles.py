"""Independent references for the grid solver.

* :func:`tree_evaluate` expands ``(S(t/n))^n u0`` literally, point by point,
  with no grid and no interpolation (cost ``4^n``).
* closed forms for the constant-coefficient cases (heat, transport, growth).
* :func:`crank_nicolson`, a classical finite-difference baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import CoefficientSet, ScalarField, field_eval
from .griddata import GridFunction

__all__ = [
    "TreeBudget",
    "TreeBudgetExceeded",
    "SingularPivotError",
    "tree_evaluate",
    "heat_analytic",
    "transport_analytic",
    "growth_analytic",
    "crank_nicolson",
    "thomas_solve",
]


class TreeBudgetExceeded(ValueError):
    pass


class SingularPivotError(ArithmeticError):
    def __init__(self, step: int, row: int):
        self.step = step
        self.row = row
        super().__init__(f"zero pivot in tridiagonal solve at step {step}, row {row}")


@dataclass(frozen=True)
class TreeBudget:
    max_depth: int = 12


def tree_evaluate(x: float, t: float, n: int, coeffs: CoefficientSet, u0: ScalarField,
                  budget: TreeBudget = TreeBudget()) -> float:
    """Exact value of ``((S(t/n))^n u0)(x)`` by full recursive expansion.

    Branches are visited in the order the operator is written (+ shift,
    - shift, drift, reaction) so the result is bit-reproducible.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > budget.max_depth:
        raise TreeBudgetExceeded(f"depth {n} exceeds tree budget {budget.max_depth}")
    tau = t / n
    root = math.sqrt(tau)

    def V(y: float, k: int) -> float:
        if k == 0:
            return field_eval(u0, y)
        a = field_eval(coeffs.a, y)
        b = field_eval(coeffs.b, y)
        c = field_eval(coeffs.c, y)
        return (0.25 * V(y + 2.0 * a * root, k - 1)
                + 0.25 * V(y - 2.0 * a * root, k - 1)
                + 0.5 * V(y + 2.0 * b * tau, k - 1)
                + tau * c * V(y, k - 1))

    return V(float(x), n)


def heat_analytic(D: float, t: float, x):
    """Solution of ``u_t = D u_xx`` from ``u(0, x) = exp(-x^2)``."""
    if not D > 0.0:
        raise ValueError("diffusivity must be positive")
    if t < 0.0:
        raise ValueError("t must be >= 0")
    s = 1.0 + 4.0 * D * t
    return np.exp(-np.square(x) / s) / np.sqrt(s)


def transport_analytic(u0: ScalarField, beta: float, t: float, x):
    """Solution of ``u_t = beta u_x``: the initial datum read at ``x + beta t``."""
    xa = np.asarray(x, dtype=float)
    out = u0.values(xa + beta * t)
    return float(out) if xa.ndim == 0 else out


def growth_analytic(u0: ScalarField, kappa: float, t: float, x):
    xa = np.asarray(x, dtype=float)
    out = math.exp(kappa * t) * u0.values(xa)
    return float(out) if xa.ndim == 0 else out


# --- Crank-Nicolson -------------------------------------------------------------


def thomas_solve(lower, diag, upper, rhs, step: int = 0) -> np.ndarray:
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``lower[i]`` multiplies ``x[i-1]`` and ``upper[i]`` multiplies ``x[i+1]``
    in row ``i``; ``lower[0]`` and ``upper[-1]`` are ignored.
    """
    factor = _thomas_factor(list(lower), list(diag), list(upper), step)
    return np.array(_thomas_substitute(factor, list(lower), list(rhs)))


def _thomas_factor(lower, diag, upper, step):
    n = len(diag)
    cp = [0.0] * n
    denom = [0.0] * n
    d = diag[0]
    if d == 0.0:
        raise SingularPivotError(step, 0)
    denom[0] = d
    cp[0] = upper[0] / d if n > 1 else 0.0
    for i in range(1, n):
        d = diag[i] - lower[i] * cp[i - 1]
        if d == 0.0:
            raise SingularPivotError(step, i)
        denom[i] = d
        cp[i] = upper[i] / d if i < n - 1 else 0.0
    return cp, denom


def _thomas_substitute(factor, lower, rhs):
    cp, denom = factor
    n = len(denom)
    y = [0.0] * n
    y[0] = rhs[0] / denom[0]
    for i in range(1, n):
        y[i] = (rhs[i] - lower[i] * y[i - 1]) / denom[i]
    for i in range(n - 2, -1, -1):
        y[i] -= cp[i] * y[i + 1]
    return y


def crank_nicolson(u0: GridFunction, coeffs: CoefficientSet, t: float,
                   steps: int) -> GridFunction:
    """Theta = 1/2 time stepping with second-order central differences.

    Endpoint values stay frozen at those of ``u0``.  The matrix does not
    change between steps, so it is factored once; a zero pivot raises
    :class:`SingularPivotError`.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    grid = u0.grid
    if grid.points < 3:
        raise ValueError("Crank-Nicolson needs at least 3 grid points")
    dt = t / steps
    dx = grid.dx
    x = grid.nodes
    a = coeffs.a.values(x)
    b = coeffs.b.values(x)
    c = coeffs.c.values(x)

    # L u_i = lo_i u_{i-1} + mid_i u_i + up_i u_{i+1}
    diff = a * a / (dx * dx)
    adv = b / (2.0 * dx)
    lo = diff - adv
    mid = -2.0 * diff + c
    up = diff + adv
    lo[0] = up[0] = mid[0] = 0.0
    lo[-1] = up[-1] = mid[-1] = 0.0

    half = 0.5 * dt
    m_lower = (-half * lo).tolist()
    m_diag = (1.0 - half * mid).tolist()
    m_upper = (-half * up).tolist()
    factor = _thomas_factor(m_lower, m_diag, m_upper, step=1)

    v = np.array(u0.values)
    for _ in range(steps):
        rhs = v + half * (mid * v)
        rhs[1:-1] += half * (lo[1:-1] * v[:-2] + up[1:-1] * v[2:])
        rhs[0], rhs[-1] = u0.values[0], u0.values[-1]
        v = np.array(_thomas_substitute(factor, m_lower, rhs.tolist()))
    return u0.with_values(v)
