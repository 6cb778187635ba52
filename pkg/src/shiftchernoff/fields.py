"""Coefficient functions and initial data, with sup-norm estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import exprlang
from .exprlang import Expression
from .griddata import Grid, GridFunction, Scheme, interpolate

__all__ = ["ScalarField", "CoefficientSet", "field_eval", "sup_norm_estimate"]


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real function of one variable, backed by an expression or by samples.

    Sample-backed fields are read through :func:`griddata.interpolate` with
    ``scheme`` and the grid function's own extension policy.
    """

    backing: Union[Expression, GridFunction]
    label: str = ""
    scheme: Scheme = Scheme.CUBIC

    @classmethod
    def from_text(cls, source: str, label: str = "") -> "ScalarField":
        return cls(exprlang.parse(source), label or source)

    @classmethod
    def constant(cls, value: float, label: str = "") -> "ScalarField":
        node = exprlang.Num(abs(float(value)))
        if value < 0:
            node = exprlang.Neg(node)
        return cls(node, label or repr(float(value)))

    @property
    def expression(self) -> Expression | None:
        return None if isinstance(self.backing, GridFunction) else self.backing

    @property
    def source(self) -> str:
        if self.expression is not None:
            return exprlang.to_source(self.expression)
        return self.label or "<samples>"

    def __call__(self, x: float) -> float:
        return field_eval(self, x)

    def values(self, xs) -> np.ndarray:
        """Vectorized evaluation."""
        if isinstance(self.backing, GridFunction):
            return np.asarray(interpolate(self.backing, np.asarray(xs, dtype=float),
                                          self.scheme), dtype=float)
        return exprlang.evaluate_array(self.backing, xs)

    def constant_value(self) -> float | None:
        """The value if the field is manifestly constant (no ``x`` in it)."""
        if self.expression is None or exprlang.depends_on_x(self.expression):
            return None
        return exprlang.evaluate(self.expression, 0.0)

    def is_zero(self) -> bool:
        return self.constant_value() == 0.0

    def __repr__(self):
        return f"ScalarField({self.source!r})"


def field_eval(f: ScalarField, x: float) -> float:
    if isinstance(f.backing, GridFunction):
        return float(interpolate(f.backing, float(x), f.scheme))
    return exprlang.evaluate(f.backing, x)


def sup_norm_estimate(f: ScalarField, window: tuple[float, float], samples: int) -> float:
    """Max of ``|f|`` over ``samples`` equispaced points, endpoints included.

    A dense-sampling stand-in for the sup norm over the window; it never
    exceeds the true sup, and refining along nested sample sets
    (``samples - 1`` multiplied by an integer) never lowers it.
    """
    lo, hi = window
    if not lo < hi:
        raise ValueError(f"degenerate window [{lo}, {hi}]")
    if samples < 2:
        raise ValueError("need at least 2 samples")
    xs = np.linspace(lo, hi, int(samples))
    return float(np.max(np.abs(f.values(xs))))


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """The triple (a, b, c) of ``u_t = a^2 u_xx + b u_x + c u``.

    ``c_sup`` estimates ``sup|c|``, the exponential growth bound of the
    approximating operators.  Build with :meth:`for_grid` so that it dominates
    ``|c|`` at every node the solver touches.
    """

    a: ScalarField
    b: ScalarField
    c: ScalarField
    c_sup: float

    def __post_init__(self):
        if not (self.c_sup >= 0.0 and np.isfinite(self.c_sup)):
            raise ValueError(f"c_sup must be finite and nonnegative, got {self.c_sup}")

    @classmethod
    def on_window(cls, a, b, c, window: tuple[float, float], samples: int = 10001):
        a, b, c = (_as_field(v) for v in (a, b, c))
        return cls(a, b, c, sup_norm_estimate(c, window, samples))

    @classmethod
    def for_grid(cls, a, b, c, grid: Grid) -> "CoefficientSet":
        return cls.on_window(a, b, c, (grid.x_min, grid.x_max), grid.points)

    @classmethod
    def constant(cls, a: float, b: float, c: float) -> "CoefficientSet":
        return cls(ScalarField.constant(a), ScalarField.constant(b),
                   ScalarField.constant(c), abs(float(c)))


def _as_field(value) -> ScalarField:
    if isinstance(value, ScalarField):
        return value
    if isinstance(value, str):
        return ScalarField.from_text(value)
    return ScalarField.constant(value)
