"""Shift-operator Chernoff approximations for u_t = a(x)^2 u_xx + b(x) u_x + c(x) u."""

from .chernoff import (
    ChernoffParams,
    SolveResult,
    apply_H,
    apply_S,
    chernoff_iterate,
    norm_bound_check,
    tangency_residual,
    tangency_study,
)
from .exprlang import evaluate, parse
from .fields import CoefficientSet, ScalarField, field_eval, sup_norm_estimate
from .griddata import Extension, Grid, GridFunction, Scheme, interpolate, sample
from .oracles import (
    crank_nicolson,
    growth_analytic,
    heat_analytic,
    transport_analytic,
    tree_evaluate,
)
from .study import Scenario, fit_rate, run_benchmark, run_convergence

__version__ = "0.1.0"
