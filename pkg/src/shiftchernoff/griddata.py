"""Uniform 1D grids, sampled functions, interpolation and window extension.

A :class:`GridFunction` stands in for a bounded function on the real line:
inside ``[x_min, x_max]`` it is read through linear or Catmull-Rom cubic
interpolation, outside it is resolved by an extension policy.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Extension",
    "Scheme",
    "Grid",
    "GridFunction",
    "sample",
    "interpolate",
    "interp_weights",
    "apply_weights",
    "interior_mask",
    "write_csv",
    "read_csv",
]


class Extension(str, enum.Enum):
    CONSTANT_HOLD = "constant-hold"
    PERIODIC = "periodic"
    ZERO = "zero"


class Scheme(str, enum.Enum):
    LINEAR = "linear"
    CUBIC = "cubic"


@dataclass(frozen=True)
class Grid:
    """Uniform lattice ``x_min + i*dx`` for ``i = 0 .. points-1``."""

    x_min: float
    x_max: float
    points: int

    def __post_init__(self):
        if not (np.isfinite(self.x_min) and np.isfinite(self.x_max)):
            raise ValueError("grid bounds must be finite")
        if not self.x_min < self.x_max:
            raise ValueError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"a grid needs at least 2 points, got {self.points}")
        object.__setattr__(self, "points", int(self.points))

    @classmethod
    def with_spacing(cls, x_min: float, x_max: float, dx: float) -> "Grid":
        """Grid on ``[x_min, x_max]`` whose spacing is exactly ``dx``."""
        cells = (x_max - x_min) / dx
        if abs(cells - round(cells)) > 1e-9 * max(1.0, cells):
            raise ValueError(f"dx={dx} does not divide the window [{x_min}, {x_max}]")
        return cls(x_min, x_max, int(round(cells)) + 1)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.points - 1)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @cached_property
    def nodes(self) -> np.ndarray:
        # linspace computes start + i*step, i.e. x_min + i*dx, and pins the last node
        x = np.linspace(self.x_min, self.x_max, self.points)
        x.flags.writeable = False
        return x


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray
    extension: Extension = Extension.CONSTANT_HOLD

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.points,):
            raise ValueError(
                f"expected {self.grid.points} values, got array of shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "extension", Extension(self.extension))

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values, self.extension)

    def __call__(self, x, scheme: Scheme | str = Scheme.CUBIC):
        return interpolate(self, x, scheme)


def sample(field, grid: Grid, extension: Extension | str = Extension.CONSTANT_HOLD) -> GridFunction:
    """Sample ``field`` (anything with a vectorized ``values(xs)``) at the nodes."""
    return GridFunction(grid, field.values(grid.nodes), Extension(extension))


# --- interpolation in index space -----------------------------------------------


def _catmull_rom(u: np.ndarray) -> tuple[np.ndarray, ...]:
    u2 = u * u
    u3 = u2 * u
    return (
        0.5 * (-u3 + 2.0 * u2 - u),
        0.5 * (3.0 * u3 - 5.0 * u2 + 2.0),
        0.5 * (-3.0 * u3 + 4.0 * u2 + u),
        0.5 * (u3 - u2),
    )


def interp_weights(s, points: int, scheme: Scheme | str, extension: Extension | str):
    """Gather indices and weights for reading a grid function at index positions.

    ``s`` holds fractional node indices (``(x - x_min) / dx``).  Returns
    ``(idx, w)`` of shape ``(len(s), k)``, ``k`` = 2 (linear) or 4 (cubic).
    Column 0 is the base node ``floor(s)``; the value is then
    ``v[idx0] + sum_k w[:, k] * (v[idx_k] - v[idx0])`` over ``k >= 1``, which
    reproduces constants and nodes exactly.  Extension is folded into the
    indices: ghost nodes are clamped (constant-hold), wrapped (periodic,
    period ``points - 1``) or sent to index ``points``, a zero slot appended
    by :func:`apply_weights` (zero).
    """
    scheme = Scheme(scheme)
    extension = Extension(extension)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    last = points - 1
    outside = (s < 0.0) | (s > last)

    if extension is Extension.CONSTANT_HOLD:
        s = np.clip(s, 0.0, float(last))
    elif extension is Extension.PERIODIC:
        s = np.mod(s, float(last))
    else:
        s = np.where(outside, 0.0, s)

    j = np.floor(s)
    u = s - j
    j = j.astype(np.intp)
    if scheme is Scheme.LINEAR:
        offsets = np.array([0, 1])
        weights = (1.0 - u, u)
    else:
        offsets = np.array([0, -1, 1, 2])
        wm1, w0, w1, w2 = _catmull_rom(u)
        weights = (w0, wm1, w1, w2)
    idx = j[:, None] + offsets[None, :]
    w = np.stack(weights, axis=1)

    if extension is Extension.CONSTANT_HOLD:
        idx = np.clip(idx, 0, last)
    elif extension is Extension.PERIODIC:
        idx = np.mod(idx, last)
    else:
        ghost = (idx < 0) | (idx > last) | outside[:, None]
        idx = np.where(ghost, points, idx)
    return idx, w


def apply_weights(values: np.ndarray, idx: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Evaluate a gather from :func:`interp_weights` in a fixed order."""
    padded = np.append(values, 0.0)
    base = padded[idx[:, 0]]
    out = base
    for k in range(1, idx.shape[1]):
        out = out + w[:, k] * (padded[idx[:, k]] - base)
    return out


def _index_position(grid: Grid, x: np.ndarray) -> np.ndarray:
    s = (x - grid.x_min) / grid.dx
    # snap rounding noise so that nodes are reproduced exactly
    r = np.round(s)
    near = np.abs(s - r) <= 64 * np.finfo(float).eps * np.maximum(1.0, np.abs(s))
    return np.where(near, r, s)


def interpolate(f: GridFunction, x, scheme: Scheme | str = Scheme.CUBIC):
    """Value of ``f`` at ``x`` (scalar or array).

    Linear is a convex combination of the bracketing nodes.  Cubic uses
    Catmull-Rom weights on the four nodes around the bracketing cell: exact for
    quadratics, fourth order at cell midpoints, third order elsewhere.
    Points outside the window are resolved by ``f.extension``.
    """
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise ValueError("interpolation point must be finite")
    s = _index_position(f.grid, np.atleast_1d(xa))
    idx, w = interp_weights(s, f.grid.points, scheme, f.extension)
    out = apply_weights(f.values, idx, w)
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


def interior_mask(grid: Grid) -> np.ndarray:
    """Nodes in the middle half of the window."""
    mid = 0.5 * (grid.x_min + grid.x_max)
    return np.abs(grid.nodes - mid) <= 0.25 * grid.length


# --- CSV ----------------------------------------------------------------------


def write_csv(f: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("x,u\n")
        for x, u in zip(f.grid.nodes, f.values):
            fh.write(f"{x:.17g},{u:.17g}\n")


def read_csv(path, extension: Extension | str = Extension.CONSTANT_HOLD) -> GridFunction:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["x", "u"]:
            raise ValueError(f"{path}: expected header 'x,u', got {','.join(header)!r}")
        rows = [(float(x), float(u)) for x, u in reader]
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two rows")
    xs = np.array([r[0] for r in rows])
    grid = Grid(xs[0], xs[-1], len(xs))
    if not np.allclose(xs, grid.nodes, rtol=0.0, atol=1e-12 * max(1.0, np.abs(xs).max())):
        raise ValueError(f"{path}: x column is not a uniform grid")
    return GridFunction(grid, np.array([r[1] for r in rows]), extension)
