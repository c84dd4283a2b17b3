"""Sampled radial functions."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch


@dataclass(frozen=True)
class RadialFunction:
    """Values and first derivatives of a function on a strictly increasing grid.

    ``theta`` optionally records the original profile coordinate of each node
    when the grid is the conformal radius r.
    """

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    theta: np.ndarray | None = None

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
            raise GridMismatch("grid must be a strictly increasing 1-D array")
        for name in ("values", "derivs"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != g.shape:
                raise GridMismatch(f"{name} has shape {arr.shape}, grid has {g.shape}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "grid", g)

    @classmethod
    def from_callable(cls, f, df, grid) -> "RadialFunction":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(f(grid), dtype=float) * np.ones_like(grid),
                   np.asarray(df(grid), dtype=float) * np.ones_like(grid))

    def __neg__(self) -> "RadialFunction":
        return RadialFunction(self.grid, -self.values, -self.derivs, self.theta)

    def scaled(self, c: float) -> "RadialFunction":
        return RadialFunction(self.grid, c * self.values, c * self.derivs, self.theta)

    def boundary_defects(self) -> tuple[float, float]:
        """(|u'(0)|, |u(R)|)."""
        return abs(float(self.derivs[0])), abs(float(self.values[-1]))

    def to_csv(self, path, comments=()) -> None:
        """Columns x, u, du; ``comments`` are written first as ``# ...`` lines."""
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["x", "u", "du"])
            for row in zip(self.grid, self.values, self.derivs):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "RadialFunction":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
        if not rows or not {"x", "u", "du"} <= set(rows[0]):
            raise GridMismatch("solution CSV needs columns x, u, du")
        arr = np.array([[float(r["x"]), float(r["u"]), float(r["du"])] for r in rows])
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])
