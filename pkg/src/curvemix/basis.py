"""Regression bases for curve models: raw polynomials and clamped B-splines.

Inputs are used as given. Monomial columns get badly conditioned on wide
input ranges, so rescale x to roughly [0, 1] before fitting high degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np


class InvalidInputError(ValueError):
    """Raised when data or basis arguments violate their preconditions."""


POLYNOMIAL = "polynomial"
BSPLINE = "bspline"


@dataclass(frozen=True)
class BasisSpec:
    kind: str
    degree: int
    interior_knots: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in (POLYNOMIAL, BSPLINE):
            raise InvalidInputError(f"unknown basis kind {self.kind!r}")
        if int(self.degree) != self.degree or self.degree < 0:
            raise InvalidInputError("degree must be a non-negative integer")
        knots = tuple(float(k) for k in self.interior_knots)
        object.__setattr__(self, "interior_knots", knots)
        object.__setattr__(self, "degree", int(self.degree))
        if self.kind == POLYNOMIAL and knots:
            raise InvalidInputError("polynomial basis takes no knots")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise InvalidInputError("interior knots must be strictly increasing")

    @property
    def n_coef(self) -> int:
        return self.degree + 1 + len(self.interior_knots)

    @classmethod
    def polynomial(cls, degree: int) -> "BasisSpec":
        return cls(POLYNOMIAL, degree)

    @classmethod
    def bspline_uniform(cls, degree: int, n_knots: int, x) -> "BasisSpec":
        """B-spline spec with ``n_knots`` equally spaced interior knots over the range of x."""
        x = np.asarray(x, dtype=float)
        lo, hi = float(np.min(x)), float(np.max(x))
        knots = np.linspace(lo, hi, n_knots + 2)[1:-1]
        return cls(BSPLINE, degree, tuple(knots))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "degree": self.degree,
                "interior_knots": list(self.interior_knots)}

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSpec":
        return cls(d["kind"], d["degree"], tuple(d.get("interior_knots", ())))


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    source_spec: BasisSpec

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def shape(self):
        return self.values.shape


def _check_grid(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise InvalidInputError("x must be a non-empty 1-d grid")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("x contains non-finite values")
    return x


def polynomial_design(x, p: int) -> DesignMatrix:
    """Vandermonde matrix with columns x**0 .. x**p."""
    x = _check_grid(x)
    spec = BasisSpec.polynomial(p)
    values = np.vander(x, p + 1, increasing=True)
    return DesignMatrix(values, spec)


def clamped_knot_vector(lo: float, hi: float, p: int, interior: Sequence[float]) -> np.ndarray:
    return np.concatenate([np.full(p + 1, lo), np.asarray(interior, dtype=float),
                           np.full(p + 1, hi)])


def bspline_design(x, p: int, interior_knots: Sequence[float] = (),
                   bounds: Optional[Tuple[float, float]] = None) -> DesignMatrix:
    """B-spline design matrix via the Cox-de Boor recursion.

    The knot vector repeats each boundary value ``p + 1`` times. Boundaries
    default to ``(min(x), max(x))``; pass ``bounds`` to share one knot vector
    across several grids. The right boundary is included in the last span so
    every row is a partition of unity.
    """
    x = _check_grid(x)
    spec = BasisSpec(BSPLINE, p, tuple(interior_knots))
    lo, hi = (float(x.min()), float(x.max())) if bounds is None else map(float, bounds)
    if hi <= lo:
        raise InvalidInputError("B-spline basis needs a non-degenerate input range")
    if np.any(x < lo) or np.any(x > hi):
        raise InvalidInputError("x lies outside the B-spline boundary range")
    knots = spec.interior_knots
    if any(k <= lo or k >= hi for k in knots):
        raise InvalidInputError("interior knots must lie strictly inside the input range")

    t = clamped_knot_vector(lo, hi, p, knots)
    n_basis = len(t) - p - 1
    # degree-0 indicator of the span containing each x; x == hi goes to the last span
    span = np.searchsorted(t, x, side="right") - 1
    span = np.minimum(span, n_basis - 1)
    B = np.zeros((x.size, len(t) - 1))
    B[np.arange(x.size), span] = 1.0
    for deg in range(1, p + 1):
        nxt = np.zeros((x.size, len(t) - 1 - deg))
        for i in range(len(t) - 1 - deg):
            left_den = t[i + deg] - t[i]
            right_den = t[i + deg + 1] - t[i + 1]
            if left_den > 0:
                nxt[:, i] += (x - t[i]) / left_den * B[:, i]
            if right_den > 0:
                nxt[:, i] += (t[i + deg + 1] - x) / right_den * B[:, i + 1]
        B = nxt
    return DesignMatrix(B[:, :n_basis], spec)


def design_matrix(spec: BasisSpec, x, bounds=None) -> DesignMatrix:
    if spec.kind == POLYNOMIAL:
        return polynomial_design(x, spec.degree)
    return bspline_design(x, spec.degree, spec.interior_knots, bounds=bounds)


def curve_designs(spec: BasisSpec, x_grid: np.ndarray) -> np.ndarray:
    """Stack per-curve design matrices into an (n, m, d) array.

    B-spline boundaries come from the range over all curves so every curve
    shares one knot vector.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    bounds = (float(x_grid.min()), float(x_grid.max()))
    first = x_grid[0]
    if np.all(x_grid == first):
        X = design_matrix(spec, first, bounds=bounds).values
        return np.broadcast_to(X, (x_grid.shape[0],) + X.shape)
    return np.stack([design_matrix(spec, row, bounds=bounds).values for row in x_grid])
