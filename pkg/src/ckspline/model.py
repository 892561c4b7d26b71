"""Piecewise polynomials in center-shifted monomial form.

A spline is described by breakpoints xi_0 < ... < xi_m, one coefficient row
per segment, per-segment centers pinned to the segment midpoints, and an
invertible affine map between data coordinates and the internal coordinates
the breakpoints live in.  Segment i (numbered 1..m) evaluates as

    p_i(x) = sum_t coefficients[i-1, t] * (x - centers[i-1])**t

in internal coordinates.  The centered basis keeps powers of the offset
small, which conditions both evaluation and gradient-based fitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "DomainMap",
    "SampleSet",
    "SplineModel",
    "segment_index",
    "eval_segment",
    "evaluate",
    "rebase",
]

# Relative grace band at the domain ends; absorbs the round-off picked up
# when data endpoints travel through the affine map.
EDGE_SLACK = 1e-12


class DomainError(ValueError):
    """An abscissa fell outside the spline's domain."""


@dataclass(frozen=True)
class DomainMap:
    """Invertible affine map a*x + b from data coordinates to internal ones."""

    a: float = 1.0
    b: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("domain map parameters must be finite")
        if self.a == 0.0:
            raise ValueError("domain map must be invertible (a != 0)")

    def forward(self, x):
        return self.a * x + self.b

    def inverse(self, t):
        return (t - self.b) / self.a


@dataclass(frozen=True)
class SampleSet:
    """Sorted sample abscissae with target values."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if xs.ndim != 1 or xs.shape != ys.shape:
            raise ValueError("xs and ys must be one-dimensional and the same length")
        if xs.size < 2:
            raise ValueError("need at least 2 samples")
        if not (np.isfinite(xs).all() and np.isfinite(ys).all()):
            raise ValueError("samples must be finite")
        if np.any(np.diff(xs) < 0.0):
            raise ValueError("sample abscissae must be sorted non-decreasing")

    def __len__(self) -> int:
        return self.xs.size


@dataclass
class SplineModel:
    """Trainable piecewise polynomial.

    Attributes
    ----------
    breakpoints : (m+1,) strictly increasing internal abscissae.
    degree : polynomial degree d >= 0, shared by all segments.
    coefficients : (m, d+1) matrix, lowest power first, in each segment's
        center-shifted basis.  Training and repair update this in place or
        replace it wholesale; everything else treats the model as read-only,
        so concurrent evaluation is safe.
    centers : (m,) segment midpoints.
    domain_map : affine map from data coordinates to internal coordinates.
    """

    breakpoints: np.ndarray
    degree: int
    coefficients: np.ndarray
    centers: np.ndarray
    domain_map: DomainMap = field(default_factory=DomainMap)

    def __post_init__(self):
        xi = np.asarray(self.breakpoints, dtype=float)
        coeffs = np.asarray(self.coefficients, dtype=float)
        centers = np.asarray(self.centers, dtype=float)
        self.breakpoints, self.coefficients, self.centers = xi, coeffs, centers
        if xi.ndim != 1 or xi.size < 2:
            raise ValueError("need at least one segment (two breakpoints)")
        if not np.isfinite(xi).all() or np.any(np.diff(xi) <= 0.0):
            raise ValueError("breakpoints must be finite and strictly increasing")
        if not isinstance(self.degree, (int, np.integer)) or self.degree < 0:
            raise ValueError("degree must be a non-negative integer")
        self.degree = int(self.degree)
        m = xi.size - 1
        if coeffs.shape != (m, self.degree + 1):
            raise ValueError(
                f"coefficients must have shape ({m}, {self.degree + 1}), got {coeffs.shape}"
            )
        if not np.isfinite(coeffs).all():
            raise ValueError("coefficients must be finite")
        mid = 0.5 * (xi[:-1] + xi[1:])
        if centers.shape != (m,) or np.any(np.abs(centers - mid) > np.spacing(np.abs(mid))):
            raise ValueError("centers must sit at the segment midpoints")
        if not isinstance(self.domain_map, DomainMap):
            raise ValueError("domain_map must be a DomainMap")

    @classmethod
    def from_breakpoints(cls, breakpoints, degree, coefficients=None, domain_map=None):
        """Build a model with midpoint centers; zero coefficients by default."""
        xi = np.asarray(breakpoints, dtype=float)
        if coefficients is None:
            coefficients = np.zeros((xi.size - 1, degree + 1))
        if domain_map is None:
            domain_map = DomainMap()
        centers = 0.5 * (xi[:-1] + xi[1:])
        return cls(xi, degree, np.asarray(coefficients, dtype=float), centers, domain_map)

    @property
    def num_segments(self) -> int:
        return self.centers.size

    def copy(self) -> "SplineModel":
        return SplineModel(
            self.breakpoints.copy(),
            self.degree,
            self.coefficients.copy(),
            self.centers.copy(),
            self.domain_map,
        )

    def __call__(self, x, j: int = 0):
        return evaluate(self, x, j)


def _locate(breakpoints, t):
    """0-based coefficient row for internal coordinates, half-open ownership."""
    idx = np.searchsorted(breakpoints, t, side="right") - 1
    return np.clip(idx, 0, breakpoints.size - 2)


def segment_index(model: SplineModel, x: float) -> int:
    """Segment number (1-based) owning internal coordinate x.

    An interior breakpoint belongs to the segment on its right; the last
    segment is closed at xi_m.  Lookup is a binary search.
    """
    xi = model.breakpoints
    slack = EDGE_SLACK * (xi[-1] - xi[0])
    if not xi[0] - slack <= x <= xi[-1] + slack:
        raise DomainError(f"x={x!r} outside spline domain [{xi[0]!r}, {xi[-1]!r}]")
    return int(_locate(xi, min(max(x, xi[0]), xi[-1]))) + 1


def _derivative_coefficients(coeffs, j):
    """Coefficients of the j-th derivative in the same shifted basis."""
    d = len(coeffs) - 1
    if j == 0:
        return np.asarray(coeffs, dtype=float)
    if j > d:
        return np.zeros(1)
    # Falling factorials t!/(t-j)! stay exact in integer arithmetic.
    factors = np.array([math.perm(t, j) for t in range(j, d + 1)], dtype=float)
    return np.asarray(coeffs[j:], dtype=float) * factors


def _horner(coeffs, u):
    acc = np.full_like(np.asarray(u, dtype=float), coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * u + c
    return acc


def eval_segment(model: SplineModel, i: int, x, j: int = 0):
    """j-th derivative of segment i's polynomial at internal coordinate x.

    x may lie outside the segment's own interval; the loss and repair code
    rely on this to probe both neighbors of a shared breakpoint.
    """
    m = model.num_segments
    if not 1 <= i <= m:
        raise IndexError(f"segment {i} out of range 1..{m}")
    if j < 0:
        raise ValueError("derivative order must be >= 0")
    u = np.asarray(x, dtype=float) - model.centers[i - 1]
    if j > model.degree:
        out = np.zeros_like(u)
    else:
        out = _horner(_derivative_coefficients(model.coefficients[i - 1], j), u)
    return float(out) if out.ndim == 0 else out


def evaluate(model: SplineModel, x, j: int = 0):
    """j-th derivative with respect to data coordinates, at data coordinate x.

    Maps x through the domain map, dispatches to the owning segment, and
    applies the chain-rule factor a**j.
    """
    if np.ndim(x) == 0:
        t = model.domain_map.forward(float(x))
        i = segment_index(model, t)
        xi = model.breakpoints
        return eval_segment(model, i, min(max(t, xi[0]), xi[-1]), j) * model.domain_map.a**j

    t = np.asarray(model.domain_map.forward(np.asarray(x, dtype=float)))
    xi = model.breakpoints
    slack = EDGE_SLACK * (xi[-1] - xi[0])
    bad = (t < xi[0] - slack) | (t > xi[-1] + slack)
    if bad.any():
        offender = np.asarray(x, dtype=float)[bad][0]
        raise DomainError(
            f"x={offender!r} outside spline domain "
            f"[{model.domain_map.inverse(xi[0])!r}, {model.domain_map.inverse(xi[-1])!r}]"
        )
    t = np.clip(t, xi[0], xi[-1])
    seg = _locate(xi, t)
    out = np.empty_like(t)
    for row in np.unique(seg):
        mask = seg == row
        out[mask] = eval_segment(model, int(row) + 1, t[mask], j)
    return out * model.domain_map.a**j


def rebase(coeffs, old_center, new_center):
    """Re-express shifted-basis coefficients about a new center (Taylor shift).

    Returns beta with sum_t beta[t] (x-new)**t == sum_t coeffs[t] (x-old)**t.
    """
    out = np.array(coeffs, dtype=float)
    if not np.isfinite(out).all() or not math.isfinite(old_center) or not math.isfinite(new_center):
        raise ValueError("rebase requires finite inputs")
    h = float(new_center) - float(old_center)
    if h == 0.0:
        return out
    n = out.size
    # Repeated synthetic division: expands p(v + h) in powers of v.
    for s in range(n):
        for t in range(n - 2, s - 1, -1):
            out[t] += h * out[t + 1]
    return out
