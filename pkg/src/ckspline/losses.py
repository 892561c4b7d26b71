"""Approximation and smoothness losses with exact analytic gradients.

The blended objective is

    total = lam * l2 + (1 - lam) * ck + strain_weight * strain

where l2 is the segment/sample-count equilibrated squared error, ck sums
squared derivative jumps at the breakpoints (optionally wrapping around for
cyclic or periodic boundary handling), and strain is the exact integral of
the squared second derivative.  Everything is a quadratic form in the
coefficient matrix, so gradients are computed in closed form; fd_gradient
provides an independent finite-difference oracle.

All three terms are evaluated in internal (scaled) coordinates.  Functions
here are pure; LossEngine only caches tables that depend on breakpoints and
samples, never on coefficients, so in-place coefficient updates are picked
up without rebuilding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EDGE_SLACK, DomainError, SampleSet, SplineModel, _locate

__all__ = [
    "BOUNDARY_MODES",
    "LossConfig",
    "LossBreakdown",
    "LossEngine",
    "l2_loss",
    "ck_loss",
    "strain_loss",
    "total_loss",
    "gradient",
    "fd_gradient",
]

BOUNDARY_MODES = ("open", "cyclic", "periodic")


@dataclass(frozen=True)
class LossConfig:
    """Blend weight, continuity order, boundary handling, optional strain term."""

    lam: float = 0.5
    k: int = 2
    boundary_mode: str = "open"
    strain_weight: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise ValueError("continuity order k must be a non-negative integer")
        if self.boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"boundary_mode must be one of {BOUNDARY_MODES}")
        if not (math.isfinite(self.strain_weight) and self.strain_weight >= 0.0):
            raise ValueError("strain_weight must be finite and >= 0")


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    l2: float
    ck: float
    strain: float


def _check_order(model: SplineModel, config: LossConfig):
    if config.k > model.degree:
        raise ValueError(
            f"continuity order k={config.k} exceeds spline degree {model.degree}"
        )


def _sample_tables(model: SplineModel, samples: SampleSet):
    """Owning row per sample plus the (n, d+1) matrix of basis powers."""
    t = np.asarray(model.domain_map.forward(samples.xs), dtype=float)
    xi = model.breakpoints
    slack = EDGE_SLACK * (xi[-1] - xi[0])
    bad = (t < xi[0] - slack) | (t > xi[-1] + slack)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DomainError(
            f"sample {i} at x={samples.xs[i]!r} maps to {t[i]!r}, "
            f"outside [{xi[0]!r}, {xi[-1]!r}]"
        )
    t = np.clip(t, xi[0], xi[-1])
    seg = _locate(xi, t)
    u = t - model.centers[seg]
    powers = u[:, None] ** np.arange(model.degree + 1)
    return seg, powers


def _l2_value_grad(coeffs, seg, powers, ys, num_segments, want_grad):
    f = np.einsum("nt,nt->n", powers, coeffs[seg])
    r = f - ys
    scale = num_segments / ys.size
    value = scale * float(r @ r)
    grad = None
    if want_grad:
        grad = np.zeros_like(coeffs)
        np.add.at(grad, seg, (2.0 * scale) * r[:, None] * powers)
    return value, grad


def _derivative_basis(u, degree, orders):
    """Rows of d^j/dx^j applied to the shifted monomials, evaluated at offset u."""
    out = np.zeros((len(orders), degree + 1))
    for row, j in enumerate(orders):
        for t in range(j, degree + 1):
            out[row, t] = math.perm(t, j) * u ** (t - j)
    return out


def _boundary_terms(model: SplineModel, config: LossConfig):
    """Per-boundary (left_row, right_row, left_basis, right_basis) plus divisor.

    The jump at a boundary is right_basis @ coeffs[right] - left_basis @
    coeffs[left].  In cyclic/periodic mode a wrap-around term compares
    derivative values at xi_0 and xi_m directly; cyclic mode drops its
    value (j=0) row.
    """
    m = model.num_segments
    xi = model.breakpoints
    orders = range(config.k + 1)
    terms = []
    for b in range(1, m):
        left, right = b - 1, b
        terms.append(
            (
                left,
                right,
                _derivative_basis(xi[b] - model.centers[left], model.degree, orders),
                _derivative_basis(xi[b] - model.centers[right], model.degree, orders),
            )
        )
    if config.boundary_mode == "open":
        return terms, max(m - 1, 1)
    wrap_orders = range(1 if config.boundary_mode == "cyclic" else 0, config.k + 1)
    terms.append(
        (
            m - 1,
            0,
            _derivative_basis(xi[-1] - model.centers[-1], model.degree, wrap_orders),
            _derivative_basis(xi[0] - model.centers[0], model.degree, wrap_orders),
        )
    )
    return terms, m


def _ck_value_grad(coeffs, terms, divisor, want_grad):
    value = 0.0
    grad = np.zeros_like(coeffs) if want_grad else None
    for left, right, basis_left, basis_right in terms:
        delta = basis_right @ coeffs[right] - basis_left @ coeffs[left]
        value += float(delta @ delta)
        if want_grad:
            grad[right] += (2.0 / divisor) * (delta @ basis_right)
            grad[left] -= (2.0 / divisor) * (delta @ basis_left)
    return value / divisor, grad


def _strain_tables(model: SplineModel):
    """Per-segment PSD forms G with strain_i = c.T @ G[i] @ c, c = coeffs[i, 2:].

    Squaring the second-derivative coefficient polynomial and integrating
    term by term over the segment gives a closed form; odd powers of the
    centered offset integrate to zero.
    """
    d = model.degree
    if d < 2:
        return None
    q = d - 1  # number of surviving coefficients, powers 2..d
    weights = np.array([(s + 2) * (s + 1) for s in range(q)], dtype=float)
    lengths = np.diff(model.breakpoints)
    tables = np.zeros((model.num_segments, q, q))
    for i, h in enumerate(lengths):
        half = h / 2.0
        for s in range(q):
            for t in range(q):
                p = s + t
                if p % 2 == 0:
                    tables[i, s, t] = weights[s] * weights[t] * 2.0 * half ** (p + 1) / (p + 1)
    return tables


def _strain_value_grad(coeffs, tables, want_grad):
    if tables is None:
        return 0.0, (np.zeros_like(coeffs) if want_grad else None)
    upper = coeffs[:, 2:]
    prods = np.einsum("ist,it->is", tables, upper)
    value = float(np.einsum("is,is->", upper, prods))
    grad = None
    if want_grad:
        grad = np.zeros_like(coeffs)
        grad[:, 2:] = 2.0 * prods
    return value, grad


class LossEngine:
    """Caches sample/boundary/strain tables for repeated evaluation.

    Built once per training run; per-epoch loss and gradient evaluations
    reduce to a few small matrix products.  Reads model.coefficients live
    on every call.
    """

    def __init__(self, model: SplineModel, samples: SampleSet, config: LossConfig):
        _check_order(model, config)
        self.model = model
        self.config = config
        self.seg, self.powers = _sample_tables(model, samples)
        self.ys = samples.ys
        self.terms, self.divisor = _boundary_terms(model, config)
        self.strain_tables = _strain_tables(model)

    def breakdown(self) -> LossBreakdown:
        coeffs = self.model.coefficients
        l2, _ = _l2_value_grad(coeffs, self.seg, self.powers, self.ys,
                               self.model.num_segments, False)
        ck, _ = _ck_value_grad(coeffs, self.terms, self.divisor, False)
        strain, _ = _strain_value_grad(coeffs, self.strain_tables, False)
        cfg = self.config
        total = cfg.lam * l2 + (1.0 - cfg.lam) * ck + cfg.strain_weight * strain
        return LossBreakdown(total=total, l2=l2, ck=ck, strain=strain)

    def gradient(self) -> np.ndarray:
        coeffs = self.model.coefficients
        cfg = self.config
        _, g_l2 = _l2_value_grad(coeffs, self.seg, self.powers, self.ys,
                                 self.model.num_segments, True)
        _, g_ck = _ck_value_grad(coeffs, self.terms, self.divisor, True)
        out = cfg.lam * g_l2 + (1.0 - cfg.lam) * g_ck
        if cfg.strain_weight != 0.0:
            _, g_strain = _strain_value_grad(coeffs, self.strain_tables, True)
            out += cfg.strain_weight * g_strain
        return out


def l2_loss(model: SplineModel, samples: SampleSet) -> float:
    """(m/n) * sum of squared residuals; invariant to sample/segment counts."""
    seg, powers = _sample_tables(model, samples)
    value, _ = _l2_value_grad(model.coefficients, seg, powers, samples.ys,
                              model.num_segments, False)
    return value


def ck_loss(model: SplineModel, config: LossConfig) -> float:
    """Equilibrated sum of squared derivative jumps across breakpoints.

    Open mode with a single segment has no interior boundaries and scores 0.
    """
    _check_order(model, config)
    terms, divisor = _boundary_terms(model, config)
    value, _ = _ck_value_grad(model.coefficients, terms, divisor, False)
    return value


def strain_loss(model: SplineModel) -> float:
    """Exact integral of the squared second derivative over the domain."""
    value, _ = _strain_value_grad(model.coefficients, _strain_tables(model), False)
    return value


def total_loss(model: SplineModel, samples: SampleSet, config: LossConfig) -> LossBreakdown:
    return LossEngine(model, samples, config).breakdown()


def gradient(model: SplineModel, samples: SampleSet, config: LossConfig) -> np.ndarray:
    """Exact gradient of the blended total with respect to every coefficient."""
    return LossEngine(model, samples, config).gradient()


def fd_gradient(model: SplineModel, samples: SampleSet, config: LossConfig,
                h: float = 1e-6) -> np.ndarray:
    """Central finite differences of the total loss, one coefficient at a time."""
    if not h > 0.0:
        raise ValueError("step h must be > 0")
    engine = LossEngine(model, samples, config)
    coeffs = model.coefficients
    out = np.zeros_like(coeffs)
    for i, j in np.ndindex(coeffs.shape):
        orig = coeffs[i, j]
        coeffs[i, j] = orig + h
        plus = engine.breakdown().total
        coeffs[i, j] = orig - h
        minus = engine.breakdown().total
        coeffs[i, j] = orig
        out[i, j] = (plus - minus) / (2.0 * h)
    return out
