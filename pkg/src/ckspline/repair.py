"""Exact local continuity repair via two-point Hermite correctors.

After optimization the derivative jumps at the breakpoints are small but
rarely zero.  For each boundary, both neighbor segments are nudged toward
the mean of their derivative values there by adding a degree-(2k+1)
corrective polynomial whose derivatives up to order k vanish at the
segment's opposite end.  Corrections are local: no other boundary sees any
derivative of order <= k change, so boundaries are handled independently.
Requires spline degree >= 2k+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SplineModel, eval_segment

__all__ = [
    "ConditioningError",
    "RepairReport",
    "two_point_hermite",
    "repair_continuity",
]

_MAX_CONDITION = 1e12


class ConditioningError(ArithmeticError):
    """The Hermite system is numerically singular for the requested order."""


@dataclass(frozen=True)
class RepairReport:
    """Per-boundary derivative jumps before and after repair.

    Rows follow the repaired boundaries left to right; a wrap-around
    boundary, when present, is reported last at position xi_m.  Columns are
    derivative orders 0..k (right value minus left value); mean_targets
    holds the per-order mean derivative each boundary was moved to.
    """

    positions: tuple[float, ...]
    pre_defects: np.ndarray
    post_defects: np.ndarray
    mean_targets: np.ndarray
    max_correction: float


def two_point_hermite(left_x: float, left_derivs, right_x: float, right_derivs,
                      center: float) -> np.ndarray:
    """Unique degree-(2k+1) polynomial with prescribed derivatives 0..k at both ends.

    Returns coefficients in the shifted basis about `center`.  The confluent
    Vandermonde system is solved with the interval rescaled to unit length,
    which keeps it well conditioned for practical k; LAPACK's partially
    pivoted LU does the solve.
    """
    left = np.asarray(left_derivs, dtype=float)
    right = np.asarray(right_derivs, dtype=float)
    if left.ndim != 1 or left.shape != right.shape or left.size == 0:
        raise ValueError("need matching derivative value lists for both endpoints")
    if not left_x < right_x:
        raise ValueError(f"left_x={left_x!r} must be < right_x={right_x!r}")

    order = left.size - 1
    size = 2 * order + 2
    length = float(right_x) - float(left_x)
    nodes = ((left_x - center) / length, (right_x - center) / length)

    system = np.zeros((size, size))
    rhs = np.zeros(size)
    row = 0
    for node, derivs in zip(nodes, (left, right)):
        for j in range(order + 1):
            for t in range(j, size):
                system[row, t] = math.perm(t, j) * node ** (t - j)
            rhs[row] = derivs[j] * length**j
            row += 1
    if np.linalg.cond(system) > _MAX_CONDITION:
        raise ConditioningError(
            f"Hermite system for order k={order} is too ill-conditioned; "
            "use a smaller k or rescale the segments"
        )
    solution = np.linalg.solve(system, rhs)
    return solution / length ** np.arange(size)


def _boundary_list(model: SplineModel, boundary_mode: str):
    """(position, left_row, right_row, left_eval_x, right_eval_x) per boundary."""
    xi = model.breakpoints
    m = model.num_segments
    out = [(xi[b], b - 1, b, xi[b], xi[b]) for b in range(1, m)]
    if boundary_mode in ("cyclic", "periodic"):
        out.append((xi[-1], m - 1, 0, xi[-1], xi[0]))
    return out


def _defect_rows(model, boundaries, k):
    pre = np.zeros((len(boundaries), k + 1))
    for row, (_, left, right, x_left, x_right) in enumerate(boundaries):
        for j in range(k + 1):
            pre[row, j] = (eval_segment(model, right + 1, x_right, j)
                           - eval_segment(model, left + 1, x_left, j))
    return pre


def repair_continuity(model: SplineModel, k: int, boundary_mode: str = "open"):
    """Zero the derivative jumps of order <= k at every boundary.

    Returns a repaired copy of the model plus a RepairReport.  Each boundary
    contributes one corrector to each neighbor segment; correctors are built
    from the unrepaired model (they are independent by construction) and
    applied left to right for bit-reproducible results.  With cyclic
    boundary handling the wrap-around boundary aligns derivatives 1..k and
    leaves each endpoint value unchanged; periodic aligns the values too.
    """
    if k < 0:
        raise ValueError("continuity order k must be >= 0")
    if boundary_mode not in ("open", "cyclic", "periodic"):
        raise ValueError("boundary_mode must be open, cyclic, or periodic")
    if model.degree < 2 * k + 1:
        raise ValueError(
            f"repair with continuity order k={k} requires degree >= {2 * k + 1}, "
            f"got {model.degree}"
        )

    xi = model.breakpoints
    boundaries = _boundary_list(model, boundary_mode)
    pre = _defect_rows(model, boundaries, k)
    means = np.zeros_like(pre)
    wrap_row = len(boundaries) - 1 if boundary_mode in ("cyclic", "periodic") else None

    corrections = []  # (segment_row, coefficient vector) in application order
    for row, (_, left, right, x_left, x_right) in enumerate(boundaries):
        left_vals = np.array([eval_segment(model, left + 1, x_left, j) for j in range(k + 1)])
        right_vals = np.array([eval_segment(model, right + 1, x_right, j) for j in range(k + 1)])
        mean = 0.5 * (left_vals + right_vals)
        means[row] = mean
        target_left = mean - left_vals
        target_right = mean - right_vals
        if row == wrap_row and boundary_mode == "cyclic":
            # the wrap value is allowed to differ; only derivatives align
            target_left[0] = 0.0
            target_right[0] = 0.0
        zeros = np.zeros(k + 1)
        corrections.append((left, two_point_hermite(
            xi[left], zeros, xi[left + 1], target_left, model.centers[left])))
        corrections.append((right, two_point_hermite(
            xi[right], target_right, xi[right + 1], zeros, model.centers[right])))

    repaired = model.copy()
    width = 2 * k + 2
    max_correction = 0.0
    for segment_row, corrector in corrections:
        repaired.coefficients[segment_row, :width] += corrector
        max_correction = max(max_correction, float(np.abs(corrector).max()))

    report = RepairReport(
        positions=tuple(float(b[0]) for b in boundaries),
        pre_defects=pre,
        post_defects=_defect_rows(repaired, boundaries, k),
        mean_targets=means,
        max_correction=max_correction,
    )
    return repaired, report
