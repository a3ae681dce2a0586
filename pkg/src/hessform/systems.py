"""Positive linear systems, controller-Hessenberg predicates, and the
discrete-time iterate analysis that feeds the planar cover decision."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .cones import (
    CoverDecision,
    SimplexPoint,
    simplex_project,
    triangle_cover_decision,
)
from .errors import InputError
from .linalg import as_square, as_vector, classify, inf_norm, zero_tolerance

__all__ = [
    "Domain",
    "IterateTrace",
    "PositiveSystem",
    "dt_hess_feasibility_3",
    "dt_iterates",
    "is_controller_hessenberg",
]


class Domain(str, enum.Enum):
    CT = "ct"
    DT = "dt"


@dataclass(frozen=True, eq=False)
class PositiveSystem:
    """State-space triple (A, b, c) with the sign discipline of its time domain:
    nonnegative A for discrete time, Metzler A for continuous time."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    domain: Domain

    def __post_init__(self):
        A = as_square(self.A, "A")
        b = as_vector(self.b, "b")
        c = as_vector(self.c, "c")
        if b.size != A.shape[0] or c.size != A.shape[0]:
            raise InputError("system dimensions are inconsistent")
        t = zero_tolerance(A)
        rep = classify(A, t)
        if self.domain is Domain.DT and not rep.is_nonnegative:
            raise InputError("discrete-time positive system needs nonnegative A")
        if self.domain is Domain.CT and not rep.is_metzler:
            raise InputError("continuous-time positive system needs Metzler A")
        if np.min(b) < -t * max(1.0, inf_norm(b)):
            raise InputError("input vector must be nonnegative")
        if np.min(c) < -t * max(1.0, inf_norm(c)):
            raise InputError("output vector must be nonnegative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)


@dataclass(frozen=True, eq=False)
class IterateTrace:
    """Planar projections of the renormalised power iterates ``A^k b``."""

    points: list[SimplexPoint]
    limit_point: SimplexPoint
    K: int


def is_controller_hessenberg(sys: PositiveSystem, tol: float | None = None) -> bool:
    """True when A is upper Hessenberg with the mode-appropriate signs, b is
    proportional to the first axis, and c is nonnegative."""
    t = zero_tolerance(sys.A, tol)
    rep = classify(sys.A, t)
    if not rep.is_upper_hessenberg:
        return False
    if sys.domain is Domain.DT and not rep.is_nonnegative:
        return False
    if sys.domain is Domain.CT and not rep.is_metzler:
        return False
    b = sys.b
    bscale = max(1.0, inf_norm(b))
    if b.size > 1 and inf_norm(b[1:]) > t * bscale:
        return False
    if b[0] < -t * bscale:
        return False
    return bool(np.min(sys.c) >= -t * max(1.0, inf_norm(sys.c)))


def dt_iterates(A, b, K: int) -> IterateTrace:
    """Project the first ``K`` discrete-time iterates onto the plane.

    Each iterate is renormalised to unit coordinate sum before the next
    multiplication (the projection is scale invariant, so this only guards
    against overflow).  The limit point is the projection of the dominant
    eigendirection.
    """
    A = as_square(A)
    b = as_vector(b)
    if A.shape[0] != 3 or b.size != 3:
        raise InputError("dt_iterates expects a 3x3 matrix and a 3-vector")
    if K < 1:
        raise InputError("iteration count must be positive")
    t = zero_tolerance(A)
    if np.min(A) < -t:
        raise InputError("dt_iterates requires a nonnegative matrix")
    if np.min(b) < -t * max(1.0, inf_norm(b)) or inf_norm(b) <= t:
        raise InputError("dt_iterates requires a nonnegative nonzero vector")

    x = np.maximum(b, 0.0)
    points: list[SimplexPoint] = []
    for _ in range(K):
        total = float(np.sum(x))
        if total <= t:
            raise InputError("iterate coordinate sum degenerated to zero")
        x = x / total
        points.append(simplex_project(x))
        x = np.maximum(A @ x, 0.0)

    return IterateTrace(points=points, limit_point=_iteration_limit(A, b),
                        K=K)


def _iteration_limit(A: np.ndarray, b: np.ndarray) -> SimplexPoint:
    """Projection of the direction the renormalised power iteration settles
    into: its fixed point when it converges, otherwise the invariant mean of
    its limit cycle.  Either lies in the closed convex hull of the iterates,
    so appending it never weakens an infeasibility certificate."""
    x = np.maximum(b, 0.0)
    x = x / np.sum(x)
    history: list[np.ndarray] = [x]
    for _ in range(3000):
        y = np.maximum(A @ x, 0.0)
        total = float(np.sum(y))
        if total <= 0:
            raise InputError("iterate coordinate sum degenerated to zero")
        y = y / total
        if inf_norm(y - x) <= 1e-14:
            return simplex_project(y)
        x = y
        history.append(x)
    tail = history[-64:]
    for period in range(2, 9):
        if len(tail) < period:
            break
        z = np.mean(tail[-period:], axis=0)
        z = z / np.sum(z)
        w = np.maximum(A @ z, 0.0)
        w = w / max(float(np.sum(w)), 1e-300)
        if inf_norm(w - z) <= 1e-10:
            return simplex_project(z)
    z = np.mean(tail, axis=0)
    return simplex_project(z / np.sum(z))


def dt_hess_feasibility_3(A, b, K: int = 50, tol: float = 1e-9) -> CoverDecision:
    """Necessary-condition analysis for a nonnegative discrete-time
    controller-Hessenberg transformation of a 3x3 pair.

    Projects the iterates ``A^k b`` (plus the analytic limit point) onto the
    plane and asks whether a triangle cornered at the projection of ``b`` can
    contain them.  Infeasible comes with the structured edge-contact
    certificate and rules out every nonnegative frame ``T = (b | p | q)`` with
    ``T^{-1} A T >= 0``.  Feasible only certifies the finite horizon ``K`` and
    reports candidate witnesses.
    """
    trace = dt_iterates(A, b, K)
    v0 = trace.points[0]
    cloud = list(trace.points) + [trace.limit_point]
    return triangle_cover_decision(v0, cloud, tol=tol)
