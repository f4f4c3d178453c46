"""Transport of moment-fiber points across parameter space.

Moving a fiber point to a new central parameter means solving
mu(exp(sY).x) = theta' and applying the exponential; over a regular connected
component this realizes the local trivialization of the moment map.  The
hyperkahler variant moves the three components one complex structure at a
time (the actions for the other two structures fix their central moment
values), the complex variant moves only the (J, K) pair, and the quaternion
variant needs no solver at all: unit quaternions and positive rescalings act
directly with an exactly known effect on the moment triple.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cones import RationalThetaTriple, complex_regular_check, hyperkahler_regular_check
from .kempf_ness import SolveOptions, solve_moment_equation
from .lie import (
    StabilityParameter,
    balanced_theta,
    center_to_theta,
    exp_action,
    pairing_norm,
    theta_to_center,
)
from .moment import (
    MU_C_FROM_JK,
    moment_complex,
    moment_hyperkahler,
    moment_real,
)
from .quiver import Representation, norm_sq, quaternion_act

logger = logging.getLogger(__name__)

FIBER_PRE_TOL = 1e-7
STRUCTURE_ORDER = ("I", "J", "K")


class TransportError(RuntimeError):
    """Continuation failed: subdivision exhausted or solver diverged."""

    def __init__(self, message, structure=None, parameter=None):
        super().__init__(message)
        self.structure = structure
        self.parameter = parameter


@dataclass
class TransportPlan:
    """Waypoints and per-leg solver configuration for a continuation run."""

    waypoints: tuple = ()
    solve_options: Optional[SolveOptions] = None
    max_subdivision_depth: int = 12
    tolerance: float = 1e-9
    leg_order: tuple = STRUCTURE_ORDER
    regular_gate: tuple = ()  # optional exact rational parameters to pre-check

    def __post_init__(self):
        if self.max_subdivision_depth < 0:
            raise ValueError("max_subdivision_depth must be nonnegative")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    def options(self):
        if self.solve_options is not None:
            return self.solve_options
        # a leg counts as workable only when it converges quickly; stubborn
        # legs are bisected instead of ground out
        return SolveOptions(
            gradient_tolerance=min(self.tolerance, 1e-10), max_iterations=50
        )


@dataclass
class TransportResult:
    """Image point with the replayable log of applied exponentials."""

    image: Representation
    applied_y_log: list = field(default_factory=list)  # (structure, LieAlgebraElement)
    residual: float = 0.0
    subdivisions_used: int = 0


def replay_transport(x: Representation, applied_y_log) -> Representation:
    """Re-apply a logged transport without solving anything."""
    for structure, y in applied_y_log:
        x = exp_action(y, 1.0, structure, x)
    return x


def transport_real(
    x: Representation,
    theta_target: StabilityParameter,
    plan: Optional[TransportPlan] = None,
) -> TransportResult:
    """Move a central-fiber point to the target parameter by continuation.

    The start parameter is read off the moment value of x, which must be
    central to tolerance.  Each leg solves the moment equation toward the
    next parameter; failed legs are bisected up to the plan's depth.
    """
    plan = plan or TransportPlan()
    theta_start = _central_parameter(x, "I")
    log = []
    count = [0]
    stops = list(plan.waypoints) + [theta_target]
    current = x
    prev = theta_start
    for stop in stops:
        current = _axis_move(current, "I", prev, stop, plan, log, count, plan.max_subdivision_depth)
        prev = stop
    residual = pairing_norm(moment_real(current, "I") - theta_to_center(theta_target))
    return TransportResult(current, log, residual, count[0])


def _central_parameter(x, structure) -> StabilityParameter:
    mu = moment_real(x, structure)
    theta = center_to_theta(mu)
    defect = pairing_norm(mu - theta_to_center(theta))
    if defect > FIBER_PRE_TOL * (1.0 + math.sqrt(norm_sq(x))):
        raise ValueError(
            f"moment value is not central (defect {defect:.3e}); "
            "transport must start on a central fiber"
        )
    return theta


def transport_hyperkahler(
    x: Representation,
    target,
    plan: Optional[TransportPlan] = None,
) -> TransportResult:
    """Move a hyperkahler-fiber point to the target parameter triple.

    ``target`` is a triple of per-vertex weight tuples (theta_I, theta_J,
    theta_K).  All motion of one complex structure is performed before the
    next one starts, in the plan's leg order: the actions of the untouched
    structures fix the central values already in place, so the composition
    lands on the full target fiber.  Waypoints refine each single-structure
    phase; since sub-moves within one structure compose, the traversed
    parameter path is the same axis-by-axis path for every mesh.  The inverse
    transport should use the reversed leg order.
    """
    plan = plan or TransportPlan()
    _check_regular_gate(plan, x.dims)
    start = _central_triple_parameters(x)
    target = _as_triple_parameters(target, x.dims)
    stops = [_as_triple_parameters(w, x.dims) for w in plan.waypoints] + [target]
    log = []
    count = [0]
    current = x
    for s in plan.leg_order:
        idx = STRUCTURE_ORDER.index(s)
        prev = start[idx]
        for stop in stops:
            current = _axis_move(
                current, s, prev, stop[idx], plan, log, count, plan.max_subdivision_depth
            )
            prev = stop[idx]
    residual = _triple_residual(current, target)
    return TransportResult(current, log, residual, count[0])


def _central_triple_parameters(x):
    return tuple(_central_parameter(x, s) for s in STRUCTURE_ORDER)


def _as_triple_parameters(triple, dims):
    if isinstance(triple, RationalThetaTriple):
        comps = triple.as_floats()
    else:
        comps = tuple(tuple(float(v) for v in c) for c in triple)
    return tuple(StabilityParameter(c, dims) for c in comps)


def _triple_residual(x, target):
    total = 0.0
    for s, th in zip(STRUCTURE_ORDER, target):
        total += pairing_norm(moment_real(x, s) - theta_to_center(th)) ** 2
    return math.sqrt(total)


def _axis_move(x, structure, th_from, th_to, plan, log, count, depth):
    """Move one structure's central value, bisecting the segment on failure."""
    outcome = solve_moment_equation(x, th_to, structure, plan.options())
    if outcome.converged:
        log.append((structure, outcome.y))
        return exp_action(outcome.y, 1.0, structure, x)
    if outcome.status == "diverged":
        raise TransportError(
            "solver diverged: the path leaves the stable locus",
            structure=structure,
            parameter=th_to.values,
        )
    if depth == 0:
        raise TransportError(
            "subdivision exhausted: leaving the trivializing neighborhood",
            structure=structure,
            parameter=th_to.values,
        )
    count[0] += 1
    mid = balanced_theta(
        [0.5 * (a + b) for a, b in zip(th_from.values, th_to.values)], th_from.dims
    )
    x_mid = _axis_move(x, structure, th_from, mid, plan, log, count, depth - 1)
    return _axis_move(x_mid, structure, mid, th_to, plan, log, count, depth - 1)


def _check_regular_gate(plan, dims):
    for entry in plan.regular_gate:
        if isinstance(entry, RationalThetaTriple):
            ok, witness = hyperkahler_regular_check(dims, entry)
            if not ok:
                raise TransportError(
                    f"parameter lies on the wall of dimension vector {witness}",
                    parameter=entry,
                )
        else:
            if not complex_regular_check(dims, entry):
                raise TransportError(
                    "complex parameter lies on a wall", parameter=entry
                )


def xi_to_jk_parameters(xi, dims):
    """Split a central complex-moment value into the (theta_J, theta_K) pair.

    mu_C = MU_C_FROM_JK (mu_J + i mu_K), so a target value xi_j per vertex
    pins theta_J = -2 Im(xi) and theta_K = 2 Re(xi).
    """
    xi = np.asarray(xi, dtype=complex)
    # (1/MU_C_FROM_JK) xi = i theta_J - theta_K as a complex number per vertex
    factor = 1.0 / MU_C_FROM_JK
    theta_j = tuple(float(v) for v in (factor * xi).imag)
    theta_k = tuple(float(-v) for v in (factor * xi).real)
    return (
        StabilityParameter(theta_j, dims),
        StabilityParameter(theta_k, dims),
    )


def central_xi(x: Representation) -> np.ndarray:
    """Per-vertex scalar of the complex moment value, which must be central."""
    mu = moment_complex(x)
    xi = np.array(
        [np.trace(b) / d if d else 0.0 for b, d in zip(mu.blocks, x.dims)],
        dtype=complex,
    )
    defect = 0.0
    for b, v, d in zip(mu.blocks, xi, x.dims):
        defect = max(defect, float(np.abs(b - v * np.eye(d)).max(initial=0.0)))
    if defect > FIBER_PRE_TOL * (1.0 + math.sqrt(norm_sq(x))):
        raise ValueError(
            f"complex moment value is not central (defect {defect:.3e})"
        )
    return xi


def transport_complex(
    x: Representation,
    xi_start,
    xi_target,
    plan: Optional[TransportPlan] = None,
) -> TransportResult:
    """Move a point of a central complex-moment fiber to the target value.

    Only the (J, K) parameter pair moves; the structure-I value is untouched
    by the J and K actions because it stays central along the way.
    """
    plan = plan or TransportPlan()
    _check_regular_gate(plan, x.dims)
    xi_now = central_xi(x)
    xi_start = np.asarray(xi_start, dtype=complex)
    if np.abs(xi_now - xi_start).max(initial=0.0) > FIBER_PRE_TOL * (
        1.0 + math.sqrt(norm_sq(x))
    ):
        raise ValueError("x does not lie on the asserted start fiber")
    stops = [np.asarray(w, dtype=complex) for w in plan.waypoints]
    stops.append(np.asarray(xi_target, dtype=complex))
    log = []
    count = [0]
    current = x
    order = tuple(s for s in plan.leg_order if s in ("J", "K"))
    start_jk = dict(zip(("J", "K"), xi_to_jk_parameters(xi_start, x.dims)))
    for s in order:
        prev = start_jk[s]
        for stop in stops:
            th = dict(zip(("J", "K"), xi_to_jk_parameters(stop, x.dims)))[s]
            current = _axis_move(
                current, s, prev, th, plan, log, count, plan.max_subdivision_depth
            )
            prev = th
    mu = moment_complex(current)
    residual = 0.0
    for b, v, d in zip(mu.blocks, np.asarray(xi_target, dtype=complex), x.dims):
        residual += float(np.linalg.norm(b - v * np.eye(d)) ** 2)
    return TransportResult(current, log, math.sqrt(residual), count[0])


def quaternion_transport(x: Representation, q, t) -> Representation:
    """Fiberwise-exact transport by a unit quaternion and a positive rescale.

    Returns sqrt(t) q.x; the moment triple transforms to t * (q mu qbar) with
    no solving involved.
    """
    t = float(t)
    if t <= 0:
        raise ValueError("scale factor must be positive")
    return math.sqrt(t) * quaternion_act(q, x)


def predicted_quaternion_moment(x, q, t):
    """Moment triple of quaternion_transport(x, q, t), computed on parameters."""
    from .moment import quaternion_conjugate_triple

    return quaternion_conjugate_triple(q, moment_hyperkahler(x)).scale(float(t))
