"""Negative gradient flow of the squared moment defect and its classification.

h(x) = |mu_I(x) - theta|^2 decreases along its negative gradient flow; the
flow converges to a critical point, and trajectories entering the zero level
certify analytic semistability.  Critical values other than zero stay at
squared distance at least d_theta from it, so a stalled positive limit lands
on a higher stratum.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cones import SubsetCapError, d_theta, theta_coordinates, torus_weights
from .lie import (
    GroupElement,
    StabilityParameter,
    act,
    infinitesimal_action,
    pairing,
    theta_to_center,
)
from .moment import moment_real
from .quiver import Representation, apply_structure, norm_sq

logger = logging.getLogger(__name__)


@dataclass
class FlowOptions:
    """Adaptive explicit integrator controls for the descent flow."""

    initial_step: float = 0.05
    max_time: float = 1e4
    stall_tolerance: float = 1e-9
    step_growth: float = 2.0
    step_shrink: float = 0.5
    stall_window: int = 20
    min_step: float = 1e-18
    d_theta_subset_cap: int = 2 ** 14

    def __post_init__(self):
        if min(
            self.initial_step,
            self.max_time,
            self.stall_tolerance,
            self.step_growth,
            self.step_shrink,
            self.min_step,
        ) <= 0:
            raise ValueError("flow options must be positive")


@dataclass
class FlowOutcome:
    """Limit data of one flow run.

    classification is "analytically_semistable" when the defect reached the
    stall tolerance squared, "higher_stratum" when the gradient stalled at a
    defect past the certified radius, "undecided" otherwise.
    """

    limit_point: Representation
    h_value: float
    classification: str
    trajectory_summary: list = field(default_factory=list)  # (t, h, grad_norm)
    time: float = 0.0
    grad_norm: float = 0.0
    events: tuple = ()


def h_value(theta: StabilityParameter, x: Representation) -> float:
    """Squared pairing-norm of mu_I(x) - theta."""
    defect = moment_real(x, "I") - theta_to_center(theta)
    return pairing(defect, defect)


def grad_h(theta: StabilityParameter, x: Representation) -> Representation:
    """Gradient of h for the hyperkahler metric.

    Chain rule through the moment differential and the symplectic identity:
    4 I.(infinitesimal action of (mu - theta) at x); the constant is pinned by
    the central-difference oracle on h.
    """
    defect = moment_real(x, "I") - theta_to_center(theta)
    return 4.0 * apply_structure("I", infinitesimal_action(defect, x))


def flow_integrate(theta: StabilityParameter, x0: Representation, opts=None) -> FlowOutcome:
    """Integrate the negative gradient flow of h from x0.

    Explicit first-order stepping with step doubling and halving; a step is
    accepted only if h does not increase, so the recorded trajectory is
    monotone.  The gradient is the infinitesimal action of 4i(mu - theta), so
    each step applies the group element exp(-4 dt i (mu - theta)) instead of a
    vector-space increment: same flow to first order, but iterates stay on the
    group orbit exactly, preserving orbit invariants at machine precision.
    Terminates on reaching the zero level, on a persistent gradient stall, on
    step underflow, or at max_time.
    """
    opts = opts or FlowOptions()
    x = x0
    t = 0.0
    h = h_value(theta, x)
    reach_tol = opts.stall_tolerance ** 2
    dt = opts.initial_step
    samples = [(0.0, h, _grad_norm(theta, x))]
    stride = 1
    accepted = 0
    stall_count = 0
    frozen_count = 0
    events = []
    reason = "max_time"

    while t < opts.max_time:
        defect = moment_real(x, "I") - theta_to_center(theta)
        grad = 4.0 * apply_structure("I", infinitesimal_action(defect, x))
        gnorm = math.sqrt(norm_sq(grad))
        if h <= reach_tol:
            reason = "reached"
            break
        # a critical point announces itself either by a vanishing gradient or
        # by descent falling below what double precision can represent in h
        if gnorm <= opts.stall_tolerance:
            stall_count += 1
        else:
            stall_count = 0
        if stall_count >= opts.stall_window or frozen_count >= opts.stall_window:
            reason = "stalled"
            break

        # Sufficient decrease, not mere non-increase: plain h_new <= h lets the
        # controller sit at the stability boundary where Euler steps flip sign
        # without contracting.  The floor keeps sub-ulp descent steps alive.
        moved = False
        while dt >= opts.min_step:
            x_new = _group_step(defect, dt, x)
            h_new = h_value(theta, x_new) if x_new is not None else math.inf
            wanted = h - 0.1 * dt * gnorm * gnorm + 1e-15 * (1.0 + h)
            if math.isfinite(h_new) and h_new <= min(h, wanted):
                frozen_count = frozen_count + 1 if h - h_new <= 1e-16 * h else 0
                x, h = x_new, h_new
                t += dt
                accepted += 1
                dt *= opts.step_growth
                moved = True
                break
            dt *= opts.step_shrink
        if not moved:
            events.append("step_underflow")
            reason = "step_underflow"
            break
        if accepted % stride == 0:
            samples.append((t, h, _grad_norm(theta, x)))
            if len(samples) > 400:
                samples = samples[::2]
                stride *= 2

    gnorm = _grad_norm(theta, x)
    samples.append((t, h, gnorm))
    classification = _classify(theta, x, h, reason, opts, events)
    return FlowOutcome(
        limit_point=x,
        h_value=h,
        classification=classification,
        trajectory_summary=samples,
        time=t,
        grad_norm=gnorm,
        events=tuple(events),
    )


def _group_step(defect, dt, x):
    """One trial step along exp(-4 dt i defect); None when the exponential
    overflows, which the caller treats as a rejected step."""
    with np.errstate(over="ignore", invalid="ignore"):
        g = GroupElement.exp_i(defect, -4.0 * dt)
        if not all(np.all(np.isfinite(b)) for b in g.blocks):
            return None
        try:
            return act(g, x, "I")
        except (ValueError, np.linalg.LinAlgError):
            return None


def _grad_norm(theta, x):
    return math.sqrt(norm_sq(grad_h(theta, x)))


def _classify(theta, x, h, reason, opts, events):
    if h <= opts.stall_tolerance ** 2:
        return "analytically_semistable"
    if reason != "stalled":
        return "undecided"
    threshold = opts.stall_tolerance ** 2
    radius = _certified_radius(theta, x, opts)
    if radius is not None:
        threshold = max(threshold, radius * (1.0 - 1e-9) - 1e-12)
    else:
        events.append("d_theta_unavailable")
    return "higher_stratum" if h > threshold else "undecided"


def _certified_radius(theta, x, opts):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            weights = torus_weights(x.quiver, x.dims)
        coords = theta_coordinates(theta.values, x.dims)
        radius = d_theta(weights, coords, subset_cap=opts.d_theta_subset_cap)
    except SubsetCapError:
        return None
    return None if math.isinf(radius) else radius


def stratum_distance_bound(theta: StabilityParameter, x: Representation) -> bool:
    """Certificate h(x) < d_theta: the flow from x must reach the zero level,
    so x is analytically semistable without integrating anything."""
    weights = torus_weights(x.quiver, x.dims)
    coords = theta_coordinates(theta.values, x.dims)
    radius = d_theta(weights, coords)
    return h_value(theta, x) < radius
