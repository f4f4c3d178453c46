"""Kempf-Ness functional and the solver for mu(exp(iY).x) = theta.

The functional g -> ||g.x||^2 - log|chi_theta(g)|^2 is geodesically convex
along one-parameter subgroups exp(itZ); its critical points over exp(i u_v)
are exactly the points whose moment value hits the central target.  The
solver runs a damped Newton iteration in geodesic coordinates: at the current
point the gradient is 2(mu - theta) and the Hessian is the Gram matrix of the
infinitesimal-action tangents, solved by least squares with a gradient-descent
fallback when ill-conditioned.  Unbounded iterates are reported as divergence
together with the normalized limiting direction, the witness the
Hilbert-Mumford criterion extracts from unbounded minimizing sequences.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lie import (
    GroupElement,
    LieAlgebraElement,
    StabilityParameter,
    act,
    character_log_modulus,
    infinitesimal_action,
    pairing,
    pairing_norm,
    polar_decompose,
    theta_to_center,
    uv_basis,
)
from .moment import moment_real
from .quiver import Representation, hyperkahler_rotation, norm_sq

logger = logging.getLogger(__name__)

ARMIJO_SLOPE = 1e-4
MAX_BACKTRACKS = 60
NEWTON_COND_LIMIT = 1e12


@dataclass
class SolveOptions:
    """Knobs of the moment-equation solver."""

    max_iterations: int = 500
    gradient_tolerance: float = 1e-10
    step_control: str = "damped-newton"  # or "gradient-descent-armijo"
    divergence_norm_bound: float = 50.0
    initial_y: Optional[LieAlgebraElement] = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.gradient_tolerance <= 0 or self.divergence_norm_bound <= 0:
            raise ValueError("tolerances must be positive")
        if self.step_control not in ("damped-newton", "gradient-descent-armijo"):
            raise ValueError(f"unknown step_control {self.step_control!r}")


@dataclass
class SolveOutcome:
    """Result of one moment-equation solve."""

    status: str  # converged | diverged | max_iterations
    y: LieAlgebraElement
    residual: float
    iterations: int
    divergence_direction: Optional[LieAlgebraElement] = None
    structure: str = "I"
    objective_trace: tuple = field(default=())

    @property
    def converged(self):
        return self.status == "converged"


def kempf_ness_value(theta: StabilityParameter, x: Representation, g: GroupElement) -> float:
    """||g.x||^2 - log|chi_theta(g)|^2; invariant under left unitary factors."""
    return norm_sq(act(g, x, "I")) - character_log_modulus(theta, g)


def geodesic_profile(theta, x, z: LieAlgebraElement, ts):
    """Sample the functional along the geodesic t -> exp(itZ); convex in t."""
    theta_sharp = theta_to_center(theta)
    slope = 2.0 * pairing(theta_sharp, z)
    values = []
    for t in ts:
        g = GroupElement.exp_i(z, float(t))
        values.append(norm_sq(act(g, x, "I")) - slope * float(t))
    return values


def minimum_is_identity_check(theta, x, tol) -> bool:
    """True iff the functional is critical (hence minimal) at the identity,
    i.e. the moment value of x already equals the central target."""
    r = moment_real(x, "I") - theta_to_center(theta)
    return pairing_norm(r) <= tol


def _rotate_to_I(structure, x):
    if structure == "I":
        return x
    if structure == "J":
        return hyperkahler_rotation(x, "inverse")
    if structure == "K":
        return hyperkahler_rotation(x)
    raise ValueError(f"unknown structure {structure!r}")


def solve_moment_equation(
    x: Representation,
    theta: StabilityParameter,
    structure="I",
    opts: Optional[SolveOptions] = None,
) -> SolveOutcome:
    """Find Y in the compact algebra with mu_s(exp(sY).x) = theta, if it exists.

    The search runs in the structure-I picture (J and K are conjugated in by
    the hyperkahler rotation, which leaves Y unchanged).  Each iteration
    re-centers at the current point, computes a Newton or gradient direction,
    backtracks on the functional value, and folds the step into a single Y via
    polar decomposition; the unitary polar factor is dropped, which changes
    neither the residual nor the functional value.
    """
    opts = opts or SolveOptions()
    x0 = _rotate_to_I(structure, x)
    basis = uv_basis(x.dims)
    target = theta_to_center(theta)

    y = opts.initial_y if opts.initial_y is not None else LieAlgebraElement.zero(x.dims)
    x_cur = act(GroupElement.exp_i(y), x0, "I") if pairing_norm(y) > 0 else x0

    trace = []
    norms = []
    for iteration in range(opts.max_iterations + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            residual_el = moment_real(x_cur, "I") - target
            residual = pairing_norm(residual_el)
            value = norm_sq(x_cur) - 2.0 * pairing(target, y)
        y_norm = pairing_norm(y)
        trace.append(value)
        norms.append(y_norm)

        if np.isfinite(residual) and residual <= opts.gradient_tolerance:
            return SolveOutcome(
                "converged", y, residual, iteration, None, structure, tuple(trace)
            )
        if y_norm > opts.divergence_norm_bound or _diverging(trace, norms):
            witness = (1.0 / y_norm) * y if y_norm > 0 else None
            return SolveOutcome(
                "diverged", y, residual, iteration, witness, structure, tuple(trace)
            )
        if not np.isfinite(residual) or not np.isfinite(value):
            raise FloatingPointError("non-finite values in moment-equation solve")
        if iteration == opts.max_iterations or basis.dim == 0:
            return SolveOutcome(
                "max_iterations", y, residual, iteration, None, structure, tuple(trace)
            )

        grad = 2.0 * basis.coords(residual_el)
        z_coords = _direction(basis, x_cur, grad, opts)
        slope = float(grad @ z_coords)
        if slope >= -1e-16 * (np.linalg.norm(grad) * np.linalg.norm(z_coords) + 1e-300):
            z_coords = -0.5 * grad
            slope = float(grad @ z_coords)
        # one move never jumps past the divergence bound: runaway rays are
        # reported by the norm test, not by an overflowing group product
        z_len = float(np.linalg.norm(z_coords))
        cap = max(opts.divergence_norm_bound, 1.0)
        if z_len > cap:
            z_coords = (cap / z_len) * z_coords
            slope *= cap / z_len
        z = basis.from_coords(z_coords)

        # Armijo with a rounding floor: near the fiber the functional moves by
        # less than double precision resolves while the residual still
        # contracts quadratically, so steps that shrink the residual must not
        # be rejected on sub-ulp functional comparisons.
        noise = 1e-13 * (1.0 + abs(value))
        step = 1.0
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            value_trial = _trial_value(z, step, x_cur, target, y)
            if value_trial <= value + ARMIJO_SLOPE * step * slope:
                accepted = True
                break
            if value_trial <= value + noise:
                trial_res = pairing_norm(
                    moment_real(act(GroupElement.exp_i(z, step), x_cur, "I"), "I")
                    - target
                )
                if trial_res <= 0.9 * residual:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            logger.debug("line search failed at iteration %d", iteration)
            return SolveOutcome(
                "max_iterations", y, residual, iteration, None, structure, tuple(trace)
            )

        try:
            with np.errstate(over="ignore", invalid="ignore"):
                g_new = GroupElement.exp_i(z, step).compose(GroupElement.exp_i(y))
                if not all(np.all(np.isfinite(b)) for b in g_new.blocks):
                    raise OverflowError
                _, y = polar_decompose(g_new)
                x_cur = act(GroupElement.exp_i(y), x0, "I")
        except (OverflowError, ValueError, np.linalg.LinAlgError):
            # the accepted move leaves representable range: a runaway ray
            y_norm = pairing_norm(y)
            witness = (1.0 / y_norm) * y if y_norm > 0 else (1.0 / pairing_norm(z)) * z
            return SolveOutcome(
                "diverged", y, residual, iteration + 1, witness, structure, tuple(trace)
            )

    raise AssertionError("unreachable")


def _trial_value(z, step, x_cur, target, y):
    """Functional value at exp(i step z) applied to the current point; +inf on
    overflow so the backtracking line search rejects the step."""
    with np.errstate(over="ignore", invalid="ignore"):
        g = GroupElement.exp_i(z, step)
        if not all(np.all(np.isfinite(b)) for b in g.blocks):
            return math.inf
        try:
            x_trial = act(g, x_cur, "I")
        except (ValueError, np.linalg.LinAlgError):
            return math.inf
        value = (
            norm_sq(x_trial)
            - 2.0 * pairing(target, y)
            - 2.0 * step * pairing(target, z)
        )
    return value if np.isfinite(value) else math.inf


def _direction(basis, x_cur, grad, opts):
    """Newton direction from the Gram matrix of action tangents, or steepest
    descent when requested, when the system is too ill-conditioned, or when
    the Newton step blows up along a nearly flat direction."""
    if opts.step_control == "gradient-descent-armijo":
        return -0.5 * grad
    rows = []
    for e in basis.elements:
        t = infinitesimal_action(e, x_cur)
        rows.append(
            np.concatenate([np.concatenate([b.real.ravel(), b.imag.ravel()]) for b in t.blocks])
            if t.blocks
            else np.zeros(0)
        )
    m = np.array(rows)
    # second derivative of the functional along exp(itZ) is 4 ||B_Z x||^2
    hessian = 4.0 * (m @ m.T)
    scale = np.linalg.norm(hessian, 2) if hessian.size else 0.0
    if scale == 0.0:
        return -0.5 * grad
    if np.linalg.cond(hessian) > NEWTON_COND_LIMIT:
        return -0.5 * grad
    z, *_ = np.linalg.lstsq(hessian, -grad, rcond=None)
    if np.linalg.norm(z) > 100.0 * (1.0 + np.linalg.norm(grad)):
        return -0.5 * grad
    return z


def _diverging(trace, norms, window=12):
    """Early divergence call: the functional keeps descending at a stable
    negative rate per unit of growth of ||Y|| while ||Y|| runs away."""
    if len(norms) < window or norms[-1] < 10.0:
        return False
    dn = np.diff(norms[-window:])
    dv = np.diff(trace[-window:])
    if np.any(dn <= 1e-12):
        return False
    rates = dv / dn
    if np.all(rates < 0) and np.std(rates) <= 0.05 * abs(np.mean(rates)):
        return True
    return False
