"""Seeded invariant suite covering every module, runnable from the CLI.

Each check draws its own child generator from the master seed, so checks are
independent of ordering and the whole report is reproducible byte for byte.
The budget scales instance counts; the default budget covers every invariant
at full desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cones, flow, kempf_ness, moment, sampling, stability, transport
from .lie import (
    GroupElement,
    LieAlgebraElement,
    act,
    balanced_theta,
    center_to_theta,
    character_log_modulus,
    exp_action,
    infinitesimal_action,
    pairing,
    pairing_norm,
    polar_decompose,
    stabilizer_lie_dim,
    theta_to_center,
    uv_basis,
)
from .quiver import (
    apply_structure,
    hermitian_pairing,
    hyperkahler_metric,
    hyperkahler_rotation,
    norm_sq,
    quaternion_act,
    quaternion_multiply,
)

STRUCTURES = ("I", "J", "K")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _scaled(count, budget):
    return max(1, int(round(count * budget)))


def run_selftest(seed=0, budget=1.0):
    """Run every invariant check; returns a list of CheckResult."""
    master = np.random.default_rng(seed)
    seeds = {name: int(master.integers(2 ** 63)) for name, _ in CHECKS}
    results = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seeds[name])
        try:
            passed, detail = fn(rng, budget)
        except Exception as exc:  # a crash is a failed invariant, not a crash of the suite
            passed, detail = False, f"exception: {exc!r}"
        results.append(CheckResult(name, passed, detail))
    return results


def _random_xs(rng, count, **kw):
    for _ in range(count):
        quiver, dims, x = sampling.random_instance(rng, **kw)
        yield quiver, dims, x


def check_structure_isometries(rng, budget):
    worst = 0.0
    for _, _, x in _random_xs(rng, _scaled(30, budget)):
        n = norm_sq(x)
        for s in STRUCTURES:
            worst = max(worst, abs(norm_sq(apply_structure(s, x)) - n) / (1.0 + n))
    return worst <= 1e-12, f"max relative norm drift {worst:.2e}"


def check_quaternion_relations(rng, budget):
    worst = 0.0
    for _, _, x in _random_xs(rng, _scaled(30, budget)):
        scale = math.sqrt(norm_sq(x)) + 1.0
        for s in STRUCTURES:
            twice = apply_structure(s, apply_structure(s, x))
            worst = max(worst, math.sqrt(norm_sq(twice + x)) / scale)
        ijk = apply_structure("I", apply_structure("J", apply_structure("K", x)))
        worst = max(worst, math.sqrt(norm_sq(ijk + x)) / scale)
    return worst <= 1e-12, f"max defect {worst:.2e}"


def check_rotation_identities(rng, budget):
    worst = 0.0
    pairs = (("I", "J"), ("J", "K"), ("K", "I"))
    for _, _, x in _random_xs(rng, _scaled(30, budget)):
        scale = math.sqrt(norm_sq(x)) + 1.0
        rot = hyperkahler_rotation(x)
        worst = max(worst, abs(norm_sq(rot) - norm_sq(x)) / scale ** 2)
        back = hyperkahler_rotation(rot, "inverse")
        worst = max(worst, math.sqrt(norm_sq(back - x)) / scale)
        for s, s_next in pairs:
            lhs = hyperkahler_rotation(apply_structure(s, x))
            rhs = apply_structure(s_next, rot)
            worst = max(worst, math.sqrt(norm_sq(lhs - rhs)) / scale)
    return worst <= 1e-12, f"max defect {worst:.2e}"


def check_quaternion_action(rng, budget):
    worst = 0.0
    for _, _, x in _random_xs(rng, _scaled(20, budget)):
        scale = math.sqrt(norm_sq(x)) + 1.0
        q1 = _random_unit_quaternion(rng)
        q2 = _random_unit_quaternion(rng)
        lhs = quaternion_act(q1, quaternion_act(q2, x))
        rhs = quaternion_act(quaternion_multiply(q1, q2), x)
        worst = max(worst, math.sqrt(norm_sq(lhs - rhs)) / scale)
    return worst <= 1e-12, f"max composition defect {worst:.2e}"


def _random_unit_quaternion(rng):
    q = rng.normal(size=4)
    return tuple(q / np.linalg.norm(q))


def check_metric_polarisation(rng, budget):
    worst = 0.0
    for quiver, dims, u in _random_xs(rng, _scaled(20, budget)):
        v = sampling.random_representation(rng, quiver, dims)
        g = hyperkahler_metric(u, v)
        scale = abs(g) + 1.0
        for s in STRUCTURES:
            worst = max(worst, abs(hermitian_pairing(s, u, v).real - g) / scale)
    return worst <= 1e-10, f"max metric disagreement {worst:.2e}"


def check_pairing_properties(rng, budget):
    worst = 0.0
    for _ in range(_scaled(20, budget)):
        quiver, dims, _ = sampling.random_instance(rng)
        y = sampling.random_uv_element(rng, dims)
        z = sampling.random_uv_element(rng, dims)
        if pairing(y, y) <= 0 and uv_basis(dims).dim > 0:
            return False, "pairing not positive on a nonzero element"
        u = sampling.random_unitary(rng, dims)
        ad = lambda w: LieAlgebraElement.project(
            [ub @ wb @ ub.conj().T for ub, wb in zip(u.blocks, w.blocks)]
        )
        num = abs(pairing(ad(y), ad(z)) - pairing(y, z))
        worst = max(worst, num / (1.0 + abs(pairing(y, z))))
    return worst <= 1e-12, f"max Ad-invariance defect {worst:.2e}"


def check_character_pairing(rng, budget):
    worst = 0.0
    for _ in range(_scaled(20, budget)):
        quiver, dims, _ = sampling.random_instance(rng)
        theta = sampling.random_theta(rng, dims)
        y = sampling.random_uv_element(rng, dims)
        t = float(rng.uniform(-2, 2))
        lhs = character_log_modulus(theta, GroupElement.exp_i(y, t))
        rhs = 2.0 * pairing(theta_to_center(theta), y) * t
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
    return worst <= 1e-10, f"max defect {worst:.2e}"


def check_left_action(rng, budget):
    worst = 0.0
    for quiver, dims, x in _random_xs(rng, _scaled(15, budget)):
        g1 = GroupElement.exp_i(sampling.random_uv_element(rng, dims, 0.4))
        g2 = sampling.random_unitary(rng, dims)
        lhs = act(g1.compose(g2), x)
        rhs = act(g1, act(g2, x))
        worst = max(worst, math.sqrt(norm_sq(lhs - rhs)) / (1.0 + math.sqrt(norm_sq(x))))
    return worst <= 1e-11, f"max defect {worst:.2e}"


def check_exp_action_consistency(rng, budget):
    worst = 0.0
    for quiver, dims, x in _random_xs(rng, _scaled(15, budget)):
        y = sampling.random_uv_element(rng, dims, 0.5)
        s, t = float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))
        for structure in STRUCTURES:
            lhs = exp_action(y, s + t, structure, x)
            rhs = exp_action(y, s, structure, exp_action(y, t, structure, x))
            worst = max(worst, math.sqrt(norm_sq(lhs - rhs)) / (1.0 + math.sqrt(norm_sq(x))))
        # central difference of the flow against the infinitesimal action
        h = 1e-5
        fd = (1.0 / (2 * h)) * (exp_action(y, h, "I", x) - exp_action(y, -h, "I", x))
        an = apply_structure("I", infinitesimal_action(y, x))
        worst = max(worst, math.sqrt(norm_sq(fd - an)) / (1.0 + math.sqrt(norm_sq(an))))
    return worst <= 1e-8, f"max defect {worst:.2e}"


def check_polar_decomposition(rng, budget):
    worst = 0.0
    for _ in range(_scaled(15, budget)):
        quiver, dims, _ = sampling.random_instance(rng)
        g = sampling.random_unitary(rng, dims).compose(
            GroupElement.exp_i(sampling.random_uv_element(rng, dims, 0.7))
        )
        h, y = polar_decompose(g)
        rec = h.compose(GroupElement.exp_i(y))
        err = max(
            float(np.abs(a - b).max(initial=0.0)) for a, b in zip(rec.blocks, g.blocks)
        )
        worst = max(worst, err)
        if not h.is_unitary(1e-10):
            return False, "polar factor is not unitary"
    return worst <= 1e-10, f"max reconstruction error {worst:.2e}"


def check_stabilizer_conjugation(rng, budget):
    for _ in range(_scaled(10, budget)):
        quiver, dims, x = sampling.random_instance(rng, max_dim=3)
        g = GroupElement.exp_i(sampling.random_uv_element(rng, dims, 0.4)).compose(
            sampling.random_unitary(rng, dims)
        )
        if stabilizer_lie_dim(act(g, x)) != stabilizer_lie_dim(x):
            return False, "stabilizer dimension changed under conjugation"
    return True, "stabilizer dimension invariant on all instances"


def check_moment_oracle(rng, budget):
    worst = 0.0
    for _ in range(_scaled(60, budget)):
        quiver, dims, x = sampling.random_instance(rng)
        y = sampling.random_uv_element(rng, dims)
        s = STRUCTURES[int(rng.integers(3))]
        lhs = pairing(moment.moment_real(x, s), y)
        rhs = moment.moment_pairing_fd_oracle(x, y, s)
        scale = 1.0 + norm_sq(x) * math.sqrt(pairing(y, y))
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst <= 1e-6, f"max oracle mismatch {worst:.2e}"


def check_moment_equivariance(rng, budget):
    worst = 0.0
    for quiver, dims, x in _random_xs(rng, _scaled(20, budget)):
        u = sampling.random_unitary(rng, dims)
        mu = moment.moment_real(x, "I")
        lhs = moment.moment_real(act(u, x), "I")
        rhs = LieAlgebraElement.project(
            [ub @ mb @ ub.conj().T for ub, mb in zip(u.blocks, mu.blocks)]
        )
        worst = max(worst, pairing_norm(lhs - rhs) / (1.0 + pairing_norm(mu)))
    return worst <= 1e-10, f"max equivariance defect {worst:.2e}"


def check_moment_complex_trace(rng, budget):
    worst = 0.0
    for _, _, x in _random_xs(rng, _scaled(20, budget)):
        worst = max(worst, abs(moment.moment_complex(x).trace_sum()) / (1.0 + norm_sq(x)))
    return worst <= 1e-10, f"max trace sum {worst:.2e}"


def check_rotation_intertwining(rng, budget):
    worst = 0.0
    mapping = {"I": "K", "J": "I", "K": "J"}
    for _, _, x in _random_xs(rng, _scaled(20, budget)):
        rot = hyperkahler_rotation(x)
        scale = 1.0 + norm_sq(x)
        for s, s_from in mapping.items():
            lhs = moment.moment_real(rot, s)
            rhs = moment.moment_real(x, s_from)
            worst = max(worst, pairing_norm(lhs - rhs) / scale)
    return worst <= 1e-10, f"max intertwining defect {worst:.2e}"


def check_quaternion_equivariance(rng, budget):
    worst = 0.0
    for _, _, x in _random_xs(rng, _scaled(30, budget)):
        q = _random_unit_quaternion(rng)
        lhs = moment.moment_hyperkahler(quaternion_act(q, x))
        rhs = moment.quaternion_conjugate_triple(q, moment.moment_hyperkahler(x))
        worst = max(worst, (lhs - rhs).norm() / (1.0 + norm_sq(x)))
    return worst <= 1e-9, f"max equivariance defect {worst:.2e}"


def check_moment_homogeneity(rng, budget):
    worst = 0.0
    for _, _, x in _random_xs(rng, _scaled(10, budget)):
        base = moment.moment_hyperkahler(x)
        for t in (0.5, 2.0, 3.0):
            lhs = moment.moment_hyperkahler(t * x)
            rhs = base.scale(t * t)
            worst = max(worst, (lhs - rhs).norm() / (1.0 + rhs.norm()))
    return worst <= 1e-12, f"max homogeneity defect {worst:.2e}"


def check_complex_real_proportionality(rng, budget):
    values = []
    worst_resid = 0.0
    for _ in range(_scaled(50, budget)):
        quiver, dims, x = sampling.random_instance(rng)
        c, resid = moment.complex_vs_real_identity(x)
        if c is None:
            continue
        values.append(c)
        worst_resid = max(worst_resid, resid / (1.0 + norm_sq(x)))
    if not values:
        return False, "no nondegenerate instances"
    spread = max(values) - min(values)
    expected = 1.0 / moment.MU_C_FROM_JK
    ok = spread <= 1e-8 and worst_resid <= 1e-9 and abs(values[0] - expected) <= 1e-9
    return ok, f"c={values[0]:.12f}, spread {spread:.2e}, residual {worst_resid:.2e}"


def check_solver_fixed_point(rng, budget):
    worst = 0.0
    for _ in range(_scaled(15, budget)):
        quiver, dims, x = sampling.random_stable_instance(rng)
        theta = sampling.random_chamber_theta(rng, dims)
        outcome = kempf_ness.solve_moment_equation(x, theta)
        if not outcome.converged:
            return False, f"solver failed on a stable instance ({outcome.status})"
        recomputed = pairing_norm(
            moment.moment_real(exp_action(outcome.y, 1.0, "I", x), "I")
            - theta_to_center(theta)
        )
        worst = max(worst, abs(recomputed - outcome.residual))
        trace = outcome.objective_trace
        if any(trace[i + 1] > trace[i] + 1e-12 * (1 + abs(trace[i])) for i in range(len(trace) - 1)):
            return False, "objective increased across accepted iterations"
    return worst <= 1e-12, f"max residual recompute gap {worst:.2e}"


def check_solver_uniqueness(rng, budget):
    worst = 0.0
    for _ in range(_scaled(5, budget)):
        quiver, dims, x = sampling.random_stable_instance(rng)
        theta = sampling.random_chamber_theta(rng, dims)
        base = kempf_ness.solve_moment_equation(x, theta)
        if not base.converged:
            return False, "baseline solve failed"
        for _ in range(10):
            seedling = sampling.random_uv_element(rng, dims)
            nrm = pairing_norm(seedling)
            perturb = (0.1 / nrm) * seedling if nrm > 0 else seedling
            restart = kempf_ness.solve_moment_equation(
                x, theta, opts=kempf_ness.SolveOptions(initial_y=base.y + perturb)
            )
            if not restart.converged:
                return False, "perturbed restart failed"
            worst = max(worst, pairing_norm(restart.y - base.y))
    return worst <= 1e-7, f"max restart spread {worst:.2e}"


def check_solver_equivariance_inverse(rng, budget):
    worst = 0.0
    for _ in range(_scaled(8, budget)):
        quiver, dims, x = sampling.random_stable_instance(rng)
        theta = sampling.random_chamber_theta(rng, dims)
        outcome = kempf_ness.solve_moment_equation(x, theta)
        if not outcome.converged:
            return False, "solve failed"
        u = sampling.random_unitary(rng, dims)
        moved = kempf_ness.solve_moment_equation(act(u, x), theta)
        expected = LieAlgebraElement.project(
            [ub @ yb @ ub.conj().T for ub, yb in zip(u.blocks, outcome.y.blocks)]
        )
        worst = max(worst, pairing_norm(moved.y - expected))
        image = exp_action(outcome.y, 1.0, "I", x)
        theta_back = center_to_theta(moment.moment_real(x, "I"))
        if pairing_norm(
            moment.moment_real(x, "I") - theta_to_center(theta_back)
        ) <= 1e-8:
            back = kempf_ness.solve_moment_equation(image, theta_back)
            worst = max(worst, pairing_norm(back.y + outcome.y))
    return worst <= 1e-7, f"max defect {worst:.2e}"


def check_flow_invariants(rng, budget):
    for _ in range(_scaled(8, budget)):
        quiver, dims, x = sampling.random_stable_instance(rng)
        theta = sampling.random_chamber_theta(rng, dims)
        out = flow.flow_integrate(theta, x)
        hs = [s[1] for s in out.trajectory_summary]
        if any(hs[i + 1] > hs[i] + 1e-12 for i in range(len(hs) - 1)):
            return False, "h increased along a trajectory"
        if out.classification != "analytically_semistable":
            return False, f"stable-family flow classified {out.classification}"
        solved = kempf_ness.solve_moment_equation(x, theta)
        if solved.converged:
            gap = pairing_norm(
                moment.moment_real(out.limit_point, "I")
                - moment.moment_real(exp_action(solved.y, 1.0, "I", x), "I")
            )
            if gap > 1e-8:
                return False, f"flow and solver fibers disagree by {gap:.2e}"
    return True, "monotone, classified, consistent with the solver"


def check_flow_gradient(rng, budget):
    worst = 0.0
    for _ in range(_scaled(15, budget)):
        quiver, dims, x = sampling.random_instance(rng, max_dim=3)
        theta = sampling.random_theta(rng, dims)
        g = flow.grad_h(theta, x)
        d = sampling.random_representation(rng, quiver, dims)
        eps = 1e-6
        fd = (flow.h_value(theta, x + eps * d) - flow.h_value(theta, x - eps * d)) / (2 * eps)
        an = hyperkahler_metric(g, d)
        worst = max(worst, abs(fd - an) / (1.0 + abs(fd)))
    return worst <= 1e-6, f"max gradient mismatch {worst:.2e}"


def check_cone_projection(rng, budget):
    worst = 0.0
    for _ in range(_scaled(25, budget)):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(0, 7))
        vectors = rng.normal(size=(k, n))
        theta = rng.normal(size=n)
        beta, dist_sq = cones.cone_project(vectors, theta)
        brute_beta, brute_dist = _brute_force_projection(vectors, theta)
        worst = max(worst, abs(dist_sq - brute_dist))
        worst = max(worst, float(np.linalg.norm(beta - brute_beta)))
    return worst <= 1e-8, f"max disagreement with active-set brute force {worst:.2e}"


def _brute_force_projection(vectors, theta):
    """Exhaustive quadratic programming over supports; independent oracle."""
    k = len(vectors)
    best = (np.zeros_like(theta), float(theta @ theta))
    for mask in range(1, 2 ** k):
        idx = [i for i in range(k) if mask >> i & 1]
        a = vectors[idx].T
        coeff, *_ = np.linalg.lstsq(a, theta, rcond=None)
        if np.any(coeff < -1e-12):
            continue
        beta = a @ coeff
        dist = float((theta - beta) @ (theta - beta))
        if dist < best[1] - 1e-15:
            best = (beta, dist)
    return best


def check_d_theta_brute_force(rng, budget):
    worst = 0.0
    for _ in range(_scaled(12, budget)):
        n = int(rng.integers(2, 4))
        k = int(rng.integers(1, 8))
        vectors = rng.normal(size=(k, n))
        ws = cones.WeightSet(vectors=vectors, multiplicities=np.ones(k, dtype=int), num_coords=n)
        theta = rng.normal(size=n)
        mine = cones.d_theta(ws, theta)
        brute = math.inf
        gap = 1e-9 * (1.0 + float(np.linalg.norm(theta)))
        for mask in range(2 ** k):
            subset = vectors[[i for i in range(k) if mask >> i & 1]]
            beta, dist = _brute_force_projection(subset, theta)
            if np.linalg.norm(beta - theta) > gap:
                brute = min(brute, dist)
        if math.isinf(mine) != math.isinf(brute):
            return False, "d_theta finiteness disagrees with brute force"
        if not math.isinf(mine):
            worst = max(worst, abs(mine - brute))
    return worst <= 1e-12, f"max d_theta disagreement {worst:.2e}"


def check_regular_loci(rng, budget):
    for _ in range(_scaled(30, budget)):
        n = int(rng.integers(1, 4))
        dims = tuple(int(rng.integers(1, 4)) for _ in range(n))
        try:
            triple = sampling.random_rational_triple(rng, dims, attempts=50)
        except ValueError:
            continue  # divisible dims have an empty regular locus
        ok, witness = cones.hyperkahler_regular_check(dims, triple)
        float_ok = _float_regular_check(dims, triple)
        if ok != float_ok:
            return False, f"exact and float regular checks disagree on {dims}"
    tri0 = cones.RationalThetaTriple(("0",), ("0",), ("0",), (2,))
    if cones.hyperkahler_regular_check((2,), tri0)[0]:
        return False, "divisible dimension vector accepted"
    return True, "exact and float checks agree; divisible case rejected"


def _float_regular_check(dims, triple):
    comps = triple.as_floats()
    for w in cones.regular_walls(dims):
        if all(abs(sum(c * v for c, v in zip(comp, w))) <= 1e-9 for comp in comps):
            return False
    return True


def check_stability_agreement(rng, budget):
    contradictions = 0
    checked = 0
    for _ in range(_scaled(25, budget)):
        if rng.random() < 0.7:
            quiver, dims, x = sampling.random_stable_instance(rng)
            theta = sampling.random_chamber_theta(rng, dims)
        else:
            quiver, dims, x = sampling.random_instance(rng, max_dim=2)
            theta = sampling.random_theta(rng, dims)
        king = stability.king_stable_test(x, theta, seed=int(rng.integers(2 ** 31)))
        numeric = stability.certify_stable_numerical(x, theta)
        checked += 1
        definite = {"stable", "unstable"}
        if king.verdict in definite and numeric.verdict in definite:
            if king.verdict != numeric.verdict:
                contradictions += 1
        if king.verdict == "unstable" and king.witness_subspace is not None:
            resid = stability.subrepresentation_residual(x, king.witness_subspace)
            slope = stability.king_slope(theta, king.witness_subspace.sub_dims())
            if resid > 1e-10 or slope < 0:
                return False, "unstable witness failed re-verification"
    return contradictions == 0, f"{checked} instances, {contradictions} contradictions"


def check_filtration_subreps(rng, budget):
    for _ in range(_scaled(15, budget)):
        quiver, dims, x = sampling.random_instance(rng, max_dim=3)
        y = sampling.random_uv_element(rng, dims)
        limit_exists, _ = stability.hm_limit_filtration(x, y)
        if limit_exists:
            for w in stability.filtration_subspaces(x, y):
                if not stability.verify_subrepresentation(x, w, 1e-8):
                    return False, "filtration level is not a subrepresentation"
    return True, "all limit filtrations verified as subrepresentations"


def check_transport_suite(rng, budget):
    worst_round = 0.0
    worst_fiber = 0.0
    worst_equiv = 0.0
    worst_path = 0.0
    for _ in range(_scaled(5, budget)):
        quiver, dims, x0 = sampling.random_stable_instance(rng)
        theta0 = sampling.random_chamber_theta(rng, dims)
        seat = kempf_ness.solve_moment_equation(x0, theta0)
        if not seat.converged:
            return False, "could not seat the start point on a fiber"
        x = exp_action(seat.y, 1.0, "I", x0)
        theta1 = sampling.random_chamber_theta(rng, dims)
        res = transport.transport_real(x, theta1)
        worst_fiber = max(worst_fiber, res.residual)
        back = transport.transport_real(res.image, theta0)
        worst_round = max(worst_round, math.sqrt(norm_sq(back.image - x)))
        u = sampling.random_unitary(rng, dims)
        res_u = transport.transport_real(act(u, x), theta1)
        worst_equiv = max(
            worst_equiv, math.sqrt(norm_sq(res_u.image - act(u, res.image)))
        )
        mid = balanced_theta(
            [0.5 * (a + b) for a, b in zip(theta0.values, theta1.values)], dims
        )
        res_2leg = transport.transport_real(
            x, theta1, transport.TransportPlan(waypoints=(mid,))
        )
        worst_path = max(worst_path, math.sqrt(norm_sq(res_2leg.image - res.image)))
    ok = (
        worst_fiber <= 1e-8
        and worst_round <= 1e-7
        and worst_equiv <= 1e-7
        and worst_path <= 1e-6
    )
    return ok, (
        f"fiber {worst_fiber:.2e}, round {worst_round:.2e}, "
        f"equivariance {worst_equiv:.2e}, path {worst_path:.2e}"
    )


def check_hyperkahler_transport(rng, budget):
    worst_fiber = 0.0
    worst_round = 0.0
    for _ in range(_scaled(4, budget)):
        quiver, dims, x = sampling.random_stable_instance(rng)
        start = tuple(
            center_to_theta(moment.moment_real(x, s)) for s in STRUCTURES
        )
        target = tuple(sampling.random_chamber_theta(rng, dims, scale=0.5) for _ in range(3))
        res = transport.transport_hyperkahler(x, tuple(t.values for t in target))
        worst_fiber = max(worst_fiber, res.residual)
        back = transport.transport_hyperkahler(
            res.image,
            tuple(t.values for t in start),
            transport.TransportPlan(leg_order=("K", "J", "I")),
        )
        worst_round = max(worst_round, math.sqrt(norm_sq(back.image - x)))
    ok = worst_fiber <= 1e-8 and worst_round <= 1e-7
    return ok, f"fiber {worst_fiber:.2e}, round trip {worst_round:.2e}"


def check_quaternion_transport(rng, budget):
    worst = 0.0
    for _, _, x in _random_xs(rng, _scaled(15, budget)):
        q = _random_unit_quaternion(rng)
        t = float(rng.uniform(0.3, 3.0))
        image = transport.quaternion_transport(x, q, t)
        predicted = transport.predicted_quaternion_moment(x, q, t)
        actual = moment.moment_hyperkahler(image)
        worst = max(worst, (actual - predicted).norm() / (1.0 + norm_sq(x)))
    return worst <= 1e-9, f"max moment prediction defect {worst:.2e}"


CHECKS = [
    ("structure_isometries", check_structure_isometries),
    ("quaternion_relations", check_quaternion_relations),
    ("rotation_identities", check_rotation_identities),
    ("quaternion_action", check_quaternion_action),
    ("metric_polarisation", check_metric_polarisation),
    ("pairing_properties", check_pairing_properties),
    ("character_pairing", check_character_pairing),
    ("left_action", check_left_action),
    ("exp_action_consistency", check_exp_action_consistency),
    ("polar_decomposition", check_polar_decomposition),
    ("stabilizer_conjugation", check_stabilizer_conjugation),
    ("moment_oracle", check_moment_oracle),
    ("moment_equivariance", check_moment_equivariance),
    ("moment_complex_trace", check_moment_complex_trace),
    ("rotation_intertwining", check_rotation_intertwining),
    ("quaternion_equivariance", check_quaternion_equivariance),
    ("moment_homogeneity", check_moment_homogeneity),
    ("complex_real_proportionality", check_complex_real_proportionality),
    ("solver_fixed_point", check_solver_fixed_point),
    ("solver_uniqueness", check_solver_uniqueness),
    ("solver_equivariance_inverse", check_solver_equivariance_inverse),
    ("flow_invariants", check_flow_invariants),
    ("flow_gradient", check_flow_gradient),
    ("cone_projection", check_cone_projection),
    ("d_theta_brute_force", check_d_theta_brute_force),
    ("regular_loci", check_regular_loci),
    ("stability_agreement", check_stability_agreement),
    ("filtration_subreps", check_filtration_subreps),
    ("transport_real", check_transport_suite),
    ("transport_hyperkahler", check_hyperkahler_transport),
    ("transport_quaternion", check_quaternion_transport),
]
