"""Acceptance suite: every criterion at its stated tolerance and time budget.

Each test prints one [PASS] line with the measured extremes; tolerances are
pinned here, not configurable.  Desk scale throughout: at most 4 vertices,
dimensions at most 4, at most 6 edges.
"""

import json
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from quivermoment import (
    LieAlgebraElement,
    Representation,
    SolveOptions,
    StabilityParameter,
    act,
    balanced_theta,
    certify_stable_numerical,
    cone_project,
    d_theta,
    exp_action,
    flow_integrate,
    hyperkahler_rotation,
    king_slope,
    king_stable_test,
    moment_hyperkahler,
    moment_pairing_fd_oracle,
    moment_real,
    norm_sq,
    pairing,
    pairing_norm,
    quaternion_act,
    solve_moment_equation,
    subrepresentation_residual,
    transport_hyperkahler,
    transport_real,
)
from quivermoment.cones import WeightSet, regular_walls
from quivermoment.flow import FlowOptions
from quivermoment.lie import center_to_theta
from quivermoment.moment import complex_vs_real_identity, quaternion_conjugate_triple
from quivermoment.sampling import (
    random_chamber_theta,
    random_instance,
    random_rational_triple,
    random_stable_instance,
    random_unitary,
    random_uv_element,
)
from quivermoment.transport import TransportPlan

STRUCTURES = ("I", "J", "K")
LN4_OVER_4 = math.log(4.0) / 4.0


def report(criterion, elapsed, budget, detail):
    print(f"[PASS] criterion {criterion}: {detail} ({elapsed:.2f}s <= {budget:.0f}s)")


def a2_pair():
    from quivermoment import Quiver, extend

    xq = extend(Quiver(2, [(0, 1)]))
    x = Representation(xq, (1, 1), [np.array([[1.0]]), np.array([[0.0]])])
    return xq, x


def test_criterion_1_moment_oracle_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    worst = 0.0
    for _ in range(200):
        quiver, dims, x = random_instance(rng)
        y = random_uv_element(rng, dims)
        s = STRUCTURES[int(rng.integers(3))]
        lhs = pairing(moment_real(x, s), y)
        rhs = moment_pairing_fd_oracle(x, y, s)
        scale = 1.0 + norm_sq(x) * math.sqrt(pairing(y, y))
        gap = abs(lhs - rhs) / scale
        worst = max(worst, gap)
        assert gap <= 1e-6
    elapsed = time.perf_counter() - start
    assert elapsed <= 5.0
    report(1, elapsed, 5, f"200 oracle instances, worst scaled gap {worst:.2e}")


def test_criterion_2_quaternionic_algebra_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(1002)
    from quivermoment import apply_structure

    worst_rel = 0.0
    worst_mu = 0.0
    mapping = {"I": "K", "J": "I", "K": "J"}
    for _ in range(100):
        quiver, dims, x = random_instance(rng)
        scale = math.sqrt(norm_sq(x)) + 1.0
        for s in STRUCTURES:
            twice = apply_structure(s, apply_structure(s, x))
            worst_rel = max(worst_rel, math.sqrt(norm_sq(twice + x)) / scale)
        ijk = apply_structure("I", apply_structure("J", apply_structure("K", x)))
        worst_rel = max(worst_rel, math.sqrt(norm_sq(ijk + x)) / scale)
        rot = hyperkahler_rotation(x)
        worst_rel = max(worst_rel, abs(norm_sq(rot) - norm_sq(x)) / scale ** 2)
        back = hyperkahler_rotation(rot, "inverse")
        worst_rel = max(worst_rel, math.sqrt(norm_sq(back - x)) / scale)
        for s, s_next in (("I", "J"), ("J", "K"), ("K", "I")):
            lhs = hyperkahler_rotation(apply_structure(s, x))
            rhs = apply_structure(s_next, rot)
            worst_rel = max(worst_rel, math.sqrt(norm_sq(lhs - rhs)) / scale)
        for s, s_from in mapping.items():
            worst_mu = max(
                worst_mu,
                pairing_norm(moment_real(rot, s) - moment_real(x, s_from))
                / (1.0 + norm_sq(x)),
            )
    assert worst_rel <= 1e-12
    assert worst_mu <= 1e-10
    elapsed = time.perf_counter() - start
    assert elapsed <= 2.0
    report(
        2, elapsed, 2,
        f"100 instances, algebra {worst_rel:.2e} (tol 1e-12), intertwining {worst_mu:.2e} (tol 1e-10)",
    )


def test_criterion_3_kempf_ness_solver():
    start = time.perf_counter()
    _, x = a2_pair()
    out = solve_moment_equation(x, StabilityParameter((4.0, -4.0), (1, 1)))
    assert out.converged
    assert abs(out.y.blocks[0][0, 0].imag - LN4_OVER_4) <= 1e-8

    rng = np.random.default_rng(1003)
    worst_resid = 0.0
    for _ in range(100):
        quiver, dims, xr = random_stable_instance(rng)
        theta = random_chamber_theta(rng, dims)
        sol = solve_moment_equation(xr, theta)
        assert sol.converged
        worst_resid = max(worst_resid, sol.residual)
    assert worst_resid <= 1e-10

    worst_spread = 0.0
    for _ in range(3):
        quiver, dims, xr = random_stable_instance(rng)
        theta = random_chamber_theta(rng, dims)
        base = solve_moment_equation(xr, theta)
        assert base.converged
        for _ in range(10):
            d = random_uv_element(rng, dims)
            perturbed = base.y + (0.1 / pairing_norm(d)) * d
            restart = solve_moment_equation(xr, theta, opts=SolveOptions(initial_y=perturbed))
            assert restart.converged
            worst_spread = max(worst_spread, pairing_norm(restart.y - base.y))
    assert worst_spread <= 1e-7
    elapsed = time.perf_counter() - start
    assert elapsed <= 10.0
    report(
        3, elapsed, 10,
        f"closed form 1e-8, 100 in-chamber residual max {worst_resid:.2e}, restart spread {worst_spread:.2e}",
    )


def test_criterion_4_equivariance_and_inverse():
    start = time.perf_counter()
    rng = np.random.default_rng(1004)
    worst = 0.0
    for _ in range(50):
        quiver, dims, x0 = random_stable_instance(rng)
        theta0 = random_chamber_theta(rng, dims)
        seat = solve_moment_equation(x0, theta0)
        assert seat.converged
        x = exp_action(seat.y, 1.0, "I", x0)
        theta1 = random_chamber_theta(rng, dims)
        forward = solve_moment_equation(x, theta1)
        assert forward.converged
        u = random_unitary(rng, dims)
        moved = solve_moment_equation(act(u, x), theta1)
        assert moved.converged
        expected = LieAlgebraElement.project(
            [ub @ b @ ub.conj().T for ub, b in zip(u.blocks, forward.y.blocks)]
        )
        worst = max(worst, pairing_norm(moved.y - expected))
        image = exp_action(forward.y, 1.0, "I", x)
        back = solve_moment_equation(image, theta0)
        assert back.converged
        worst = max(worst, pairing_norm(back.y + forward.y))
    assert worst <= 1e-7
    elapsed = time.perf_counter() - start
    assert elapsed <= 5.0
    report(4, elapsed, 5, f"50 instances, worst equivariance/inverse defect {worst:.2e}")


def test_criterion_5_flow_classification():
    start = time.perf_counter()
    _, x = a2_pair()
    stable = flow_integrate(StabilityParameter((0.5, -0.5), (1, 1)), x)
    assert stable.classification == "analytically_semistable"
    assert stable.h_value <= 1e-18
    unstable = flow_integrate(StabilityParameter((-1.0, 1.0), (1, 1)), x)
    assert unstable.classification == "higher_stratum"
    assert unstable.h_value > 0

    rng = np.random.default_rng(1005)
    contradictions = 0
    for k in range(100):
        if k % 5 != 0:
            quiver, dims, xr = random_stable_instance(rng)
            theta = random_chamber_theta(rng, dims)
            opts = None
        else:
            quiver, dims, xr = random_instance(rng, max_dim=2)
            theta = balanced_theta(rng.normal(size=len(dims)), dims)
            opts = FlowOptions(max_time=300.0)
        out = flow_integrate(theta, xr, opts)
        hs = [s[1] for s in out.trajectory_summary]
        assert all(hs[i + 1] <= hs[i] + 1e-12 for i in range(len(hs) - 1))
        sol = solve_moment_equation(xr, theta)
        if out.classification == "analytically_semistable" and sol.status == "diverged":
            contradictions += 1
        if out.classification == "higher_stratum" and sol.converged:
            contradictions += 1
    assert contradictions == 0
    elapsed = time.perf_counter() - start
    assert elapsed <= 30.0
    report(
        5, elapsed, 30,
        f"monotone on all trajectories, A2 pair classified, 100 instances with {contradictions} contradictions",
    )


def _support_distances(vectors, theta):
    """Squared distance to the span-cone of every support, by least squares."""
    k = len(vectors)
    d = np.full(2 ** k, np.inf)
    d[0] = float(theta @ theta)
    for mask in range(1, 2 ** k):
        idx = [i for i in range(k) if mask >> i & 1]
        a = vectors[idx].T
        sol, *_ = np.linalg.lstsq(a, theta, rcond=None)
        if np.any(sol < -1e-12):
            continue
        beta = a @ sol
        d[mask] = float((theta - beta) @ (theta - beta))
    return d


def _brute_force_d_theta(vectors, theta):
    """Independent oracle: support enumeration plus a subset min-transform.

    The projection distance of a subset-cone is the least distance over its
    feasible supports; the lattice zeta transform turns per-support distances
    into per-subset distances without running any active-set iteration.
    """
    k = len(vectors)
    dist = _support_distances(vectors, theta)
    for bit in range(k):
        step = 1 << bit
        for mask in range(2 ** k):
            if mask & step:
                dist[mask] = min(dist[mask], dist[mask ^ step])
    gap = 1e-9 * (1.0 + float(np.linalg.norm(theta)))
    candidates = dist[np.sqrt(dist) > gap]
    return float(candidates.min()) if len(candidates) else math.inf


def test_criterion_6_cone_projection_and_d_theta():
    start = time.perf_counter()
    rng = np.random.default_rng(1006)
    worst_kkt = 0.0
    worst_gap = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, 11))
        vectors = rng.normal(size=(k, n))
        theta = rng.normal(size=n)
        beta, _ = cone_project(vectors, theta)
        dual = vectors @ (theta - beta)
        worst_kkt = max(worst_kkt, float(dual.max(initial=-np.inf)))
        assert np.all(dual <= 1e-10 * (1 + np.abs(theta).max() * np.abs(vectors).max()))
        ws = WeightSet(vectors=vectors, multiplicities=np.ones(k, dtype=int), num_coords=n)
        mine = d_theta(ws, theta)
        brute = _brute_force_d_theta(vectors, theta)
        assert math.isinf(mine) == math.isinf(brute)
        if not math.isinf(mine):
            worst_gap = max(worst_gap, abs(mine - brute))
            assert abs(mine - brute) <= 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed <= 5.0
    report(
        6, elapsed, 5,
        f"50 instances |A|<=10, KKT max dual {worst_kkt:.2e}, d_theta gap max {worst_gap:.2e}",
    )


def _walls_by_integers(dims, triple):
    """Independent regular-locus oracle over cleared-denominator integers."""
    comps = []
    for comp in triple.components():
        denom = 1
        for v in comp:
            denom = denom * v.denominator // math.gcd(denom, v.denominator)
        comps.append([int(v * denom) for v in comp])
    for w in regular_walls(dims):
        if all(sum(c * wi for c, wi in zip(comp, w)) == 0 for comp in comps):
            return False
    return True


def test_criterion_7_regular_loci():
    start = time.perf_counter()
    rng = np.random.default_rng(1007)
    from quivermoment import RationalThetaTriple, complex_regular_check, hyperkahler_regular_check

    checked = 0
    while checked < 100:
        n = int(rng.integers(1, 5))
        dims = tuple(int(rng.integers(1, 5)) for _ in range(n))
        try:
            triple = random_rational_triple(rng, dims, attempts=20)
        except ValueError:
            if math.gcd(*dims) > 1:
                # divisible dims: the regular locus is empty, nothing to draw
                checked += 1
            continue
        ok, _ = hyperkahler_regular_check(dims, triple)
        assert ok == _walls_by_integers(dims, triple)
        walls = regular_walls(dims)
        if walls:
            zero = RationalThetaTriple(
                tuple(Fraction(0) for _ in dims),
                tuple(Fraction(0) for _ in dims),
                tuple(Fraction(0) for _ in dims),
                dims,
            )
            ok0, witness = hyperkahler_regular_check(dims, zero)
            assert not ok0 and witness == walls[0]
        checked += 1

    jordan2 = RationalThetaTriple(("0",), ("0",), ("0",), (2,))
    ok, witness = hyperkahler_regular_check((2,), jordan2)
    assert not ok and witness == (1,)
    a2 = RationalThetaTriple(("1", "-1"), ("0", "0"), ("0", "0"), (1, 1))
    assert hyperkahler_regular_check((1, 1), a2) == (True, None)
    assert complex_regular_check((1, 1), [("1", "0"), ("-1", "0")])
    elapsed = time.perf_counter() - start
    assert elapsed <= 2.0
    report(7, elapsed, 2, "100 rational inputs agree with the integer-arithmetic oracle")


def test_criterion_8_stability_certificates():
    start = time.perf_counter()
    rng = np.random.default_rng(1008)
    contradictions = 0
    witnesses = 0
    for k in range(200):
        if k % 4 != 0:
            quiver, dims, x = random_stable_instance(rng)
            theta = random_chamber_theta(rng, dims)
        else:
            quiver, dims, x = random_instance(rng, max_dim=2)
            theta = balanced_theta(rng.normal(size=len(dims)), dims)
        king = king_stable_test(x, theta, seed=int(rng.integers(2 ** 31)))
        numeric = certify_stable_numerical(x, theta)
        definite = {"stable", "unstable"}
        if king.verdict in definite and numeric.verdict in definite:
            if king.verdict != numeric.verdict:
                contradictions += 1
        if king.verdict == "unstable" and king.witness_subspace is not None:
            witnesses += 1
            assert subrepresentation_residual(x, king.witness_subspace) <= 1e-10
            assert king_slope(theta, king.witness_subspace.sub_dims()) >= 0.0
    assert contradictions == 0

    # chamber constancy on paired parameters
    for _ in range(20):
        quiver, dims, x = random_stable_instance(rng)
        theta = random_chamber_theta(rng, dims, margin=0.3)
        n = len(dims)
        while True:
            theta2 = balanced_theta(np.array(theta.values) + rng.normal(size=n) * 0.05, dims)
            same = all(
                np.sign(float(np.dot([(m >> j) & 1 for j in range(n)], theta.values)))
                == np.sign(float(np.dot([(m >> j) & 1 for j in range(n)], theta2.values)))
                for m in range(1, 2 ** n - 1)
            )
            if same:
                break
        v1 = king_stable_test(x, theta, seed=7).verdict
        v2 = king_stable_test(x, theta2, seed=7).verdict
        assert not (v1 in ("stable", "unstable") and v2 in ("stable", "unstable") and v1 != v2)
    elapsed = time.perf_counter() - start
    assert elapsed <= 60.0
    report(
        8, elapsed, 60,
        f"200 instances, 0 contradictions, {witnesses} unstable witnesses re-verified, 20 chamber pairs",
    )


def test_criterion_9_transport():
    start = time.perf_counter()
    _, x = a2_pair()
    res = transport_real(x, StabilityParameter((4.0, -4.0), (1, 1)))
    assert abs(res.image.blocks[0][0, 0] - 2.0) <= 1e-8
    back = transport_real(res.image, StabilityParameter((1.0, -1.0), (1, 1)))
    assert math.sqrt(norm_sq(back.image - x)) <= 1e-7

    rng = np.random.default_rng(1009)
    worst = {"round": 0.0, "equiv": 0.0, "path": 0.0, "fiber": 0.0}
    worst_hk = {"round": 0.0, "equiv": 0.0, "path": 0.0, "fiber": 0.0}
    for k in range(50):
        quiver, dims, x0 = random_stable_instance(rng)
        theta0 = random_chamber_theta(rng, dims)
        seat = solve_moment_equation(x0, theta0)
        assert seat.converged
        xf = exp_action(seat.y, 1.0, "I", x0)
        theta1 = random_chamber_theta(rng, dims)
        fwd = transport_real(xf, theta1)
        worst["fiber"] = max(worst["fiber"], fwd.residual)
        bk = transport_real(fwd.image, theta0)
        worst["round"] = max(worst["round"], math.sqrt(norm_sq(bk.image - xf)))
        u = random_unitary(rng, dims)
        fwd_u = transport_real(act(u, xf), theta1)
        worst["equiv"] = max(worst["equiv"], math.sqrt(norm_sq(fwd_u.image - act(u, fwd.image))))
        mid = balanced_theta(
            [0.5 * (a + b) for a, b in zip(theta0.values, theta1.values)], dims
        )
        fwd2 = transport_real(xf, theta1, TransportPlan(waypoints=(mid,)))
        worst["path"] = max(worst["path"], math.sqrt(norm_sq(fwd2.image - fwd.image)))

        if k % 3 == 0:
            triple = random_rational_triple(rng, dims, attempts=100)
            target = triple.as_floats()
            start_triple = tuple(
                tuple(center_to_theta(moment_real(xf, s)).values) for s in STRUCTURES
            )
            hk = transport_hyperkahler(
                xf, target, TransportPlan(regular_gate=(triple,))
            )
            worst_hk["fiber"] = max(worst_hk["fiber"], hk.residual)
            hk_back = transport_hyperkahler(
                hk.image, start_triple, TransportPlan(leg_order=("K", "J", "I"))
            )
            worst_hk["round"] = max(worst_hk["round"], math.sqrt(norm_sq(hk_back.image - xf)))
            hk_u = transport_hyperkahler(act(u, xf), target)
            worst_hk["equiv"] = max(
                worst_hk["equiv"], math.sqrt(norm_sq(hk_u.image - act(u, hk.image)))
            )
            mid_triple = tuple(
                tuple(0.5 * (a + b) for a, b in zip(sc, tc))
                for sc, tc in zip(start_triple, target)
            )
            hk2 = transport_hyperkahler(xf, target, TransportPlan(waypoints=(mid_triple,)))
            worst_hk["path"] = max(worst_hk["path"], math.sqrt(norm_sq(hk2.image - hk.image)))

    for w in (worst, worst_hk):
        assert w["round"] <= 1e-7
        assert w["equiv"] <= 1e-7
        assert w["path"] <= 1e-6
        assert w["fiber"] <= 1e-8
    elapsed = time.perf_counter() - start
    assert elapsed <= 60.0
    report(
        9, elapsed, 60,
        "50 real instances "
        f"(round {worst['round']:.1e}, equiv {worst['equiv']:.1e}, path {worst['path']:.1e}, "
        f"fiber {worst['fiber']:.1e}); hyperkahler "
        f"(round {worst_hk['round']:.1e}, equiv {worst_hk['equiv']:.1e}, "
        f"path {worst_hk['path']:.1e}, fiber {worst_hk['fiber']:.1e})",
    )


def test_criterion_10_quaternion_scaling_equivariance():
    start = time.perf_counter()
    rng = np.random.default_rng(1010)
    worst_q = 0.0
    worst_t = 0.0
    for _ in range(100):
        quiver, dims, x = random_instance(rng)
        q = rng.normal(size=4)
        q = tuple(q / np.linalg.norm(q))
        lhs = moment_hyperkahler(quaternion_act(q, x))
        rhs = quaternion_conjugate_triple(q, moment_hyperkahler(x))
        worst_q = max(worst_q, (lhs - rhs).norm() / (1.0 + norm_sq(x)))
        base = moment_hyperkahler(x)
        for t in (0.5, 2.0, 3.0):
            gap = (moment_hyperkahler(t * x) - base.scale(t * t)).norm()
            worst_t = max(worst_t, gap / (1.0 + base.norm()))
    assert worst_q <= 1e-9
    assert worst_t <= 1e-12
    elapsed = time.perf_counter() - start
    assert elapsed <= 2.0
    report(
        10, elapsed, 2,
        f"100 instances, conjugation defect {worst_q:.2e} (tol 1e-9), scaling defect {worst_t:.2e} (tol 1e-12)",
    )


def test_criterion_11_proportionality_constant():
    start = time.perf_counter()
    rng = np.random.default_rng(1011)
    values = []
    for _ in range(50):
        quiver, dims, x = random_instance(rng)
        c, resid = complex_vs_real_identity(x)
        if c is None:
            continue
        values.append(c)
        assert resid <= 1e-9 * (1.0 + norm_sq(x))
    spread = max(values) - min(values)
    assert spread <= 1e-8
    elapsed = time.perf_counter() - start
    assert elapsed <= 2.0
    report(
        11, elapsed, 2,
        f"c = {values[0]:.12f} across {len(values)} instances, spread {spread:.2e}",
    )


def test_criterion_12_selftest_command():
    start = time.perf_counter()
    runs = []
    for _ in range(2):
        proc = subprocess.run(
            [sys.executable, "-m", "quivermoment.cli", "selftest", "--seed", "0"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stdout[-2000:]
        runs.append(proc.stdout)
    assert runs[0] == runs[1]
    payload = json.loads(runs[0])
    assert payload["result"]["failed"] == 0
    elapsed = time.perf_counter() - start
    assert elapsed <= 180.0
    report(
        12, elapsed, 180,
        f"selftest deterministic, {payload['result']['passed']} checks passed, exit 0",
    )
