"""Batch command-line front end: JSON problem specs in, JSON reports out.

Every report embeds the tool version, the resolved options, and an echo of
the parsed input, and is byte-identical across runs with equal seeds.  Exit
codes: 0 success, 1 invariant or check failure, 2 malformed input,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, selftest
from .cones import (
    RationalThetaTriple,
    complex_regular_check,
    hyperkahler_regular_check,
    parse_rational,
)
from .flow import FlowOptions, flow_integrate
from .kempf_ness import SolveOptions, solve_moment_equation
from .lie import LieAlgebraElement, StabilityParameter, pairing
from .moment import (
    complex_vs_real_identity,
    moment_complex,
    moment_hyperkahler,
    moment_pairing_fd_oracle,
)
from .quiver import Quiver, Representation, extend
from .sampling import random_representation, random_uv_element
from .stability import certify_stable_numerical, king_stable_test
from .transport import (
    TransportError,
    TransportPlan,
    quaternion_transport,
    replay_transport,
    transport_complex,
    transport_hyperkahler,
    transport_real,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_NO_CONVERGENCE = 3


class SpecError(ValueError):
    """Malformed problem specification; message carries the field path."""


# ---------------------------------------------------------------------------
# serialization

def matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def matrix_from_json(data, path):
    try:
        rows = [[complex(float(e[0]), float(e[1])) for e in row] for row in data]
        return np.array(rows, dtype=complex) if rows else np.zeros((0, 0), dtype=complex)
    except (TypeError, ValueError, IndexError) as exc:
        raise SpecError(f"{path}: expected a matrix of [re, im] pairs") from exc


def algebra_element_to_json(y):
    return {"blocks": [matrix_to_json(b) for b in y.blocks]}


def algebra_element_from_json(data, dims, path):
    blocks = data.get("blocks") if isinstance(data, dict) else data
    if not isinstance(blocks, list) or len(blocks) != len(dims):
        raise SpecError(f"{path}: expected one block per vertex")
    mats = [matrix_from_json(b, f"{path}[{j}]") for j, b in enumerate(blocks)]
    try:
        return LieAlgebraElement(mats)
    except ValueError as exc:
        raise SpecError(f"{path}: {exc}") from exc


def representation_to_json(x):
    return {"blocks": [matrix_to_json(b) for b in x.blocks]}


def subspace_to_json(w):
    return {"bases": [matrix_to_json(b) for b in w.bases], "sub_dims": list(w.sub_dims())}


def certificate_to_json(cert):
    out = {
        "verdict": cert.verdict,
        "residuals": {k: float(v) for k, v in cert.residuals.items()},
        "diagnostics": {k: (v if isinstance(v, (int, str, bool)) else float(v))
                        for k, v in cert.diagnostics.items()},
    }
    if cert.witness_subspace is not None:
        out["witness_subspace"] = subspace_to_json(cert.witness_subspace)
    if cert.witness_direction is not None:
        out["witness_direction"] = algebra_element_to_json(cert.witness_direction)
    return out


# ---------------------------------------------------------------------------
# spec parsing

def _require(spec, key, path="spec"):
    if key not in spec:
        raise SpecError(f"{path}: missing required field {key!r}")
    return spec[key]


def parse_quiver(spec):
    q = _require(spec, "quiver")
    if not isinstance(q, dict):
        raise SpecError("quiver: expected an object")
    vertices = q.get("vertices")
    edges = q.get("edges", [])
    if not isinstance(vertices, int) or vertices < 0:
        raise SpecError("quiver.vertices: expected a nonnegative integer")
    try:
        quiver = extend(Quiver(vertices, [tuple(e) for e in edges]))
    except (TypeError, ValueError) as exc:
        raise SpecError(f"quiver.edges: {exc}") from exc
    dims = _require(spec, "dims")
    if not isinstance(dims, list) or len(dims) != vertices:
        raise SpecError("dims: expected one integer per vertex")
    if any(not isinstance(d, int) or d < 0 for d in dims):
        raise SpecError("dims: entries must be nonnegative integers")
    return quiver, tuple(dims)


def parse_representation(spec, quiver, dims, rng):
    data = spec.get("representation")
    if data is None:
        return random_representation(rng, quiver, dims)
    blocks = data.get("blocks") if isinstance(data, dict) else data
    if not isinstance(blocks, list) or len(blocks) != quiver.num_edges:
        raise SpecError(
            f"representation.blocks: expected {quiver.num_edges} matrices "
            "(base edges then reversed edges)"
        )
    mats = [matrix_from_json(b, f"representation.blocks[{e}]") for e, b in enumerate(blocks)]
    try:
        return Representation(quiver, dims, mats)
    except ValueError as exc:
        raise SpecError(f"representation: {exc}") from exc


def parse_theta(spec, dims, key="theta"):
    values = _require(spec, key)
    if not isinstance(values, list) or len(values) != len(dims):
        raise SpecError(f"{key}: expected one real per vertex")
    try:
        return StabilityParameter(tuple(float(v) for v in values), dims)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{key}: {exc}") from exc


def parse_rational_triple(data, dims, path):
    if not isinstance(data, dict):
        raise SpecError(f"{path}: expected an object with theta_I/theta_J/theta_K")
    comps = []
    for name in ("theta_I", "theta_J", "theta_K"):
        vals = data.get(name)
        if not isinstance(vals, list) or len(vals) != len(dims):
            raise SpecError(f"{path}.{name}: expected one rational per vertex")
        try:
            comps.append(tuple(parse_rational(v) for v in vals))
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"{path}.{name}: {exc}") from exc
    try:
        return RationalThetaTriple(*comps, dims=dims)
    except ValueError as exc:
        raise SpecError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# commands

def cmd_moment(spec, args, rng):
    quiver, dims = parse_quiver(spec)
    x = parse_representation(spec, quiver, dims, rng)
    triple = moment_hyperkahler(x)
    mu_c = moment_complex(x)
    oracle_worst = 0.0
    for structure in ("I", "J", "K"):
        for _ in range(3):
            y = random_uv_element(rng, dims)
            lhs = pairing(triple.component(structure), y)
            rhs = moment_pairing_fd_oracle(x, y, structure)
            oracle_worst = max(oracle_worst, abs(lhs - rhs))
    c, resid = complex_vs_real_identity(x)
    return {
        "mu_I": algebra_element_to_json(triple.mu_I),
        "mu_J": algebra_element_to_json(triple.mu_J),
        "mu_K": algebra_element_to_json(triple.mu_K),
        "mu_C": {"blocks": [matrix_to_json(b) for b in mu_c.blocks]},
        "oracle_max_mismatch": oracle_worst,
        "proportionality_c": c,
        "proportionality_residual": resid,
    }, EXIT_OK


def _solve_options(spec, args):
    opts = spec.get("solve", {})
    if not isinstance(opts, dict):
        raise SpecError("solve: expected an object")
    kwargs = {}
    for key in ("max_iterations", "gradient_tolerance", "step_control", "divergence_norm_bound"):
        if key in opts:
            kwargs[key] = opts[key]
    if args.tolerance is not None:
        kwargs["gradient_tolerance"] = args.tolerance
    try:
        return SolveOptions(**kwargs)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"solve: {exc}") from exc


def cmd_solve(spec, args, rng):
    quiver, dims = parse_quiver(spec)
    x = parse_representation(spec, quiver, dims, rng)
    theta = parse_theta(spec, dims)
    structure = spec.get("structure", "I")
    outcome = solve_moment_equation(x, theta, structure, _solve_options(spec, args))
    report = {
        "status": outcome.status,
        "structure": outcome.structure,
        "iterations": outcome.iterations,
        "residual": outcome.residual,
        "y": algebra_element_to_json(outcome.y),
    }
    if outcome.divergence_direction is not None:
        report["divergence_direction"] = algebra_element_to_json(outcome.divergence_direction)
    return report, EXIT_OK if outcome.converged else EXIT_NO_CONVERGENCE


def cmd_flow(spec, args, rng):
    quiver, dims = parse_quiver(spec)
    x = parse_representation(spec, quiver, dims, rng)
    theta = parse_theta(spec, dims)
    opts_data = spec.get("flow", {})
    if not isinstance(opts_data, dict):
        raise SpecError("flow: expected an object")
    kwargs = {k: opts_data[k] for k in ("initial_step", "max_time", "stall_tolerance") if k in opts_data}
    if args.tolerance is not None:
        kwargs["stall_tolerance"] = args.tolerance
    try:
        opts = FlowOptions(**kwargs)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"flow: {exc}") from exc
    outcome = flow_integrate(theta, x, opts)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("t,h,grad_norm\n")
            for t, h, g in outcome.trajectory_summary:
                fh.write(f"{t!r},{h!r},{g!r}\n")
    return {
        "classification": outcome.classification,
        "h_value": outcome.h_value,
        "grad_norm": outcome.grad_norm,
        "time": outcome.time,
        "events": list(outcome.events),
        "limit_point": representation_to_json(outcome.limit_point),
        "trajectory_samples": len(outcome.trajectory_summary),
    }, EXIT_OK


def cmd_stability(spec, args, rng):
    quiver, dims = parse_quiver(spec)
    x = parse_representation(spec, quiver, dims, rng)
    theta = parse_theta(spec, dims)
    budget = args.budget if args.budget is not None else spec.get("stability", {}).get("search_budget", 64)
    king = king_stable_test(x, theta, search_budget=int(budget), seed=args.seed)
    numeric = certify_stable_numerical(x, theta, opts=_solve_options(spec, args))
    return {
        "king": certificate_to_json(king),
        "numerical": certificate_to_json(numeric),
    }, EXIT_OK


def cmd_regular(spec, args, rng):
    quiver, dims = parse_quiver(spec)
    report = {}
    if spec.get("export_weights"):
        import warnings

        from .cones import torus_weights

        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            ws = torus_weights(quiver, dims)
        report["torus_weights"] = {
            "vectors": [[float(v) for v in row] for row in ws.vectors],
            "multiplicities": [int(m) for m in ws.multiplicities],
            "spans_torus": bool(ws.spans_torus),
            "kernel_warning": bool(caught),
        }
    if "theta_triple" in spec:
        triple = parse_rational_triple(spec["theta_triple"], dims, "theta_triple")
        ok, witness = hyperkahler_regular_check(dims, triple)
        report["hyperkahler"] = {
            "in_regular_locus": ok,
            "violating_w": list(witness) if witness is not None else None,
        }
    if "xi" in spec:
        xi = spec["xi"]
        if not isinstance(xi, list) or len(xi) != len(dims):
            raise SpecError("xi: expected one [re, im] rational pair per vertex")
        try:
            pairs = [(parse_rational(p[0]), parse_rational(p[1])) for p in xi]
        except (ValueError, TypeError, IndexError, ZeroDivisionError) as exc:
            raise SpecError(f"xi: {exc}") from exc
        report["complex"] = {"in_regular_locus": complex_regular_check(dims, pairs)}
    if not report:
        raise SpecError("regular: provide theta_triple and/or xi")
    return report, EXIT_OK


def cmd_transport(spec, args, rng):
    quiver, dims = parse_quiver(spec)
    x = parse_representation(spec, quiver, dims, rng)
    tspec = spec.get("transport", {})
    if not isinstance(tspec, dict):
        raise SpecError("transport: expected an object")
    mode = tspec.get("mode", "real")
    plan_kwargs = {}
    if "max_subdivision_depth" in tspec:
        plan_kwargs["max_subdivision_depth"] = tspec["max_subdivision_depth"]
    if args.tolerance is not None:
        plan_kwargs["tolerance"] = args.tolerance
    elif "tolerance" in tspec:
        plan_kwargs["tolerance"] = tspec["tolerance"]
    if "leg_order" in tspec:
        plan_kwargs["leg_order"] = tuple(tspec["leg_order"])

    try:
        if mode == "real":
            target = parse_theta(tspec, dims, "target_theta")
            waypoints = tuple(
                parse_theta({"w": w}, dims, "w") for w in tspec.get("waypoints", [])
            )
            result = transport_real(x, target, TransportPlan(waypoints=waypoints, **plan_kwargs))
        elif mode == "hyperkahler":
            data = _require(tspec, "target_triple", "transport")
            target = tuple(
                tuple(float(v) for v in _require(data, name, "transport.target_triple"))
                for name in ("theta_I", "theta_J", "theta_K")
            )
            gate = tuple(
                parse_rational_triple(g, dims, "transport.regular_gate")
                for g in tspec.get("regular_gate", [])
            )
            result = transport_hyperkahler(
                x, target, TransportPlan(regular_gate=gate, **plan_kwargs)
            )
        elif mode == "complex":
            xi_start = [complex(float(p[0]), float(p[1])) for p in _require(tspec, "xi_start", "transport")]
            xi_target = [complex(float(p[0]), float(p[1])) for p in _require(tspec, "xi_target", "transport")]
            result = transport_complex(x, xi_start, xi_target, TransportPlan(**plan_kwargs))
        elif mode == "quaternion":
            q = tuple(float(v) for v in _require(tspec, "q", "transport"))
            t = float(tspec.get("t", 1.0))
            image = quaternion_transport(x, q, t)
            return {
                "mode": mode,
                "image": representation_to_json(image),
                "residual": 0.0,
            }, EXIT_OK
        elif mode == "replay":
            log = []
            for k, entry in enumerate(_require(tspec, "log", "transport")):
                structure, y_data = entry[0], entry[1]
                log.append((structure, algebra_element_from_json(y_data, dims, f"transport.log[{k}]")))
            image = replay_transport(x, log)
            return {
                "mode": mode,
                "image": representation_to_json(image),
            }, EXIT_OK
        else:
            raise SpecError(f"transport.mode: unknown mode {mode!r}")
    except TransportError as exc:
        return {"mode": mode, "error": str(exc)}, EXIT_NO_CONVERGENCE
    except ValueError as exc:
        raise SpecError(f"transport: {exc}") from exc

    return {
        "mode": mode,
        "image": representation_to_json(result.image),
        "residual": result.residual,
        "subdivisions_used": result.subdivisions_used,
        "applied_y_log": [
            [structure, algebra_element_to_json(y)] for structure, y in result.applied_y_log
        ],
    }, EXIT_OK


def cmd_selftest(spec, args, rng):
    budget = float(args.budget) if args.budget is not None else float(spec.get("budget", 1.0))
    results = selftest.run_selftest(seed=args.seed, budget=budget)
    checks = [
        {"name": r.name, "passed": r.passed, "detail": r.detail} for r in results
    ]
    ok = all(r.passed for r in results)
    return {
        "checks": checks,
        "passed": sum(r.passed for r in results),
        "failed": sum(not r.passed for r in results),
    }, (EXIT_OK if ok else EXIT_CHECK_FAILED)


COMMANDS = {
    "moment": cmd_moment,
    "solve": cmd_solve,
    "flow": cmd_flow,
    "stability": cmd_stability,
    "regular": cmd_regular,
    "transport": cmd_transport,
    "selftest": cmd_selftest,
}


# ---------------------------------------------------------------------------
# driver

def _load_input(args):
    if args.input is None:
        if args.command == "selftest":
            return {}
        raise SpecError("--input is required for this command")
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read input: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _run_one(command, spec, args):
    if not isinstance(spec, dict):
        raise SpecError("spec: expected a JSON object")
    rng = np.random.default_rng(args.seed)
    result, code = COMMANDS[command](spec, args, rng)
    report = {
        "command": command,
        "version": __version__,
        "options": {
            "seed": args.seed,
            "tolerance": args.tolerance,
            "budget": args.budget,
        },
        "input": spec,
        "result": result,
    }
    return report, code


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quivermoment",
        description="Moment maps of quiver representations: solvers, flows, "
        "stability certificates, and transport.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--input", help="JSON problem spec (object or array of objects)")
    parser.add_argument("--output", help="report path (default stdout)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tolerance", type=float, default=None,
                        help="override the command's main tolerance")
    parser.add_argument("--budget", type=float, default=None,
                        help="search budget (stability) or size budget (selftest)")
    parser.add_argument("--csv", help="flow only: write the trajectory as CSV")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        payload = _load_input(args)
        if isinstance(payload, list):
            reports = []
            code = EXIT_OK
            for entry in payload:
                report, entry_code = _run_one(args.command, entry, args)
                reports.append(report)
                code = max(code, entry_code)
            out = reports
        else:
            out, code = _run_one(args.command, payload, args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT

    text = json.dumps(out, indent=2, sort_keys=True, allow_nan=True)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
