"""Torus weights, polyhedral cone projection, and the regular loci.

The maximal torus of the compact group acts diagonally; every matrix entry
slot of representation space is a weight vector in the trace-free diagonal
algebra, written in per-(vertex, diagonal) coordinates.  Projections of a
parameter onto subcones of the weight set produce the certified semistability
radius d_theta.  The hyperkahler and complex regular loci are wall complements
decided in exact rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .quiver import ExtendedQuiver, validate_dims

MEMBERSHIP_TOL = 1e-9
KKT_TOL = 1e-10
DEFAULT_SUBSET_CAP = 2 ** 20
ENUMERATION_CAP = 10 ** 7


class SubsetCapError(RuntimeError):
    """Subset enumeration would exceed the configured cap."""


class EnumerationCapError(RuntimeError):
    """Dimension-vector enumeration would exceed the configured cap."""


class ConeProjectionError(RuntimeError):
    """The nonnegative least-squares iteration failed to certify optimality."""


@dataclass
class WeightSet:
    """Distinct torus weights with multiplicities.

    Vectors are rows in the per-(vertex, diagonal) coordinates; every row sums
    to zero.  ``spans_torus`` records whether the weights span the trace-free
    diagonal algebra, i.e. whether the torus acts with finite kernel.
    """

    vectors: np.ndarray
    multiplicities: np.ndarray
    num_coords: int

    @property
    def torus_dim(self):
        return max(self.num_coords - 1, 0)

    @property
    def spans_torus(self):
        if len(self.vectors) == 0:
            return self.torus_dim == 0
        return np.linalg.matrix_rank(self.vectors, tol=1e-10) >= self.torus_dim


def torus_weights(quiver: ExtendedQuiver, dims) -> WeightSet:
    """Weights of the diagonal torus on the matrix entry slots.

    The slot (edge e, row a, column b) carries the weight
    delta_(tail(e), b) - delta_(head(e), a); duplicates are merged with
    multiplicity.  A warning is raised when the weights fail to span.
    """
    dims = validate_dims(quiver, dims)
    offsets = np.concatenate([[0], np.cumsum(dims)])
    n = int(offsets[-1])
    seen = {}
    order = []
    for e in range(quiver.num_edges):
        h, t = quiver.head(e), quiver.tail(e)
        for a in range(dims[h]):
            for b in range(dims[t]):
                w = np.zeros(n)
                w[offsets[t] + b] += 1.0
                w[offsets[h] + a] -= 1.0
                key = tuple(int(round(v)) for v in w)
                if key in seen:
                    seen[key] += 1
                else:
                    seen[key] = 1
                    order.append(key)
    vectors = np.array([list(k) for k in order], dtype=float) if order else np.zeros((0, n))
    mult = np.array([seen[k] for k in order], dtype=int)
    ws = WeightSet(vectors=vectors, multiplicities=mult, num_coords=n)
    degenerate = vectors.size == 0 or float(np.abs(vectors).max()) == 0.0
    if not ws.spans_torus or degenerate:
        warnings.warn(
            "torus weights do not span: the diagonal torus acts with a kernel",
            stacklevel=2,
        )
    return ws


def theta_coordinates(theta_values, dims) -> np.ndarray:
    """Expand per-vertex weights into the per-(vertex, diagonal) coordinates."""
    return np.concatenate(
        [np.full(d, float(t)) for t, d in zip(theta_values, dims)]
    ) if len(dims) else np.zeros(0)


def nonnegative_lstsq(a, b, maxiter=None):
    """Lawson-Hanson active-set iteration for min ||a c - b|| over c >= 0.

    ``a`` has one column per generator.  Builds the passive set one most
    descending coordinate at a time, stepping back to the boundary whenever
    the unconstrained subproblem leaves the orthant.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, k = a.shape
    if maxiter is None:
        maxiter = 3 * max(k, 1) + 20
    dual_tol = 10 * np.finfo(float).eps * max(n, k) * max(
        1.0, float(np.abs(b).max(initial=0.0))
    ) * max(1.0, float(np.abs(a).max(initial=1.0)))
    coeff = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    resid = b - a @ coeff
    objective = float(resid @ resid)
    for _ in range(maxiter):
        dual = a.T @ resid
        dual[passive] = -np.inf
        if k == 0 or np.max(dual) <= dual_tol:
            return coeff, objective
        passive[int(np.argmax(dual))] = True
        for _ in range(maxiter):
            sol, *_ = np.linalg.lstsq(a[:, passive], b, rcond=None)
            if np.all(sol > 0.0):
                coeff = np.zeros(k)
                coeff[passive] = sol
                break
            idx = np.flatnonzero(passive)
            cur = coeff[idx]
            drop = sol <= 0.0
            denom = cur[drop] - sol[drop]
            steps = np.where(denom > 0, cur[drop] / denom, 0.0)
            alpha = float(np.min(steps))
            coeff[idx] = cur + alpha * (sol - cur)
            passive[idx[coeff[idx] <= 1e-14]] = False
            coeff[~passive] = 0.0
        else:
            raise ConeProjectionError("inner active-set iteration did not settle")
        resid = b - a @ coeff
        updated = float(resid @ resid)
        # rounding-level duals can suggest additions that cannot actually
        # improve; stopping on no representable progress prevents cycling
        if updated > objective - 1e-14 * (1.0 + objective):
            return coeff, updated
        objective = updated
    raise ConeProjectionError("active-set iteration cap exceeded")


def cone_project(vectors, theta):
    """Euclidean projection of theta onto the cone of nonnegative combinations.

    Runs the active-set nonnegative least-squares iteration on the generator
    matrix and verifies the KKT conditions; returns (projection, squared
    distance)."""
    theta = np.asarray(theta, dtype=float)
    vectors = np.asarray(vectors, dtype=float)
    if vectors.size == 0:
        return np.zeros_like(theta), float(theta @ theta)
    a = vectors.T  # columns are generators
    coeff, _ = nonnegative_lstsq(a, theta)
    beta = a @ coeff
    resid = theta - beta
    dual = vectors @ resid
    scale = 1.0 + float(np.abs(theta).max(initial=0.0)) * max(
        1.0, float(np.abs(vectors).max(initial=0.0))
    )
    if np.any(dual > KKT_TOL * scale) or abs(float(coeff @ dual)) > KKT_TOL * scale:
        raise ConeProjectionError("projection failed the KKT certificate")
    return beta, float(resid @ resid)


def d_theta(weights: WeightSet, theta, subset_cap=DEFAULT_SUBSET_CAP) -> float:
    """Certified semistability radius: the squared distance from theta to the
    nearest subset-cone projection different from theta itself.

    Enumerates every subset of the distinct weights (capped, never sampled);
    +inf when every projection lands on theta.
    """
    theta = np.asarray(theta, dtype=float)
    vectors = weights.vectors
    k = len(vectors)
    if 2 ** k > subset_cap:
        raise SubsetCapError(f"2^{k} subsets exceed the cap {subset_cap}")
    gap = MEMBERSHIP_TOL * (1.0 + float(np.linalg.norm(theta)))
    best = math.inf
    for mask in range(2 ** k):
        subset = vectors[[i for i in range(k) if mask >> i & 1]]
        beta, dist_sq = cone_project(subset, theta)
        if np.linalg.norm(beta - theta) > gap:
            best = min(best, dist_sq)
    return best


def in_C_reg(weights: WeightSet, theta, subset_cap=DEFAULT_SUBSET_CAP) -> bool:
    """Membership of theta in the regular part of the weight cone: inside the
    full cone but outside every subcone of deficient span."""
    theta = np.asarray(theta, dtype=float)
    vectors = weights.vectors
    k = len(vectors)
    if 2 ** k > subset_cap:
        raise SubsetCapError(f"2^{k} subsets exceed the cap {subset_cap}")
    gap = MEMBERSHIP_TOL * (1.0 + float(np.linalg.norm(theta)))
    _, dist_sq = cone_project(vectors, theta)
    if math.sqrt(dist_sq) > gap:
        return False
    full_dim = weights.torus_dim
    for mask in range(2 ** k):
        subset = vectors[[i for i in range(k) if mask >> i & 1]]
        rank = np.linalg.matrix_rank(subset, tol=1e-10) if subset.size else 0
        if rank >= full_dim:
            continue
        _, dist_sq = cone_project(subset, theta)
        if math.sqrt(dist_sq) <= gap:
            return False
    return True


def parse_rational(text) -> Fraction:
    """Parse "p/q" or integer strings (and ints) into exact rationals."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text))


@dataclass(frozen=True)
class RationalThetaTriple:
    """Exact rational hyperkahler parameter, one weight vector per structure."""

    theta_I: tuple
    theta_J: tuple
    theta_K: tuple
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        for name in ("theta_I", "theta_J", "theta_K"):
            vals = tuple(parse_rational(v) for v in getattr(self, name))
            if len(vals) != len(dims):
                raise ValueError(f"{name} has the wrong length")
            if sum(v * d for v, d in zip(vals, dims)) != 0:
                raise ValueError(f"{name} violates the exact balance constraint")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "dims", dims)

    def components(self):
        return (self.theta_I, self.theta_J, self.theta_K)

    def as_floats(self):
        return tuple(tuple(float(v) for v in comp) for comp in self.components())


def _proper_dim_vectors(dims, cap=ENUMERATION_CAP):
    total = 1
    for d in dims:
        total *= d + 1
    if total > cap:
        raise EnumerationCapError(
            f"{total} dimension vectors exceed the cap {cap}"
        )
    zero = tuple(0 for _ in dims)
    full = tuple(dims)
    for w in itertools.product(*(range(d + 1) for d in dims)):
        if w != zero and w != full:
            yield w


def hyperkahler_regular_check(dims, triple: RationalThetaTriple):
    """Exact wall test for the hyperkahler parameter space.

    Returns (True, None) when no intermediate dimension vector annihilates all
    three components, else (False, w) with the first violating w.
    """
    dims = tuple(int(d) for d in dims)
    if triple.dims != dims:
        raise ValueError("triple is bound to a different dimension vector")
    for w in _proper_dim_vectors(dims):
        if all(
            sum(Fraction(c) * v for c, v in zip(comp, w)) == 0
            for comp in triple.components()
        ):
            return False, w
    return True, None


def complex_regular_check(dims, xi) -> bool:
    """Exact wall test for the complex parameter space.

    ``xi`` is a sequence of (re, im) exact rational pairs; membership requires
    the balance constraint and avoidance of every intermediate wall.
    """
    dims = tuple(int(d) for d in dims)
    pairs = [(parse_rational(re), parse_rational(im)) for re, im in xi]
    if len(pairs) != len(dims):
        raise ValueError("xi has the wrong length")
    if (
        sum(d * re for d, (re, _) in zip(dims, pairs)) != 0
        or sum(d * im for d, (_, im) in zip(dims, pairs)) != 0
    ):
        return False
    for w in _proper_dim_vectors(dims):
        if (
            sum(Fraction(c) * re for c, (re, _) in zip(w, pairs)) == 0
            and sum(Fraction(c) * im for c, (_, im) in zip(w, pairs)) == 0
        ):
            return False
    return True


def regular_walls(dims):
    """All intermediate dimension vectors indexing walls of the regular loci;
    exposed so callers can draw parameter paths that avoid them."""
    return list(_proper_dim_vectors(tuple(int(d) for d in dims)))
