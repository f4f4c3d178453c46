"""Quiver combinatorics and the quaternionic linear algebra of representation space.

A quiver is a directed multigraph.  Doubling every edge with a reversed copy
gives the extended quiver, whose representation space carries three complex
structures I, J, K satisfying the quaternion relations.  This module holds the
combinatorial types, dense complex storage for representations, the hermitian
pairing, and the quaternionic operations (structures, hyperkahler rotation,
unit-quaternion action, symplectic forms).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DimVector = tuple  # per-vertex nonnegative integers, one entry per vertex

STRUCTURES = ("I", "J", "K")


@dataclass(frozen=True)
class Quiver:
    """A directed multigraph with vertices 0..num_vertices-1.

    Edges are (tail, head) pairs; loops and parallel edges are allowed.
    """

    num_vertices: int
    edges: tuple = ()

    def __post_init__(self):
        if self.num_vertices < 0:
            raise ValueError("num_vertices must be nonnegative")
        edges = tuple((int(t), int(h)) for t, h in self.edges)
        for k, (t, h) in enumerate(edges):
            if not (0 <= t < self.num_vertices and 0 <= h < self.num_vertices):
                raise ValueError(f"edge {k} = ({t}, {h}) has an invalid vertex index")
        object.__setattr__(self, "edges", edges)

    @property
    def num_edges(self):
        return len(self.edges)

    def extend(self) -> "ExtendedQuiver":
        return extend(self)


@dataclass(frozen=True)
class ExtendedQuiver:
    """A quiver with every edge doubled by its reversal.

    Edges are ordered: the base edges first, then their reversals in the same
    order, so serialized data is portable.  ``epsilon`` is +1 on base edges and
    -1 on reversed ones; ``reversal`` is the pairing involution on edge indices.
    """

    base: Quiver
    edges: tuple = field(default=())
    epsilon: tuple = field(default=())
    reversal: tuple = field(default=())

    def __post_init__(self):
        m = self.base.num_edges
        if len(self.edges) != 2 * m or len(self.epsilon) != 2 * m:
            raise ValueError("extended quiver must have twice the base edge count")
        for e in range(2 * m):
            if self.reversal[self.reversal[e]] != e:
                raise ValueError("reversal is not an involution")
            want = 1 if e < m else -1
            if self.epsilon[e] != want:
                raise ValueError("epsilon must be +1 on base edges, -1 on reversed ones")

    @property
    def num_vertices(self):
        return self.base.num_vertices

    @property
    def num_edges(self):
        return len(self.edges)

    def tail(self, e):
        return self.edges[e][0]

    def head(self, e):
        return self.edges[e][1]

    def reverse(self, e):
        return self.reversal[e]


def extend(quiver: Quiver) -> ExtendedQuiver:
    """Build the extended quiver: base edges followed by their reversals."""
    m = quiver.num_edges
    edges = tuple(quiver.edges) + tuple((h, t) for (t, h) in quiver.edges)
    epsilon = (1,) * m + (-1,) * m
    reversal = tuple((e + m) % (2 * m) for e in range(2 * m)) if m else ()
    return ExtendedQuiver(base=quiver, edges=edges, epsilon=epsilon, reversal=reversal)


def validate_dims(quiver, dims):
    dims = tuple(int(d) for d in dims)
    n = quiver.num_vertices if isinstance(quiver, (Quiver, ExtendedQuiver)) else int(quiver)
    if len(dims) != n:
        raise ValueError(f"dimension vector has length {len(dims)}, expected {n}")
    if any(d < 0 for d in dims):
        raise ValueError("dimensions must be nonnegative")
    return dims


class Representation:
    """A point of representation space: one complex matrix per extended edge.

    The block of edge e has shape (dims[head(e)], dims[tail(e)]).  Instances
    are immutable values; all operations return new objects.
    """

    __slots__ = ("quiver", "dims", "blocks")

    def __init__(self, quiver: ExtendedQuiver, dims, blocks, copy=True):
        dims = validate_dims(quiver, dims)
        if len(blocks) != quiver.num_edges:
            raise ValueError(
                f"expected {quiver.num_edges} blocks, got {len(blocks)}"
            )
        stored = []
        for e, b in enumerate(blocks):
            b = np.array(b, dtype=complex) if copy else np.asarray(b, dtype=complex)
            want = (dims[quiver.head(e)], dims[quiver.tail(e)])
            if b.shape != want:
                raise ValueError(f"block {e} has shape {b.shape}, expected {want}")
            b.flags.writeable = False
            stored.append(b)
        object.__setattr__(self, "quiver", quiver)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "blocks", tuple(stored))

    def __setattr__(self, name, value):
        raise AttributeError("Representation is immutable")

    @classmethod
    def zero(cls, quiver: ExtendedQuiver, dims) -> "Representation":
        dims = validate_dims(quiver, dims)
        blocks = [
            np.zeros((dims[quiver.head(e)], dims[quiver.tail(e)]), dtype=complex)
            for e in range(quiver.num_edges)
        ]
        return cls(quiver, dims, blocks, copy=False)

    def block(self, e):
        return self.blocks[e]

    def same_space(self, other: "Representation"):
        if self.dims != other.dims:
            return False
        return self.quiver is other.quiver or self.quiver.edges == other.quiver.edges

    def _check_space(self, other):
        if not isinstance(other, Representation) or not self.same_space(other):
            raise ValueError("representations live on different spaces")

    def replace_blocks(self, blocks) -> "Representation":
        return Representation(self.quiver, self.dims, blocks, copy=False)

    def __add__(self, other):
        self._check_space(other)
        return self.replace_blocks([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._check_space(other)
        return self.replace_blocks([a - b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, scalar):
        # complex scalars act through the complex structure I
        return self.replace_blocks([scalar * b for b in self.blocks])

    __rmul__ = __mul__

    def __neg__(self):
        return self.replace_blocks([-b for b in self.blocks])

    def __repr__(self):
        return (
            f"Representation(vertices={self.quiver.num_vertices}, "
            f"dims={self.dims}, norm_sq={norm_sq(self):.6g})"
        )


def inner_product(x: Representation, y: Representation) -> complex:
    """Hermitian pairing for the complex structure I: sum of tr(phi psi^dagger).

    Linear in the first argument, conjugate-linear in the second.
    """
    x._check_space(y)
    total = 0.0 + 0.0j
    for a, b in zip(x.blocks, y.blocks):
        total += np.vdot(b, a)  # vdot conjugates its first argument
    return complex(total)


def norm_sq(x: Representation) -> float:
    """Squared hermitian norm, sum over edges of tr(phi phi^dagger)."""
    return float(sum(np.vdot(b, b).real for b in x.blocks))


def _check_structure(structure):
    if structure not in STRUCTURES:
        raise ValueError(f"structure must be one of {STRUCTURES}, got {structure!r}")


def apply_structure(structure, x: Representation) -> Representation:
    """Apply one of the complex structures I, J, K to a representation.

    I scales every block by the imaginary unit.  J sends the pair
    (phi_e, phi_ebar) to (-phi_ebar^dagger, phi_e^dagger) for base edges e,
    and K to (-i phi_ebar^dagger, i phi_e^dagger).  All three are isometries
    and satisfy I^2 = J^2 = K^2 = IJK = -1.
    """
    _check_structure(structure)
    if structure == "I":
        return x.replace_blocks([1j * b for b in x.blocks])
    q = x.quiver
    m = q.base.num_edges
    out = [None] * (2 * m)
    for e in range(m):
        ebar = q.reverse(e)
        if structure == "J":
            out[e] = -x.blocks[ebar].conj().T
            out[ebar] = x.blocks[e].conj().T
        else:  # K
            out[e] = -1j * x.blocks[ebar].conj().T
            out[ebar] = 1j * x.blocks[e].conj().T
    return x.replace_blocks(out)


def hyperkahler_rotation(x: Representation, direction="forward") -> Representation:
    """The isometry (1 + I + J + K)/2 cyclically permuting I -> J -> K.

    ``direction="inverse"`` applies (1 - I - J - K)/2, the two are mutually
    inverse.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    sign = 1.0 if direction == "forward" else -1.0
    acc = x
    for s in STRUCTURES:
        acc = acc + sign * apply_structure(s, x)
    return 0.5 * acc


def quaternion_act(q, x: Representation) -> Representation:
    """Act by a unit quaternion q = (a, b, c, d) as a + bI + cJ + dK."""
    a, b, c, d = (float(v) for v in q)
    if abs(a * a + b * b + c * c + d * d - 1.0) > 1e-12:
        raise ValueError("quaternion must have unit norm within 1e-12")
    out = a * x
    for coeff, s in ((b, "I"), (c, "J"), (d, "K")):
        if coeff != 0.0:
            out = out + coeff * apply_structure(s, x)
    return out


def quaternion_multiply(p, q):
    """Hamilton product of two quaternions given as (a, b, c, d) tuples."""
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return (
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )


def hyperkahler_metric(u: Representation, v: Representation) -> float:
    """The real inner product Re p_I; equal to Re p_J and Re p_K."""
    return inner_product(u, v).real


def symplectic_form(structure, u: Representation, v: Representation) -> float:
    """Real symplectic form of the given structure: g(s.u, v)."""
    return hyperkahler_metric(apply_structure(structure, u), v)


def hermitian_pairing(structure, u: Representation, v: Representation) -> complex:
    """Hermitian pairing compatible with a complex structure.

    For I this is the direct trace formula; for J and K it is recovered from
    the norm by the polarisation identity, which avoids committing to closed
    forms for the rotated pairings.
    """
    _check_structure(structure)
    if structure == "I":
        return inner_product(u, v)
    sv = apply_structure(structure, v)
    re = 0.25 * (norm_sq(u + v) - norm_sq(u - v))
    im = 0.25 * (norm_sq(u + sv) - norm_sq(u - sv))
    return complex(re, im)
