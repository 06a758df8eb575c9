"""Flat-connection enumeration, exact ground states, expectations.

A configuration is flat when the oriented product of edge values around
every complete face is trivial. On a plane patch every flat connection is a
vertex-potential gradient, so the flat set has exactly |G|^(V-1) elements
and the uniform superposition over it is the natural ground state. On a
torus each flat connection is a gradient plus a harmonic piece labelled by
the two holonomies, giving the |G|^2 ground-space sectors.
"""

from __future__ import annotations

import numpy as np

from .groups import AbelianGroup, Element
from .lattice import Lattice
from .operators import AffineMap, as_opsum
from .states import SparseState, inner

FLAT_BRUTE_CAP = 1 << 22


class GroundStateError(ValueError):
    pass


def _gradient_configs(lat: Lattice, group: AbelianGroup) -> np.ndarray:
    """Edge configurations of all vertex potentials with the root fixed."""
    t = group.tables()
    add, neg = t["add"], t["neg"]
    n_free = lat.n_vertices - 1
    count = group.order**n_free
    idx = np.arange(count, dtype=np.int64)
    pots = np.zeros((count, lat.n_vertices), dtype=np.int64)
    for k in range(n_free):
        pots[:, k + 1] = (idx // group.order**k) % group.order
    configs = np.zeros((count, lat.n_edges), dtype=np.uint8)
    for e in lat.edges():
        tail, head = lat.edge_endpoints(e)
        configs[:, e] = add[pots[:, head], neg[pots[:, tail]]].astype(np.uint8)
    return configs


def _torus_cocycle(lat: Lattice, group: AbelianGroup, hx: int, hy: int) -> np.ndarray:
    """Flat configuration with holonomies (hx, hy) and zero potentials:
    hx on the x=0 column of h edges, hy on the y=0 row of v edges."""
    row = np.zeros(lat.n_edges, dtype=np.int64)
    for y in range(lat.height):
        row[lat.edge_id("h", 0, y)] = hx
    for x in range(lat.width):
        row[lat.edge_id("v", x, 0)] = hy
    return row


def flat_connections(lat: Lattice, group: AbelianGroup) -> np.ndarray:
    """All flat configurations, one uint8 row per connection."""
    grads = _gradient_configs(lat, group)
    if not lat.is_torus:
        return grads
    add = group.tables()["add"]
    parts = []
    for hx in range(group.order):
        for hy in range(group.order):
            c0 = _torus_cocycle(lat, group, hx, hy)
            parts.append(add[grads.astype(np.int64), c0[None, :]].astype(np.uint8))
    return np.concatenate(parts)


def flat_connection_count(lat: Lattice, group: AbelianGroup) -> int:
    return len(flat_connections(lat, group))


def face_flux(lat: Lattice, group: AbelianGroup, configs: np.ndarray, f: int) -> np.ndarray:
    """Oriented flux index around face f for each configuration row."""
    t = group.tables()
    add, neg = t["add"], t["neg"]
    acc = np.zeros(configs.shape[0], dtype=np.int64)
    for e, sign in lat.plaq_edges(f):
        col = configs[:, e].astype(np.int64)
        acc = add[acc, col if sign > 0 else neg[col]]
    return acc

def is_flat(lat: Lattice, group: AbelianGroup, configs: np.ndarray) -> np.ndarray:
    ok = np.ones(configs.shape[0], dtype=bool)
    for f in lat.faces():
        ok &= face_flux(lat, group, configs, f) == 0
    return ok


def all_configs(lat: Lattice, group: AbelianGroup) -> np.ndarray:
    """Every configuration of the patch (guarded brute-force oracle)."""
    n = group.order**lat.n_edges
    if n > FLAT_BRUTE_CAP:
        raise GroundStateError("configuration space too large for brute force")
    idx = np.arange(n, dtype=np.int64)
    configs = np.zeros((n, lat.n_edges), dtype=np.uint8)
    for e in lat.edges():
        configs[:, e] = (idx // group.order**e) % group.order
    return configs


def ground_state(lat: Lattice, group: AbelianGroup) -> SparseState:
    """Uniform superposition over flat connections (plane patches).

    On a torus the stabilized space is degenerate; use ground_space."""
    if lat.is_torus:
        raise GroundStateError("torus ground space is degenerate: use ground_space")
    configs = flat_connections(lat, group)
    amps = np.full(len(configs), 1.0 / np.sqrt(len(configs)), dtype=np.complex128)
    return SparseState.from_terms(configs, amps, lat.n_edges, group.order)


def torus_holonomies(
    lat: Lattice, group: AbelianGroup, configs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Holonomy indices along the y=0 horizontal and x=0 vertical cycles."""
    add = group.tables()["add"]
    hx = np.zeros(configs.shape[0], dtype=np.int64)
    for x in range(lat.width):
        hx = add[hx, configs[:, lat.edge_id("h", x, 0)].astype(np.int64)]
    hy = np.zeros(configs.shape[0], dtype=np.int64)
    for y in range(lat.height):
        hy = add[hy, configs[:, lat.edge_id("v", 0, y)].astype(np.int64)]
    return hx, hy


def ground_space(lat: Lattice, group: AbelianGroup) -> list[SparseState]:
    """Orthonormal basis of the joint +1 eigenspace of all complete star and
    plaquette projectors. On the torus: one uniform superposition per
    holonomy pair; on a plane patch the single flat-connection state."""
    if not lat.is_torus:
        return [ground_state(lat, group)]
    configs = flat_connections(lat, group)
    hx, hy = torus_holonomies(lat, group, configs)
    out = []
    for a in range(group.order):
        for b in range(group.order):
            sel = configs[(hx == a) & (hy == b)]
            amps = np.full(len(sel), 1.0 / np.sqrt(len(sel)), dtype=np.complex128)
            out.append(SparseState.from_terms(sel, amps, lat.n_edges, group.order))
    return out


def connection_projector(
    lat: Lattice, group: AbelianGroup, assignment: dict[int, Element]
) -> AffineMap:
    """Diagonal projector onto a fixed value of every listed edge."""
    if not assignment:
        raise GroundStateError("empty edge assignment")
    deltas = tuple(
        (((e, +1),), group.index_of(val)) for e, val in sorted(assignment.items())
    )
    return AffineMap(group, lat.n_edges, deltas=deltas)


def edges_of_faces(lat: Lattice, faces: list[int]) -> list[int]:
    out: set[int] = set()
    for f in faces:
        out.update(e for e, _ in lat.plaq_edges(f))
    return sorted(out)


def count_flat_on_faces(lat: Lattice, group: AbelianGroup, faces: list[int]) -> int:
    """Brute-force count of flat assignments of the edges bounding the given
    faces (the face-set flux constraints only)."""
    edges = edges_of_faces(lat, faces)
    n = group.order ** len(edges)
    if n > FLAT_BRUTE_CAP:
        raise GroundStateError("face set too large for brute force")
    idx = np.arange(n, dtype=np.int64)
    configs = np.zeros((n, lat.n_edges), dtype=np.uint8)
    for k, e in enumerate(edges):
        configs[:, e] = (idx // group.order**k) % group.order
    ok = np.ones(n, dtype=bool)
    for f in faces:
        ok &= face_flux(lat, group, configs, f) == 0
    return int(np.sum(ok))


def expectation(psi: SparseState, op) -> complex:
    nrm = inner(psi, psi)
    if nrm == 0:
        raise GroundStateError("expectation in the zero vector")
    return inner(psi, as_opsum(op).apply(psi)) / nrm
