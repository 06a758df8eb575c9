import itertools

import numpy as np
import pytest

from qdlattice.groups import group_make
from qdlattice.groundstate import (
    GroundStateError,
    all_configs,
    connection_projector,
    count_flat_on_faces,
    edges_of_faces,
    expectation,
    face_flux,
    flat_connection_count,
    flat_connections,
    ground_space,
    ground_state,
    is_flat,
    torus_holonomies,
)
from qdlattice.lattice import Site, lattice_make
from qdlattice.operators import OpSum, as_opsum, plaq_h, star_g
from qdlattice.states import distance, inner

Z2 = group_make([2])
Z3 = group_make([3])


@pytest.mark.parametrize(
    "grp,count", [(Z2, 8), (Z3, 27)]
)
def test_flat_count_2x2_plane(grp, count):
    lat = lattice_make(2, 2, "plane")
    flats = flat_connections(lat, grp)
    assert len(flats) == count
    brute = all_configs(lat, grp)
    assert int(np.sum(is_flat(lat, grp, brute))) == count


@pytest.mark.parametrize("dims,boundary", [((2, 2), "torus"), ((3, 3), "torus"), ((3, 4), "plane")])
@pytest.mark.parametrize("grp", [Z2, Z3])
def test_flat_enumeration_matches_brute_force(dims, boundary, grp):
    lat = lattice_make(*dims, boundary)
    if grp.order**lat.n_edges > 1 << 22:
        pytest.skip("brute force too large")
    flats = flat_connections(lat, grp)
    assert np.all(is_flat(lat, grp, flats))
    brute = all_configs(lat, grp)
    assert len(flats) == int(np.sum(is_flat(lat, grp, brute)))
    # distinct rows
    assert len(np.unique(flats.view(np.dtype((np.void, flats.shape[1]))))) == len(flats)


def test_identity_configuration_is_flat():
    for lat in (lattice_make(3, 3, "plane"), lattice_make(3, 3, "torus")):
        row = np.zeros((1, lat.n_edges), dtype=np.uint8)
        assert bool(is_flat(lat, Z3, row)[0])


def test_ground_state_stabilized():
    lat = lattice_make(3, 3, "plane")
    omega = ground_state(lat, Z3)
    assert abs(omega.norm() - 1) < 1e-12
    for v in range(lat.n_vertices):
        if not lat.has_full_star(v):
            continue
        s = Site(v, next(f for f in lat.faces_at_vertex_cw(v) if f is not None))
        for g in Z3.elements():
            assert abs(expectation(omega, as_opsum(star_g(lat, Z3, s, g))) - 1) < 1e-12
    for f in lat.faces():
        s = Site(lat.face_corners_ccw(f)[0], f)
        assert abs(expectation(omega, as_opsum(plaq_h(lat, Z3, s, Z3.identity()))) - 1) < 1e-12


def test_ground_state_refuses_torus():
    with pytest.raises(GroundStateError):
        ground_state(lattice_make(2, 2, "torus"), Z2)


@pytest.mark.parametrize("grp,dim", [(Z2, 4), (Z3, 9)])
def test_ground_space_torus(grp, dim):
    lat = lattice_make(2, 2, "torus")
    basis = ground_space(lat, grp)
    assert len(basis) == dim
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            want = 1.0 if i == j else 0.0
            assert abs(inner(a, b) - want) < 1e-12
    for psi in basis:
        for v in range(lat.n_vertices):
            s = Site(v, next(f for f in lat.faces_at_vertex_cw(v) if f is not None))
            for g in grp.elements():
                assert distance(as_opsum(star_g(lat, grp, s, g)).apply(psi), psi) < 1e-12
            assert distance(as_opsum(plaq_h(lat, grp, s, grp.identity())).apply(psi), psi) < 1e-12


def test_ground_space_plane_is_single_state():
    lat = lattice_make(3, 3, "plane")
    basis = ground_space(lat, Z2)
    assert len(basis) == 1
    assert distance(basis[0], ground_state(lat, Z2)) < 1e-12


def test_holonomy_labels_partition_flats():
    lat = lattice_make(2, 2, "torus")
    flats = flat_connections(lat, Z3)
    hx, hy = torus_holonomies(lat, Z3, flats)
    counts = {}
    for a, b in zip(hx, hy):
        counts[(int(a), int(b))] = counts.get((int(a), int(b)), 0) + 1
    assert len(counts) == 9
    assert len(set(counts.values())) == 1


def test_connection_projector_values():
    lat = lattice_make(3, 3, "plane")
    omega = ground_state(lat, Z2)
    faces = [0, 1]
    edges = edges_of_faces(lat, faces)
    n_flat = count_flat_on_faces(lat, Z2, faces)
    total = OpSum(())
    for assignment in itertools.product(Z2.elements(), repeat=len(edges)):
        sub = dict(zip(edges, assignment))
        proj = connection_projector(lat, Z2, sub)
        row = np.zeros((1, lat.n_edges), dtype=np.uint8)
        for e, val in sub.items():
            row[0, e] = Z2.index_of(val)
        flat = all(int(face_flux(lat, Z2, row, f)[0]) == 0 for f in faces)
        val = expectation(omega, OpSum.of(proj)).real
        if flat:
            assert abs(val - 1.0 / n_flat) < 1e-12
        else:
            assert abs(val) < 1e-12
        total = total + OpSum.of(proj)
    ne = lat.n_edges
    from qdlattice.operators import AffineMap, ops_equal

    assert ops_equal(total, OpSum.of(AffineMap.identity(Z2, ne)), ne) < 1e-12


def test_expectation_basics():
    lat = lattice_make(2, 2, "plane")
    omega = ground_state(lat, Z2)
    from qdlattice.operators import AffineMap

    assert abs(expectation(omega, OpSum.of(AffineMap.identity(Z2, lat.n_edges))) - 1) < 1e-14
    with pytest.raises(GroundStateError):
        expectation(omega.scaled(0.0), OpSum.of(AffineMap.identity(Z2, lat.n_edges)))


def test_flat_count_formula_plane():
    # plane patches: |G|^(E - F) flat connections
    for dims in [(2, 2), (2, 3), (3, 3)]:
        lat = lattice_make(*dims, "plane")
        assert flat_connection_count(lat, Z2) == 2 ** (lat.n_edges - lat.n_faces)
