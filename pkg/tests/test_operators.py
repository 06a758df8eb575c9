import itertools

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from qdlattice.groups import group_make
from qdlattice.groundstate import all_configs, face_flux
from qdlattice.lattice import Ribbon, Site, lattice_make, make_triangle, ribbon_between
from qdlattice.operators import (
    AffineMap,
    OperatorError,
    OpSum,
    alpha_ribbon,
    as_opsum,
    beta_ribbon,
    canonical,
    charge_projector,
    ground_energy,
    hamiltonian,
    loop_charge_projector,
    ops_equal,
    plaq_h,
    plaq_proj,
    ribbon_F,
    ribbon_F_irrep,
    same_action,
    star_g,
    star_proj,
    support_matrix,
    to_matrix,
    triangle_L,
    triangle_T,
)
from qdlattice.states import SparseState, distance

Z2 = group_make([2])
Z3 = group_make([3])


def _direct_dual(lat):
    f = lat.face_id(0, 0)
    corners = lat.face_corners_ccw(f)
    direct = make_triangle(lat, Site(corners[0], f), Site(corners[1], f))
    v = corners[1]
    ring = [x for x in lat.faces_at_vertex_cw(v) if x is not None]
    k = ring.index(f)
    dual = make_triangle(lat, Site(v, f), Site(v, ring[(k + 1) % len(ring)]))
    return direct, dual


def test_triangle_T_is_delta():
    lat = lattice_make(2, 2, "torus")
    direct, dual = _direct_dual(lat)
    cfgs = all_configs(lat, Z2)
    op = triangle_T(lat, Z2, direct, (1,))
    alive, pnum, out = op.eval(cfgs)
    assert np.array_equal(out, cfgs)
    assert np.all(pnum == 0)
    assert 0 < alive.sum() < len(cfgs)
    total = OpSum.weighted((1.0, triangle_T(lat, Z2, direct, h)) for h in Z2.elements())
    assert ops_equal(total, OpSum.of(AffineMap.identity(Z2, lat.n_edges)), lat.n_edges) == 0
    with pytest.raises(OperatorError):
        triangle_T(lat, Z2, dual, (1,))


def test_triangle_L_is_shift():
    lat = lattice_make(2, 2, "torus")
    direct, dual = _direct_dual(lat)
    op = triangle_L(lat, Z3, dual, (1,))
    inv = triangle_L(lat, Z3, dual, (2,))
    assert same_action(op.compose(inv), AffineMap.identity(Z3, lat.n_edges))
    assert same_action(triangle_L(lat, Z3, dual, (0,)), AffineMap.identity(Z3, lat.n_edges))
    with pytest.raises(OperatorError):
        triangle_L(lat, Z3, direct, (1,))


def test_ribbon_trivial_is_identity():
    lat = lattice_make(3, 3, "torus")
    s = Site(lat.vertex_id(0, 0), lat.face_id(0, 0))
    eps = Ribbon.trivial(s)
    for g, h in itertools.product(Z3.elements(), repeat=2):
        assert same_action(ribbon_F(lat, Z3, eps, g, h), AffineMap.identity(Z3, lat.n_edges))


def test_plaquette_is_flux_projector():
    lat = lattice_make(2, 2, "torus")
    for grp in (Z2, Z3):
        cfgs = all_configs(lat, grp)
        for fx, fy in [(0, 0), (1, 0), (0, 1)]:
            f = lat.face_id(fx, fy)
            s = Site(lat.face_corners_ccw(f)[0], f)
            for h in grp.elements():
                alive, pnum, out = plaq_h(lat, grp, s, h).eval(cfgs)
                assert np.array_equal(alive, face_flux(lat, grp, cfgs, f) == grp.index_of(h))
                assert np.array_equal(out, cfgs)
                assert np.all(pnum[alive] == 0)


def test_star_shifts_by_orientation():
    lat = lattice_make(2, 2, "torus")
    grp = Z3
    tables = grp.tables()
    cfgs = all_configs(lat, grp)
    v = lat.vertex_id(1, 1)
    s = Site(v, next(f for f in lat.faces_at_vertex_cw(v) if f is not None))
    for g in grp.elements():
        alive, pnum, out = star_g(lat, grp, s, g).eval(cfgs)
        assert np.all(alive) and np.all(pnum == 0)
        expect = cfgs.astype(np.int64).copy()
        gi = grp.index_of(g)
        for e in lat.star_edges(v):
            tail, head = lat.edge_endpoints(e)
            if tail == v:  # edge points out of v: inverse shift
                expect[:, e] = tables["add"][expect[:, e], tables["neg"][gi]]
            if head == v:  # edge points into v: forward shift
                expect[:, e] = tables["add"][expect[:, e], gi]
        assert np.array_equal(out.astype(np.int64), expect)


def test_elementary_closed_ribbons_match_definitions():
    lat = lattice_make(3, 3, "torus")
    s = Site(lat.vertex_id(1, 1), lat.face_id(1, 1))
    alpha = alpha_ribbon(lat, s)
    beta = beta_ribbon(lat, s)
    assert alpha.is_closed and len(alpha) == 4
    assert beta.is_closed and len(beta) == 4
    assert alpha.edges() == set(lat.star_edges(s.vertex))
    assert beta.edges() == {e for e, _ in lat.plaq_edges(s.face)}
    for g in Z3.elements():
        assert same_action(
            ribbon_F(lat, Z3, alpha, g, Z3.identity()), star_g(lat, Z3, s, g)
        )
        assert same_action(
            ribbon_F(lat, Z3, beta, Z3.identity(), Z3.inv(g)), plaq_h(lat, Z3, s, g)
        )


def test_star_plaquette_relations():
    lat = lattice_make(2, 2, "torus")
    ne = lat.n_edges
    s = Site(lat.vertex_id(0, 0), lat.face_id(0, 0))
    A = star_proj(lat, Z2, s)
    B = plaq_proj(lat, Z2, s)
    assert ops_equal(A @ A, A, ne) < 1e-12
    assert ops_equal(A.adjoint(), A, ne) < 1e-12
    assert ops_equal(B @ B, B, ne) < 1e-12
    s2 = Site(lat.vertex_id(1, 0), lat.face_id(1, 1))
    for k, l in itertools.product(Z2.elements(), repeat=2):
        a = as_opsum(star_g(lat, Z2, s, k))
        b = as_opsum(plaq_h(lat, Z2, s2, l))
        assert ops_equal(a @ b, b @ a, ne) < 1e-12


def test_charge_projector_family():
    lat = lattice_make(2, 2, "torus")
    grp = Z3
    ne = lat.n_edges
    s = Site(lat.vertex_id(0, 0), lat.face_id(0, 0))
    total = OpSum(())
    for xi in grp.characters():
        for d in grp.elements():
            D = charge_projector(lat, grp, s, xi, d)
            assert ops_equal(D @ D, D, ne) < 1e-10
            assert ops_equal(D.adjoint(), D, ne) < 1e-10
            total = total + D
    assert ops_equal(total, OpSum.of(AffineMap.identity(grp, ne)), ne) < 1e-10


def test_loop_charge_projector_idempotent():
    lat = lattice_make(3, 3, "torus")
    s = Site(lat.vertex_id(1, 1), lat.face_id(1, 1))
    loop = beta_ribbon(lat, s)
    ne = lat.n_edges
    for sig in Z3.characters():
        for c in Z3.elements():
            K = loop_charge_projector(lat, Z3, loop, sig, c)
            assert ops_equal(K @ K, K, ne) < 1e-10
            assert ops_equal(K.adjoint(), K, ne) < 1e-10
    open_ribbon = ribbon_between(
        s, Site(lat.vertex_id(0, 0), lat.face_id(0, 0)), lat
    )
    with pytest.raises(OperatorError):
        loop_charge_projector(lat, Z3, open_ribbon, (1,), (0,))


@pytest.mark.parametrize("grp,degeneracy", [(Z2, 4), (Z3, 9)])
def test_hamiltonian_diagonalization(grp, degeneracy):
    lat = lattice_make(2, 2, "torus")
    H = to_matrix(hamiltonian(lat, grp), lat)
    assert abs((H - H.getH()).toarray()).max() < 1e-12
    k = min(H.shape[0] - 2, 3 * degeneracy)
    vals = np.sort(spla.eigsh(H.real, k=k, which="SA", return_eigenvectors=False))
    assert abs(vals[0] - ground_energy(lat)) < 1e-8
    assert ground_energy(lat) == -8
    assert int(np.sum(np.abs(vals - vals[0]) < 1e-8)) == degeneracy


def test_hamiltonian_commutes_with_stabilizers():
    lat = lattice_make(2, 2, "torus")
    H = hamiltonian(lat, Z2)
    ne = lat.n_edges
    s = Site(lat.vertex_id(1, 0), lat.face_id(0, 1))
    for g in Z2.elements():
        a = as_opsum(star_g(lat, Z2, s, g))
        assert ops_equal(H @ a, a @ H, ne) < 1e-10


def test_matrix_cap_enforced():
    lat = lattice_make(5, 5, "torus")
    with pytest.raises(OperatorError):
        to_matrix(star_proj(lat, Z3, Site(lat.vertex_id(1, 1), lat.face_id(1, 1))), lat)


def test_support_matrix_unit_coefficients():
    # every triangle/ribbon basis map sends a basis state to at most one
    # basis state with unit modulus coefficient
    lat = lattice_make(3, 3, "torus")
    s0 = Site(lat.vertex_id(0, 0), lat.face_id(0, 0))
    s1 = Site(lat.vertex_id(2, 1), lat.face_id(1, 1))
    rho = ribbon_between(s0, s1, lat)
    for chi, c in itertools.product(Z3.characters(), Z3.elements()):
        m = ribbon_F_irrep(lat, Z3, rho, chi, c)
        mat = support_matrix(m, sorted(m.support() or {0}), lat.n_edges)
        col_counts = np.diff(mat.tocsc().indptr)
        assert col_counts.max() <= 1
        assert np.all(np.abs(mat.data) - 1 < 1e-12)


def test_canonical_zero_detection():
    lat = lattice_make(2, 2, "torus")
    m = AffineMap(
        Z2,
        lat.n_edges,
        deltas=((((0, 1),), 0), (((0, 1),), 1)),  # conflicting constraints
    )
    assert canonical(m) is None


def test_apply_linear_and_annihilating():
    lat = lattice_make(2, 2, "torus")
    s = Site(lat.vertex_id(0, 0), lat.face_id(0, 0))
    B = plaq_proj(lat, Z2, s)
    flat = SparseState.basis([0] * lat.n_edges, 2)
    charged_row = np.zeros((1, lat.n_edges), dtype=np.uint8)
    charged_row[0, 0] = 1
    charged = SparseState(charged_row, np.ones(1, dtype=complex), lat.n_edges, 2)
    out = B.apply(flat.add(charged.scaled(2.0)))
    # the flat configuration passes, the single-flip one is annihilated at
    # exactly the faces bordering edge 0
    assert distance(out, B.apply(flat).add(B.apply(charged).scaled(2.0))) < 1e-12


def test_vacuum_detectors_fix_ground_states():
    from qdlattice.groundstate import ground_space
    from qdlattice.states import distance

    lat = lattice_make(3, 3, "torus")
    omega = ground_space(lat, Z3)[0]
    s = Site(lat.vertex_id(1, 1), lat.face_id(1, 1))
    D_vac = charge_projector(lat, Z3, s, Z3.identity(), Z3.identity())
    assert distance(D_vac.apply(omega), omega) < 1e-12
    from qdlattice.lattice import closed_loop_around

    loop = closed_loop_around(s, 1, lat)
    K_vac = loop_charge_projector(lat, Z3, loop, Z3.identity(), Z3.identity())
    assert distance(K_vac.apply(omega), omega) < 1e-12
    # a nontrivial detector annihilates the vacuum
    D_e = charge_projector(lat, Z3, s, (1,), Z3.identity())
    assert D_e.apply(omega).norm() < 1e-12
