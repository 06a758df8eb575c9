import random

import pytest

from qdlattice.duality import (
    cone_subspace,
    detecting_exterior_sites,
    external_charge_orthogonality_check,
    ribbon_closure_rank,
    ribbons_in_region,
    self_adjoint_density_check,
)
from qdlattice.groups import group_make
from qdlattice.groundstate import ground_state
from qdlattice.lattice import (
    Region,
    Site,
    cone_make,
    lattice_make,
    ribbon_between,
)
from qdlattice.operators import as_opsum, ribbon_F_irrep
from qdlattice.states import inner

Z2 = group_make([2])


@pytest.fixture(scope="module")
def small_cone():
    lat = lattice_make(3, 3, "plane")
    omega = ground_state(lat, Z2)
    cone = cone_make((1, 1), ["N", "E"], lat)
    sub = cone_subspace(cone, lat, Z2, omega)
    return lat, omega, cone, sub


def test_trivial_region_subspace():
    lat = lattice_make(3, 3, "plane")
    omega = ground_state(lat, Z2)
    sub = cone_subspace(Region(lat, frozenset()), lat, Z2, omega)
    assert sub.dim == 1
    assert sub.residual(omega) < 1e-12


def test_closure_matches_factorized_dimension(small_cone):
    lat, omega, cone, sub = small_cone
    lo, hi = ribbon_closure_rank(cone, lat, Z2, omega, length_cap=5)
    assert lo == hi == sub.dim


def test_subspace_invariant_under_region_operators(small_cone):
    lat, omega, cone, sub = small_cone
    rng = random.Random(0)
    ribbons = ribbons_in_region(lat, cone, 4)
    for _ in range(25):
        r = rng.choice(ribbons)
        chi = rng.choice(Z2.characters())
        c = rng.choice(Z2.elements())
        v = sub.basis.vectors[rng.randrange(sub.dim)]
        image = as_opsum(ribbon_F_irrep(lat, Z2, r, chi, c)).apply(v)
        assert sub.residual(image) < 1e-9


def test_external_orthogonality_and_membership():
    lat = lattice_make(4, 4, "plane")
    omega = ground_state(lat, Z2)
    cone = cone_make((2, 2), ["N", "E"], lat)
    sub = cone_subspace(cone, lat, Z2, omega)
    assert detecting_exterior_sites(lat, cone)
    recs = external_charge_orthogonality_check(
        cone, lat, Z2, omega, sub, random.Random(5), samples=60
    )
    assert all(r.passed for r in recs), [(r.name, r.max_error) for r in recs]
    assert all(r.max_error <= 1e-9 for r in recs)


def test_density_rank_and_negative_control():
    lat = lattice_make(3, 4, "plane")
    omega = ground_state(lat, Z2)
    cone = cone_make((1, 1), ["N", "E"], lat)
    sub = cone_subspace(cone, lat, Z2, omega)
    recs = self_adjoint_density_check(cone, lat, Z2, omega, sub, random.Random(6))
    spans, control = recs
    assert spans.passed, spans.details
    assert control.passed, control.details


def test_multi_ribbon_states_reduce_to_products():
    # several ribbons anchored at one site with distinct far endpoints give,
    # up to a phase, a single anchored ribbon times endpoint connectors
    lat = lattice_make(3, 4, "plane")
    grp = group_make([3])
    omega = ground_state(lat, grp)
    s = Site(lat.vertex_id(1, 1), lat.face_id(1, 1))
    far1 = Site(lat.vertex_id(2, 2), lat.face_id(1, 2))
    far2 = Site(lat.vertex_id(1, 3), lat.face_id(0, 2))
    rho1 = ribbon_between(s, far1, lat)
    rho2 = ribbon_between(s, far2, lat, avoid_edges=rho1.edges(), allow_reversed=True)

    labels = [((1,), (0,)), ((1,), (2,)), ((0,), (1,)), ((2,), (1,))]
    for (chi1, c1) in labels[:2]:
        for (chi2, c2) in labels[2:]:
            lhs = (
                as_opsum(ribbon_F_irrep(lat, grp, rho1, chi1, c1))
                @ as_opsum(ribbon_F_irrep(lat, grp, rho2, chi2, c2))
            ).apply(omega)
            # single anchored ribbon with the fused label, connector between
            # the far endpoints avoiding the anchor's star
            anchor = as_opsum(
                ribbon_F_irrep(lat, grp, rho1, grp.char_mul(chi1, chi2), grp.mul(c1, c2))
            )
            region = Region(
                lat,
                frozenset(lat.edges()) - set(lat.star_edges_partial(s.vertex)),
            )
            sigma = ribbon_between(far1, far2, lat, region, allow_reversed=True)
            rhs = (anchor @ as_opsum(ribbon_F_irrep(lat, grp, sigma, chi2, c2))).apply(omega)
            overlap = abs(inner(lhs.normalized(), rhs.normalized()))
            assert abs(overlap - 1.0) < 1e-9


def test_full_patch_subspace_dimension():
    # the whole patch as the region: the subspace dimension factorizes as
    # (free configurations on both-sided edges) x (distinct flat-connection
    # restrictions to the rim), computed here independently from the flats
    from qdlattice.groundstate import flat_connections

    lat = lattice_make(3, 3, "plane")
    omega = ground_state(lat, Z2)
    full = Region(lat, frozenset(lat.edges()))
    sub = cone_subspace(full, lat, Z2, omega)
    flats = flat_connections(lat, Z2)
    rim = [e for e in lat.edges() if _is_rim(lat, e)]
    bulk = [e for e in lat.edges() if not _is_rim(lat, e)]
    rim_patterns = {tuple(row[rim]) for row in flats}
    assert sub.dim == (2 ** len(bulk)) * len(rim_patterns)


def _is_rim(lat, e):
    try:
        lat.dual_faces(e)
        return False
    except Exception:
        return True


def test_cone_region_has_boundary():
    lat = lattice_make(5, 5, "plane")
    cone = cone_make((1, 1), ["N", "E"], lat)
    assert cone.edges
    assert cone.boundary_edges()
    assert cone.interior_complement_edges()
