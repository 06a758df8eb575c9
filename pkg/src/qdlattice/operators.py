"""Triangle, ribbon, star, plaquette and charge operators.

Every elementary operator here maps a configuration basis vector to at most
one basis vector with a unit-modulus coefficient. Such maps close under
composition and adjoints, so they get one exact normal form, ``AffineMap``:

* a group shift per touched edge (the dual-triangle action),
* affine delta constraints (the direct-triangle flux projections),
* character phases evaluated on affine flux expressions,
* one global phase, an exact fraction of a turn.

Sums with scalar coefficients (projectors, Hamiltonians) are ``OpSum``.
Operators may be applied to sparse states directly, or materialized as
scipy sparse matrices over the full configuration space or over the
subspace of any edge support set, which is how operator identities are
checked exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .groups import AbelianGroup, Char, Element
from .lattice import (
    Lattice,
    LatticeError,
    Region,
    Ribbon,
    Site,
    Triangle,
    direct_flux_sign,
    dual_shift_sign,
)

MATRIX_DIM_CAP = 1 << 20

Coeffs = tuple[tuple[int, int], ...]  # ((edge, sign), ...), sign in {+1, -1}


class OperatorError(ValueError):
    """Operator construction or materialization is not admissible."""


@dataclass(frozen=True)
class AffineMap:
    """Basis map |m> -> phase(m) * delta(m) * |m + shift|."""

    group: AbelianGroup
    n_edges: int
    shifts: tuple[tuple[int, int], ...] = ()  # (edge, group index), sorted by edge
    deltas: tuple[tuple[Coeffs, int], ...] = ()  # (affine flux expression, target index)
    chars: tuple[tuple[Char, Coeffs, int], ...] = ()  # chi evaluated at offset + flux expr
    phase: Fraction = Fraction(0)  # global phase in turns

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def identity(group: AbelianGroup, n_edges: int) -> "AffineMap":
        return AffineMap(group, n_edges)

    # -- structure ------------------------------------------------------------

    def support(self) -> frozenset[int]:
        out = {e for e, _ in self.shifts}
        for coeffs, _ in self.deltas:
            out.update(e for e, _ in coeffs)
        for _, coeffs, _ in self.chars:
            out.update(e for e, _ in coeffs)
        return frozenset(out)

    def _shift_of(self, edge: int) -> int:
        for e, g in self.shifts:
            if e == edge:
                return g
        return self.group.index_of(self.group.identity())

    def _fold_shift(self, coeffs: Coeffs) -> Element:
        """Group element sum of sign*shift(edge) over the expression."""
        g = self.group
        acc = g.identity()
        for e, sign in coeffs:
            s = g.element_at(self._shift_of(e))
            acc = g.mul(acc, s if sign > 0 else g.inv(s))
        return acc

    # -- algebra ----------------------------------------------------------------

    def compose(self, first: "AffineMap") -> "AffineMap":
        """self after first (operator product self * first)."""
        g = self.group
        if g != first.group or self.n_edges != first.n_edges:
            raise OperatorError("maps live on different lattices or groups")
        shifts: dict[int, Element] = {
            e: g.element_at(gi) for e, gi in first.shifts
        }
        for e, gi in self.shifts:
            shifts[e] = g.mul(shifts.get(e, g.identity()), g.element_at(gi))
        new_shifts = tuple(
            sorted(
                (e, g.index_of(v))
                for e, v in shifts.items()
                if v != g.identity()
            )
        )
        # self's constraints read the input already shifted by `first`
        new_deltas = list(first.deltas)
        for coeffs, target in self.deltas:
            adj = first._fold_shift(coeffs)
            new_deltas.append(
                (coeffs, g.index_of(g.mul(g.element_at(target), g.inv(adj))))
            )
        new_chars = list(first.chars)
        for chi, coeffs, offset in self.chars:
            adj = first._fold_shift(coeffs)
            new_chars.append((chi, coeffs, g.index_of(g.mul(g.element_at(offset), adj))))
        return AffineMap(
            g,
            self.n_edges,
            new_shifts,
            tuple(new_deltas),
            tuple(new_chars),
            (self.phase + first.phase) % 1,
        )

    def adjoint(self) -> "AffineMap":
        g = self.group
        inv_shifts = tuple(
            sorted((e, g.index_of(g.inv(g.element_at(gi)))) for e, gi in self.shifts)
        )
        undo = AffineMap(g, self.n_edges, inv_shifts)
        new_deltas = []
        for coeffs, target in self.deltas:
            adj = undo._fold_shift(coeffs)
            new_deltas.append(
                (coeffs, g.index_of(g.mul(g.element_at(target), g.inv(adj))))
            )
        new_chars = []
        for chi, coeffs, offset in self.chars:
            adj = undo._fold_shift(coeffs)
            new_chars.append(
                (g.char_conj(chi), coeffs, g.index_of(g.mul(g.element_at(offset), adj)))
            )
        return AffineMap(
            g, self.n_edges, inv_shifts, tuple(new_deltas), tuple(new_chars), (-self.phase) % 1
        )

    # -- evaluation ----------------------------------------------------------------

    def eval(self, configs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(alive mask, phase numerators mod L, shifted configs) for given rows."""
        t = self.group.tables()
        add, neg, char_num = t["add"], t["neg"], t["char_num"]
        n = configs.shape[0]
        alive = np.ones(n, dtype=bool)
        e_id = self.group.index_of(self.group.identity())
        for coeffs, target in self.deltas:
            acc = np.full(n, e_id, dtype=np.int64)
            for e, sign in coeffs:
                col = configs[:, e].astype(np.int64)
                acc = add[acc, col if sign > 0 else neg[col]]
            alive &= acc == target
        L = self.group.phase_denominator
        pnum = np.full(n, int(self.phase * L) % L, dtype=np.int64)
        for chi, coeffs, offset in self.chars:
            acc = np.full(n, offset, dtype=np.int64)
            for e, sign in coeffs:
                col = configs[:, e].astype(np.int64)
                acc = add[acc, col if sign > 0 else neg[col]]
            pnum = (pnum + char_num[self.group.index_of(chi), acc]) % L
        out = configs.copy()
        for e, gi in self.shifts:
            out[:, e] = add[out[:, e].astype(np.int64), gi].astype(configs.dtype)
        return alive, pnum, out


@dataclass(frozen=True)
class OpSum:
    """Finite linear combination of AffineMaps."""

    terms: tuple[tuple[complex, AffineMap], ...]

    @staticmethod
    def of(*maps: AffineMap) -> "OpSum":
        return OpSum(tuple((1.0 + 0.0j, m) for m in maps))

    @staticmethod
    def weighted(pairs: Iterable[tuple[complex, AffineMap]]) -> "OpSum":
        return OpSum(tuple((complex(c), m) for c, m in pairs))

    def __add__(self, other: "OpSum") -> "OpSum":
        return OpSum(self.terms + other.terms)

    def __sub__(self, other: "OpSum") -> "OpSum":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "OpSum":
        return OpSum(tuple((a * c, m) for a, m in self.terms))

    def compose(self, first: "OpSum") -> "OpSum":
        return OpSum(
            tuple(
                (a * b, ma.compose(mb))
                for a, ma in self.terms
                for b, mb in first.terms
            )
        )

    def __matmul__(self, first: "OpSum") -> "OpSum":
        return self.compose(first)

    def adjoint(self) -> "OpSum":
        return OpSum(tuple((np.conj(a), m.adjoint()) for a, m in self.terms))

    def simplify(self) -> "OpSum":
        acc: dict[AffineMap, complex] = {}
        for a, m in self.terms:
            acc[m] = acc.get(m, 0.0 + 0.0j) + a
        return OpSum(tuple((a, m) for m, a in acc.items() if abs(a) > 0.0))

    def support(self) -> frozenset[int]:
        out: set[int] = set()
        for _, m in self.terms:
            out |= m.support()
        return frozenset(out)

    def commutator(self, other: "OpSum") -> "OpSum":
        return self.compose(other) - other.compose(self)

    # -- action -----------------------------------------------------------------

    def apply(self, psi):
        from .states import SparseState

        if not self.terms:
            return SparseState.zero(psi.n_edges, psi.radix)
        group = self.terms[0][1].group
        roots = group.tables()["roots"]
        parts_c, parts_a = [], []
        for coeff, m in self.terms:
            alive, pnum, out = m.eval(psi.configs)
            if not alive.any():
                continue
            parts_c.append(out[alive])
            parts_a.append(psi.amps[alive] * roots[pnum[alive]] * coeff)
        if not parts_c:
            return SparseState.zero(psi.n_edges, psi.radix)
        return SparseState.from_terms(
            np.concatenate(parts_c), np.concatenate(parts_a), psi.n_edges, psi.radix
        )


def as_opsum(op) -> OpSum:
    if isinstance(op, AffineMap):
        return OpSum.of(op)
    if isinstance(op, OpSum):
        return op
    raise OperatorError(f"not an operator: {op!r}")


def canonical(m: AffineMap) -> Optional[AffineMap]:
    """Unique normal form of an AffineMap, or None for the zero operator.
    Two maps with equal normal forms are equal as operators; maps built from
    the same ribbon expressions compare completely."""
    g = m.group
    e_idx = g.index_of(g.identity())

    def norm_expr(coeffs: Coeffs, flip_allowed: bool = True):
        cs = tuple(sorted(coeffs))
        if flip_allowed and cs and cs[0][1] < 0:
            return tuple((e, -s) for e, s in cs), True
        return cs, False

    delta_map: dict[Coeffs, int] = {}
    for coeffs, target in m.deltas:
        cs, flipped = norm_expr(coeffs)
        t = g.index_of(g.inv(g.element_at(target))) if flipped else target
        if not cs and t != e_idx:
            return None  # empty expression can only hit the identity
        if not cs:
            continue
        if cs in delta_map and delta_map[cs] != t:
            return None  # conflicting constraints annihilate everything
        delta_map[cs] = t

    phase = m.phase
    char_map: dict[Coeffs, Element] = {}
    for chi, coeffs, offset in m.chars:
        # constant part into the global phase, leaving chi evaluated at the
        # bare expression
        phase = (phase + g.char_phase(chi, g.element_at(offset))) % 1
        cs, flipped = norm_expr(coeffs)
        ch = g.char_conj(chi) if flipped else chi
        if not cs:
            continue
        char_map[cs] = g.char_mul(char_map.get(cs, g.identity()), ch)
    chars = tuple(
        sorted((ch, cs, e_idx) for cs, ch in char_map.items() if ch != g.identity())
    )
    return AffineMap(
        g,
        m.n_edges,
        tuple(sorted(m.shifts)),
        tuple(sorted(delta_map.items())),
        chars,
        phase,
    )


def same_action(a: AffineMap, b: AffineMap) -> bool:
    """Exact structural operator equality via normal forms."""
    return canonical(a) == canonical(b)


# -- matrix materialization --------------------------------------------------------


def _enumerate_configs(edges: Sequence[int], n_edges: int, radix: int) -> np.ndarray:
    """All configurations supported on `edges`, zero elsewhere."""
    k = len(edges)
    n = radix**k
    if n > MATRIX_DIM_CAP:
        raise OperatorError(f"support enumeration of {n} rows exceeds cap {MATRIX_DIM_CAP}")
    configs = np.zeros((n, n_edges), dtype=np.uint8)
    idx = np.arange(n)
    for pos, e in enumerate(edges):
        configs[:, e] = (idx // radix ** (k - 1 - pos)) % radix
    return configs


def support_matrix(op, support: Sequence[int], n_edges: int) -> sp.csr_matrix:
    """Matrix of the operator on the configuration space of the given edges.

    Faithful for any operator whose support is contained in `support`: the
    action then factorizes as (matrix on support) tensor (identity)."""
    opsum = as_opsum(op)
    if not opsum.terms:
        dim = 1
        return sp.csr_matrix((dim, dim), dtype=np.complex128)
    group = opsum.terms[0][1].group
    radix = group.order
    support = sorted(support)
    if not (opsum.support() <= set(support)):
        raise OperatorError("operator touches edges outside the requested support")
    configs = _enumerate_configs(support, n_edges, radix)
    n = configs.shape[0]
    powers = np.array([radix ** (len(support) - 1 - i) for i in range(len(support))], dtype=np.int64)
    cols = np.arange(n, dtype=np.int64)
    roots = group.tables()["roots"]
    mats = []
    for coeff, m in opsum.terms:
        alive, pnum, out = m.eval(configs)
        rows = out[:, support].astype(np.int64) @ powers
        data = np.where(alive, roots[pnum] * coeff, 0.0)
        mats.append(sp.coo_matrix((data[alive], (rows[alive], cols[alive])), shape=(n, n)))
    total = mats[0].tocsr()
    for mtx in mats[1:]:
        total = total + mtx.tocsr()
    return total


def to_matrix(op, lat: Lattice) -> sp.csr_matrix:
    """Matrix over the full configuration space (refused above the cap)."""
    opsum = as_opsum(op)
    group = opsum.terms[0][1].group
    if group.order**lat.n_edges > MATRIX_DIM_CAP:
        raise OperatorError("full configuration space exceeds the matrix cap")
    return support_matrix(op, list(lat.edges()), lat.n_edges)


def ops_equal(a, b, n_edges: int, extra_support: Iterable[int] = ()) -> float:
    """Max entrywise deviation between two operators, checked exactly on the
    joint support subspace (an operator identity holds iff this is ~0)."""
    sa, sb = as_opsum(a), as_opsum(b)
    support = set(sa.support()) | set(sb.support()) | set(extra_support)
    if not support:
        support = {0}
    ma = support_matrix(sa, sorted(support), n_edges)
    mb = support_matrix(sb, sorted(support), n_edges)
    diff = (ma - mb).tocoo()
    return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0


# -- triangle operators ---------------------------------------------------------------


def triangle_T(lat: Lattice, group: AbelianGroup, tri: Triangle, h: Element) -> AffineMap:
    """Direct-triangle projector: keeps the basis state when the edge value,
    read with the travel sign, equals h."""
    if tri.kind != "direct":
        raise OperatorError("triangle_T needs a direct triangle")
    coeffs = ((tri.edge, direct_flux_sign(lat, tri)),)
    return AffineMap(group, lat.n_edges, deltas=((coeffs, group.index_of(h)),))


def triangle_L(lat: Lattice, group: AbelianGroup, tri: Triangle, g: Element) -> AffineMap:
    """Dual-triangle shift: adds g to the crossed edge with the travel sign."""
    if tri.kind != "dual":
        raise OperatorError("triangle_L needs a dual triangle")
    s = dual_shift_sign(lat, tri)
    val = g if s > 0 else group.inv(g)
    if val == group.identity():
        return AffineMap.identity(group, lat.n_edges)
    return AffineMap(group, lat.n_edges, shifts=((tri.edge, group.index_of(val)),))


def _ribbon_parts(lat: Lattice, ribbon: Ribbon) -> tuple[Coeffs, tuple[tuple[int, int], ...]]:
    flux: list[tuple[int, int]] = []
    duals: list[tuple[int, int]] = []
    for tri in ribbon.triangles:
        if tri.kind == "direct":
            flux.append((tri.edge, direct_flux_sign(lat, tri)))
        else:
            duals.append((tri.edge, dual_shift_sign(lat, tri)))
    return tuple(flux), tuple(duals)


def ribbon_F(lat: Lattice, group: AbelianGroup, ribbon: Ribbon, g: Element, h: Element) -> AffineMap:
    """Ribbon operator in the group-element basis: project the accumulated
    direct-edge flux onto h and shift every dual edge by g (with signs).
    The trivial ribbon gives the identity."""
    if ribbon.is_trivial:
        return AffineMap.identity(group, lat.n_edges)
    flux, duals = _ribbon_parts(lat, ribbon)
    shifts = []
    for e, sign in duals:
        val = g if sign > 0 else group.inv(g)
        if val != group.identity():
            shifts.append((e, group.index_of(val)))
    # with no direct triangles the empty flux expression makes this delta_{h,e}
    deltas = ((flux, group.index_of(h)),)
    return AffineMap(group, lat.n_edges, tuple(sorted(shifts)), deltas)


def ribbon_F_irrep(
    lat: Lattice, group: AbelianGroup, ribbon: Ribbon, chi: Char, c: Element
) -> AffineMap:
    """Ribbon operator in the irreducible-representation basis: the sum over
    flux labels collapses on each basis state, leaving the phase
    conj(chi)(flux) and a dual shift by the inverse of c. Unitary."""
    if ribbon.is_trivial:
        raise OperatorError("irrep ribbon operators need a nonempty ribbon")
    flux, duals = _ribbon_parts(lat, ribbon)
    c_bar = group.inv(c)
    shifts = []
    for e, sign in duals:
        val = c_bar if sign > 0 else c
        if val != group.identity():
            shifts.append((e, group.index_of(val)))
    chars = ()
    if chi != group.identity():
        chars = ((group.char_conj(chi), flux, group.index_of(group.identity())),)
    return AffineMap(group, lat.n_edges, tuple(sorted(shifts)), (), chars)


# -- site operators -------------------------------------------------------------------


def alpha_ribbon(lat: Lattice, s: Site) -> Ribbon:
    """Smallest closed dual ribbon at s: clockwise around the vertex."""
    ring = lat.faces_at_vertex_cw(s.vertex)
    if None in ring:
        raise LatticeError(f"vertex {s.vertex} has an incomplete star")
    k = ring.index(s.face)
    order = [ring[(k + i) % 4] for i in range(4)] + [s.face]
    tris = []
    for f0, f1 in zip(order, order[1:]):
        from .lattice import make_triangle

        tris.append(make_triangle(lat, Site(s.vertex, f0), Site(s.vertex, f1)))
    return Ribbon.from_triangles(tris)


def beta_ribbon(lat: Lattice, s: Site) -> Ribbon:
    """Smallest closed direct ribbon at s: counterclockwise around the face."""
    corners = lat.face_corners_ccw(s.face)
    if s.vertex not in corners:
        raise LatticeError("site vertex is not a corner of its face")
    k = corners.index(s.vertex)
    order = [corners[(k + i) % 4] for i in range(4)] + [s.vertex]
    from .lattice import make_triangle

    tris = [
        make_triangle(lat, Site(v0, s.face), Site(v1, s.face))
        for v0, v1 in zip(order, order[1:])
    ]
    return Ribbon.from_triangles(tris)


def star_g(lat: Lattice, group: AbelianGroup, s: Site, g: Element) -> AffineMap:
    return ribbon_F(lat, group, alpha_ribbon(lat, s), g, group.identity())


def plaq_h(lat: Lattice, group: AbelianGroup, s: Site, h: Element) -> AffineMap:
    return ribbon_F(lat, group, beta_ribbon(lat, s), group.identity(), group.inv(h))


def star_proj(lat: Lattice, group: AbelianGroup, s: Site) -> OpSum:
    w = 1.0 / group.order
    return OpSum.weighted((w, star_g(lat, group, s, g)) for g in group.elements())


def plaq_proj(lat: Lattice, group: AbelianGroup, s: Site) -> OpSum:
    return OpSum.of(plaq_h(lat, group, s, group.identity()))


def charge_projector(
    lat: Lattice, group: AbelianGroup, s: Site, xi: Char, d: Element
) -> OpSum:
    """Detector of the charge (xi, d) sitting at site s."""
    bd = plaq_h(lat, group, s, d)
    terms = []
    for k in group.elements():
        coeff = complex(np.conj(group.char_eval(xi, k))) / group.order
        terms.append((coeff, star_g(lat, group, s, k).compose(bd)))
    return OpSum.weighted(terms)


def loop_charge_projector(
    lat: Lattice, group: AbelianGroup, loop: Ribbon, sigma: Char, c: Element
) -> OpSum:
    """Projector onto total charge (sigma, c) enclosed by a closed ribbon."""
    if not loop.is_closed:
        raise OperatorError("loop charge projector needs a closed ribbon")
    terms = []
    for g in group.elements():
        coeff = complex(np.conj(group.char_eval(sigma, g))) / group.order
        terms.append((coeff, ribbon_F(lat, group, loop, g, c)))
    return OpSum.weighted(terms)


# -- Hamiltonian -------------------------------------------------------------------


def complete_stars(lat: Lattice, region: Optional[Region] = None) -> list[int]:
    out = []
    for v in range(lat.n_vertices):
        if not lat.has_full_star(v):
            continue
        if region is not None and not set(lat.star_edges(v)) <= region.edges:
            continue
        out.append(v)
    return out


def complete_plaquettes(lat: Lattice, region: Optional[Region] = None) -> list[int]:
    out = []
    for f in lat.faces():
        edges = {e for e, _ in lat.plaq_edges(f)}
        if region is not None and not edges <= region.edges:
            continue
        out.append(f)
    return out


def _site_at_vertex(lat: Lattice, v: int) -> Site:
    for f in lat.faces_at_vertex_cw(v):
        if f is not None:
            return Site(v, f)
    raise LatticeError(f"vertex {v} touches no face")


def _site_at_face(lat: Lattice, f: int) -> Site:
    return Site(lat.face_corners_ccw(f)[0], f)


def hamiltonian(lat: Lattice, group: AbelianGroup, region: Optional[Region] = None) -> OpSum:
    """-sum(star projectors) - sum(plaquette projectors) over the complete
    stars and plaquettes (of the region, when one is given)."""
    stars = complete_stars(lat, region)
    plaqs = complete_plaquettes(lat, region)
    if not stars and not plaqs:
        raise OperatorError("region contains no complete star or plaquette")
    total = OpSum(())
    for v in stars:
        total = total + star_proj(lat, group, _site_at_vertex(lat, v)).scaled(-1.0)
    for f in plaqs:
        total = total + plaq_proj(lat, group, _site_at_face(lat, f)).scaled(-1.0)
    return total


def ground_energy(lat: Lattice, region: Optional[Region] = None) -> float:
    """Energy of a state stabilized by every term of the Hamiltonian."""
    return -float(len(complete_stars(lat, region)) + len(complete_plaquettes(lat, region)))
