"""Charged states, sector distinguishability, transporters, fusion,
braiding and the modular S matrix.

Sector labels are pairs (character, group element). Charged states are
ribbon operators applied to a stabilized ground state; all sector data can
be extracted either operationally (detectors on states) or as exact operator
phases (for braiding), since products of the unitary ribbon operators reduce
to a global phase times the identity whenever the theory says they should.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .groups import AbelianGroup, Char, Element, phase_to_complex
from .lattice import (
    Lattice,
    LatticeError,
    Region,
    Ribbon,
    Site,
    closed_loop_around,
    ribbon_between,
    ribbon_concat,
    straight_ribbon,
)
from .operators import (
    AffineMap,
    OperatorError,
    as_opsum,
    canonical,
    loop_charge_projector,
    ribbon_F_irrep,
)
from .states import SparseState, inner
from .groundstate import expectation


class SectorLabel(NamedTuple):
    chi: Char
    c: Element


def sector_labels(group: AbelianGroup) -> list[SectorLabel]:
    return [SectorLabel(chi, c) for chi in group.characters() for c in group.elements()]


def conjugate_label(group: AbelianGroup, label: SectorLabel) -> SectorLabel:
    return SectorLabel(group.char_conj(label.chi), group.inv(label.c))


def fuse_labels(group: AbelianGroup, a: SectorLabel, b: SectorLabel) -> SectorLabel:
    return SectorLabel(group.char_mul(a.chi, b.chi), group.mul(a.c, b.c))


# -- charged states -----------------------------------------------------------------


def charged_state(
    lat: Lattice,
    group: AbelianGroup,
    label: SectorLabel,
    ribbon: Ribbon,
    omega: SparseState,
) -> SparseState:
    """Normalized state with charge `label` at the ribbon's start site and
    the conjugate charge at its end."""
    if ribbon.is_closed or ribbon.is_trivial:
        raise LatticeError("charged states need an open ribbon")
    psi = as_opsum(ribbon_F_irrep(lat, group, ribbon, label.chi, label.c)).apply(omega)
    return psi.normalized()


def charge_moments(
    lat: Lattice, group: AbelianGroup, s: Site, psi: SparseState
) -> dict[tuple[Element, Element], complex]:
    """<psi| A^k B^d |psi> / <psi|psi> for every pair (k, d), in one
    vectorized pass: the plaquette flux is read once and the star shift once
    per group element."""
    from .groundstate import face_flux
    from .operators import star_g

    norm = inner(psi, psi)
    flux = face_flux(lat, group, psi.configs, s.face)
    keys = psi.keys()
    mu: dict[tuple[Element, Element], complex] = {}
    for k in group.elements():
        _, _, shifted = star_g(lat, group, s, k).eval(psi.configs)
        buf = np.ascontiguousarray(shifted)
        skeys = buf.view(np.dtype((np.void, buf.shape[1]))).ravel()
        pos = np.searchsorted(keys, skeys)
        pos_c = np.clip(pos, 0, len(keys) - 1)
        hit = keys[pos_c] == skeys
        # term i contributes conj(amp at shifted config) * amp_i to mu(k, flux_i)
        contrib = np.zeros(len(keys), dtype=np.complex128)
        contrib[hit] = np.conj(psi.amps[pos_c[hit]]) * psi.amps[np.nonzero(hit)[0]]
        per_d = np.zeros(group.order, dtype=np.complex128)
        np.add.at(per_d, flux[hit], contrib[hit])
        for d_idx in range(group.order):
            mu[(k, group.element_at(d_idx))] = complex(per_d[d_idx] / norm)
    return mu


def detect_charge(
    lat: Lattice, group: AbelianGroup, s: Site, psi: SparseState
) -> Optional[SectorLabel]:
    """The unique label whose charge projector fixes psi at s, if any."""
    mu = charge_moments(lat, group, s, psi)
    for xi in group.characters():
        for d in group.elements():
            val = sum(
                np.conj(group.char_eval(xi, k)) * mu[(k, d)] for k in group.elements()
            ) / group.order
            if abs(val - 1.0) < 1e-9:
                return SectorLabel(xi, d)
    return None


# -- distinguishability ----------------------------------------------------------------


@dataclass(frozen=True)
class DistinguishResult:
    separator: Optional[SectorLabel]
    gap: float


def sector_distinguish(
    lat: Lattice,
    group: AbelianGroup,
    label1: SectorLabel,
    label2: SectorLabel,
    omega: SparseState,
    target: Site,
    far: Site,
    radius: int = 1,
) -> DistinguishResult:
    """Search the loop charge projectors for one whose expectation separates
    the two charged states with gap 1, the finite analogue of telling two
    superselection sectors apart by a distant measurement."""
    loop = closed_loop_around(target, radius, lat)
    rho = ribbon_between(target, far, lat)

    def state(label: SectorLabel) -> SparseState:
        if label.chi == group.identity() and label.c == group.identity():
            return omega.normalized()
        return charged_state(lat, group, label, rho, omega)

    psi1, psi2 = state(label1), state(label2)
    best: Optional[SectorLabel] = None
    best_gap = 0.0
    for sig in group.characters():
        for c in group.elements():
            K = loop_charge_projector(lat, group, loop, sig, c)
            gap = abs(expectation(psi1, K) - expectation(psi2, K))
            if gap > best_gap:
                best_gap = gap
                best = SectorLabel(sig, c)
    return DistinguishResult(best if best_gap > 0.5 else None, float(best_gap))


# -- transporters ------------------------------------------------------------------------


def truncate(ribbon: Ribbon, n: int) -> Ribbon:
    if n < 1 or n > len(ribbon):
        raise LatticeError("truncation length out of range")
    return Ribbon(ribbon.triangles[:n], ribbon.start_site)


def transporter(
    lat: Lattice,
    group: AbelianGroup,
    chi: Char,
    c: Element,
    rho1: Ribbon,
    rho2: Ribbon,
    n: int,
    connector_region: Optional[Region] = None,
) -> AffineMap:
    """Finite charge transporter between two same-start ribbons: the charge
    at the end of the first truncated ribbon is moved to the end of the
    second one, and the ground state is left invariant. The connector stays
    clear of both ribbons so the composite path is a proper deformation of
    the second ribbon."""
    if rho1.start != rho2.start:
        raise LatticeError("transporter needs ribbons starting at the same site")
    r1, r2 = truncate(rho1, min(n, len(rho1))), truncate(rho2, min(n, len(rho2)))
    if r1.triangles == r2.triangles:
        return AffineMap.identity(group, lat.n_edges)
    hat = ribbon_between(
        r1.end,
        r2.end,
        lat,
        connector_region,
        avoid_edges=r1.edges() | r2.edges(),
        allow_reversed=True,
    )
    from .deform import is_deformation_pair

    if not is_deformation_pair(lat, group, ribbon_concat(r1, hat), r2):
        raise LatticeError("transporter path crosses the target ribbon")
    left = ribbon_F_irrep(lat, group, r2, chi, c)
    right = ribbon_F_irrep(
        lat, group, ribbon_concat(r1, hat), group.char_conj(chi), group.inv(c)
    )
    return left.compose(right)


# -- fusion ---------------------------------------------------------------------------------


def fusion_table(
    lat: Lattice,
    group: AbelianGroup,
    omega: SparseState,
    rho: Ribbon,
) -> dict[tuple[SectorLabel, SectorLabel], SectorLabel]:
    """Operational fusion table: apply two ribbon operators along the same
    ribbon and measure the composite charge at the start site."""
    s0 = rho.start
    out = {}
    labels = sector_labels(group)
    for a in labels:
        fa = as_opsum(ribbon_F_irrep(lat, group, rho, a.chi, a.c))
        for b in labels:
            fb = as_opsum(ribbon_F_irrep(lat, group, rho, b.chi, b.c))
            psi = fa.apply(fb.apply(omega))
            measured = detect_charge(lat, group, s0, psi)
            if measured is None:
                raise OperatorError(f"no definite composite charge for {a} x {b}")
            out[(a, b)] = measured
    return out


# -- braiding ----------------------------------------------------------------------------------


def crossing_pair(lat: Lattice, x: int, y: int, steps: int = 2) -> tuple[Ribbon, Ribbon]:
    """Canonical once-crossing pair at the site region around vertex
    (x+1, y): the first ribbon heads north, the second east; the first is
    the one whose operator picks up the phase when commuted to the right."""
    rho = straight_ribbon(lat, x + 1, y - steps + 1, "N", 2 * steps - 1)
    sigma = straight_ribbon(lat, x - steps + 1, y, "E", 2 * steps - 1)
    return rho, sigma


def phase_of_map(m: AffineMap) -> Optional[Fraction]:
    """The exact phase when the map is a scalar multiple of the identity."""
    cm = canonical(m)
    if cm is None or cm.shifts or cm.deltas or cm.chars:
        return None
    return cm.phase


def braiding_phase(
    lat: Lattice,
    group: AbelianGroup,
    label1: SectorLabel,
    label2: SectorLabel,
    at: Optional[tuple[int, int]] = None,
) -> complex:
    """Scalar lambda with F1 F2 = lambda F2 F1 for the canonical
    once-crossing ribbon pair (label1 rides the north ribbon)."""
    if at is None:
        at = (lat.width // 2, lat.height // 2)
    rho, sigma = crossing_pair(lat, *at)
    f1 = ribbon_F_irrep(lat, group, rho, label1.chi, label1.c)
    f2 = ribbon_F_irrep(lat, group, sigma, label2.chi, label2.c)
    lhs = f1.compose(f2)
    rhs = f2.compose(f1)
    # lhs = lambda * rhs, both unitary basis maps: the quotient is the phase
    # difference of their canonical forms
    ca, cb = canonical(lhs), canonical(rhs)
    if ca is None or cb is None:
        raise OperatorError("crossing operators unexpectedly annihilate")
    if (ca.shifts, ca.deltas, ca.chars) != (cb.shifts, cb.deltas, cb.chars):
        raise OperatorError("crossing products differ by more than a phase")
    return phase_to_complex((ca.phase - cb.phase) % 1)


# -- S matrix ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class SMatrixGeometry:
    """Ribbon layout for the double-exchange simulation: alpha's ribbon runs
    north from the base row; beta's ribbon and its transported copy share a
    start to alpha's right, heading east and (under the base) west; the
    connectors arc over the top, crossing alpha's ribbon exactly once."""

    rho1: Ribbon  # alpha, north
    rho2: Ribbon  # beta, east
    rho2_hat: Ribbon  # beta transported to the west
    kappa: Ribbon  # end of rho2 -> end of rho2_hat, crossing rho1 once
    rho1_hat: Ribbon  # alpha transported west, below the arc
    kappa1: Ribbon  # end of rho1 -> end of rho1_hat, crossing nothing


def smatrix_geometry(lat: Lattice, reversed_orientation: bool = False) -> SMatrixGeometry:
    """Explicit ribbon layout for the double exchange. Beta's ribbon and its
    transported copy head north, two columns right and left of alpha; the
    connector runs west above them, threading through alpha's ribbon exactly
    once. Alpha's ribbon runs south from the top: that relative orientation
    realizes moving beta's charge through the exchange on the side that
    reproduces the stated table. `reversed_orientation` runs alpha's ribbon
    north instead, which mirrors the exchange handedness and must conjugate
    every entry (negative control)."""
    if lat.is_torus or lat.width < 7 or lat.height < 7:
        raise LatticeError("double-exchange geometry needs a plane patch of at least 7x7")
    from .deform import flux_reading, shift_pattern
    from .groups import group_make

    bx = lat.width // 2  # alpha's column
    by = 2  # base row
    n = 2  # beta truncation in steps
    top = lat.height - 1

    if reversed_orientation:
        rho1 = straight_ribbon(lat, bx, by, "N", top - by, drop_last_dual=True)
        rho1_hat = straight_ribbon(lat, bx - 1, by, "N", top - by, drop_last_dual=True)
        kappa1 = straight_ribbon(lat, bx, top, "W", 1)
    else:
        rho1 = straight_ribbon(lat, bx, top, "S", top - by, drop_last_dual=True)
        rho1_hat = straight_ribbon(lat, bx - 1, top, "S", top - by, drop_last_dual=True)
        kappa1 = None  # built below once the other ribbons exist
    rho2 = straight_ribbon(lat, bx + 2, by, "N", n, drop_last_dual=True)
    rho2_hat = straight_ribbon(lat, bx - 2, by, "N", n, drop_last_dual=True)
    kappa = straight_ribbon(lat, bx + 2, by + n, "W", 4)
    if kappa1 is None:
        kappa1 = ribbon_between(
            rho1.end,
            rho1_hat.end,
            lat,
            avoid_edges=rho1.edges() | rho2.edges(),
            allow_reversed=True,
        )
    geom = SMatrixGeometry(rho1, rho2, rho2_hat, kappa, rho1_hat, kappa1)

    # wiring checks: connectors chain exactly onto the ribbon ends, beta's
    # path crosses alpha's ribbon exactly once, alpha's path avoids beta
    if kappa.start != rho2.end or kappa.end != rho2_hat.end:
        raise LatticeError("beta connector endpoints do not match")
    if kappa1.start != rho1.end or kappa1.end != rho1_hat.end:
        raise LatticeError("alpha connector endpoints do not match")
    g2 = group_make([2])
    if flux_reading(
        lat, g2, rho1, shift_pattern(lat, g2, ribbon_concat(rho2, kappa), (1,))
    ) == g2.identity():
        raise LatticeError("beta connector fails to cross alpha's ribbon")
    if flux_reading(
        lat, g2, rho2, shift_pattern(lat, g2, ribbon_concat(rho1, kappa1), (1,))
    ) != g2.identity():
        raise LatticeError("alpha transporter path crosses beta's ribbon")
    return geom


def _exchange_phase(
    lat: Lattice,
    group: AbelianGroup,
    mover_label: SectorLabel,
    mover: Ribbon,
    mover_hat: Ribbon,
    connector: Ribbon,
    spectator_label: SectorLabel,
    spectator: Ribbon,
) -> Fraction:
    """Phase of V* alpha(V) where V transports the mover charge along the
    connector and alpha conjugates by the spectator's ribbon operator."""
    V = ribbon_F_irrep(lat, group, mover_hat, mover_label.chi, mover_label.c).compose(
        ribbon_F_irrep(
            lat,
            group,
            ribbon_concat(mover, connector),
            group.char_conj(mover_label.chi),
            group.inv(mover_label.c),
        )
    )
    Fs = ribbon_F_irrep(lat, group, spectator, spectator_label.chi, spectator_label.c)
    eps = V.adjoint().compose(Fs).compose(V).compose(Fs.adjoint())
    phase = phase_of_map(eps)
    if phase is None:
        raise OperatorError("exchange operator is not a scalar: bad geometry")
    return phase


def s_matrix_entry(
    lat: Lattice,
    group: AbelianGroup,
    label1: SectorLabel,
    label2: SectorLabel,
    geom: Optional[SMatrixGeometry] = None,
) -> complex:
    """Double-exchange (monodromy) scalar of the two sectors, simulated with
    finite transporters; label1 rides the north ribbon."""
    if geom is None:
        geom = smatrix_geometry(lat)
    eps_ab = _exchange_phase(
        lat, group, label2, geom.rho2, geom.rho2_hat, geom.kappa, label1, geom.rho1
    )
    eps_ba = _exchange_phase(
        lat, group, label1, geom.rho1, geom.rho1_hat, geom.kappa1, label2, geom.rho2
    )
    return phase_to_complex((eps_ab + eps_ba) % 1)


def s_matrix_formula(group: AbelianGroup, label1: SectorLabel, label2: SectorLabel) -> complex:
    """Closed form: conj(chi1)(d) * conj(chi2)(c)."""
    return complex(
        np.conj(group.char_eval(label1.chi, label2.c))
        * np.conj(group.char_eval(label2.chi, label1.c))
    )


def s_matrix(
    lat: Lattice, group: AbelianGroup, normalized: bool = False
) -> dict[tuple[SectorLabel, SectorLabel], complex]:
    """Full table of double-exchange scalars; with `normalized` the entries
    are divided by the group order, giving the modular matrix normalization."""
    geom = smatrix_geometry(lat)
    scale = 1.0 / group.order if normalized else 1.0
    out = {}
    for a in sector_labels(group):
        for b in sector_labels(group):
            out[(a, b)] = s_matrix_entry(lat, group, a, b, geom) * scale
    return out
