import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qdlattice.groups import GroupError, format_group, group_make, parse_group


def test_group_make_orders():
    assert group_make([2]).order == 2
    assert group_make([2, 2]).order == 4
    assert group_make([]).order == 1


def test_invalid_order_rejected():
    with pytest.raises(GroupError):
        group_make([1])
    with pytest.raises(GroupError):
        group_make([2, 0])


def test_mul_inv_identity():
    z2 = group_make([2])
    assert z2.mul((1,), (1,)) == (0,)
    z3 = group_make([3])
    assert z3.inv((1,)) == (2,)
    z22 = group_make([2, 2])
    assert z22.mul((1, 0), (0, 1)) == (1, 1)
    assert z22.identity() == (0, 0)


def test_shape_mismatch():
    z2 = group_make([2])
    with pytest.raises(GroupError):
        z2.mul((1,), (1, 0))


def test_char_eval_values():
    z2 = group_make([2])
    assert z2.char_eval((1,), (1,)) == -1
    z3 = group_make([3])
    val = z3.char_eval((1,), (1,))
    assert abs(val - complex(math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3))) < 1e-15
    for g in z3.elements():
        assert z3.char_eval(z3.identity(), g) == 1
        assert z3.char_eval((1,), z3.identity()) == 1


def test_char_mul_conj():
    z2 = group_make([2])
    assert z2.char_mul((1,), (1,)) == (0,)
    z4 = group_make([4])
    assert z4.char_conj((1,)) == (3,)
    z22 = group_make([2, 2])
    assert z22.char_mul((1, 0), (0, 1)) == (1, 1)


@given(st.sampled_from([(2,), (3,), (4,), (2, 2), (2, 3)]), st.data())
def test_characters_multiplicative(orders, data):
    grp = group_make(list(orders))
    elems = grp.elements()
    chi = data.draw(st.sampled_from(elems))
    g = data.draw(st.sampled_from(elems))
    h = data.draw(st.sampled_from(elems))
    lhs = grp.char_eval(chi, grp.mul(g, h))
    rhs = grp.char_eval(chi, g) * grp.char_eval(chi, h)
    assert abs(lhs - rhs) < 1e-12
    # exact at the level of phases
    assert (grp.char_phase(chi, grp.mul(g, h))) == (
        grp.char_phase(chi, g) + grp.char_phase(chi, h)
    ) % 1


@pytest.mark.parametrize("orders", [[2], [3], [4], [2, 2]])
def test_character_orthogonality(orders):
    grp = group_make(orders)
    for chi in grp.characters():
        total = sum(grp.char_eval(chi, g) for g in grp.elements())
        want = grp.order if chi == grp.identity() else 0.0
        assert abs(total - want) < 1e-12


@pytest.mark.parametrize("orders", [[2], [3], [2, 2]])
def test_dual_group_size(orders):
    grp = group_make(orders)
    assert len(grp.characters()) == grp.order


def test_index_packing_roundtrip():
    grp = group_make([2, 3])
    for i, g in enumerate(grp.elements()):
        assert grp.element_at(grp.index_of(g)) == g


def test_parse_group():
    assert parse_group("z2").orders == (2,)
    assert parse_group("Z3").orders == (3,)
    assert parse_group("z2xz2").orders == (2, 2)
    assert format_group(parse_group("z4xz2")) == "z4xz2"
    with pytest.raises(GroupError):
        parse_group("z1")
    with pytest.raises(GroupError):
        parse_group("zx2")
