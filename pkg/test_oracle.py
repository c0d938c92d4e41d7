"""
Tests for the exhaustive jet-orbit oracle
"""

import pytest

from charp_config import Budget
from charp_errors import BudgetExceededError
from charp_field import field_of_degree
from charp_oracle import (UnionFind, check_equivalence, decode_jet, encode_jet, enumerate_group,
                          jet_invariants, orbit_partition, validate_classification)
from charp_reduce import normal_form
from charp_series import Series, compose


def poly(ctx, terms, trunc):
    return Series.from_terms(ctx, terms, trunc)


def test_union_find():
    uf = UnionFind(range(6))
    uf.union(0, 3)
    uf.union(3, 5)
    uf.union(1, 2)
    assert len(uf) == 3
    assert uf.find(5) == uf.find(0)
    assert sorted(sorted(g) for g in uf.groups().values()) == [[0, 3, 5], [1, 2], [4]]


def test_jet_index_orders_by_first_coefficient(F2):
    assert encode_jet(F2, [F2.one, F2.zero]) == 2
    assert decode_jet(F2, 2, 1) == [F2.zero, F2.one]


@pytest.mark.parametrize('order, d, size', [(2, 3, 4), (2, 1, 1), (3, 2, 6), (4, 2, 12)])
def test_group_size(order, d, size):
    ctx = field_of_degree(2, 2) if order == 4 else field_of_degree(order, 1)
    group = enumerate_group(ctx, d)
    assert len(group) == size
    if d == 1 and order == 2:
        assert group[0].is_identity()


def test_group_budget(F4):
    with pytest.raises(BudgetExceededError):
        enumerate_group(F4, 12, Budget(group_budget=1000))


def test_orbits_at_order_two(F2):
    table = orbit_partition(F2, 2)
    assert [table.jet_series(c.representative).to_text() for c in table.classes] == ['x^2', 'x']
    assert [c.size for c in table.classes] == [1, 2]
    assert table.same_orbit(poly(F2, {1: 1}, 2), poly(F2, {1: 1, 2: 1}, 2))


def test_cubic_jets_share_an_orbit(F2):
    table = orbit_partition(F2, 4)
    f = poly(F2, {3: 1, 4: 1}, 4)
    assert table.same_orbit(poly(F2, {3: 1}, 4), f)
    rep = table.jet_series(table.representative_of(f))
    assert rep.to_text() == 'x^3'
    assert compose(rep, table.witness_for(f)).coeffs == f.coeffs


def test_orbit_invariants_are_recorded(F2):
    table = orbit_partition(F2, 4)
    cls = table.class_of(poly(F2, {2: 1, 3: 1}, 4))
    assert cls.invariants == {'m': 2, 'e': 0, 'q': 3, 'k': 1, 'd': 3, 'mu': 2, 'certified': True}
    assert jet_invariants(poly(F2, {2: 1, 4: 1}, 4)) == {'m': 2, 'certified': False}
    assert table.csv_rows()[0] == ['representative', 'size', 'm', 'e', 'q', 'k', 'd', 'mu']


def test_equivalence_to_itself(F2):
    f = poly(F2, {2: 1, 5: 1}, 7)
    result = check_equivalence(f, f, F2, 7)
    assert result.equivalent and result.witness is not None


def test_distinct_lambda_vectors_are_inequivalent(F2):
    f = poly(F2, {2: 1, 5: 1}, 7)
    g = poly(F2, {2: 1, 5: 1, 7: 1}, 7)
    assert not check_equivalence(f, g, F2, 7).equivalent
    result = check_equivalence(f, g, field_of_degree(2, 2), 7)
    assert not result.equivalent
    assert result.to_dict()['message'] == 'not equivalent over F_4'


def test_engine_normal_form_is_found_by_search(F2):
    f = poly(F2, {2: 1, 4: 1, 5: 1}, 8)
    nf = normal_form(f).series.as_polynomial(7)
    result = check_equivalence(f.jet(7), nf, F2, 7)
    assert result.equivalent
    assert compose(f.jet(7), result.witness).coeffs == nf.coeffs


def test_validation_over_f2(F2):
    report = validate_classification(F2, 5)
    assert report.passed
    assert report.jets_checked > 0
    assert report.invariant_classes == report.orbits


@pytest.mark.slow
@pytest.mark.parametrize('p, deg, d, m', [(2, 1, 7, 2), (3, 1, 4, None), (2, 2, 4, None)])
def test_validation_at_acceptance_scale(p, deg, d, m):
    report = validate_classification(field_of_degree(p, deg), d, m)
    assert report.jets_checked > 0
    if m == p:
        assert report.uniqueness_orbits > 0
