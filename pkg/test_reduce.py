"""
Tests for the elimination engine, normal forms and jet matching
"""

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from charp_errors import PreconditionError, TruncationError
from charp_field import field_of_degree, prime_field, search_additive_root
from charp_profile import CaseTag, profile_of_series
from charp_reduce import determinacy_bound, eliminate_at, match_jets, normal_form, prenormal, reduce_monomial
from charp_series import CoordChange, Series, compose, unify
from conftest import PRIMES, coord_changes, elements, finite_mu_series


def poly(ctx, terms, trunc):
    return Series.from_terms(ctx, terms, trunc)


def same(f, g):
    a, b = unify(f, g)
    return a.coeffs == b.coeffs


# ==================== ELIMINATION STEPS ====================

def test_eliminate_quartic_term(F2):
    h = poly(F2, {2: 1, 4: 1, 5: 1}, 10)
    step, out = eliminate_at(h, 4, {2, 5, 7})
    assert (step.t, step.l) == (4, 1)
    assert step.u == 1
    assert step.terms == {1: F2.one}
    assert out.to_text() == 'x^2 + x^5 + x^6 + x^8 + x^9 + x^10'
    assert out.coeffs == compose(h, CoordChange(poly(F2, {1: 1, 2: 1}, 10))).coeffs


def test_elimination_extends_to_f4(F2):
    h = poly(F2, {2: 1, 5: 1, 7: 1, 8: 1}, 10)
    step, out = eliminate_at(h, 8, {2, 5, 7})
    assert step.l == 3
    assert step.terms == {1: F2.one, 0: F2.one}
    assert step.ctx.deg == 2
    u = step.u
    assert u * u + u + 1 == step.ctx.zero
    # the same root turns up by exhaustive search over F_4
    found = search_additive_root({1: step.ctx.one, 0: step.ctx.one}, step.ctx.one)
    assert found == u
    assert out.coeff(8) == step.ctx.zero
    phi = CoordChange(Series(step.ctx, 10, {1: step.ctx.one, 4: u}))
    assert same(out, compose(h, phi))


def test_zero_target_is_a_noop(F2):
    h = poly(F2, {2: 1, 5: 1}, 8)
    step, out = eliminate_at(h, 4, {2, 5})
    assert step.is_noop and out is h


def test_target_inside_keep_set(F2):
    with pytest.raises(PreconditionError):
        eliminate_at(poly(F2, {2: 1, 5: 1}, 8), 5, {2, 5})


def test_target_beyond_trunc(F2):
    with pytest.raises(TruncationError):
        eliminate_at(poly(F2, {2: 1, 5: 1}, 8), 9, {2})


# ==================== MONOMIALS AND PRE-NORMAL FORMS ====================

def test_monomialization(F2):
    f = poly(F2, {3: 1, 5: 1}, 8)
    h, phi = reduce_monomial(f)
    assert h.support() == [3]
    assert compose(f, phi).coeffs == h.coeffs


def test_monomial_is_fixed(F3):
    f = poly(F3, {4: 1}, 8)
    h, phi = reduce_monomial(f)
    assert h.coeffs == f.coeffs and phi.is_identity()


def test_monomialization_needs_matching_valuation(F2):
    with pytest.raises(PreconditionError):
        reduce_monomial(poly(F2, {4: 1, 6: 1}, 12))


def test_prenormal_small(F2):
    g, phi = prenormal(poly(F2, {2: 1, 3: 1}, 4))
    assert set(g.support()) <= {2, 3, 4}


def test_prenormal_stays_in_lambda_bar(F2):
    g, _ = prenormal(poly(F2, {2: 1, 4: 1, 5: 1}, 8))
    assert set(g.support()) <= {2, 4, 5, 6, 8}


# ==================== NORMAL FORMS ====================

def test_normal_form_already_normal(F2):
    result = normal_form(poly(F2, {2: 1, 5: 1, 7: 1}, 9))
    assert result.m == 2
    assert result.lambdas == {5: F2.one, 7: F2.one}
    assert result.phi.is_identity()
    assert result.case_tag == CaseTag.CASE1


def test_normal_form_with_two_eliminations(F2):
    f = poly(F2, {2: 1, 4: 1, 5: 1}, 8)
    result = normal_form(f)
    assert result.series.to_text() == 'x^2 + x^5 + x^7'
    assert [(s.t, s.l) for s in result.steps] == [(4, 1), (6, 2)]
    assert result.guarantee_order == 7
    assert same(compose(f.as_polynomial(9), result.phi).jet(7), result.series)
    assert result.to_dict()['lambda'] == {'5': '1', '7': '1'}


def test_normal_form_case0(F2):
    result = normal_form(poly(F2, {3: 1, 4: 1}, 4))
    assert result.case_tag == CaseTag.CASE0
    assert result.series.to_text() == 'x^3'
    assert result.lambdas == {}


def test_normal_form_through_bar_compression(F2):
    result = normal_form(poly(F2, {4: 1, 6: 1}, 12))
    assert (result.m, result.e, result.guarantee_order) == (4, 1, 6)
    assert result.series.to_text() == 'x^4 + x^6'
    assert list(result.lambdas) == [6]


def test_leading_coefficient_normalized(F3):
    f = poly(F3, {3: 2, 4: 1}, 6)
    result = normal_form(f)
    assert result.leading == 1
    assert result.lambdas == {4: F3.one}
    assert same(compose(f, result.phi).jet(result.guarantee_order), result.series)


def test_leading_coefficient_kept_without_root(F4):
    result = normal_form(Series.from_terms(F4, {3: F4.gen}, 4))
    assert result.leading == F4.gen
    assert result.ctx == F4
    assert result.to_dict()['leading'] == 'g'


def test_constant_term_is_carried(F2):
    result = normal_form(poly(F2, {0: 1, 2: 1, 5: 1, 7: 1}, 9))
    assert result.constant == 1
    assert result.to_dict()['constant'] == '1'
    assert result.series.coeff(0) == 1


def test_normal_form_rejects_degenerate_input(F2):
    with pytest.raises(PreconditionError):
        normal_form(Series.zero(F2, 4))
    with pytest.raises(PreconditionError):
        normal_form(poly(F2, {0: 1}, 4))


def test_normal_form_needs_dbar(F2):
    with pytest.raises(TruncationError):
        normal_form(poly(F2, {2: 1, 5: 1}, 7))


@given(st.data())
def test_witness_reproduces_normal_form(data):
    ctx = prime_field(data.draw(PRIMES))
    f = data.draw(finite_mu_series(ctx, max_mu=8))
    prof = profile_of_series(f)
    result = normal_form(f)
    assert same(compose(f, result.phi).jet(result.guarantee_order), result.series)
    assert set(result.series.support()) <= {prof.m, *prof.lambda_set}
    if prof.lambda_set:
        assert result.lambdas[prof.q]


@given(st.data())
def test_normal_form_is_invariant_under_changes(data):
    ctx = prime_field(data.draw(PRIMES))
    f = data.draw(finite_mu_series(ctx, max_mu=8))
    phi = data.draw(coord_changes(ctx, f.trunc))
    g = compose(f, phi)
    assert profile_of_series(g).basic() == profile_of_series(f).basic()
    assert normal_form(g).m == normal_form(f).m


def test_normal_form_over_support_4_10_17(F2):
    # #Lambda = 9 here, one more than floor(17/2)
    f = poly(F2, {4: 1, 10: 1, 17: 1, 18: 1, 22: 1}, 31)
    result = normal_form(f)
    assert result.case_tag == CaseTag.CASE4
    assert sorted(result.lambdas) == [8, 10, 12, 16, 17, 19, 20, 21, 23]
    assert [(s.t, s.l) for s in result.steps] == [(18, 4), (22, 5)]
    assert result.series.to_text() == 'x^4 + x^10 + x^17 + x^21'
    assert same(compose(f, result.phi).jet(23), result.series)


@given(st.data())
def test_normal_form_is_idempotent(data):
    ctx = prime_field(data.draw(PRIMES))
    f = data.draw(finite_mu_series(ctx, max_mu=8))
    first = normal_form(f)
    assume(first.leading == 1)
    again = normal_form(first.series.as_polynomial(profile_of_series(f).dbar + 1))
    assert again.steps == []
    assert again.phi.is_identity()
    assert same(again.series, first.series)


@given(st.data())
def test_tail_beyond_dbar_leaves_normal_form(data):
    ctx = prime_field(data.draw(PRIMES))
    f = data.draw(finite_mu_series(ctx, max_mu=8))
    top = f.trunc + 4
    tail = {n: data.draw(elements(ctx)) for n in range(f.trunc + 1, top + 1)}
    g = f.as_polynomial(top) + Series(ctx, top, tail)
    assert normal_form(g).lambda_vector() == normal_form(f).lambda_vector()


@given(st.data())
def test_witness_over_extension_bases(data):
    ctx = data.draw(st.sampled_from([field_of_degree(2, 2), field_of_degree(3, 2)]))
    f = data.draw(finite_mu_series(ctx, max_mu=6))
    prof = profile_of_series(f)
    result = normal_form(f)
    assert same(compose(f, result.phi).jet(result.guarantee_order), result.series)
    assert set(result.series.support()) <= {prof.m, *prof.lambda_set}


# ==================== DETERMINACY ====================

@pytest.mark.parametrize('terms, order', [({2: 1, 5: 1}, 7), ({3: 1}, 3)])
def test_determinacy_bound(F2, terms, order):
    bound = determinacy_bound(poly(F2, terms, 9))
    assert bound.order == order and not bound.infinite_mu


def test_determinacy_marker_for_infinite_mu(F2):
    assert determinacy_bound(poly(F2, {4: 1}, 5)).to_dict() == {'d': 4, 'infinite_mu': True, 'e': 2}


def test_match_identical_series(F2):
    f = poly(F2, {2: 1, 5: 1, 7: 1}, 9)
    assert match_jets(f, f).is_identity()


def test_match_forces_extension(F2):
    f = poly(F2, {2: 1, 5: 1, 7: 1}, 9)
    g = poly(F2, {2: 1, 5: 1, 7: 1, 8: 1}, 9)
    phi = match_jets(f, g)
    assert phi.ctx.deg == 2
    assert phi.linear_coeff() == 1
    assert same(compose(f, phi).jet(8), g.jet(8))


def test_match_in_bar_coordinates(F2):
    f = poly(F2, {4: 1, 6: 1}, 16)
    g = poly(F2, {4: 1, 6: 1, 14: 1}, 16)
    phi = match_jets(f, g)
    assert same(compose(f, phi).jet(8), g.jet(8))


def test_match_needs_common_d_jet(F2):
    with pytest.raises(PreconditionError):
        match_jets(poly(F2, {2: 1, 5: 1}, 9), poly(F2, {2: 1, 3: 1, 5: 1}, 9))


@given(st.data())
def test_tails_above_d_are_absorbed(data):
    ctx = prime_field(data.draw(PRIMES))
    f = data.draw(finite_mu_series(ctx, max_mu=8))
    d = profile_of_series(f).d
    tail = {n: data.draw(elements(ctx)) for n in range(d + 1, f.trunc + 1)}
    g = f + Series(ctx, f.trunc, tail)
    phi = match_jets(f, g)
    dbar = profile_of_series(f).dbar
    assert same(compose(f, phi).jet(dbar), g.jet(dbar))
