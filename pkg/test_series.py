"""
Tests for truncated power series, substitution and bar compression
"""

from functools import reduce

import pytest
from hypothesis import given
from hypothesis import strategies as st

from charp_errors import ParseError, PreconditionError, TruncationError
from charp_field import field_of_degree, prime_field
from charp_series import (CoordChange, Series, apply_elementary, apply_scaling, compose, derivative,
                          from_bar, mul, p_valuation, parse_series, series_from_json, to_bar,
                          transport_change)
from conftest import coord_changes, elements, finite_mu_series, series_with_change

F2 = prime_field(2)


def poly(ctx, terms, trunc):
    return Series.from_terms(ctx, terms, trunc)


def test_p_valuation():
    assert p_valuation(12, 2) == 2
    assert p_valuation(9, 3) == 2
    assert p_valuation(7, 5) == 0
    with pytest.raises(PreconditionError):
        p_valuation(0, 2)


def test_zero_coefficients_are_dropped(F2):
    f = poly(F2, {1: 1, 2: 2, 3: 1}, 5)
    assert f.support() == [1, 3]
    assert f.ord() == 1
    assert Series.zero(F2, 4).is_zero()


def test_coefficient_beyond_trunc(F2):
    with pytest.raises(TruncationError):
        poly(F2, {1: 1}, 3).coeff(4)


def test_square_in_characteristic_two(F2):
    f = poly(F2, {1: 1, 2: 1}, 4)
    assert (f * f).to_text() == 'x^2 + x^4'


def test_monomial_product(F3):
    assert mul(poly(F3, {1: 1}, 5), poly(F3, {2: 1}, 5)).to_text() == 'x^3'


def test_addition_identity(F3):
    f = poly(F3, {2: 1, 4: 2}, 6)
    assert (f + Series.zero(F3, 6)).coeffs == f.coeffs


# ==================== SUBSTITUTION ====================

def test_compose_square(F2):
    phi = CoordChange(poly(F2, {1: 1, 2: 1}, 4))
    assert compose(poly(F2, {2: 1}, 4), phi).to_text() == 'x^2 + x^4'


def test_compose_matches_direct_expansion(F2):
    f = poly(F2, {2: 1, 5: 1}, 10)
    phi_series = poly(F2, {1: 1, 2: 1}, 10)
    result = compose(f, CoordChange(phi_series))
    assert result.to_text() == 'x^2 + x^4 + x^5 + x^6 + x^9 + x^10'
    by_products = reduce(mul, [phi_series] * 2) + reduce(mul, [phi_series] * 5)
    assert result.coeffs == by_products.coeffs


def test_compose_with_identity(F3):
    f = poly(F3, {2: 1, 5: 2}, 8)
    assert compose(f, CoordChange.identity(F3, 8)).coeffs == f.coeffs


def test_coordinate_change_needs_order_one(F2):
    with pytest.raises(PreconditionError):
        CoordChange(poly(F2, {2: 1}, 4))


def test_compose_truncates_at_smaller_order(F2):
    f = poly(F2, {2: 1, 5: 1}, 10)
    phi = CoordChange(poly(F2, {1: 1, 2: 1}, 6))
    assert compose(f, phi).trunc == 6


@given(series_with_change(max_mu=8), st.integers(1, 4), st.data())
def test_elementary_action_matches_compose(pair, l, data):
    f, _ = pair
    ctx = f.ctx
    u = data.draw(elements(ctx))
    phi = Series(ctx, f.trunc, {1: ctx.one, l + 1: u})
    assert apply_elementary(f, u, l).coeffs == compose(f, CoordChange(phi)).coeffs


@given(series_with_change(max_mu=8), st.data())
def test_scaling_matches_compose(pair, data):
    f, _ = pair
    a = data.draw(elements(f.ctx, nonzero=True))
    phi = CoordChange(Series(f.ctx, f.trunc, {1: a}))
    assert apply_scaling(f, a).coeffs == compose(f, phi).coeffs


@given(series_with_change(max_mu=6), st.data())
def test_composition_is_associative(pair, data):
    f, phi = pair
    psi = data.draw(coord_changes(f.ctx, f.trunc))
    assert compose(compose(f, phi), psi).coeffs == compose(f, phi.then(psi)).coeffs


@given(series_with_change(max_mu=6))
def test_inverse_change(pair):
    _, phi = pair
    assert phi.then(phi.inverse()).is_identity()


@given(series_with_change(max_mu=8))
def test_change_preserves_order(pair):
    f, phi = pair
    g = compose(f, phi)
    assert g.ord() == f.ord()
    assert g.coeff(f.ord()) == f.coeff(f.ord()) * phi.linear_coeff() ** f.ord()


@given(series_with_change(max_mu=6))
def test_substitution_commutes_with_pth_power(pair):
    f, phi = pair
    p = f.ctx.p
    assert compose(reduce(mul, [f] * p), phi).coeffs == reduce(mul, [compose(f, phi)] * p).coeffs


# ==================== DERIVATIVE AND BAR ====================

def test_derivative_kills_multiples_of_p(F2, F3):
    assert derivative(poly(F2, {2: 1, 5: 1}, 8)).to_text() == 'x^4'
    assert derivative(poly(F3, {3: 1, 4: 1}, 8)).to_text() == 'x^3'
    assert derivative(poly(F3, {0: 2}, 4)).is_zero()


def test_bar_compression(F2, F3):
    fbar, e = to_bar(poly(F2, {4: 1, 6: 1}, 12))
    assert e == 1 and fbar.to_text() == 'x^2 + x^3' and fbar.trunc == 6
    fbar, e = to_bar(poly(F3, {9: 1}, 18))
    assert e == 2 and fbar.to_text() == 'x'
    f = poly(F2, {3: 1, 4: 1}, 8)
    assert to_bar(f) == (f, 0)


def test_from_bar_inverts_compression(F2):
    f = poly(F2, {4: 1, 6: 1}, 12)
    fbar, e = to_bar(f)
    assert from_bar(fbar, e).coeffs == f.coeffs


def test_transport_over_prime_field(F2):
    psi = CoordChange(poly(F2, {1: 1, 2: 1}, 4))
    chi = transport_change(psi, 1)
    assert chi.to_text() == 'x + x^2'
    square = mul(chi.series, chi.series).jet(4)
    lifted = compose(psi.series, poly(F2, {2: 1}, 8)).jet(4)
    assert square.coeffs == lifted.coeffs == {2: F2.one, 4: F2.one}


def test_transport_takes_frobenius_roots(F4):
    psi = CoordChange(poly(F4, {1: 1, 2: F4.gen}, 4))
    chi = transport_change(psi, 1)
    assert chi.series.coeff(2) == F4.gen + 1
    assert chi.series.coeff(2) ** 2 == F4.gen


def test_transport_level_zero_is_identity(F2):
    psi = CoordChange(poly(F2, {1: 1, 3: 1}, 5))
    assert transport_change(psi, 0) is psi


@pytest.mark.parametrize('e', [0, 1, 2])
def test_transport_truncation(F4, e):
    psi = CoordChange(poly(F4, {1: 1, 2: F4.gen}, 4))
    chi = transport_change(psi, e)
    assert chi.trunc == psi.trunc * 2 ** e
    lifted = from_bar(psi.series, e)
    assert reduce(mul, [chi.series] * 2 ** e).coeffs == lifted.coeffs


# ==================== TEXT FORMS ====================

def test_parse_series(F2, F4):
    f = parse_series('x^2 + x^5', F2)
    assert f.support() == [2, 5] and f.trunc == 5
    g = parse_series('(g+1)*x^3', F4)
    assert g.coeff(3) == F4.gen + 1


@pytest.mark.parametrize('text', ['x^2 + x^2', '', 'x^2 + y', 'x^2 +'])
def test_parse_series_errors(text):
    with pytest.raises(ParseError):
        parse_series(text, F2)


def test_parse_series_respects_trunc(F2):
    with pytest.raises(ParseError):
        parse_series('x^2 + x^9', F2, trunc=8)
    assert parse_series('x^2 + x^5', F2, trunc=9).trunc == 9


def test_series_json_form(F4):
    f = series_from_json('{"terms": [[2, "1"], [5, "g"]], "trunc": 9}', F4)
    assert f.trunc == 9 and f.coeff(5) == F4.gen
    assert f.to_dict() == {'terms': [[2, '1'], [5, 'g']], 'trunc': 9}
    with pytest.raises(ParseError):
        series_from_json('{"terms": [[2, "1"], [2, "g"]]}', F4)


def test_text_renders_constants_and_coefficients():
    ctx = field_of_degree(3, 2)
    f = Series.from_terms(ctx, {0: 2, 2: ctx.gen + 1, 3: 1}, 4)
    assert f.to_text() == '2 + (g+1)*x^2 + x^3'


@given(finite_mu_series(prime_field(3), max_mu=6))
def test_series_text_parses_back(f):
    assert parse_series(f.to_text(), f.ctx, f.trunc).coeffs == f.coeffs
