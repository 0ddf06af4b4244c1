"""Sparse polynomials and truncated series, checked against sympy."""
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from defembed.series import (
    StructureError,
    TruncatedSeries,
    ZPoly,
    compose_ambient,
    compose_fiber,
    congruent_mod,
    first_difference,
    homogeneous_part,
    jacobian_at_center,
    parse_rational,
    format_rational,
    series_from_json,
    series_to_json,
    tail_from,
)

from conftest import expr_to_series, poly_expr, series_exprs, truncate_expr, tsyms, zsyms

F = Fraction

small_q = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def polys(nvars=2, max_exp=2):
    mono = st.tuples(*[st.integers(0, max_exp)] * nvars)
    return st.dictionaries(mono, small_q, max_size=4).map(lambda t: ZPoly(nvars, t))


def series(d=2, order=3, dim=2, nz=2):
    idx = st.tuples(*[st.integers(0, 2)] * d).filter(lambda a: sum(a) <= order)
    vec = st.tuples(*[polys(nz)] * dim)
    return st.dictionaries(idx, vec, max_size=3).map(
        lambda c: TruncatedSeries(d, order, dim, nz, c))


# -- ZPoly --------------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_zpoly_ring_laws(p, q, r):
    assert (p + q) + r == p + (q + r)
    assert p + q == q + p
    assert (p * q) * r == p * (q * r)
    assert p * q == q * p
    assert p * (q + r) == p * q + p * r
    assert p - p == ZPoly.zero(2)


@settings(max_examples=40, deadline=None)
@given(polys(), polys())
def test_zpoly_product_matches_sympy(p, q):
    zs = zsyms(2)
    assert sympy.expand(poly_expr(p * q, zs) - poly_expr(p, zs) * poly_expr(q, zs)) == 0


def test_zpoly_compose_and_diff():
    zs = zsyms(2)
    x, y = ZPoly.var(0, 2), ZPoly.var(1, 2)
    p = x * x * y + x.scale(F(1, 2)) + 3
    args = (x + y, x * y - 1)
    got = poly_expr(p.compose(args), zs)
    want = poly_expr(p, zs).subs({zs[0]: zs[0] + zs[1], zs[1]: zs[0] * zs[1] - 1},
                                 simultaneous=True)
    assert sympy.expand(got - want) == 0
    assert p.diff(0) == (x * y).scale(2) + F(1, 2)
    assert p.evaluate((F(1), F(2))) == F(2) + F(1, 2) + 3


def test_zero_normalization():
    p = ZPoly(1, {(1,): 1, (2,): 0})
    assert p.terms == {(1,): F(1)}
    assert (p - p).terms == {}


def test_rational_parsing():
    assert parse_rational("3/6") == F(1, 2)
    assert parse_rational("-4") == F(-4)
    assert format_rational(F(-1, 2)) == "-1/2"
    assert format_rational(F(3)) == "3/1"
    with pytest.raises(ValueError):
        parse_rational("1/-2")
    with pytest.raises(ValueError):
        parse_rational("1/0")


# -- TruncatedSeries -----------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(series(), series(), series())
def test_series_additive_laws(f, g, h):
    zero = TruncatedSeries.zero(2, 3, 2, 2)
    assert f + zero == f
    assert (f + g) + h == f + (g + h)
    assert f + g == g + f
    assert f + (-f) == zero


@settings(max_examples=30, deadline=None)
@given(series(dim=1), series(dim=1), series(dim=1))
def test_scalar_series_ring_laws(f, g, h):
    assert f.mul_scalar(g) == g.mul_scalar(f)
    assert f.mul_scalar(g).mul_scalar(h) == f.mul_scalar(g.mul_scalar(h))
    assert f.mul_scalar(g + h) == f.mul_scalar(g) + f.mul_scalar(h)


def test_sum_of_equal_terms():
    z = ZPoly.var(0, 1)
    f = TruncatedSeries(1, 2, 1, 1, {(1,): (z,)})
    assert (f + f).coefficient((1,)) == (z.scale(2),)


def test_truncation_rejects_high_terms():
    with pytest.raises(StructureError):
        TruncatedSeries(1, 1, 1, 1, {(2,): (ZPoly.constant(1, 1),)})


def test_compose_ambient_identity_and_binomial():
    c = F(3, 5)
    f = TruncatedSeries(1, 1, 1, 1, {(0,): (ZPoly.constant(c, 1),), (1,): (ZPoly.constant(1, 1),)})
    w = ZPoly.var(0, 1)
    assert compose_ambient((w,), f) == f
    sq = compose_ambient((w * w,), f)
    assert sq.coefficient((0,)) == (ZPoly.constant(c * c, 1),)
    assert sq.coefficient((1,)) == (ZPoly.constant(2 * c, 1),)


@settings(max_examples=25, deadline=None)
@given(series(d=2, order=3, dim=2, nz=1))
def test_compose_ambient_matches_brute_force(f):
    zs, ts = zsyms(1), tsyms(2)
    w0, w1 = ZPoly.var(0, 2), ZPoly.var(1, 2)
    h = (w0 * w1 + w1.scale(F(1, 3)), w0 * w0 - w1 + 2)
    got = series_exprs(compose_ambient(h, f), zs, ts)
    fe = series_exprs(f, zs, ts)
    want = [fe[0] * fe[1] + fe[1] / 3, fe[0] ** 2 - fe[1] + 2]
    for a, b in zip(got, want):
        assert sympy.expand(a - truncate_expr(b, ts, 3)) == 0


def test_compose_ambient_associates_with_polynomial_composition():
    w0, w1 = ZPoly.var(0, 2), ZPoly.var(1, 2)
    h1 = (w0 + w1 * w1, w1.scale(2))
    h2 = (w0 * w1, w0 - 1)
    both = tuple(p.compose(h2) for p in h1)
    z = ZPoly.var(0, 1)
    f = TruncatedSeries(1, 3, 2, 1, {(0,): (z, z * z), (1,): (ZPoly.constant(1, 1), z),
                                      (2,): (z, ZPoly.zero(1))})
    assert compose_ambient(both, f) == compose_ambient(h1, compose_ambient(h2, f))


def test_compose_fiber_identity_and_projection():
    zs = ZPoly.var(0, 2), ZPoly.var(1, 2)
    f = TruncatedSeries(1, 2, 1, 2, {(0,): (zs[0] * zs[1],), (1,): (zs[1],)})
    ident = TruncatedSeries.constant(zs, 1, 2)
    assert compose_fiber(f, ident) == f
    g = TruncatedSeries(1, 2, 2, 2, {(0,): (zs[0] + 1, zs[1]), (1,): (zs[1], ZPoly.zero(2))})
    proj = TruncatedSeries.constant((zs[0],), 1, 2)
    first = compose_fiber(proj, g)
    assert first.coeffs == {a: (v[0],) for a, v in g.coeffs.items() if v[0]}


def test_compose_fiber_affine_by_hand():
    # f = 2z + t, g = z + 3t - 1: f(g, t) = 2z - 2 + 7t
    z = ZPoly.var(0, 1)
    one = ZPoly.constant(1, 1)
    f = TruncatedSeries(1, 1, 1, 1, {(0,): (z.scale(2),), (1,): (one,)})
    g = TruncatedSeries(1, 1, 1, 1, {(0,): (z - 1,), (1,): (one.scale(3),)})
    out = compose_fiber(f, g)
    assert out.coefficient((0,)) == (z.scale(2) - 2,)
    assert out.coefficient((1,)) == (one.scale(7),)


@settings(max_examples=20, deadline=None)
@given(series(d=1, order=3, dim=1, nz=2), series(d=1, order=3, dim=2, nz=2))
def test_compose_fiber_matches_sympy(f, g):
    zs, ts = zsyms(2), tsyms(1)
    fe = series_exprs(f, zs, ts)[0]
    ge = series_exprs(g, zs, ts)
    want = truncate_expr(fe.subs({zs[0]: ge[0], zs[1]: ge[1]}, simultaneous=True), ts, 3)
    got = series_exprs(compose_fiber(f, g), zs, ts)[0]
    assert sympy.expand(got - want) == 0


def test_expr_round_trip_helper():
    zs, ts = zsyms(1), tsyms(1)
    e = [zs[0] ** 2 * ts[0] + sympy.Rational(1, 3)]
    f = expr_to_series(e, zs, ts, 2)
    assert sympy.expand(series_exprs(f, zs, ts)[0] - e[0]) == 0


@settings(max_examples=40, deadline=None)
@given(series())
def test_homogeneous_parts_partition(f):
    parts = [homogeneous_part(f, m) for m in range(f.order + 1)]
    total = TruncatedSeries.zero(2, 3, 2, 2)
    for m, part in enumerate(parts):
        assert all(sum(a) == m for a in part.coeffs)
        total = total + part
    assert total == f
    assert tail_from(f, 2) == parts[2] + parts[3]


@settings(max_examples=40, deadline=None)
@given(series(), series(), st.integers(0, 3))
def test_congruence_is_vanishing_of_low_slices(a, b, m):
    diff = a - b
    expected = all(homogeneous_part(diff, j).is_zero() for j in range(m + 1))
    assert congruent_mod(a, b, m) is expected
    assert (first_difference(a, b, m) is None) is expected


def test_congruence_boundaries():
    z = ZPoly.var(0, 1)
    f = TruncatedSeries(1, 3, 1, 1, {(0,): (z,), (1,): (z * z,)})
    assert congruent_mod(f, f, 3)
    assert congruent_mod(f, f + TruncatedSeries(1, 3, 1, 1, {(3,): (z,)}), 2)
    assert not congruent_mod(f, f + TruncatedSeries(1, 3, 1, 1, {(2,): (ZPoly.constant(1, 1),)}), 2)


def test_jacobian_at_center():
    w0, w1 = ZPoly.var(0, 2), ZPoly.var(1, 2)
    z = ZPoly.var(0, 1)
    one = ZPoly.constant(1, 1)
    assert jacobian_at_center((w0, w1), (z, z * z)) == [[one, ZPoly.zero(1)], [ZPoly.zero(1), one]]
    lin = (w0.scale(2) + w1, w1.scale(-1))
    assert jacobian_at_center(lin, (z * z, z)) == [[one.scale(2), one], [ZPoly.zero(1), -one]]
    assert jacobian_at_center((w0 * w1, w1), (z, one)) == [[one, z], [ZPoly.zero(1), one]]


@settings(max_examples=30, deadline=None)
@given(series())
def test_series_json_round_trip(f):
    doc = series_to_json(f)
    assert series_from_json(doc) == f
    assert series_to_json(series_from_json(doc)) == doc


def test_series_json_rejects_negative_denominator():
    doc = {"t_arity": 1, "order": 1, "codomain_dim": 1, "z_arity": 1,
           "terms": [[[0], [[[[1], "1/-2"]]]]]}
    with pytest.raises(ValueError):
        series_from_json(doc)
