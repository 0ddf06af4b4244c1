from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defembed.majorant import (
    CanonicalA,
    Majorant,
    auto_parameters,
    certify,
    defect_bound_check,
    dominates,
    estimate_constants,
    geometric_decay_check,
    power_bound_check,
)
from defembed.series import TruncatedSeries, ZPoly

F = Fraction


def test_canonical_coefficients():
    A = CanonicalA(1, 32)
    assert A.coefficient(0) == 0
    assert A.coefficient(1) == F(1, 16)
    assert A.coefficient(3) == F(1, 512) * 32 ** 3 / 9
    with pytest.raises(ValueError):
        CanonicalA(0, 1)
    with pytest.raises(ValueError):
        Majorant((1, -1))


def test_dominates_basic():
    zero = TruncatedSeries.zero(1, 2, 1, 1)
    assert dominates(zero, Majorant((0, 0, 0)))
    two_t = TruncatedSeries(1, 2, 1, 1, {(1,): (ZPoly.constant(2, 1),)})
    assert not dominates(two_t, Majorant((0, 1, 0)))
    assert dominates(two_t, Majorant((0, 2, 0)))


def test_multinomial_weighting():
    # t1 t2 carries weight 2 under (t1 + t2)^2
    f = TruncatedSeries(2, 2, 1, 1, {(1, 1): (ZPoly.constant(2, 1),)})
    assert dominates(f, Majorant((0, 0, 1)))
    assert not dominates(f, Majorant((0, 0, F(99, 100))))


def _scalar(coeffs):
    return TruncatedSeries(1, len(coeffs) - 1, 1, 1,
                           {(n,): (ZPoly(1, {(0,): c}),) for n, c in enumerate(coeffs)})


@settings(max_examples=50, deadline=None)
@given(st.lists(st.fractions(-5, 5, max_denominator=6), min_size=4, max_size=4),
       st.lists(st.fractions(-5, 5, max_denominator=6), min_size=4, max_size=4))
def test_dominance_closed_under_sum_and_product(xs, ys):
    f, g = _scalar(xs), _scalar(ys)
    a = Majorant(tuple(abs(x) for x in xs))
    b = Majorant(tuple(abs(y) for y in ys))
    assert dominates(f, a) and dominates(g, b)
    assert dominates(f + g, a + b)
    assert dominates(f.mul_scalar(g), a * b)


@pytest.mark.parametrize("b", [32, 64, 96])
def test_power_bound_hand_coefficient(b):
    # with a = 1: (A^2)_2 = (a/(16b))^2 b^2 = 1/256 and (a/b) A_2 = (a/b)(a/(16b)) b^2/4 = 1/64
    A = CanonicalA(1, b)
    sq = A.majorant(2) ** 2
    assert sq[2] == F(1, 256)
    assert F(1, b) * A.coefficient(2) == F(1, 64)
    assert sq[2] <= F(1, b) * A.coefficient(2)


@pytest.mark.parametrize("gamma,a,b,M", [(2, 1, 32, 20), (3, 1, 64, 12), (4, 3, 96, 10)])
def test_power_bound(gamma, a, b, M):
    assert power_bound_check(CanonicalA(a, b), gamma, M)


def test_power_bound_needs_gamma_at_least_two():
    with pytest.raises(ValueError):
        power_bound_check(CanonicalA(1, 32), 1, 5)


def test_constants_on_fixtures(specs):
    triv = estimate_constants(specs["trivial"], 1, 64, F(1, 3))
    assert triv.c0 == 2 and triv.mu == 0 and triv.c1 == 1
    obs = estimate_constants(specs["obstructed"], 1, 64, F(1, 8))
    assert obs.c0 == 2
    lin = estimate_constants(specs["linear"], 1, 64, F(1, 100))
    assert lin.c3 == 2 * lin.c0 * (2 * lin.c1 ** 2 * 4 * F(1, 64)
                                   + 1 / (1 - lin.mu / lin.delta) - 1)


def test_linear_constants_from_raw_sums(specs):
    spec = specs["linear"]
    rho = F(1, 100)
    led = estimate_constants(spec, 1, 64, rho)
    # ambient change B->A is w0 + 1/4, w1 + w0/2: largest Jacobian entry sum is 1
    assert led.c0 == 2
    mu = F(0)
    for pair, g in spec.fiber_transitions.items():
        total = sum(rho ** sum(a) * sum(abs(c) for c in v[0].terms.values())
                    for a, v in g.coeffs.items() if sum(a))
        mu = max(mu, total)
    assert led.mu == mu
    # g21(z, 0) = z + 1/2 and the h entries stay within 1 per coefficient
    assert led.c1 == 1


def test_mu_flag_and_monotonicity(specs):
    spec = specs["obstructed"]
    big = estimate_constants(spec, 1, 64, 1)
    assert big.mu >= big.delta and big.flags and big.c3 is None
    mus = [estimate_constants(spec, 1, 64, F(1, 2 ** k)).mu for k in range(2, 8)]
    assert mus == sorted(mus, reverse=True)


def test_defect_bounds_trivial(specs, runs):
    state = runs["trivial"]
    led = estimate_constants(specs["trivial"], 1, 64, F(1, 128))
    rep = defect_bound_check(state, led, CanonicalA(1, 64))
    assert rep.passed
    assert all(v == 0 for v in rep.c4_required.values())


def test_defect_bounds_name_violated_side_condition(specs, runs):
    led = estimate_constants(specs["linear"], 1, 1, F(1, 100))
    rep = defect_bound_check(runs["linear"], led, CanonicalA(1, 1))
    assert not rep.passed
    assert rep.side_condition["name"] == "b > 2*c1*(r+n)*a"
    assert not rep.side_condition["holds"]


def test_auto_parameters_linear(specs, runs):
    state = runs["linear"]
    a, b = auto_parameters(specs["linear"], state)
    first = max(p.norm1() for j in state.spec.chart_ids
                for alpha, v in state.approximants[j].coeffs.items() if sum(alpha) == 1 for p in v)
    assert a == 32 * first
    assert b == 16 * 2 * 1 * 4 * a


def test_certify_trivial(specs, runs):
    cert = certify(specs["trivial"], runs["trivial"], 1, 64, F(1, 128))
    assert cert.certified
    assert cert.epsilon0 == F(1, 128)
    cert = certify(specs["trivial"], runs["trivial"], 1, 64, F(1, 2))
    assert cert.epsilon0 == F(1, 128)


def test_certify_linear_and_decay(specs, runs):
    spec, state = specs["linear"], runs["linear"]
    a, b = auto_parameters(spec, state)
    cert = certify(spec, state, a, b, F(1, 100))
    assert cert.certified and cert.epsilon0 > 0
    assert cert.decay["passed"]
    assert all(c["holds"] for c in cert.conditions)
    for probe in cert.probes:
        if probe <= cert.epsilon0:
            led = estimate_constants(spec, a, b, probe)
            assert all(c["holds"] for c in led.conditions())
    smaller = certify(spec, state, a, b, cert.epsilon0 / 2)
    assert smaller.certified


def test_certify_rejects_bad_parameters(specs, runs):
    cert = certify(specs["linear"], runs["linear"], 1, 1, F(1, 100))
    assert cert.verdict == "UNCERTIFIABLE"
    assert "b > 2*c1*(r+n)*a" in cert.failed


def test_decay_check_fails_when_radius_too_big(runs):
    out = geometric_decay_check(runs["linear"], 64, F(1))
    assert not out["passed"]


def test_certificate_serializes_exact_values(specs, runs):
    doc = certify(specs["trivial"], runs["trivial"], 1, 64, F(1, 128)).to_dict()
    assert doc["verdict"] == "CERTIFIED"
    assert doc["conditions"][1]["lhs"] == "1/8"  # 4*2*1*1*1/64
    assert "dominance conditions only" in doc["note"]
