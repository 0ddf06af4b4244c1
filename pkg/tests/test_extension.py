from dataclasses import replace
from fractions import Fraction

import pytest
import sympy

from defembed.cech import ObstructionError, cocycle_check
from defembed.extension import (
    ExtensionError,
    compute_defect,
    extend_one_order,
    glue_residual,
    immersion_spot_check,
    init,
    run_to_order,
    verify_congruence,
)
from defembed.series import ZPoly, congruent_mod, homogeneous_part, compose_ambient, compose_fiber

from conftest import glue_exprs, global_order_one_solve, poly_expr, series_exprs, tsyms, zsyms


@pytest.mark.parametrize("name", ["trivial", "linear"])
def test_init_is_seed(specs, name):
    spec = specs[name]
    state = init(spec)
    assert state.order_reached == 0
    for j in spec.chart_ids:
        assert state.approximants[j].coefficient(state.approximants[j].zero_index) == \
            spec.embedding_seed[j]
    assert all(verify_congruence(state).values())


def test_corrupted_seed_rejected(specs):
    spec = specs["linear"]
    seed = dict(spec.embedding_seed)
    seed["1"] = (seed["1"][0] + 1, seed["1"][1])
    with pytest.raises(ExtensionError, match="incompatible"):
        init(replace(spec, embedding_seed=seed))


def test_trivial_has_no_deformation(specs, runs):
    state = run_to_order(specs["trivial"], 4)
    for rec in state.history:
        assert rec.defect.is_zero() and rec.split.is_zero()
    for j in state.spec.chart_ids:
        assert state.deformation_part(j).is_zero()


def test_linear_defect_by_hand(specs):
    spec = specs["linear"]
    zs, ts = zsyms(1), tsyms(1)
    psi = compute_defect(init(spec))
    assert psi.degree == 1
    for j, k in spec.pairs():
        i_j = [poly_expr(p, zs) for p in spec.embedding_seed[j]]
        i_k = [poly_expr(p, zs) for p in spec.embedding_seed[k]]
        want = glue_exprs(spec, j, k, i_j, i_k, zs, ts, 1)
        got = series_exprs(psi.values[(j, k)], zs, ts)
        assert [sympy.expand(a - b) for a, b in zip(got, want)] == [0, 0]
    # chart 2 is z2 = (1 + t) x - 1/2, so z1 = x moves by -t x to first order
    z = ZPoly.var(0, 1)
    assert psi.values[("2", "1")].coefficient((1,)) == (-z, -(z * z).scale(2) - z.scale(Fraction(1, 2)))


def test_order_one_matches_global_solve(specs, runs):
    spec = specs["linear"]
    state = run_to_order(spec, 1)
    for j, k in spec.pairs():
        assert glue_residual(spec, state.approximants, j, k, 1).is_zero()
    oracle = global_order_one_solve(spec, state.history[0].ansatz_degree)
    assert oracle is not None
    assert all(e == 0 for res in oracle.values() for e in res)


@pytest.mark.parametrize("name", ["trivial", "linear", "threechart"])
def test_order_invariant(specs, runs, name):
    spec, state = specs[name], runs[name]
    for j, k in spec.pairs():
        lhs = compose_ambient(spec.h_for(j, k), state.approximants[k])
        rhs = compose_fiber(state.approximants[j], spec.fiber_transitions[(j, k)].with_order(3))
        assert congruent_mod(lhs, rhs, 3)


@pytest.mark.parametrize("name", ["linear", "threechart"])
def test_defects_homogeneous_and_closed(specs, runs, name):
    state = runs[name]
    for rec in state.history:
        for f in rec.defect.values.values():
            assert {sum(a) for a in f.coeffs} <= {rec.order}
        assert rec.cocycle_passed
        assert cocycle_check(rec.defect, state.twist, state.spec).passed


def test_low_orders_never_change(specs):
    spec = specs["threechart"]
    state = init(spec)
    seen = []
    for _ in range(3):
        state = extend_one_order(state)
        seen.append({j: f for j, f in state.approximants.items()})
    for m, snap in enumerate(seen, start=1):
        for j, f in snap.items():
            for d in range(m + 1):
                assert homogeneous_part(f, d) == homogeneous_part(state.approximants[j], d).with_order(m)


def test_runs_are_deterministic(specs, runs):
    again = run_to_order(specs["linear"], 3)
    for j in again.spec.chart_ids:
        assert again.approximants[j] == runs["linear"].approximants[j]


@pytest.mark.parametrize("order", [1, 2])
def test_obstructed_stops_at_order_one(specs, order):
    with pytest.raises(ObstructionError) as info:
        run_to_order(specs["obstructed"], order)
    assert info.value.obstruction.order == 1


def test_order_beyond_data_is_refused(specs):
    with pytest.raises(ValueError):
        run_to_order(specs["linear"], 5)


def test_immersion_checks(specs, runs):
    seed_state = init(specs["linear"])
    assert immersion_spot_check(seed_state, [0]).status == "OK"
    report = immersion_spot_check(runs["linear"], [Fraction(1, 1000)])
    assert report.status == "OK"
    assert sum(1 for e in report.entries if "rank" in e) == 10
    bad = immersion_spot_check(init(specs["degenerate-seed"]), [0])
    assert bad.status == "WARN"
    assert any("rank 0" in w for w in bad.warnings)
