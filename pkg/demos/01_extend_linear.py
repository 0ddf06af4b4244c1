"""Extend the embedding of the `linear` fixture order by order.

The central fiber is a line embedded as the parabola (x, x^2); chart 2 is
rescaled by (1 + t).  At every order we print the size of the glue defect,
the size of the correction that kills it, and confirm the glue equation
holds exactly.
"""
from defembed import load_fixture
from defembed.extension import extend_one_order, init, verify_congruence

spec = load_fixture("linear")
state = init(spec)
print(f"charts {spec.chart_ids}, ambient dimension {spec.ambient_dim}, d = {spec.t_arity}")

while state.order_reached < 3:
    state = extend_one_order(state)
    rec = state.history[-1]
    exact = all(verify_congruence(state).values())
    print(f"order {rec.order}: |defect| = {rec.defect_norm}, |correction| = {rec.split_norm}, "
          f"cocycle {'ok' if rec.cocycle_passed else 'BROKEN'}, glue exact: {exact}")

# the deformed embedding in chart 2, coefficient by coefficient in t
for alpha, vec in state.approximants["2"].sorted_items():
    print(f"  t^{alpha[0]}: {vec}")
