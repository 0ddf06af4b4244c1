"""Check the majorant conditions for `linear` and `threechart`.

a is taken as twice the smallest value making the first-order part
dominated, b is chosen from the side conditions, and the probe radius is
halved until the displacement condition holds.
"""
from fractions import Fraction

from defembed import load_fixture, run_to_order
from defembed.majorant import auto_parameters, certify

for name in ("linear", "threechart"):
    spec = load_fixture(name)
    state = run_to_order(spec, 3)
    a, b = auto_parameters(spec, state)
    cert = certify(spec, state, a, b, Fraction(1, 100))
    led = cert.ledger
    print(f"{name}: {cert.verdict}  epsilon0 = {cert.epsilon0} (~{float(cert.epsilon0):.3g})")
    print(f"  c0={led.c0} c1={led.c1} c3~{float(led.c3):.4f} c4={led.c4} mu~{float(led.mu):.4g}")
    for c in cert.conditions:
        print(f"  {c['name']}: {float(c['lhs']):.4g} vs {float(c['rhs']):.4g} -> {c['holds']}")
    print(f"  geometric decay at epsilon0/2: {cert.decay['passed']}")

bad = certify(spec, state, 1, 1, Fraction(1, 100))
print(f"{name} with a = b = 1: {bad.verdict}, failed: {bad.failed}")
