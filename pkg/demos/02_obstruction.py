"""A cover whose first-order defect cannot be split.

Three charts are glued around a cycle and the last chart change is a
translation by t.  No triple overlap exists, so going around the cycle
picks up a nonzero class and the splitting system is inconsistent.
"""
from defembed import ObstructionError, load_fixture, run_to_order

spec = load_fixture("obstructed")
try:
    run_to_order(spec, 2)
except ObstructionError as exc:
    obs = exc.obstruction
    print(f"obstructed at order {obs.order}: rank {obs.rank} vs augmented {obs.rank_augmented}")
    print(f"squared least-squares residual {obs.residual_norm2}, pairs {obs.offending_pairs}")
    for entry in obs.residual:
        print("  ", entry)
