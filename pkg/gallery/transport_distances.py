"""Balanced and generalized Wasserstein distances between atomic measures.

The generalized distance lets mass be discarded at unit cost on each side, so
it compares measures of different total mass. Moving mass further than 2 (in
the l1 ground cost) is never worth it.
"""

from superres import AtomicMeasure, generalized_wasserstein, wasserstein

a = AtomicMeasure([[0.0], [1.0]], [1.0, 1.0])
b = AtomicMeasure([[0.25], [0.5]], [1.0, 1.0])
value, plan = wasserstein(a, b)
print(f"balanced distance {value:.3f}")
print(plan.dense())

heavy = AtomicMeasure([[0.3, 0.3]], [2.0])
light = AtomicMeasure([[0.4, 0.5]], [0.5])
value, plan, discarded = generalized_wasserstein(heavy, light)
print(f"\nunequal masses: distance {value:.3f}, moved {plan.total:.2f}, "
      f"discarded {discarded}")

corner = AtomicMeasure([[0.0, 0.0, 0.0]], [1.0])
opposite = AtomicMeasure([[1.0, 1.0, 1.0]], [1.0])
value, plan, discarded = generalized_wasserstein(corner, opposite)
print(f"opposite corners (ground cost 3): distance {value:.1f}, moved {plan.total}")
