"""Checking that Gaussian translates form a T-system.

A family is a T-system when every collocation matrix at increasing nodes is
nonsingular. The check samples random node sequences and evaluates the
determinants in extended precision. A consistent sign across all of them is
evidence, not proof. A dependent family is caught at once.
"""

import numpy as np

from superres import FunctionFamily, TensorPSF, check_t_system

for sigma in (0.05, 0.1, 0.2):
    for M in (5, 7):
        fam = FunctionFamily.translates(TensorPSF.gaussian(1, M, sigma).components[0])
        rep = check_t_system(fam, trials=100)
        print(f"sigma={sigma:<5} M={M}: pass={rep['pass']} sign={rep['sign']:+.0f} "
              f"smallest normalized det {rep['min_abs_det']:.1e}")

dependent = FunctionFamily([lambda t: np.asarray(t, float), lambda t: 2 * np.asarray(t, float)],
                           ["t", "2t"])
print("\n{t, 2t}: pass =", check_t_system(dependent, trials=20)["pass"])
