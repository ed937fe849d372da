"""Building and checking dual certificates for a two-atom measure.

A certificate is a sum of products of one-dimensional Gaussian combinations.
The noiseless certificate vanishes exactly at the atoms and is positive
elsewhere. The away certificate stays above a fixed floor once the point is
more than eps from every atom. Near certificates take prescribed signs on
each atom.
"""

import numpy as np

from superres import TensorPSF, build_away_Q, build_near_family, build_noiseless_Q

theta = np.array([[19, 44], [44, 19]]) / 63
eps = 0.1

noiseless = build_noiseless_Q(TensorPSF.gaussian(2, 5, 0.1), theta, verify_n=1024,
                              eps0=2 / 64)
rep = noiseless.report
print("noiseless certificate")
print(f"  min on 1024^2 grid      {rep['grid_min']:.2e}")
print(f"  value at the atoms      {np.abs(noiseless.evaluate(theta)).max():.2e}")
print(f"  min Q / max Q off atoms {rep['min_off_support_ratio']:.2e}")

psf = TensorPSF.gaussian(2, 6, 0.1)
away = build_away_Q(psf, theta, eps, verify_n=512)
print("\naway certificate")
print(f"  floor g_bar             {away.constants['g_bar']}")
print(f"  coefficient norm        {away.b_norm:.2f}")
print(f"  verified                {away.report['pass']}")

near = build_near_family(psf, theta, eps, verify_n=512, waive_t_star=True)
print("\nnear certificates, one per sign pattern")
for pattern, cert in sorted(near.items(), reverse=True):
    label = "".join("+" if s > 0 else "-" for s in pattern)
    c = cert.constants
    print(f"  {label}: alpha={c['alpha']:.4f} q_max={c['q_max']:.4f} "
          f"norm={cert.b_norm:.2f} verified={cert.report['pass']}")
