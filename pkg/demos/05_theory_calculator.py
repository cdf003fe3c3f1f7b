"""Evaluate the finite-sample recovery constants as the sample size grows.

The sampling-error level shrinks with n; once it is small enough both
sample-size conditions hold and an admissible threshold window opens.
"""

from fundiff.theory import TheoryInputs, check_conditions

base = dict(p=30, M=2, s=2, beta=1.5, sigma_max=0.5, lambda_min_star=2.0, delta_l1=12.0, nu=1e-3, tau=2.0)
for n in (10**4, 10**6, 10**8, 10**10):
    out = check_conditions(TheoryInputs(n=n, **base))
    c = out["constants"]
    window = "none" if c["window"] is None else f"({c['window'][0]:.3f}, {c['window'][1]:.3f})"
    print(f"n = {n:>12d}: delta {c['delta']:.2e}, lambda_n {c['lambda_n']:.2e}, "
          f"conditions hold: {out['all']}, threshold window {window}")
