# coding: utf-8

# # Strong dependence: the half-normal limit
#
# When r(t) log t diverges the maximum is dominated by a single shared
# Gaussian level.  Writing X = (1 - r(T))^{1/2} Y + r(T)^{1/2} W with Y
# weakly dependent, the normalised maximum
# r(T)^{-1/2} (max |X| - (1 - r(T))^{1/2} b_T) tends to |W|.

# In[1]:

import numpy as np

from gaussmax import covmodels as cm, maxstats as ms

b2 = cm.make_b2(1.0)
for T in (1e2, 1e3, 1e4):
    print(f"T = {T:8.0f}: r(T) = {b2.eval(T):.4f}, r(T) log T = {b2.eval(T) * np.log(T):.3f}")


# The convergence is slow.  The Y part contributes a term of order
# ((1 - r) / r)^{1/2} / b_T, which shrinks only like a power of log T.
# Over the horizons a desk can reach the median of the normalised maximum
# stays near 0.9, well above the |W| median 0.6745, and KS stays near 0.15.

# In[2]:

for T in (1e2, 1e3, 1e4):
    cfg = ms.ExperimentConfig(theorem="T22-halfnormal", model=b2, T=T, reps=400, seed=0,
                              backend="decomposition")
    rep = ms.run_experiment(cfg)
    print(f"T = {T:8.0f}: KS on x > 0 = {rep.ks:.4f}, median = {rep.extras['median']:.3f}, "
          f"share <= 0 = {rep.extras['fraction_nonpositive']:.3f}")
