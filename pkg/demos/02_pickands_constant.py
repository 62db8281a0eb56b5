# coding: utf-8

# # Pickands constants and grid deficiency
#
# H_alpha is the limit of E exp(max over [0, lambda] of sqrt(2) B(t) - t^alpha)
# divided by lambda, with B a fractional Brownian motion of index alpha / 2.
# The estimator regresses the window means on lambda, which cancels the
# boundary constant.

# In[1]:

import math

from gaussmax import pickands

for alpha, truth in ((1.0, 1.0), (2.0, 1 / math.sqrt(math.pi))):
    est = pickands.estimate_H(alpha, reps=200_000, seed=0)
    print(f"alpha = {alpha}: H_hat = {est.H_hat:.4f} +- {est.ci:.4f} (classical {truth:.4f})")
    for lam, h, ci in est.rows():
        print(f"    lambda = {lam:.3f}  E[...] = {h:.4f} +- {ci:.4f}")


# Maxima over a lattice of step a see a smaller constant.  For alpha = 1
# the lattice constant has a closed form, so the Monte Carlo deficiency can
# be checked exactly.  The reference is the fine simulation grid itself.

# In[2]:

fine = pickands.grid_constant_bm(0.005)
for a in (0.05, 0.25, 0.4):
    d = pickands.estimate_delta(1.0, a, reps=100_000, seed=0)
    exact = 1 - pickands.grid_constant_bm(a) / fine
    print(f"a = {a}: delta MC = {d.delta:.4f} +- {d.ci:.4f}, lattice ratio = {exact:.4f}, "
          f"deficiency against the continuum = {1 - pickands.grid_constant_bm(a):.4f}")


# The experiments use the lattice constant of their own grid in the
# normalisers, since maxima over a grid of step a b_T^-2 obey the lattice
# intensity.
