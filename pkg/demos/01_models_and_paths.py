# coding: utf-8

# # Correlation models and exact path simulation
#
# Three families cover the dependence regimes: a weakly dependent one,
# r(t) = exp(-t^alpha), and two strongly dependent ones whose tails decay
# like r / log t (B1) or slower than 1 / log t (B2).

# In[1]:

import numpy as np

from gaussmax import covmodels as cm, gpsim
from gaussmax.gpsim import GridSpec
from gaussmax.streams import RngStream

models = [cm.make_weak(1.0), cm.make_b1(1.0, 0.5), cm.make_b2(1.0)]
for m in models:
    print(m.describe())


# The regime is read off from r(t) log t at geometrically spaced lags.

# In[2]:

for m in models:
    rep = cm.regime_diagnostics(m)
    print(f"{m.family:5s} {rep.classification:20s} limit estimate {rep.limit_estimate:.3f}")


# B1 and B2 are convex and nonincreasing, so Polya's criterion certifies them.

# In[3]:

for m in models[1:]:
    print(m.family, cm.validate_polya(m, 0.25, 1e4).status)


# Circulant embedding gives exact paths in O(n log n).  One FFT yields two
# independent paths, so replications come in pairs.

# In[4]:

grid = GridSpec(20.0, 0.05)
emb = gpsim.build_embedding(models[0], grid)
path = gpsim.sample_path(emb, RngStream(master_seed=1, replication=0))
print(f"n = {grid.n}, embedding size m = {emb.m}, max |X| = {gpsim.path_max(path):.3f}")


# The sample covariance over many paths matches r(|t_i - t_j|).

# In[5]:

small = GridSpec.from_points(32, 0.1)
x = gpsim.sample_paths(gpsim.build_embedding(models[0], small), seed=2, count=20_000)
S = x.T @ x / x.shape[0]
t = small.times
R = models[0].eval(np.abs(t[:, None] - t[None, :]))
z = np.abs(S - R) / np.sqrt((1 + R ** 2) / x.shape[0])
print(f"largest deviation in standard errors: {z.max():.2f}")


# The Cholesky backend is the dense reference; maxima from both backends
# agree in distribution.

# In[6]:

from scipy import stats

a = gpsim.sample_paths(gpsim.build_embedding(models[0], small), 3, 5000).max(axis=1)
b = gpsim.cholesky_paths(models[0], small, 3, 5000).max(axis=1)
print(stats.ks_2samp(a, b))
