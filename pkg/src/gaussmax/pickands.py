"""Monte Carlo estimation of Pickands constants.

``H_alpha(lam) = E exp(max_{t in [0, lam]} sqrt(2) B(t) - t**alpha)`` with
``B`` a fractional Brownian motion of Hurst index ``alpha / 2``, and
``H_alpha = lim H_alpha(lam) / lam``.

All windows of a schedule are evaluated on the same paths (prefixes of one
path on ``[0, max(schedule)]``), and the slope of a least-squares line
through ``(lam, H_alpha(lam))`` is reported as the constant.  Because the
slope is linear in the per-window means, its standard error is computed
from the per-replication linear combination, which accounts for the
positive correlation between windows.

The naive estimator has a heavy right tail: ``exp(max)`` gets its mean from
paths whose maximum is of order ``lam``, which a sample of size ``N`` only
reaches for ``lam`` up to about ``log N``.  The default schedules are
therefore short.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from . import streams
from .gpsim import GridSpec, fbm_block

__all__ = [
    "PickandsEstimate",
    "GridDeficiency",
    "default_schedule",
    "default_delta_t",
    "estimate_H_lambda",
    "estimate_H",
    "estimate_delta",
    "grid_constant_bm",
    "EXPONENT_CLIP",
]

EXPONENT_CLIP = 700.0
BLOCK = 2048
Z95 = 1.959963984540054


def default_schedule(alpha: float) -> tuple[float, ...]:
    """``(1, 2, 3)``, shrunk by ``3**(1 - alpha)`` for ``alpha > 1``."""
    scale = 3.0 ** min(0.0, 1.0 - alpha)
    return tuple(scale * k for k in (1.0, 2.0, 3.0))


def default_delta_t(schedule: Sequence[float]) -> float:
    """Largest step ``<= 0.005`` that divides the shortest window."""
    lam0 = min(schedule)
    return lam0 / max(32, math.ceil(lam0 / 0.005 - 1e-9))


@dataclass(frozen=True)
class PickandsEstimate:
    alpha: float
    lambda_schedule: tuple
    H_lambda_values: tuple
    H_lambda_ci: tuple
    H_hat: float
    ci: float
    intercept: float
    grid_step: float
    reps: int
    clip_events: int

    def rows(self):
        return list(zip(self.lambda_schedule, self.H_lambda_values, self.H_lambda_ci))


@dataclass(frozen=True)
class GridDeficiency:
    alpha: float
    a: float
    delta: float
    ci: float
    H_grid: float
    H_hat: float


def _fsum_mean(x: np.ndarray) -> float:
    # exact summation: the estimate does not depend on reduction order
    return math.fsum(x.tolist()) / x.size


def _window_values(alpha: float, schedule: Sequence[float], delta_t: float, reps: int,
                   seed: int, strides: Sequence[int] = (1,)) -> tuple[np.ndarray, int]:
    """``exp(clipped max)`` per (stride, window, replication) plus clip count.

    Window ``lam`` covers the lattice points ``j * delta_t < lam``; with
    ``stride`` only every ``stride``-th of them.
    """
    sched = np.asarray(schedule, dtype=float)
    ends = np.rint(sched / delta_t).astype(int)
    if np.any(np.abs(ends * delta_t - sched) > 1e-9 * np.maximum(sched, 1.0)):
        raise ValueError("every window length must be a multiple of delta_t")
    grid = GridSpec.from_points(max(int(ends[-1]), 2), delta_t)
    drift = grid.times ** alpha
    hurst = alpha / 2.0
    out = np.empty((len(strides), len(sched), reps))
    clips = 0
    for b, lo in enumerate(range(0, reps, BLOCK)):
        cnt = min(BLOCK, reps - lo)
        gen = streams.generator(seed, b, streams.FBM)
        x = fbm_block(hurst, grid, gen, cnt)
        x *= math.sqrt(2.0)
        x -= drift
        for si, stride in enumerate(strides):
            xs = x[:, ::stride]
            prev, run = 0, np.full(cnt, -np.inf)
            for wi, e in enumerate(ends):
                stop = (e - 1) // stride + 1
                if stop > prev:
                    run = np.maximum(run, xs[:, prev:stop].max(axis=1))
                    prev = stop
                clips += int(np.count_nonzero(run > EXPONENT_CLIP))
                out[si, wi, lo:lo + cnt] = np.exp(np.minimum(run, EXPONENT_CLIP))
    return out, clips


def _check_common(alpha, delta_t, reps):
    if not (0.0 < alpha <= 2.0):
        raise ValueError("alpha must lie in (0, 2]")
    if not (delta_t > 0):
        raise ValueError("delta_t must be positive")
    if reps < 1000:
        raise ValueError("reps must be >= 1000")


def estimate_H_lambda(alpha: float, lam: float, delta_t: float, reps: int,
                      seed: int = 0) -> tuple[float, float]:
    """Mean and 95% half-width of ``exp(max sqrt(2) B - t**alpha)`` on ``[0, lam]``.

    The window uses the lattice points ``j * delta_t < lam``.  A window of a
    single step holds only the origin (value exactly 1); ``lam == delta_t``
    is allowed for that limit, otherwise ``delta_t <= lam / 32`` is required.
    """
    _check_common(alpha, delta_t, reps)
    if not (lam > 0):
        raise ValueError("lam must be positive")
    if delta_t > lam / 32 and not math.isclose(delta_t, lam):
        raise ValueError("delta_t must not exceed lam / 32")
    vals, _ = _window_values(alpha, [lam], delta_t, reps, seed)
    v = vals[0, 0]
    return _fsum_mean(v), Z95 * float(v.std(ddof=1)) / math.sqrt(reps)


def _slope_weights(sched: np.ndarray) -> np.ndarray:
    d = sched - sched.mean()
    return d / float(d @ d)


def estimate_H(alpha: float, lambda_schedule: Optional[Sequence[float]] = None,
               delta_t: Optional[float] = None, reps: int = 2_000_000,
               seed: int = 0) -> PickandsEstimate:
    """Slope estimate of the Pickands constant over a window schedule."""
    sched = tuple(float(s) for s in (lambda_schedule or default_schedule(alpha)))
    if len(sched) < 3 or any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be increasing with at least 3 windows")
    if delta_t is None:
        delta_t = default_delta_t(sched)
    _check_common(alpha, delta_t, reps)
    vals, clips = _window_values(alpha, sched, delta_t, reps, seed)
    return _summarise(alpha, sched, delta_t, reps, vals[0], clips)


def _summarise(alpha, sched, delta_t, reps, v, clips) -> PickandsEstimate:
    means = np.array([_fsum_mean(row) for row in v])
    half = Z95 * v.std(axis=1, ddof=1) / math.sqrt(reps)
    c = _slope_weights(np.asarray(sched))
    per_rep = c @ v
    slope = float(c @ means)
    slope_ci = Z95 * float(per_rep.std(ddof=1)) / math.sqrt(reps)
    intercept = float(means.mean() - slope * np.mean(sched))
    return PickandsEstimate(alpha, sched, tuple(means.tolist()), tuple(half.tolist()),
                            slope, slope_ci, intercept, delta_t, reps, clips)


def estimate_delta(alpha: float, a: float, lam: float = 3.0, reps: int = 200_000,
                   seed: int = 0, delta_t: float = 0.005) -> GridDeficiency:
    """Grid deficiency ``1 - H_grid(a) / H_alpha`` for maximisation on ``{j a}``.

    Both constants come from the same paths (schedule ``lam * (1/3, 2/3, 1)``
    on a fine grid of step ``delta_t``); the coarse one keeps every
    ``round(a / delta_t)``-th point.  Sharing paths makes the two estimates
    positively correlated, so their ratio is much sharper than either.
    """
    _check_common(alpha, delta_t, reps)
    if not (a > 0):
        raise ValueError("a must be positive")
    stride = max(1, int(round(a / delta_t)))
    sched = tuple(lam * k / 3.0 for k in (1, 2, 3))
    vals, _ = _window_values(alpha, sched, delta_t, reps, seed, strides=(1, stride))
    c = _slope_weights(np.asarray(sched))
    fine, coarse = c @ vals[0], c @ vals[1]
    H_f, H_g = _fsum_mean(fine), _fsum_mean(coarse)
    ratio = H_g / H_f
    resid = coarse - ratio * fine
    se = float(resid.std(ddof=1)) / (math.sqrt(reps) * abs(H_f))
    return GridDeficiency(alpha, stride * delta_t, 1.0 - ratio, Z95 * se, H_g, H_f)


def grid_constant_bm(a: float) -> float:
    """Exact grid Pickands constant for ``alpha = 1`` on the lattice ``a Z``.

    For Brownian motion with drift the lattice constant has the closed form
    ``exp(-2 sum_k Psi(sqrt(k a / 2)) / k) / a``; it increases to 1 as
    ``a -> 0`` and serves as an oracle for :func:`estimate_delta`.
    """
    if not (a >= 1e-4):
        raise ValueError("a must be >= 1e-4")
    # Psi(sqrt(k a / 2)) < exp(-k a / 4); stop where the tail is below 1e-19
    k = np.arange(1, int(math.ceil(4.0 * 45.0 / a)) + 2, dtype=float)
    psi = 0.5 * special.erfc(np.sqrt(k * a / 2.0) / math.sqrt(2.0))
    return math.exp(-2.0 * math.fsum((psi / k).tolist())) / a
