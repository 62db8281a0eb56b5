"""Limit distributions, normalising constants and exceedance intensities.

Laws evaluated here:

* ``gumbel``: ``exp(-exp(-x))``, maxima of ``X``;
* ``gumbel-abs``: ``exp(-2 exp(-x))``, maxima of ``|X|`` (weak dependence);
* ``mixed-gumbel``: ``E exp(-(exp(s W) + exp(-s W)) exp(-(x + r)))`` with
  ``s = sqrt(2 r)``, maxima of ``|X|`` under ``r(t) log t -> r``;
* ``half-normal``: ``2 Phi(x) - 1``, the strongly dependent limit when
  ``r(t) log t -> inf``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "Normalizers",
    "LimitLaw",
    "NoSolution",
    "std_normal_survival",
    "log_std_normal_survival",
    "mu",
    "normalizers",
    "solve_threshold",
    "gumbel_cdf",
    "gumbel_abs_cdf",
    "lambda_r_cdf",
    "lambda_r_one_sided_cdf",
    "half_normal_cdf",
    "pickands_constant",
    "H1",
    "H2",
]

# classical values of the Pickands constant
H1 = 1.0
H2 = 1.0 / math.sqrt(math.pi)

UNDERFLOW = 1e-300
DEFAULT_QUAD_ORDER = 64
_SQRT2 = math.sqrt(2.0)


class NoSolution(ValueError):
    """No threshold solves ``T mu(u) = theta`` on the decreasing branch."""


def _flush(p):
    return np.where(p < UNDERFLOW, 0.0, p)


def std_normal_survival(u):
    """``P(N(0,1) > u)`` computed as ``erfc(u / sqrt 2) / 2``."""
    u = np.asarray(u, dtype=float)
    out = _flush(0.5 * special.erfc(u / _SQRT2))
    return float(out) if out.ndim == 0 else out


def log_std_normal_survival(u):
    return special.log_ndtr(-np.asarray(u, dtype=float))


def pickands_constant(alpha: float) -> float:
    """Classical closed-form Pickands constant (``alpha`` in {1, 2} only)."""
    if alpha == 1.0:
        return H1
    if alpha == 2.0:
        return H2
    raise ValueError(f"no closed form for H_alpha at alpha={alpha!r}; supply an estimate")


def _check_mu_args(alpha, H_alpha):
    if not (0.0 < alpha <= 2.0):
        raise ValueError("alpha must lie in (0, 2]")
    if not (H_alpha > 0.0):
        raise ValueError("H_alpha must be positive")


def mu(u, alpha: float, H_alpha: float):
    """Exceedance intensity ``H_alpha * u**(2/alpha) * Psi(u)`` per unit time."""
    _check_mu_args(alpha, H_alpha)
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0):
        raise ValueError("u must be positive")
    logm = math.log(H_alpha) + (2.0 / alpha) * np.log(u_arr) + log_std_normal_survival(u_arr)
    out = _flush(np.exp(logm))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Normalizers:
    a_T: float
    b_T: float
    T: float
    alpha: float
    H_alpha: float

    def normalize(self, maxima):
        return self.a_T * (np.asarray(maxima, dtype=float) - self.b_T)

    def denormalize(self, x):
        return np.asarray(x, dtype=float) / self.a_T + self.b_T


def normalizers(T: float, alpha: float, H_alpha: float) -> Normalizers:
    """Gumbel normalisation ``a_T = sqrt(2 log T)`` and the matching ``b_T``."""
    if not (T > 1.0):
        raise ValueError("T must exceed 1")
    _check_mu_args(alpha, H_alpha)
    L = 2.0 * math.log(T)
    a = math.sqrt(L)
    inner = H_alpha * (2.0 * math.pi) ** -0.5 * L ** (-0.5 + 1.0 / alpha)
    b = a + math.log(inner) / a
    if not math.isfinite(b):
        raise ValueError("b_T is not finite for these inputs")
    return Normalizers(a, b, T, alpha, H_alpha)


def solve_threshold(T: float, theta: float, alpha: float, H_alpha: float,
                    rtol: float = 1e-10) -> float:
    """Solve ``T * mu(u) = theta`` by bisection on ``[sqrt(2/alpha) + 1, 50]``.

    On that bracket ``u**(2/alpha) Psi(u)`` is strictly decreasing, so the
    root is unique.
    """
    if not (T > 1.0):
        raise ValueError("T must exceed 1")
    if not (theta > 0.0) or not math.isfinite(theta):
        raise ValueError("theta must be positive and finite")
    _check_mu_args(alpha, H_alpha)
    log_target = math.log(theta) - math.log(T) - math.log(H_alpha)

    def g(u):
        return (2.0 / alpha) * math.log(u) + float(log_std_normal_survival(u)) - log_target

    lo, hi = math.sqrt(2.0 / alpha) + 1.0, 50.0
    if g(lo) < 0:
        raise NoSolution(f"theta={theta!r} exceeds T*mu at the left bracket u={lo:.4g}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    u = 0.5 * (lo + hi)
    resid = abs(T * mu(u, alpha, H_alpha) - theta)
    if resid > rtol * theta:
        raise NoSolution(f"bisection stalled: |T mu(u) - theta| = {resid:.3e}")
    return u


def gumbel_cdf(x):
    out = np.exp(-np.exp(-np.asarray(x, dtype=float)))
    return float(out) if out.ndim == 0 else out


def gumbel_abs_cdf(x):
    out = np.exp(-2.0 * np.exp(-np.asarray(x, dtype=float)))
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=8)
def _hermgauss(order: int):
    y, w = np.polynomial.hermite.hermgauss(order)
    y.setflags(write=False)
    w.setflags(write=False)
    return y, w


def lambda_r_cdf(x, r: float, quad_order: int = DEFAULT_QUAD_ORDER):
    """Mixed Gumbel law ``E[Lambda(x + r) ** (exp(sW) + exp(-sW))]``, ``s = sqrt(2r)``.

    Gauss-Hermite quadrature in ``W``.  The nodes are rescaled per ``x``:
    with ``c = exp(-(x + r))`` the integrand behaves like
    ``exp(-z**2 (1 + 2 c s**2) / 2)`` near the origin, so ``W = sqrt(2) sigma y``
    with ``sigma = min(1 / sqrt(1 + 2 c s**2), 1/2)``; the cap keeps nodes
    inside the steep flank that ``cosh(s W)`` produces when ``c`` is small.
    ``r = 0`` returns ``exp(-2 exp(-x))`` exactly.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if quad_order < 16:
        raise ValueError("quad_order must be >= 16")
    xa = np.asarray(x, dtype=float)
    if r == 0.0:
        return gumbel_abs_cdf(xa)
    y, w = _hermgauss(int(quad_order))
    s = math.sqrt(2.0 * r)
    c = np.exp(-(xa[..., None] + r))
    sigma = np.minimum(1.0 / np.sqrt(1.0 + 2.0 * c * s * s), 0.5)
    z = _SQRT2 * sigma * y
    with np.errstate(over="ignore"):
        cosh_term = np.exp(s * z) + np.exp(-s * z)
        log_f = y * y - 0.5 * z * z - c * cosh_term
    f = np.exp(log_f) * sigma / math.sqrt(math.pi)
    out = np.clip(np.sum(w * f, axis=-1), 0.0, 1.0)
    out = _flush(out)
    return float(out) if out.ndim == 0 else out


def lambda_r_one_sided_cdf(x, r: float, quad_order: int = DEFAULT_QUAD_ORDER):
    """One-sided counterpart ``E Lambda(x + r - sqrt(2r) W)`` (maxima of ``X``)."""
    if r < 0:
        raise ValueError("r must be >= 0")
    xa = np.asarray(x, dtype=float)
    if r == 0.0:
        return gumbel_cdf(xa)
    y, w = _hermgauss(int(quad_order))
    s = math.sqrt(2.0 * r)
    vals = np.exp(-np.exp(-(xa[..., None] + r - s * _SQRT2 * y)))
    out = np.sum(w * vals, axis=-1) / math.sqrt(math.pi)
    return float(out) if out.ndim == 0 else out


def half_normal_cdf(x):
    """``2 Phi(x) - 1``, the law of ``|W|``; defined for ``x >= 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("half-normal CDF is defined for x >= 0")
    out = special.erf(xa / _SQRT2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LimitLaw:
    """An evaluable limit CDF.

    ``kind`` is one of ``gumbel``, ``gumbel-abs``, ``mixed-gumbel`` (needs
    ``r``), ``mixed-gumbel-one-sided`` (needs ``r``) or ``half-normal``.
    """

    kind: str
    r: float = 0.0
    quad_order: int = DEFAULT_QUAD_ORDER

    KINDS = ("gumbel", "gumbel-abs", "mixed-gumbel", "mixed-gumbel-one-sided", "half-normal")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown law {self.kind!r}; expected one of {self.KINDS}")
        if self.r < 0:
            raise ValueError("r must be >= 0")

    def cdf(self, x):
        if self.kind == "gumbel":
            return gumbel_cdf(x)
        if self.kind == "gumbel-abs":
            return gumbel_abs_cdf(x)
        if self.kind == "mixed-gumbel":
            return lambda_r_cdf(x, self.r, self.quad_order)
        if self.kind == "mixed-gumbel-one-sided":
            return lambda_r_one_sided_cdf(x, self.r, self.quad_order)
        # half-normal: zero mass below the origin
        xa = np.asarray(x, dtype=float)
        out = np.where(xa > 0, special.erf(np.maximum(xa, 0.0) / _SQRT2), 0.0)
        return float(out) if out.ndim == 0 else out

    __call__ = cdf

    @property
    def support_lower(self) -> float:
        return 0.0 if self.kind == "half-normal" else -math.inf
