"""Correlation-function families for stationary Gaussian processes.

Three closed-form families are shipped, all with local behaviour
``1 - r(t) ~ |t|**alpha`` at the origin:

* ``weak``: ``exp(-|t|**alpha)``, Berman condition ``r(t) log t -> 0``.
* ``b1``: ``max(1 - t**alpha, r / log(e + t))``, so ``r(t) log t -> r``.
* ``b2``: ``max(1 - t**alpha, log(e**4 + t)**-0.5)``, so ``r(t) log t -> inf``.

The strongly dependent families are pointwise maxima of convex,
nonincreasing functions that equal 1 at 0 (local branch) or stay below 1
(tail branch) and vanish at infinity, which makes them valid correlation
functions by Polya's criterion for ``alpha <= 1``.

User correlations can be supplied as a uniform-lag table (CSV ``lag,value``)
or as a callable.
"""
from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "CorrelationModel",
    "RegimeReport",
    "PolyaReport",
    "make_weak",
    "make_b1",
    "make_b2",
    "from_table",
    "from_function",
    "load_table_csv",
    "residual_correlation",
    "regime_diagnostics",
    "validate_polya",
    "BERMAN",
    "STRONG_FINITE",
    "STRONG_INFINITE",
    "UNDETERMINED",
]

BERMAN = "Berman(A3)"
STRONG_FINITE = "StrongFinite(B1)"
STRONG_INFINITE = "StrongInfinite(B2)"
UNDETERMINED = "Undetermined"

# additive constant inside the B2 tail branch; must exceed e**4 - 1/2 so the
# tail branch stays below 1/2 at the origin and the local branch wins near 0
B2_LOG_SHIFT = math.exp(4.0)

TABLE_LAG0_TOL = 1e-12
CONVEXITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CorrelationModel:
    """A stationary correlation function ``r(t)`` with its declared structure.

    Instances are immutable; build them with :func:`make_weak`,
    :func:`make_b1`, :func:`make_b2`, :func:`from_table` or
    :func:`from_function`.
    """

    alpha: float
    family: str
    r_target: float = 0.0
    local_coeff: float = 1.0
    lags: Optional[np.ndarray] = field(default=None, repr=False)
    values: Optional[np.ndarray] = field(default=None, repr=False)
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    name: str = ""

    def eval(self, t):
        """Correlation at lag(s) ``t`` (scalar or array, negative lags mirrored)."""
        scalar = np.ndim(t) == 0
        t = np.abs(np.asarray(t, dtype=float))
        if self.family == "weak":
            out = np.exp(-(t ** self.alpha))
        elif self.family == "b1":
            with np.errstate(divide="ignore"):
                out = np.maximum(1.0 - t ** self.alpha, self.r_target / np.log(math.e + t))
        elif self.family == "b2":
            out = np.maximum(1.0 - t ** self.alpha, np.log(B2_LOG_SHIFT + t) ** -0.5)
        elif self.family == "table":
            out = np.interp(t, self.lags, self.values)
        elif self.family == "function":
            out = np.asarray(self.func(t), dtype=float)
        else:  # pragma: no cover - guarded by constructors
            raise ValueError(f"unknown family {self.family!r}")
        # r(0) = 1 exactly, independent of round-off in the branches
        out = np.where(t == 0.0, 1.0, out)
        return float(out) if scalar else out

    __call__ = eval

    @property
    def regime(self) -> str:
        """Regime the family was constructed to have."""
        return {
            "weak": BERMAN,
            "b1": STRONG_FINITE,
            "b2": STRONG_INFINITE,
        }.get(self.family, UNDETERMINED)

    def key(self) -> str:
        """Stable hex digest identifying the correlation function."""
        h = hashlib.sha256()
        h.update(f"{self.family}|{self.alpha!r}|{self.r_target!r}|{self.local_coeff!r}".encode())
        if self.family == "table":
            h.update(np.ascontiguousarray(self.lags, dtype="<f8").tobytes())
            h.update(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        elif self.family == "function":
            h.update(self.name.encode() or repr(self.func).encode())
        return h.hexdigest()[:16]

    def describe(self) -> dict:
        d = {"family": self.family, "alpha": self.alpha}
        if self.family == "b1":
            d["r"] = self.r_target
        if self.name:
            d["name"] = self.name
        return d


def _check_alpha(alpha: float, upper: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= upper):
        raise ValueError(f"alpha must lie in (0, {upper:g}], got {alpha!r}")
    return alpha


def make_weak(alpha: float) -> CorrelationModel:
    """Weakly dependent family ``r(t) = exp(-|t|**alpha)``, ``alpha in (0, 2]``."""
    return CorrelationModel(alpha=_check_alpha(alpha, 2.0), family="weak")


def make_b1(alpha: float, r: float) -> CorrelationModel:
    """Strongly dependent family with ``r(t) log t -> r``.

    Only ``alpha in (0, 1]`` is accepted: the construction relies on
    convexity of ``1 - t**alpha``. ``r`` must lie in ``(0, 1)``.
    """
    alpha = _check_alpha(alpha, 1.0)
    r = float(r)
    if not (0.0 < r < 1.0):
        raise ValueError(f"r must lie in (0, 1), got {r!r}")
    return CorrelationModel(alpha=alpha, family="b1", r_target=r)


def make_b2(alpha: float) -> CorrelationModel:
    """Strongly dependent family with ``r(t) log t -> inf`` (monotonically)."""
    return CorrelationModel(alpha=_check_alpha(alpha, 1.0), family="b2")


def from_table(lags: Sequence[float], values: Sequence[float], alpha: float = 1.0,
               name: str = "") -> CorrelationModel:
    """Wrap a correlation table sampled at uniform lags starting at 0.

    Between lags the table is linearly interpolated; beyond the last lag the
    last value is held constant.
    """
    lags = np.array(lags, dtype=float)
    values = np.array(values, dtype=float)
    if lags.ndim != 1 or lags.shape != values.shape or lags.size < 2:
        raise ValueError("table needs matching 1-d lag and value columns with >= 2 rows")
    if lags[0] != 0.0:
        raise ValueError("table must start at lag 0")
    steps = np.diff(lags)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("table lags must be uniformly spaced and increasing")
    if abs(values[0] - 1.0) > TABLE_LAG0_TOL:
        raise ValueError(f"table value at lag 0 must be 1, got {values[0]!r}")
    if np.any(~np.isfinite(values)) or np.any(np.abs(values) > 1.0 + 1e-12):
        raise ValueError("table values must be finite and bounded by 1 in magnitude")
    lags.setflags(write=False)
    values.setflags(write=False)
    return CorrelationModel(alpha=_check_alpha(alpha, 2.0), family="table",
                            lags=lags, values=values, name=name)


def from_function(func: Callable[[np.ndarray], np.ndarray], alpha: float = 1.0,
                  name: str = "") -> CorrelationModel:
    """Wrap an arbitrary vectorised callable ``func(t)`` as a correlation model."""
    return CorrelationModel(alpha=_check_alpha(alpha, 2.0), family="function",
                            func=func, name=name)


def load_table_csv(path, alpha: float = 1.0) -> CorrelationModel:
    """Read a ``lag,value`` CSV (header required) into a table model."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header != ["lag", "value"]:
            raise ValueError(f"{path}: expected header 'lag,value', got {','.join(header)!r}")
        rows = [(float(a), float(b)) for a, b in reader if a.strip()]
    lags, values = zip(*rows)
    return from_table(lags, values, alpha=alpha, name=path.stem)


def residual_correlation(model: CorrelationModel, t, T: float):
    """Correlation ``(r(t) - r(T)) / (1 - r(T))`` of the residual process.

    This is the correlation left after removing the shared component
    ``r(T)**0.5 * W`` from a process with correlation ``r`` on ``[0, T]``.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > T):
        raise ValueError("residual correlation needs 0 <= t <= T")
    rT = model.eval(T)
    if rT >= 1.0:
        raise ValueError("r(T) must be < 1")
    return (model.eval(t) - rT) / (1.0 - rT)


@dataclass(frozen=True)
class RegimeReport:
    limit_estimate: float
    classification: str
    probe_values: tuple  # ((t, r(t) log t), ...)


def classify_probes(probe_values: Sequence[tuple]) -> tuple[float, str]:
    """Classify a probe sequence of ``(t, r(t) log t)`` pairs.

    Uses the last three probes: mean ``< 0.01`` is Berman; mean ``> 10``,
    or strictly increasing with log-log growth exponent ``>= 0.25``, is
    StrongInfinite; relative spread ``< 10%`` is StrongFinite.
    """
    tail = list(probe_values)[-3:]
    ts = np.array([p[0] for p in tail])
    vs = np.array([p[1] for p in tail])
    limit = float(vs.mean())
    if limit < 0.01:
        return limit, BERMAN
    increasing = bool(np.all(np.diff(vs) > 0))
    growth = 0.0
    if increasing and vs[0] > 0:
        growth = math.log(vs[-1] / vs[0]) / math.log(math.log(ts[-1]) / math.log(ts[0]))
    if increasing and (limit > 10.0 or growth >= 0.25):
        return limit, STRONG_INFINITE
    if (vs.max() - vs.min()) / abs(limit) < 0.10:
        return limit, STRONG_FINITE
    return limit, UNDETERMINED


def regime_diagnostics(model: CorrelationModel, t_max: float = 1e8,
                       n_probes: int = 24) -> RegimeReport:
    """Probe ``r(t) log t`` on a geometric grid in ``[10, t_max]`` and classify."""
    if t_max <= 10:
        raise ValueError("t_max must exceed 10")
    if n_probes < 3:
        raise ValueError("need at least 3 probes")
    ts = np.geomspace(10.0, t_max, n_probes)
    vals = model.eval(ts) * np.log(ts)
    probes = tuple((float(a), float(b)) for a, b in zip(ts, vals))
    limit, cls = classify_probes(probes)
    return RegimeReport(limit_estimate=limit, classification=cls, probe_values=probes)


@dataclass(frozen=True)
class PolyaReport:
    passed: bool
    is_correlation: bool
    status: str  # "polya", "not-polya", "not-a-correlation"
    reason: str = ""
    first_violation_lag: Optional[float] = None


def validate_polya(model: CorrelationModel, grid_step: float, t_max: float,
                   tail_tol: float = 0.5, psd_points: int = 512) -> PolyaReport:
    """Check Polya's sufficient conditions for ``model`` on a uniform grid.

    Polya's limit-zero condition cannot be verified on a finite grid; it is
    approximated by ``r(t_max) <= tail_tol``.  The strongly dependent families
    decay logarithmically, hence the loose default.

    The report separates functions that fail Polya's criterion but are still
    positive semidefinite on the grid (e.g. the Gaussian correlation, concave
    at the origin) from tables that are not correlations at all.
    """
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    n = int(math.floor(t_max / grid_step + 1e-9)) + 1
    lags = np.arange(n) * grid_step
    r = model.eval(lags)

    is_corr = bool(abs(r[0] - 1.0) <= TABLE_LAG0_TOL and np.all(np.abs(r) <= 1.0 + 1e-12))
    if is_corr:
        from scipy.linalg import toeplitz
        k = min(n, psd_points)
        min_eig = float(np.linalg.eigvalsh(toeplitz(r[:k]))[0])
        is_corr = min_eig >= -1e-8
    if not is_corr:
        return PolyaReport(False, False, "not-a-correlation",
                           "r(0) != 1, |r| > 1 or Toeplitz matrix not PSD on the grid")

    d1 = np.diff(r)
    bad = np.nonzero(d1 > CONVEXITY_TOL)[0]
    if bad.size:
        return PolyaReport(False, True, "not-polya", "not nonincreasing",
                           float(lags[bad[0] + 1]))
    d2 = np.diff(r, 2)
    bad = np.nonzero(d2 < -CONVEXITY_TOL)[0]
    if bad.size:
        return PolyaReport(False, True, "not-polya", "not convex",
                           float(lags[bad[0] + 1]))
    if r[-1] > tail_tol:
        return PolyaReport(False, True, "not-polya",
                           f"r(t_max) = {r[-1]:.3g} not near 0", float(lags[-1]))
    return PolyaReport(True, True, "polya")
