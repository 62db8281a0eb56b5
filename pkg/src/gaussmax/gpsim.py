"""Exact simulation of stationary Gaussian paths on uniform grids.

The workhorse is circulant embedding: the Toeplitz covariance of ``n`` grid
points is embedded in a circulant matrix of order ``m`` (a power of two,
``m >= 2(n - 1)``) whose eigenvalues are the DFT of its first row.  One
complex FFT of ``sqrt(eigenvalues / m) * (Z1 + i Z2)`` yields two independent
exact paths (real and imaginary parts), consumed as replications ``2k`` and
``2k + 1``.

Also here: a dense Cholesky oracle for small grids, fractional Brownian
motion via cumulated fractional Gaussian noise, and the block comparison
process used to decouple strongly dependent processes.
"""
from __future__ import annotations

import functools
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.fft
import scipy.linalg

from . import streams
from .covmodels import CorrelationModel
from .streams import RngStream

__all__ = [
    "GridSpec",
    "Embedding",
    "SamplePath",
    "EmbeddingFailure",
    "FactorizationFailure",
    "build_embedding",
    "sample_path",
    "sample_paths",
    "path_extremes",
    "cholesky_path",
    "sample_fbm",
    "fbm_paths",
    "fbm_block",
    "sample_comparison_path",
    "comparison_blocks",
    "comparison_layout",
    "path_max",
    "write_path_csv",
    "save_embedding",
    "load_embedding",
    "EmbeddingCache",
    "TOL_EIG",
    "MAX_ORDER",
]

TOL_EIG = 1e-8
MAX_ORDER = 2 ** 26
CHOLESKY_MAX_N = 2048

EMBEDDING_MAGIC = b"GMXEMB\x00\x01"
EMBEDDING_VERSION = 1


class EmbeddingFailure(RuntimeError):
    """Circulant embedding stayed indefinite up to the padding cap."""


class FactorizationFailure(RuntimeError):
    """Dense covariance matrix is not positive semidefinite."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``0, step, 2 step, ...`` covering ``[0, T]``."""

    T: float
    step: float

    def __post_init__(self):
        if not (self.step > 0):
            raise ValueError("grid step must be positive")
        if self.n < 2:
            raise ValueError("grid must hold at least 2 points")

    @property
    def n(self) -> int:
        return int(math.floor(self.T / self.step + 1e-9)) + 1

    @classmethod
    def from_points(cls, n: int, step: float) -> "GridSpec":
        return cls(T=(n - 1) * step, step=step)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.step


@dataclass(frozen=True, eq=False)
class Embedding:
    m: int
    eigenvalues: np.ndarray = field(repr=False)
    n: int
    step: float
    source_model: Optional[CorrelationModel] = field(default=None, repr=False)
    min_eigenvalue: float = 0.0  # before clamping

    @functools.cached_property
    def _scale(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues / self.m)

    @property
    def grid(self) -> GridSpec:
        return GridSpec.from_points(self.n, self.step)


@dataclass(frozen=True, eq=False)
class SamplePath:
    values: np.ndarray
    grid: GridSpec
    stream_id: tuple
    mask: Optional[np.ndarray] = None  # True marks excluded points

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def _next_pow2(k: int) -> int:
    return 1 << max(1, (k - 1).bit_length())


def embed_row(cov: Callable[[np.ndarray], np.ndarray], n: int, tol_eig: float = TOL_EIG,
              max_order: int = MAX_ORDER) -> tuple[int, np.ndarray, float]:
    """Circulant eigenvalues for the autocovariance ``cov(k)``, ``k`` in lag units.

    Returns ``(m, clamped eigenvalues, min raw eigenvalue)``.
    """
    m = _next_pow2(max(2 * (n - 1), 2))
    while True:
        half = m // 2
        c = np.asarray(cov(np.arange(half + 1, dtype=float)), dtype=float)
        row = np.concatenate([c, c[-2:0:-1]])
        eig = scipy.fft.rfft(row).real
        eig = np.concatenate([eig, eig[-2:0:-1]])
        lo = float(eig.min())
        thresh = tol_eig * max(float(eig.max()), 0.0)
        if lo >= -thresh:
            eig = np.where(eig < 0.0, 0.0, eig)
            eig.setflags(write=False)
            return m, eig, lo
        if 2 * m > max_order:
            raise EmbeddingFailure(
                f"minimum eigenvalue {lo:.3e} < -{thresh:.3e} at circulant order {m}")
        m *= 2


def build_embedding(model: CorrelationModel, grid: GridSpec, tol_eig: float = TOL_EIG,
                    max_order: int = MAX_ORDER) -> Embedding:
    """Precompute the circulant eigenvalue table for ``model`` on ``grid``.

    Padding doubles the circulant order until the smallest eigenvalue is
    within ``tol_eig`` (relative to the largest) of zero; the remaining small
    negatives are clamped.
    """
    step = grid.step
    m, eig, lo = embed_row(lambda k: model.eval(k * step), grid.n, tol_eig, max_order)
    return Embedding(m=m, eigenvalues=eig, n=grid.n, step=step, source_model=model,
                     min_eigenvalue=lo)


def _pair(emb: Embedding, seed: int, pair_index: int, domain: int = streams.PATH) -> np.ndarray:
    g = streams.generator(seed, pair_index, domain)
    z = g.standard_normal(2 * emb.m).view(np.complex128)
    z *= emb._scale
    w = scipy.fft.fft(z, overwrite_x=True)
    return w[: emb.n]


def sample_path(emb: Embedding, stream: RngStream) -> SamplePath:
    """One exact path; replications ``2k`` and ``2k + 1`` share an FFT."""
    w = _pair(emb, stream.master_seed, stream.replication // 2)
    vals = (w.real if stream.replication % 2 == 0 else w.imag).copy()
    return SamplePath(vals, emb.grid, (stream.master_seed, stream.replication))


def sample_paths(emb: Embedding, seed: int, count: int, start: int = 0) -> np.ndarray:
    """Array of shape ``(count, n)`` holding replications ``start .. start+count-1``."""
    out = np.empty((count, emb.n))
    for i, rep in enumerate(range(start, start + count)):
        if i > 0 and rep % 2 == 1:
            continue
        w = _pair(emb, seed, rep // 2)
        if rep % 2 == 0:
            out[i] = w.real
            if i + 1 < count:
                out[i + 1] = w.imag
        else:
            out[i] = w.imag
    return out


def _map_pairs(fn, pairs, workers: int):
    if workers <= 1 or len(pairs) <= 1:
        return [fn(k) for k in pairs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, pairs))


def path_extremes(emb: Embedding, seed: int, reps: int, start: int = 0, workers: int = 1,
                  stride: int = 1, mask: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-replication ``(max, min)`` over grid points, without storing paths.

    ``stride`` keeps every ``stride``-th grid point (a nested coarser grid);
    ``mask`` marks points to exclude.  Output order is by replication index,
    so results do not depend on ``workers``.
    """
    keep = None
    if mask is not None:
        keep = ~np.asarray(mask, dtype=bool)[::stride]
    first, last = start // 2, (start + reps - 1) // 2

    def one(k):
        w = _pair(emb, seed, k)[::stride]
        out = []
        for part in (w.real, w.imag):
            v = part if keep is None else part[keep]
            out.append((v.max(), v.min()))
        return out

    res = _map_pairs(one, list(range(first, last + 1)), workers)
    flat = [x for pair in res for x in pair]
    off = start - 2 * first
    flat = flat[off: off + reps]
    mx = np.fromiter((a for a, _ in flat), float, count=reps)
    mn = np.fromiter((b for _, b in flat), float, count=reps)
    return mx, mn


def _toeplitz_factor(cov: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    C = scipy.linalg.toeplitz(cov)
    try:
        return scipy.linalg.cholesky(C, lower=True)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(C)
        if w[0] < -tol * max(w[-1], 1.0):
            raise FactorizationFailure(f"covariance matrix has eigenvalue {w[0]:.3e}") from None
        return V * np.sqrt(np.clip(w, 0.0, None))


def cholesky_path(model: CorrelationModel, grid: GridSpec, stream: RngStream) -> SamplePath:
    """Exact path by dense factorisation; small-grid oracle for :func:`sample_path`."""
    if grid.n > CHOLESKY_MAX_N:
        raise ValueError(f"cholesky_path supports n <= {CHOLESKY_MAX_N}")
    L = _cholesky_factor(model, grid.n, grid.step)
    z = stream.generator(streams.CHOLESKY).standard_normal(grid.n)
    return SamplePath(L @ z, grid, (stream.master_seed, stream.replication))


@functools.lru_cache(maxsize=8)
def _cholesky_factor_cached(key: str, n: int, step: float, model_ref) -> np.ndarray:
    return _toeplitz_factor(model_ref.eval(np.arange(n) * step))


def _cholesky_factor(model, n, step):
    return _cholesky_factor_cached(model.key(), n, step, model)


def cholesky_paths(model: CorrelationModel, grid: GridSpec, seed: int, count: int,
                   start: int = 0) -> np.ndarray:
    L = _cholesky_factor(model, grid.n, grid.step)
    Z = np.stack([streams.generator(seed, i, streams.CHOLESKY).standard_normal(grid.n)
                  for i in range(start, start + count)])
    return Z @ L.T


# --- fractional Brownian motion -------------------------------------------

def fgn_autocovariance(hurst: float, k: np.ndarray) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at integer lags."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * hurst
    return 0.5 * ((k + 1.0) ** h2 - 2.0 * k ** h2 + np.abs(k - 1.0) ** h2)


@functools.lru_cache(maxsize=16)
def _fgn_embedding(hurst: float, n_inc: int) -> Embedding:
    m, eig, lo = embed_row(lambda k: fgn_autocovariance(hurst, k), n_inc)
    return Embedding(m=m, eigenvalues=eig, n=n_inc, step=1.0, min_eigenvalue=lo)


def _check_hurst(hurst: float) -> float:
    hurst = float(hurst)
    if not (0.0 < hurst <= 1.0):
        raise ValueError(f"Hurst index must lie in (0, 1], got {hurst!r}")
    return hurst


def _fbm_rows(hurst: float, n: int, gens, out: np.ndarray) -> None:
    """Fill ``out[:, 1:]`` with unit-step fBm rows; ``gens`` yields one generator per row pair."""
    count = out.shape[0]
    if hurst == 1.0:
        for i in range(count):
            out[i] = next(gens).standard_normal() * np.arange(n)
        return
    if hurst == 0.5:
        for i in range(count):
            np.cumsum(next(gens).standard_normal(n - 1), out=out[i, 1:])
        return
    emb = _fgn_embedding(hurst, n - 1)
    for i in range(0, count, 2):
        z = next(gens).standard_normal(2 * emb.m).view(np.complex128)
        z *= emb._scale
        w = scipy.fft.fft(z, overwrite_x=True)[: n - 1]
        np.cumsum(w.real, out=out[i, 1:])
        if i + 1 < count:
            np.cumsum(w.imag, out=out[i + 1, 1:])


def fbm_paths(hurst: float, grid: GridSpec, seed: int, count: int, start: int = 0) -> np.ndarray:
    """Batch of fBm paths ``B_H`` on ``grid`` with ``Var B_H(t) = t**(2H)``.

    Row ``i`` is replication ``start + i`` with its own substream (for
    ``H`` outside {1/2, 1}, replications ``2k, 2k+1`` share one fGn FFT).
    ``H = 1`` is the degenerate line ``t Z``, ``H = 1/2`` uses independent
    increments directly, other ``H`` cumulate circulant-embedded fGn.
    """
    hurst = _check_hurst(hurst)
    n, step = grid.n, grid.step
    if hurst not in (0.5, 1.0):
        # pair-aligned generation, then slice out the requested rows
        lo, hi = start - start % 2, start + count + (start + count) % 2
        full = np.zeros((hi - lo, n))
        _fbm_rows(hurst, n, (streams.generator(seed, k, streams.FBM)
                             for k in range(lo // 2, hi // 2)), full)
        out = full[start - lo: start - lo + count]
    else:
        out = np.zeros((count, n))
        _fbm_rows(hurst, n, (streams.generator(seed, k, streams.FBM)
                             for k in range(start, start + count)), out)
    out *= step ** hurst
    return out


def fbm_block(hurst: float, grid: GridSpec, gen: np.random.Generator, count: int) -> np.ndarray:
    """``count`` fBm paths drawn sequentially from one generator."""
    hurst = _check_hurst(hurst)
    n = grid.n
    out = np.zeros((count, n))
    if hurst == 1.0:
        out[:] = np.outer(gen.standard_normal(count), np.arange(n))
    elif hurst == 0.5:
        np.cumsum(gen.standard_normal((count, n - 1)), axis=1, out=out[:, 1:])
    else:
        emb = _fgn_embedding(hurst, n - 1)
        half = (count + 1) // 2
        z = gen.standard_normal((half, 2 * emb.m)).view(np.complex128)
        z *= emb._scale
        w = scipy.fft.fft(z, axis=1, overwrite_x=True)[:, : n - 1]
        inc = np.empty((2 * half, n - 1))
        inc[0::2] = w.real
        inc[1::2] = w.imag
        np.cumsum(inc[:count], axis=1, out=out[:, 1:])
    out *= grid.step ** hurst
    return out


def sample_fbm(hurst: float, grid: GridSpec, stream: RngStream) -> SamplePath:
    vals = fbm_paths(hurst, grid, stream.master_seed, 1, start=stream.replication)[0]
    return SamplePath(vals, grid, (stream.master_seed, stream.replication))


# --- block comparison process ---------------------------------------------

def comparison_layout(T: float, eps: float, step: float) -> tuple[GridSpec, np.ndarray, np.ndarray]:
    """Grid on ``[0, T]``, block index per point (-1 in gaps) and gap mask.

    Unit interval ``[j-1, j)`` holds the gap ``[j-1, j-1+eps)`` followed by
    block ``j``; points at or beyond ``floor(T)`` are excluded.
    """
    grid = GridSpec(T, step)
    t = grid.times
    j = np.floor(t + 1e-12)
    frac = t - j
    in_block = (frac >= eps - 1e-12) & (j < math.floor(T))
    block = np.where(in_block, j, -1).astype(np.int64)
    return grid, block, ~in_block


def sample_comparison_path(model: CorrelationModel, T: float, eps: float, r: float,
                           block_stream: RngStream, shared_stream: RngStream,
                           step: float = 0.05, n_blocks: Optional[int] = None) -> SamplePath:
    """Path of ``(1 - rho)**0.5 * eta + rho**0.5 * W`` with ``rho = r / log T``.

    ``eta`` is an independent copy of the process on every block, ``W`` one
    shared standard normal.  Gap points carry value 0 and are flagged in the
    returned mask.  ``n_blocks`` limits simulation to the first blocks while
    ``rho`` still uses the full horizon ``T``.
    """
    if not (T > math.e):
        raise ValueError("T must exceed e")
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if r < 0:
        raise ValueError("r must be >= 0")
    rho = r / math.log(T)
    if rho >= 1.0:
        raise ValueError("r / log T must be < 1")
    if n_blocks is not None:
        T_sim = min(T, float(n_blocks) + 0.5 * step)
    else:
        T_sim = T
    grid, block, mask = comparison_layout(T_sim, eps, step)
    nb = int(block.max()) + 1 if np.any(block >= 0) else 0
    values = np.zeros(grid.n)
    if nb:
        per = int(np.bincount(block[block >= 0]).max())
        emb = build_embedding(model, GridSpec.from_points(max(per, 2), step))
        eta = comparison_blocks(emb, block_stream.master_seed, block_stream.replication, nb)
        for j in range(nb):
            idx = np.nonzero(block == j)[0]
            values[idx] = eta[j, : idx.size]
        w_shared = shared_stream.generator(streams.SHARED).standard_normal()
        values = np.sqrt(1.0 - rho) * values + np.sqrt(rho) * w_shared
        values[mask] = 0.0
    return SamplePath(values, grid, (block_stream.master_seed, block_stream.replication), mask)


def comparison_blocks(emb: Embedding, seed: int, replication: int, n_blocks: int) -> np.ndarray:
    """Independent block copies, shape ``(n_blocks, emb.n)``.

    All blocks of a replication come from one generator in the ``BLOCKS``
    domain; blocks ``2k`` and ``2k + 1`` are the two halves of FFT row ``k``.
    """
    n_pairs = (n_blocks + 1) // 2
    g = streams.generator(seed, replication, streams.BLOCKS)
    z = g.standard_normal((n_pairs, 2 * emb.m)).view(np.complex128)
    z *= emb._scale
    w = scipy.fft.fft(z, axis=1, overwrite_x=True)[:, : emb.n]
    out = np.empty((2 * n_pairs, emb.n))
    out[0::2] = w.real
    out[1::2] = w.imag
    return out[:n_blocks]


def path_max(path, absolute: bool = True, mask: Optional[np.ndarray] = None) -> float:
    """Maximum of the values (or absolute values) over unmasked points."""
    if isinstance(path, SamplePath):
        vals = path.values
        if mask is None:
            mask = path.mask
    else:
        vals = np.asarray(path, dtype=float)
    if vals.size == 0:
        raise ValueError("empty path")
    if mask is not None:
        vals = vals[~np.asarray(mask, dtype=bool)]
        if vals.size == 0:
            raise ValueError("mask excludes every point")
    return float(np.max(np.abs(vals)) if absolute else np.max(vals))


# --- I/O -------------------------------------------------------------------

def write_path_csv(path: SamplePath, dest) -> None:
    """Write ``t,value`` rows (unmasked points only), LF line endings."""
    t = path.times
    keep = np.ones(t.size, bool) if path.mask is None else ~path.mask
    with open(dest, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,value\n")
        for a, b in zip(t[keep].tolist(), path.values[keep].tolist()):
            fh.write(f"{a!r},{b!r}\n")


def save_embedding(emb: Embedding, dest) -> None:
    """Binary cache: magic, version u32, m u64, then m little-endian f64."""
    with open(dest, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<IQ", EMBEDDING_VERSION, emb.m))
        fh.write(np.ascontiguousarray(emb.eigenvalues, dtype="<f8").tobytes())


def load_embedding(src, n: int, step: float,
                   model: Optional[CorrelationModel] = None) -> Embedding:
    with open(src, "rb") as fh:
        magic = fh.read(len(EMBEDDING_MAGIC))
        if magic != EMBEDDING_MAGIC:
            raise ValueError(f"{src}: not an embedding cache file")
        version, m = struct.unpack("<IQ", fh.read(12))
        if version != EMBEDDING_VERSION:
            raise ValueError(f"{src}: unsupported cache version {version}")
        eig = np.frombuffer(fh.read(8 * m), dtype="<f8").astype(float)
    if eig.size != m:
        raise ValueError(f"{src}: truncated eigenvalue table")
    if m < 2 * (n - 1):
        raise ValueError(f"{src}: circulant order {m} too small for n={n}")
    eig.setflags(write=False)
    return Embedding(m=m, eigenvalues=eig, n=n, step=step, source_model=model)


class EmbeddingCache:
    """Directory of embeddings keyed by ``(model hash, n, step)``."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def path_for(self, model: CorrelationModel, grid: GridSpec) -> Path:
        return self.directory / f"emb-{model.key()}-{grid.n}-{grid.step!r}.bin"

    def get(self, model: CorrelationModel, grid: GridSpec) -> Embedding:
        p = self.path_for(model, grid)
        if p.exists():
            return load_embedding(p, grid.n, grid.step, model)
        emb = build_embedding(model, grid)
        os.makedirs(self.directory, exist_ok=True)
        tmp = p.with_suffix(".tmp")
        save_embedding(emb, tmp)
        os.replace(tmp, p)
        return emb
