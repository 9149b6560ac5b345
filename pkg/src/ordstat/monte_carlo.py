"""Simulation oracle for the latent densities and goodness-of-fit tools.

Each trial fills an ``n x m`` matrix, aggregates every row (sum or product),
finds the row holding the ``k``-th smallest aggregate and records one of its
entries.  Trials are cut into blocks whose size depends only on ``n * m``;
block ``b`` draws from stream ``(seed, b)``.  Blocks may run on any number
of threads and are merged in block order, so output is identical for every
worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import Law
from .order_engine import DensityCurve, LatentSpec
from .streams import stream

__all__ = [
    "McConfig",
    "GofReport",
    "InvalidReferenceError",
    "sample_latent",
    "goodness_of_fit",
    "estimate_latent_mean",
    "ks_critical",
    "export_samples",
    "run_blocks",
]

_BLOCK_DRAWS = 1 << 20


class InvalidReferenceError(ValueError):
    """The reference density does not integrate to 1 within 1e-3."""


@dataclass(frozen=True)
class McConfig:
    """Simulation setup.

    ``parent`` is one law (iid entries) or a tuple of ``m`` laws, one per
    column.  ``column`` selects the recorded entry of the chosen row.
    """

    spec: LatentSpec
    parent: object
    trials: int
    seed: int = 0
    bins: int = 100
    column: int = 0

    def __post_init__(self):
        if isinstance(self.parent, list):
            object.__setattr__(self, "parent", tuple(self.parent))
        if isinstance(self.parent, tuple) and len(self.parent) != self.spec.m:
            raise ValueError("hetero parents must number spec.m")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if not 0 <= self.column < self.spec.m:
            raise ValueError("column out of range")

    @property
    def block_size(self) -> int:
        return max(1, _BLOCK_DRAWS // (self.spec.n * self.spec.m))


@dataclass(frozen=True)
class GofReport:
    ks_distance: float
    l1_distance: float
    chi2_per_dof: float
    sample_mean: float
    sample_count: int
    bins: int = 100
    histogram: tuple = field(default=(), repr=False, compare=False)

    def as_dict(self) -> dict:
        return {
            "ks_distance": self.ks_distance,
            "l1_distance": self.l1_distance,
            "chi2_per_dof": self.chi2_per_dof,
            "sample_mean": self.sample_mean,
            "sample_count": self.sample_count,
            "bins": self.bins,
        }


def ks_critical(n: int, alpha_coeff: float = 1.63) -> float:
    """Asymptotic KS critical value ``c / sqrt(n)`` (1% level for c = 1.63)."""
    return alpha_coeff / math.sqrt(n)


def run_blocks(fn, count: int, block: int, workers: int | None = None):
    """Run ``fn(index, size)`` over ``ceil(count/block)`` blocks; results in block order."""
    sizes = [min(block, count - b * block) for b in range(-(-count // block))]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(sizes) == 1:
        return [fn(b, s) for b, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def _draw_matrix(parent, rng, count, n, m):
    if isinstance(parent, tuple):
        cols = [p.draw(rng, (count, n)) for p in parent]
        return np.stack(cols, axis=-1)
    return parent.draw(rng, (count, n, m))


def _select(agg, k):
    """Row index of the k-th smallest aggregate; ties resolve by row index."""
    idx = np.argpartition(agg, k - 1, axis=1)[:, k - 1]
    chosen = np.take_along_axis(agg, idx[:, None], axis=1)
    tied = np.count_nonzero(agg == chosen, axis=1) > 1
    if np.any(tied):
        stable = np.argsort(agg[tied], axis=1, kind="stable")[:, k - 1]
        idx[tied] = stable
    return idx


def sample_latent(cfg: McConfig, workers: int | None = None) -> np.ndarray:
    """``cfg.trials`` draws of the latent addend or factor."""
    n, k, m = cfg.spec.n, cfg.spec.k, cfg.spec.m
    product = cfg.spec.role == "factor"

    def block(b, size):
        rng = stream(cfg.seed, b)
        mat = _draw_matrix(cfg.parent, rng, size, n, m)
        agg = mat.prod(axis=2) if product else mat.sum(axis=2)
        rows = _select(agg, k)
        return mat[np.arange(size), rows, cfg.column]

    return np.concatenate(run_blocks(block, cfg.trials, cfg.block_size, workers))


def estimate_latent_mean(cfg: McConfig, workers: int | None = None) -> tuple[float, float]:
    """Sample mean and its standard error ``s / sqrt(N)``."""
    if cfg.trials < 100:
        raise ValueError("need at least 100 trials")
    s = sample_latent(cfg, workers)
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(s.size))


# ------------------------------------------------------------------ GOF
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _reference(density, samples, support, cells):
    """Grid and cumulative mass of the reference density."""
    if isinstance(density, DensityCurve):
        x, f = density.x, density.f
        c = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(x))])
        return x, c
    pdf = density.pdf if isinstance(density, Law) else density
    smin, smax = float(samples.min()), float(samples.max())
    span = max(smax - smin, 1e-12)
    lo, hi = smin - 0.5 * span, smax + 0.5 * span
    extra = []
    if isinstance(density, Law):
        elo, ehi = density.effective_range(1e-12)
        lo, hi = min(lo, elo), max(hi, ehi)
        slo, shi = density.support
        lo, hi = max(lo, slo), min(hi, shi)
        extra = [b for b in density.breakpoints if lo < b < hi]
    if support is not None:
        lo, hi = max(lo, support[0]), min(hi, support[1])
    if lo < 0 < hi:
        extra.append(0.0)
    edges = np.unique(np.concatenate([np.linspace(lo, hi, cells + 1), extra]))
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_X
    vals = np.asarray(pdf(nodes.ravel()), dtype=float).reshape(nodes.shape)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    cell_mass = (vals * _GL_W).sum(axis=1) * half
    return edges, np.concatenate([[0.0], np.cumsum(cell_mass)])


def goodness_of_fit(samples, density, bins: int = 100, support=None,
                    cells: int = 20000) -> GofReport:
    """Compare samples with a reference density.

    ``density`` is a ``DensityCurve``, a ``Law`` or a vectorised pdf.  The
    reference cdf is the cumulative Gauss-Legendre integral of the pdf on
    ``cells`` cells spanning the samples (and the law's effective range).
    Bins are of equal reference probability, so each expects ``N/bins``.
    """
    s = np.sort(np.asarray(samples, dtype=float))
    N = s.size
    if N < 1000:
        raise ValueError("goodness_of_fit needs at least 1000 samples")
    grid, cum = _reference(density, s, support, cells)
    mass = cum[-1]
    if abs(mass - 1.0) > 1e-3:
        raise InvalidReferenceError(f"reference density integrates to {mass:.6g}")
    cum = cum / mass
    F = np.interp(s, grid, cum, left=0.0, right=1.0)
    i = np.arange(1, N + 1)
    ks = float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))
    which = np.minimum((F * bins).astype(np.int64), bins - 1)
    obs = np.bincount(which, minlength=bins)
    exp_count = N / bins
    chi2 = float(np.sum((obs - exp_count) ** 2) / exp_count / (bins - 1))
    l1 = float(np.sum(np.abs(obs / N - 1.0 / bins)))
    edges = np.interp(np.linspace(0.0, 1.0, bins + 1), cum, grid)
    widths = np.diff(edges)
    with np.errstate(divide="ignore", invalid="ignore"):
        hdens = np.where(widths > 0, obs / N / widths, 0.0)
    centers = 0.5 * (edges[1:] + edges[:-1])
    keep = np.concatenate([[True], np.diff(centers) > 0])
    return GofReport(ks, l1, chi2, float(s.mean()), int(N), bins,
                     (centers[keep], hdens[keep]))


def export_samples(samples, path, fmt: str = "text") -> None:
    """Write samples as decimal lines (``text``) or little-endian float64 (``binary``)."""
    arr = np.asarray(samples, dtype=float)
    if fmt == "text":
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.writelines(f"{v!r}\n" for v in arr.tolist())
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(arr.astype("<f8").tobytes())
    else:
        raise ValueError("fmt must be 'text' or 'binary'")
