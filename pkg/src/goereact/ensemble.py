"""Ensemble runs of the two-reservoir reaction model.

One run draws n_samples independent systems (both reservoirs plus all
coupling vectors), evaluates the closed-form decay probability for
each, and histograms the mean-normalized values; an ensemble averages
the run histograms and records their run-to-run rms, which later
weights the nu fit.

Sample (run_id, i) consumes substream substream_offset +
run_id * n_samples + i of the master seed, with the fixed draw order
reservoir-a triangle, v2, v3, reservoir-b triangle, v4.  Results are
therefore independent of chunking and of the worker count.

A gamma_a scan re-runs the ensemble on a grid, retuning the decay
hopping to t2 = -sqrt(10 gamma_a) so that the mean decay probability
stays roughly constant while the fluctuations cross over from
Porter-Thomas (nu = 1) toward nu ~ 2.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from multiprocessing import Pool

import numpy as np

from .errors import DegenerateEnsembleError, EigensolverError, NumericalError
from .ptstats import FitResult, fit_nu
from .reaction import ChannelParams, p_b_closed
from .rmt import ReservoirParams, sample_goe
from .rng import RandomStream
from .selfenergy import resolvent_sum, sample_coupling

SAMPLES_CSV_HEADER = "run_id,sample_id,p_b"
HISTOGRAM_CSV_HEADER = "bin_lo,bin_hi,density_mean,density_rms"

MAX_EXCLUDED_FRACTION = 0.01


@dataclass(frozen=True)
class EnsembleConfig:
    """Full parameter set of one ensemble experiment."""

    reservoir_a: ReservoirParams
    reservoir_b: ReservoirParams
    channel: ChannelParams
    n_runs: int = 50
    n_samples: int = 500
    n_bins: int = 40
    x_max: float = 5.0
    master_seed: int = 20250826
    workers: int = 0

    def __post_init__(self):
        if self.n_runs < 2:
            raise ValueError("n_runs must be >= 2")
        if self.n_samples < 10:
            raise ValueError("n_samples must be >= 10")
        if self.n_bins < 5:
            raise ValueError("n_bins must be >= 5")
        if not (math.isfinite(self.x_max) and self.x_max > 0.0):
            raise ValueError("x_max must be finite and > 0")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        if self.workers < 0:
            raise ValueError("workers must be >= 0 (0 = all available)")


@dataclass(frozen=True)
class HistogramSet:
    """Run-resolved histogram of mean-normalized decay probabilities."""

    bin_edges: np.ndarray
    run_densities: np.ndarray
    density_mean: np.ndarray
    density_rms: np.ndarray
    overflow_fraction: np.ndarray
    n_total: int
    n_excluded: int
    mean_raw: float


@dataclass(frozen=True)
class EnsembleResult:
    """Raw samples plus the run-averaged histogram of one ensemble."""

    hist: HistogramSet
    samples: np.ndarray
    n_excluded: int

    @property
    def mean_pb(self) -> float:
        return self.hist.mean_raw


@dataclass(frozen=True)
class CrossoverPoint:
    """Fitted nu at one point of the gamma_a scan."""

    gamma_a: float
    t2: float
    y: float
    nu_hat: float
    residual: float


@dataclass(frozen=True)
class ScanPoint:
    """Full record of one scan point, including failures."""

    gamma_a: float
    t2: float
    y: float
    result: EnsembleResult | None
    fit: FitResult | None
    error: str | None

    def to_crossover(self) -> CrossoverPoint:
        if self.error is not None or self.fit is None:
            raise ValueError(f"scan point at gamma_a={self.gamma_a!r} failed: {self.error}")
        return CrossoverPoint(
            gamma_a=self.gamma_a,
            t2=self.t2,
            y=self.y,
            nu_hat=self.fit.nu_hat,
            residual=self.fit.residual,
        )


def t2_for_gamma(gamma_a: float) -> float:
    """Decay hopping keeping the mean decay probability ~constant.

    t2 = -sqrt(10 gamma_a); the sign is irrelevant to P_b, the
    magnitude scales the decay flux with the absorption strength.
    """
    if gamma_a <= 0.0:
        raise ValueError("gamma_a must be > 0")
    return -math.sqrt(10.0 * gamma_a)


def _chunk_size(n_dim: int, n_samples: int) -> int:
    # ~32 MB of eigenvector workspace per chunk
    return max(1, min(n_samples, int(4.0e6 / (n_dim * n_dim))))


def sample_run(cfg: EnsembleConfig, run_id: int, substream_offset: int = 0):
    """Decay probabilities of one run; returns (p_b array, n_excluded).

    Degenerate draws (vanishing closed-form denominator) are set to
    NaN and counted instead of aborting the run.
    """
    ra, rb, ch = cfg.reservoir_a, cfg.reservoir_b, cfg.channel
    ns = cfg.n_samples
    base = substream_offset + run_id * ns
    pb = np.empty(ns)
    n_excluded = 0
    chunk = _chunk_size(max(ra.n, rb.n), ns)
    for start in range(0, ns, chunk):
        stop = min(start + chunk, ns)
        m = stop - start
        ha = np.empty((m, ra.n, ra.n))
        v2s = np.empty((m, ra.n))
        v3s = np.empty((m, ra.n))
        hb = np.empty((m, rb.n, rb.n))
        v4s = np.empty((m, rb.n))
        for i in range(m):
            st = RandomStream(cfg.master_seed, base + start + i)
            ha[i] = sample_goe(ra, st)
            v2s[i] = sample_coupling(ra, ch.v2, st)
            v3s[i] = sample_coupling(ra, ch.v3, st)
            hb[i] = sample_goe(rb, st)
            v4s[i] = sample_coupling(rb, ch.v4, st)
        try:
            evals_a, vecs_a = np.linalg.eigh(ha)
            evals_b, vecs_b = np.linalg.eigh(hb)
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(
                f"eigendecomposition failed in run {run_id}, samples {base + start}..{base + stop - 1}"
            ) from exc
        ov2 = np.einsum("sij,si->sj", vecs_a, v2s)
        ov3 = np.einsum("sij,si->sj", vecs_a, v3s)
        ov4 = np.einsum("sij,si->sj", vecs_b, v4s)
        w22 = resolvent_sum(evals_a, ov2, ov2, ch.energy, ra.gamma)
        w23 = resolvent_sum(evals_a, ov2, ov3, ch.energy, ra.gamma)
        w33 = resolvent_sum(evals_a, ov3, ov3, ch.energy, ra.gamma)
        w44 = resolvent_sum(evals_b, ov4, ov4, ch.energy, rb.gamma)
        vals, den, _ = p_b_closed(w22, w23, w33, w44, ch.t2, energy=ch.energy)
        bad = ~np.isfinite(vals) | (np.abs(den) < 1e-300)
        if np.any(bad):
            n_excluded += int(np.count_nonzero(bad))
            vals = np.where(bad, np.nan, vals)
        pb[start:stop] = vals
    return pb, n_excluded


def _run_task(args):
    cfg, run_id, offset = args
    return sample_run(cfg, run_id, offset)


def build_histogram(
    samples: np.ndarray, n_bins: int, x_max: float, n_excluded: int = 0
) -> HistogramSet:
    """Run-resolved histogram of samples normalized to their pooled mean.

    samples has shape (n_runs, n_samples) with NaN marking excluded
    draws.  Each run's density integrates to 1 - overflow over the
    binned range.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise ValueError("expected a (n_runs, n_samples) array")
    finite = np.isfinite(samples)
    pooled = samples[finite]
    if pooled.size == 0:
        raise DegenerateEnsembleError("no usable samples to histogram")
    mean_raw = float(pooled.mean())
    if not (math.isfinite(mean_raw) and mean_raw > 0.0):
        raise DegenerateEnsembleError(f"pooled mean decay probability {mean_raw!r} is not positive")
    edges = np.linspace(0.0, x_max, n_bins + 1)
    width = x_max / n_bins
    n_runs = samples.shape[0]
    densities = np.empty((n_runs, n_bins))
    overflow = np.empty(n_runs)
    for r in range(n_runs):
        vals = samples[r][finite[r]] / mean_raw
        if vals.size == 0:
            raise DegenerateEnsembleError(f"run {r} has no usable samples")
        counts, _ = np.histogram(vals, bins=edges)
        densities[r] = counts / (vals.size * width)
        overflow[r] = np.count_nonzero(vals > x_max) / vals.size
    return HistogramSet(
        bin_edges=edges,
        run_densities=densities,
        density_mean=densities.mean(axis=0),
        density_rms=densities.std(axis=0, ddof=0),
        overflow_fraction=overflow,
        n_total=int(pooled.size),
        n_excluded=int(n_excluded),
        mean_raw=mean_raw,
    )


def run_ensemble(cfg: EnsembleConfig, substream_offset: int = 0) -> EnsembleResult:
    """All runs of one ensemble, serial or in a process pool.

    The substream layout makes the output independent of the worker
    count; runs are reassembled in run_id order.
    """
    tasks = [(cfg, r, substream_offset) for r in range(cfg.n_runs)]
    n_workers = cfg.workers if cfg.workers > 0 else (os.cpu_count() or 1)
    n_workers = min(n_workers, cfg.n_runs)
    if n_workers > 1:
        with Pool(processes=n_workers) as pool:
            rows = pool.map(_run_task, tasks)
    else:
        rows = [_run_task(t) for t in tasks]
    samples = np.vstack([np.asarray(r[0]) for r in rows])
    n_excluded = int(sum(r[1] for r in rows))
    if n_excluded > MAX_EXCLUDED_FRACTION * samples.size:
        raise DegenerateEnsembleError(
            f"{n_excluded} of {samples.size} samples excluded, above the "
            f"{MAX_EXCLUDED_FRACTION:.0%} cap"
        )
    hist = build_histogram(samples, cfg.n_bins, cfg.x_max, n_excluded)
    return EnsembleResult(hist=hist, samples=samples, n_excluded=n_excluded)


def scan_points(base: EnsembleConfig, gamma_a_grid) -> list[ScanPoint]:
    """Ensemble plus nu fit at every gamma_a of the grid.

    Point i uses substreams [i * n_runs * n_samples, (i+1) * ...), so
    grid points are statistically independent and the scan is
    reproducible point by point.  A numerical failure at one point is
    recorded and the scan continues.
    """
    pts: list[ScanPoint] = []
    for i, g in enumerate(gamma_a_grid):
        g = float(g)
        t2 = t2_for_gamma(g)
        cfg = replace(
            base,
            reservoir_a=replace(base.reservoir_a, gamma=g),
            channel=replace(base.channel, t2=t2),
        )
        y = cfg.reservoir_a.rho0 * g
        offset = i * base.n_runs * base.n_samples
        try:
            result = run_ensemble(cfg, substream_offset=offset)
            fit = fit_nu(result.hist)
        except NumericalError as exc:
            pts.append(ScanPoint(gamma_a=g, t2=t2, y=y, result=None, fit=None, error=str(exc)))
            continue
        pts.append(ScanPoint(gamma_a=g, t2=t2, y=y, result=result, fit=fit, error=None))
    return pts


def nu_scan(base: EnsembleConfig, gamma_a_grid) -> list[CrossoverPoint]:
    """Fitted crossover points of the gamma_a scan (failed points dropped)."""
    return [p.to_crossover() for p in scan_points(base, gamma_a_grid) if p.error is None]
