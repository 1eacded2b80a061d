"""Chi-squared fluctuation statistics with variable degrees of freedom.

The decay probability fluctuates over the ensemble like a chi-squared
variable with nu effective degrees of freedom and mean x0:

    f(x) = nu / (2 x0 Gamma(nu/2)) (nu x / 2 x0)^(nu/2 - 1)
           exp(-nu x / 2 x0),

nu = 1 being the Porter-Thomas limit of a single dominating amplitude
and nu = 2 its two-component generalization.  The cumulative
distribution is the regularized lower incomplete gamma
P(nu/2, nu x / 2 x0), and Var(x) = 2 x0^2 / nu, which gives the moment
estimator nu_eff = 2 <x>^2 / Var(x).

fit_nu adjusts nu against a run-averaged histogram by weighted least
squares, comparing bin-averaged model densities (cdf differences over
the bin width) with weights 1 / rms^2 from the run-to-run scatter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammainc, gammaln

from .errors import InsufficientDataError, ZeroVarianceError

NU_BOUNDS = (0.2, 10.0)


@dataclass(frozen=True)
class PtParams:
    """Degrees of freedom nu and mean x0 of the chi-squared family."""

    nu: float
    x0: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.nu) and self.nu > 0.0):
            raise ValueError("nu must be finite and > 0")
        if not (math.isfinite(self.x0) and self.x0 > 0.0):
            raise ValueError("x0 must be finite and > 0")


def pt_pdf(x, p: PtParams):
    """Density of the chi-squared family, elementwise on arrays.

    x = 0 is inside the domain only for nu >= 2 (the density diverges
    below that); negative x is always a domain error.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("x must be >= 0")
    if p.nu < 2.0 and np.any(x == 0.0):
        raise ValueError("x = 0 diverges for nu < 2")
    half = 0.5 * p.nu
    z = half * x / p.x0
    out = np.zeros_like(x)
    pos = x > 0.0
    with np.errstate(divide="ignore"):
        logpdf = (
            math.log(half / p.x0)
            - gammaln(half)
            + (half - 1.0) * np.log(z[pos])
            - z[pos]
        )
    out[pos] = np.exp(logpdf)
    # finite boundary value exists only at nu = 2 (exponential case)
    if p.nu == 2.0:
        out[x == 0.0] = 1.0 / p.x0
    return out if out.ndim else float(out)


def pt_cdf(x, p: PtParams):
    """Regularized lower incomplete gamma P(nu/2, nu x / 2 x0)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("x must be >= 0")
    out = gammainc(0.5 * p.nu, 0.5 * p.nu * x / p.x0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class FitResult:
    """Outcome of the weighted least-squares nu fit."""

    nu_hat: float
    x0: float
    residual: float
    n_bins_used: int


def _bin_model(edges: np.ndarray, p: PtParams) -> np.ndarray:
    """Bin-averaged model density from cdf differences."""
    c = pt_cdf(edges, p)
    return np.diff(c) / np.diff(edges)


def fit_nu(hist) -> FitResult:
    """Fit nu to a run-averaged histogram of mean-normalized samples.

    hist must expose bin_edges, density_mean and density_rms (the
    run-to-run rms per bin).  Bins with zero rms carry no weight and
    are dropped; at least 5 usable bins are required.  x0 is pinned to
    1 because the samples are normalized to their pooled mean before
    histogramming.
    """
    edges = np.asarray(hist.bin_edges, dtype=float)
    mean = np.asarray(hist.density_mean, dtype=float)
    rms = np.asarray(hist.density_rms, dtype=float)
    usable = (rms > 0.0) & np.isfinite(rms) & np.isfinite(mean)
    n_used = int(np.count_nonzero(usable))
    if n_used < 5:
        raise InsufficientDataError(f"only {n_used} usable histogram bins, need at least 5")
    weights = np.zeros_like(rms)
    weights[usable] = 1.0 / rms[usable] ** 2

    def objective(nu: float) -> float:
        model = _bin_model(edges, PtParams(nu=nu, x0=1.0))
        return float(np.sum(weights * (mean - model) ** 2))

    res = minimize_scalar(objective, bounds=NU_BOUNDS, method="bounded", options={"xatol": 1e-4})
    return FitResult(
        nu_hat=float(res.x), x0=1.0, residual=float(res.fun), n_bins_used=n_used
    )


def nu_eff(samples) -> float:
    """Moment estimator 2 <x>^2 / Var(x) (unbiased variance)."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1-d array of at least 2 samples")
    var = float(np.var(x, ddof=1))
    if var <= 0.0:
        raise ZeroVarianceError("sample variance vanished, nu_eff undefined")
    mean = float(np.mean(x))
    return 2.0 * mean * mean / var


def crossover_curve(y):
    """Empirical nu(y) = (1 + 8.28 y^2) / (1 + 3.81 y^2), y >= 0.

    Interpolates from the Porter-Thomas value 1 at weak absorption to
    about 2.17 at strong absorption, where y = rho0_a * Gamma_a.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0):
        raise ValueError("y must be >= 0")
    y2 = y * y
    out = (1.0 + 8.28 * y2) / (1.0 + 3.81 * y2)
    return out if out.ndim else float(out)
