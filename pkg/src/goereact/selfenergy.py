"""Complex channel self-energies of GOE reservoirs.

A channel state coupled to reservoir eigenstates |phi_j> by Gaussian
matrix elements acquires the complex self-energy

    w_kk'(E) = sum_j <v_k|phi_j><phi_j|v_k'> / (E - E_j + i Gamma/2),

where Gamma is the uniform absorption width of the intrinsic states.
The spectral form above is the production route; an independent direct
route solves (E - H + i Gamma/2) x = v_k' and contracts with v_k.  Both
must agree to linear-solver accuracy on every draw.

Ensemble moments of w_kk (diagonal) and w_kk' (independent coupling
vectors) are accumulated in one pass with a merge-friendly shifted
scheme so chunked or parallel accumulation reproduces the serial
result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EigensolverError, SingularSystemError
from .rmt import ReservoirParams, Spectrum, sample_goe
from .rng import RandomStream

MOMENTS_CSV_HEADER = (
    "N,v_g,v_k,v_k',Gamma,n_samples,"
    "re_mean,im_mean,re_sd,im_sd,abs2_mean,abs2_sd,cross_corr"
)


def sample_coupling(params: ReservoirParams, scale: float, stream: RandomStream) -> np.ndarray:
    """Draw the coupling vector of one channel state to the reservoir.

    Components are iid N(0, scale**2); scale = 0 gives the zero vector
    (channel decoupled from this reservoir).
    """
    scale = float(scale)
    if not math.isfinite(scale) or scale < 0.0:
        raise ValueError("coupling scale must be finite and >= 0")
    draws = stream.standard_normal(params.n)
    return scale * draws


def resolvent_sum(eigenvalues, overlaps_a, overlaps_b, energy: float, gamma: float):
    """sum_j a_j b_j / (E - E_j + i gamma/2) along the last axis.

    All leading axes broadcast, so stacked ensemble chunks evaluate in
    one call.
    """
    den = (energy - np.asarray(eigenvalues)) + 0.5j * gamma
    return np.sum(np.asarray(overlaps_a) * np.asarray(overlaps_b) / den, axis=-1)


def self_energy_spectral(
    spec: Spectrum, a: np.ndarray, b: np.ndarray, energy: float, gamma: float
) -> complex:
    """Self-energy w_ab(E) from an eigendecomposition of the reservoir."""
    if gamma <= 0.0:
        raise ValueError("absorption width gamma must be > 0")
    n = spec.eigenvalues.shape[0]
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (n,) or b.shape != (n,):
        raise ValueError("coupling vectors must match the reservoir dimension")
    ov_a = spec.eigenvectors.T @ a
    ov_b = spec.eigenvectors.T @ b
    return complex(resolvent_sum(spec.eigenvalues, ov_a, ov_b, energy, gamma))


def self_energy_direct(
    h: np.ndarray, a: np.ndarray, b: np.ndarray, energy: float, gamma: float
) -> complex:
    """Self-energy via a complex linear solve, no eigendecomposition.

    Solves (E - H + i gamma/2) x = b and returns a . x.  Serves as the
    independent cross-check of the spectral route.
    """
    if gamma <= 0.0:
        raise ValueError("absorption width gamma must be > 0")
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if h.shape != (n, n):
        raise ValueError("h must be square")
    if a.shape != (n,) or b.shape != (n,):
        raise ValueError("coupling vectors must match the reservoir dimension")
    mat = -h.astype(complex)
    idx = np.diag_indices(n)
    mat[idx] += energy + 0.5j * gamma
    try:
        x = np.linalg.solve(mat, b.astype(complex))
    except np.linalg.LinAlgError as exc:
        # Unreachable for gamma > 0 with a real H; guarded for diagnostics.
        raise SingularSystemError(
            f"resolvent system of order {n} is singular at E={energy!r}, gamma={gamma!r}"
        ) from exc
    return complex(a @ x)


@dataclass(frozen=True)
class SelfEnergySet:
    """The four self-energies entering the reduced channel system.

    w22, w23, w33 belong to reservoir a (channel sites 2 and 3), w44 to
    reservoir b (site 4), all evaluated at the same energy.  Diagonal
    elements must have strictly negative imaginary part whenever the
    corresponding width is positive.
    """

    w22: complex
    w23: complex
    w33: complex
    w44: complex
    energy: float = 0.0
    gamma_a: float = 0.0
    gamma_b: float = 0.0

    def __post_init__(self):
        if self.gamma_a > 0.0 and not (self.w22.imag < 0.0 and self.w33.imag < 0.0):
            raise ValueError("Im w22 and Im w33 must be < 0 for gamma_a > 0")
        if self.gamma_b > 0.0 and not self.w44.imag < 0.0:
            raise ValueError("Im w44 must be < 0 for gamma_b > 0")


def self_energy_set(
    spec_a: Spectrum,
    v2: np.ndarray,
    v3: np.ndarray,
    spec_b: Spectrum,
    v4: np.ndarray,
    energy: float,
    gamma_a: float,
    gamma_b: float,
) -> SelfEnergySet:
    """Assemble the four self-energies of one two-reservoir draw."""
    return SelfEnergySet(
        w22=self_energy_spectral(spec_a, v2, v2, energy, gamma_a),
        w23=self_energy_spectral(spec_a, v2, v3, energy, gamma_a),
        w33=self_energy_spectral(spec_a, v3, v3, energy, gamma_a),
        w44=self_energy_spectral(spec_b, v4, v4, energy, gamma_b),
        energy=energy,
        gamma_a=gamma_a,
        gamma_b=gamma_b,
    )


class RunningMoments:
    """One-pass mean/covariance accumulator over vectors of fixed dim.

    Uses the shifted (Welford-style) update; merge() combines two
    accumulators exactly, so chunked accumulation matches the serial
    order up to round-off.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.count = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros((dim, dim))

    @classmethod
    def from_batch(cls, x: np.ndarray) -> "RunningMoments":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        acc = cls(x.shape[1])
        acc.count = x.shape[0]
        acc.mean = x.mean(axis=0)
        dx = x - acc.mean
        acc._m2 = dx.T @ dx
        return acc

    def add(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a vector of dim {self.dim}")
        self.count += 1
        dx = x - self.mean
        self.mean = self.mean + dx / self.count
        self._m2 = self._m2 + np.outer(dx, x - self.mean)

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch in merge")
        if other.count == 0:
            return self
        if self.count == 0:
            self.count = other.count
            self.mean = other.mean.copy()
            self._m2 = other._m2.copy()
            return self
        na, nb = self.count, other.count
        n = na + nb
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (nb / n)
        self._m2 = self._m2 + other._m2 + np.outer(delta, delta) * (na * nb / n)
        self.count = n
        return self

    def covariance(self) -> np.ndarray:
        """Population covariance (ddof = 0)."""
        if self.count < 1:
            raise ValueError("no samples accumulated")
        return self._m2 / self.count

    def sd(self) -> np.ndarray:
        return np.sqrt(np.maximum(0.0, np.diag(self.covariance())))


@dataclass(frozen=True)
class MomentSummary:
    """Sampled self-energy moments of one (N, v, Gamma, v_k, v_k') cell.

    Means refer to the diagonal element w_kk; the spreads, |w|^2
    moments and the Re/Im correlation refer to the off-diagonal element
    w_kk' built from independent coupling vectors.  This is exactly the
    column set compared against the closed-form moment table.
    """

    reservoir: ReservoirParams
    v_k: float
    v_kp: float
    energy: float
    n_samples: int
    diag_mean: complex
    diag_re_sd: float
    diag_im_sd: float
    off_re_sd: float
    off_im_sd: float
    abs2_mean: float
    abs2_sd: float
    sq_mean: complex
    sq_re_sd: float
    sq_im_sd: float
    cross_corr: float

    def csv_row(self) -> str:
        r = self.reservoir
        cells = [
            str(r.n),
            repr(float(r.v)),
            repr(float(self.v_k)),
            repr(float(self.v_kp)),
            repr(float(r.gamma)),
            str(self.n_samples),
            repr(float(self.diag_mean.real)),
            repr(float(self.diag_mean.imag)),
            repr(float(self.off_re_sd)),
            repr(float(self.off_im_sd)),
            repr(float(self.abs2_mean)),
            repr(float(self.abs2_sd)),
            repr(float(self.cross_corr)),
        ]
        return ",".join(cells)


def _observables(evals, vecs, vk_vecs, vkp_vecs, energy, gamma):
    """Per-sample observable vectors for the moment accumulator.

    Columns: Re w_kk, Im w_kk, Re w_kk', Im w_kk', |w_kk'|^2,
    Re w_kk'^2, Im w_kk'^2.
    """
    ov_k = np.einsum("sij,si->sj", vecs, vk_vecs)
    ov_kp = np.einsum("sij,si->sj", vecs, vkp_vecs)
    w_kk = resolvent_sum(evals, ov_k, ov_k, energy, gamma)
    w_off = resolvent_sum(evals, ov_k, ov_kp, energy, gamma)
    sq = w_off * w_off
    cols = np.column_stack(
        [w_kk.real, w_kk.imag, w_off.real, w_off.imag, np.abs(w_off) ** 2, sq.real, sq.imag]
    )
    return cols


def sample_self_energy_moments(
    params: ReservoirParams,
    v_k: float,
    v_kp: float,
    energy: float,
    n_samples: int,
    stream: RandomStream,
    chunk_size: int | None = None,
) -> MomentSummary:
    """Monte Carlo moments of w_kk and w_kk' over GOE draws.

    Sample i consumes the substream (stream.master_seed,
    stream.substream_id + i); inside a sample the draw order is GOE
    upper triangle, coupling k, coupling k'.  Eigendecompositions run
    in fixed-size chunks for throughput; chunking does not change the
    result.
    """
    n_samples = int(n_samples)
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if chunk_size is None:
        # ~32 MB of eigenvector workspace per chunk
        chunk_size = max(1, min(n_samples, int(4.0e6 / (params.n * params.n))))
    acc = RunningMoments(7)
    n_fail = 0
    fail_ids: list[int] = []
    for start in range(0, n_samples, chunk_size):
        stop = min(start + chunk_size, n_samples)
        m = stop - start
        hs = np.empty((m, params.n, params.n))
        vks = np.empty((m, params.n))
        vkps = np.empty((m, params.n))
        for i in range(m):
            sub = RandomStream(stream.master_seed, stream.substream_id + start + i)
            hs[i] = sample_goe(params, sub)
            vks[i] = sample_coupling(params, v_k, sub)
            vkps[i] = sample_coupling(params, v_kp, sub)
        try:
            evals, vecs = np.linalg.eigh(hs)
        except np.linalg.LinAlgError:
            # isolate the failing draws so the error can name them
            for i in range(m):
                try:
                    np.linalg.eigh(hs[i])
                except np.linalg.LinAlgError:
                    n_fail += 1
                    fail_ids.append(start + i)
            continue
        acc.merge(RunningMoments.from_batch(_observables(evals, vecs, vks, vkps, energy, params.gamma)))
    if n_fail:
        raise EigensolverError(
            f"{n_fail} of {n_samples} draws failed eigendecomposition (samples {fail_ids[:10]}...)"
        )
    mean = acc.mean
    sd = acc.sd()
    cov = acc.covariance()
    denom = sd[2] * sd[3]
    cross = float(cov[2, 3] / denom) if denom > 0.0 else 0.0
    return MomentSummary(
        reservoir=params,
        v_k=float(v_k),
        v_kp=float(v_kp),
        energy=float(energy),
        n_samples=n_samples,
        diag_mean=complex(mean[0], mean[1]),
        diag_re_sd=float(sd[0]),
        diag_im_sd=float(sd[1]),
        off_re_sd=float(sd[2]),
        off_im_sd=float(sd[3]),
        abs2_mean=float(mean[4]),
        abs2_sd=float(sd[4]),
        sq_mean=complex(mean[5], mean[6]),
        sq_re_sd=float(sd[5]),
        sq_im_sd=float(sd[6]),
        cross_corr=cross,
    )
