"""GOE reservoir sampling and spectral utilities.

A reservoir is a dense block of N intrinsic states with a real
symmetric random Hamiltonian.  Matrix elements are Gaussian with

    H_ij = r_ij * v * (1 + delta_ij)**0.5,   r_ij ~ N(0, 1),

i.e. variance v**2 off the diagonal and 2 v**2 on it.  For large N the
level density follows the Wigner semicircle

    rho(E) = rho0 * sqrt(1 - (E / E_m)**2),

with rho0 = sqrt(N) / (pi * v) at band center and band edge
E_m = 2 * sqrt(N) * v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EigensolverError
from .rng import RandomStream


@dataclass(frozen=True)
class ReservoirParams:
    """Defining parameters of one GOE reservoir.

    Attributes
    ----------
    n : int
        Number of intrinsic states, at least 2.
    v : float
        Gaussian scale of the off-diagonal matrix elements.  Zero is
        allowed (empty reservoir spectrum at the origin).
    gamma : float
        Uniform absorption width attached to every intrinsic state,
        strictly positive.
    """

    n: int
    v: float
    gamma: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError("reservoir dimension n must be an integer >= 2")
        if not (math.isfinite(self.v) and self.v >= 0.0):
            raise ValueError("matrix-element scale v must be finite and >= 0")
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError("absorption width gamma must be finite and > 0")

    @property
    def rho0(self) -> float:
        """Level density at band center, sqrt(N) / (pi * v)."""
        if self.v == 0.0:
            raise ValueError("rho0 undefined for v = 0")
        return math.sqrt(self.n) / (math.pi * self.v)

    @property
    def e_m(self) -> float:
        """Semicircle band-edge energy, 2 * sqrt(N) * v."""
        return 2.0 * math.sqrt(self.n) * self.v


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of one reservoir draw.

    eigenvalues are ascending; eigenvectors[:, j] is the orthonormal
    eigenvector belonging to eigenvalues[j].
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sample_goe(params: ReservoirParams, stream: RandomStream) -> np.ndarray:
    """Draw one GOE matrix of order params.n.

    The upper triangle (diagonal included) is filled row-major with
    n(n+1)/2 standard normals from the stream, scaled by v, with the
    diagonal boosted by sqrt(2); the lower triangle mirrors it.  The
    fill order is fixed so a given substream always yields the same
    matrix.
    """
    n = params.n
    m = np.zeros((n, n))
    iu = np.triu_indices(n)
    m[iu] = stream.standard_normal(n * (n + 1) // 2)
    m += np.triu(m, 1).T
    m[np.diag_indices(n)] *= math.sqrt(2.0)
    m *= params.v
    return m


def eig_sym(m: np.ndarray) -> Spectrum:
    """Eigendecomposition of a real symmetric matrix.

    Returns ascending eigenvalues and orthonormal eigenvectors.  Raises
    EigensolverError if the LAPACK solver fails to converge within its
    internal iteration cap.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("eig_sym expects a square 2-d array")
    try:
        vals, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(
            f"eigendecomposition failed to converge for a {m.shape[0]}x{m.shape[0]} "
            f"matrix within the solver's iteration cap"
        ) from exc
    return Spectrum(eigenvalues=vals, eigenvectors=vecs)


def semicircle_density(params: ReservoirParams, e) -> np.ndarray:
    """Semicircle level density rho(E) of the reservoir.

    Vanishes exactly at |E| = E_m; |E| beyond the band edge is a domain
    error.  Works elementwise on arrays.
    """
    e = np.asarray(e, dtype=float)
    e_m = params.e_m
    if e_m == 0.0:
        raise ValueError("semicircle density undefined for v = 0")
    if np.any(np.abs(e) > e_m):
        raise ValueError(f"|E| exceeds the band edge E_m = {e_m:g}")
    rho = params.rho0 * np.sqrt(np.maximum(0.0, 1.0 - (e / e_m) ** 2))
    return rho if rho.ndim else float(rho)
