"""Decay probability of the four-site channel chain.

The reaction chain is site 1 (entrance) - t1 - site 2 - reservoir a -
site 3 - t2 - site 4 - reservoir b.  Eliminating the reservoirs leaves
a 3x3 complex system for (phi2, phi3, phi4) driven by the entrance
amplitude phi1:

    [w22-E   w23    0  ] [phi2]   [-t1 phi1]
    [w23   w33-E   t2  ] [phi3] = [   0    ]
    [ 0      t2   w44-E] [phi4]   [   0    ]

With s = (w33-E)(w44-E) - t2^2 and D = (w22-E) s - w23^2 (w44-E):

    phi2 = -s t1 phi1 / D
    phi3 = w23 (w44-E) t1 phi1 / D
    phi4 = -w23 t2 t1 phi1 / D

The steady-state current through a bond is
phi_ij = 2 t_ij Im(phi_i conj(phi_j)); both bond currents are positive
(flow toward the absorbing reservoirs) and the decay probability is
their ratio P_b = phi_34 / phi_12, available in closed form as

    P_b = t2^2 |w23|^2 Im(w44) /
          [Im(w22) |s|^2 - Im(w23^2 (w44-E) conj(s))].

Everything here is deterministic given a SelfEnergySet; the companion
full-chain oracle solves the unreduced (2 + Na + 2 + Nb)-dimensional
system and must agree to linear-solver accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchingOverflowError,
    DegenerateDenominatorError,
    SingularSystemError,
)
from .selfenergy import SelfEnergySet

DENOM_FLOOR = 1e-300

REACTION_CSV_HEADER = "sample_id,P_b,B_r,phi12,phi34,re_w23,im_w23,im_w22,im_w44"


@dataclass(frozen=True)
class ChannelParams:
    """Couplings of the four-site chain.

    t1 links the entrance to site 2 and must be nonzero (otherwise no
    flux enters); t2 links sites 3 and 4 and may vanish (decay branch
    closed).  v2, v3, v4 are the Gaussian scales of the channel-to-
    reservoir couplings; energy is the scattering energy.
    """

    t1: float
    t2: float
    v2: float
    v3: float
    v4: float
    energy: float = 0.0

    def __post_init__(self):
        for name in ("t1", "t2", "v2", "v3", "v4", "energy"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.t1 == 0.0:
            raise ValueError("entrance hopping t1 must be nonzero")
        for name in ("v2", "v3", "v4"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"coupling scale {name} must be >= 0")


@dataclass(frozen=True)
class ReactionAmplitudes:
    """Chain amplitudes of one draw (phi1 is the fixed entrance value)."""

    phi1: complex
    phi2: complex
    phi3: complex
    phi4: complex


@dataclass(frozen=True)
class ReactionResult:
    """Fluxes, decay probability and diagnostics of one draw."""

    flux_12: float
    flux_34: float
    p_b: float
    b_r: float
    denom: complex
    s: complex
    absorbed_a: float | None = None
    absorbed_b: float | None = None


def reduced_matrix(w: SelfEnergySet, ch: ChannelParams) -> np.ndarray:
    """The 3x3 complex coefficient matrix of the reduced system."""
    e = ch.energy
    return np.array(
        [
            [w.w22 - e, w.w23, 0.0],
            [w.w23, w.w33 - e, ch.t2],
            [0.0, ch.t2, w.w44 - e],
        ],
        dtype=complex,
    )


def _shifted(w: SelfEnergySet, ch: ChannelParams):
    if w.energy != ch.energy:
        raise ValueError(
            f"self-energy set evaluated at E={w.energy!r} but channel has E={ch.energy!r}"
        )
    e = ch.energy
    return w.w22 - e, w.w23, w.w33 - e, w.w44 - e


def reduced_solve(w: SelfEnergySet, ch: ChannelParams, phi1: complex = 1.0) -> ReactionAmplitudes:
    """Closed-form amplitudes of the reduced 3x3 system."""
    a22, w23, a33, a44 = _shifted(w, ch)
    t1, t2 = ch.t1, ch.t2
    s = a33 * a44 - t2 * t2
    d = a22 * s - w23 * w23 * a44
    if abs(d) < DENOM_FLOOR:
        raise DegenerateDenominatorError(f"reduced-system determinant |D|={abs(d):.3e} too small")
    phi2 = -s * t1 * phi1 / d
    phi3 = w23 * a44 * t1 * phi1 / d
    phi4 = -w23 * t2 * t1 * phi1 / d
    return ReactionAmplitudes(phi1=complex(phi1), phi2=phi2, phi3=phi3, phi4=phi4)


def fluxes(amp: ReactionAmplitudes, ch: ChannelParams) -> tuple[float, float]:
    """Bond currents (phi_12, phi_34), positive toward the absorbers."""
    f12 = 2.0 * ch.t1 * (amp.phi1 * np.conj(amp.phi2)).imag
    f34 = 2.0 * ch.t2 * (amp.phi3 * np.conj(amp.phi4)).imag
    return float(f12), float(f34)


def p_b_closed(w22, w23, w33, w44, t2, energy=0.0):
    """Vectorized closed-form decay probability.

    Returns (p_b, den, s) where den is the real denominator (negative
    for absorbing reservoirs) and s the pair determinant; callers use
    den to detect degenerate draws.  No exceptions are raised here so
    ensemble chunks can post-filter.
    """
    a22 = np.asarray(w22) - energy
    a33 = np.asarray(w33) - energy
    a44 = np.asarray(w44) - energy
    w23 = np.asarray(w23)
    t2sq = t2 * t2
    s = a33 * a44 - t2sq
    num = t2sq * np.abs(w23) ** 2 * a44.imag
    den = a22.imag * np.abs(s) ** 2 - (w23 * w23 * a44 * np.conj(s)).imag
    with np.errstate(divide="ignore", invalid="ignore"):
        pb = num / den
    return pb, den, s


def p_b(w: SelfEnergySet, t2: float) -> float:
    """Closed-form decay probability of one draw."""
    pb, den, _ = p_b_closed(w.w22, w.w23, w.w33, w.w44, t2, energy=w.energy)
    if abs(den) < DENOM_FLOOR or not np.isfinite(pb):
        raise DegenerateDenominatorError(f"decay-probability denominator {den!r} too small")
    return float(pb)


def branching_ratio(result: ReactionResult) -> float:
    """B_r = P_b / (1 - P_b); diverges at P_b = 1."""
    if result.p_b >= 1.0:
        raise BranchingOverflowError(f"P_b = {result.p_b!r} leaves no surviving flux")
    return result.p_b / (1.0 - result.p_b)


def reaction_from_self_energies(
    w: SelfEnergySet, ch: ChannelParams, phi1: complex = 1.0
) -> ReactionResult:
    """Amplitudes, fluxes and P_b of one draw via the reduced system."""
    a22, w23, a33, a44 = _shifted(w, ch)
    amp = reduced_solve(w, ch, phi1)
    f12, f34 = fluxes(amp, ch)
    if f12 <= 0.0:
        raise DegenerateDenominatorError(f"entrance flux {f12!r} is not positive")
    pb = f34 / f12
    s = a33 * a44 - ch.t2 * ch.t2
    d = a22 * s - w23 * w23 * a44
    result = ReactionResult(flux_12=f12, flux_34=f34, p_b=pb, b_r=0.0, denom=d, s=s)
    return ReactionResult(
        flux_12=f12, flux_34=f34, p_b=pb, b_r=branching_ratio(result), denom=d, s=s
    )


def full_chain_oracle(
    h_a: np.ndarray,
    h_b: np.ndarray,
    v2: np.ndarray,
    v3: np.ndarray,
    v4: np.ndarray,
    ch: ChannelParams,
    gamma_a: float,
    gamma_b: float,
    phi1: complex = 1.0,
) -> ReactionResult:
    """Solve the unreduced chain and report fluxes plus absorption.

    Builds the full (2 + Na + 2 + Nb)-dimensional complex system with
    phi1 held fixed and solves it directly; no self-energy reduction is
    involved, which makes this the independent oracle for the reduced
    route.  absorbed_a/b are the absorption rates gamma * sum |psi|^2,
    satisfying flux_12 = absorbed_a + flux_34 and
    flux_34 = absorbed_b.
    """
    h_a = np.asarray(h_a, dtype=float)
    h_b = np.asarray(h_b, dtype=float)
    na, nb = h_a.shape[0], h_b.shape[0]
    if h_a.shape != (na, na) or h_b.shape != (nb, nb):
        raise ValueError("reservoir matrices must be square")
    v2 = np.asarray(v2, dtype=float)
    v3 = np.asarray(v3, dtype=float)
    v4 = np.asarray(v4, dtype=float)
    if v2.shape != (na,) or v3.shape != (na,):
        raise ValueError("v2 and v3 must match the dimension of reservoir a")
    if v4.shape != (nb,):
        raise ValueError("v4 must match the dimension of reservoir b")
    if gamma_a <= 0.0 or gamma_b <= 0.0:
        raise ValueError("absorption widths must be > 0")

    d = 2 + na + 2 + nb
    i2 = 1
    slc_a = slice(2, 2 + na)
    i3 = 2 + na
    i4 = 3 + na
    slc_b = slice(4 + na, 4 + na + nb)

    ham = np.zeros((d, d), dtype=complex)
    ham[0, i2] = ham[i2, 0] = ch.t1
    ham[i2, slc_a] = v2
    ham[slc_a, i2] = v2
    ham[slc_a, slc_a] = h_a - 0.5j * gamma_a * np.eye(na)
    ham[slc_a, i3] = v3
    ham[i3, slc_a] = v3
    ham[i3, i4] = ham[i4, i3] = ch.t2
    ham[i4, slc_b] = v4
    ham[slc_b, i4] = v4
    ham[slc_b, slc_b] = h_b - 0.5j * gamma_b * np.eye(nb)

    mat = ham - ch.energy * np.eye(d)
    try:
        x = np.linalg.solve(mat[1:, 1:], -mat[1:, 0] * phi1)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"full chain system of order {d - 1} is singular at E={ch.energy!r}"
        ) from exc
    psi = np.concatenate(([complex(phi1)], x))

    amp = ReactionAmplitudes(phi1=psi[0], phi2=psi[i2], phi3=psi[i3], phi4=psi[i4])
    f12, f34 = fluxes(amp, ch)
    absorbed_a = gamma_a * float(np.sum(np.abs(psi[slc_a]) ** 2))
    absorbed_b = gamma_b * float(np.sum(np.abs(psi[slc_b]) ** 2))
    if f12 <= 0.0:
        raise DegenerateDenominatorError(f"entrance flux {f12!r} is not positive")
    pb = f34 / f12

    # Self-energy diagnostics from direct resolvent solves.
    shift_a = (ch.energy + 0.5j * gamma_a) * np.eye(na) - h_a
    sols = np.linalg.solve(shift_a, np.column_stack([v2, v3]).astype(complex))
    w22 = complex(v2 @ sols[:, 0])
    w23 = complex(v2 @ sols[:, 1])
    w33 = complex(v3 @ sols[:, 1])
    shift_b = (ch.energy + 0.5j * gamma_b) * np.eye(nb) - h_b
    w44 = complex(v4 @ np.linalg.solve(shift_b, v4.astype(complex)))
    e = ch.energy
    s = (w33 - e) * (w44 - e) - ch.t2 * ch.t2
    dden = (w22 - e) * s - w23 * w23 * (w44 - e)

    result = ReactionResult(
        flux_12=f12,
        flux_34=f34,
        p_b=pb,
        b_r=0.0,
        denom=dden,
        s=s,
        absorbed_a=absorbed_a,
        absorbed_b=absorbed_b,
    )
    return ReactionResult(
        flux_12=f12,
        flux_34=f34,
        p_b=pb,
        b_r=branching_ratio(result),
        denom=dden,
        s=s,
        absorbed_a=absorbed_a,
        absorbed_b=absorbed_b,
    )


def reaction_csv_row(sample_id: int, result: ReactionResult, w: SelfEnergySet) -> str:
    """One per-sample record row (header REACTION_CSV_HEADER)."""
    cells = [
        str(int(sample_id)),
        repr(float(result.p_b)),
        repr(float(result.b_r)),
        repr(float(result.flux_12)),
        repr(float(result.flux_34)),
        repr(float(w.w23.real)),
        repr(float(w.w23.imag)),
        repr(float(w.w22.imag)),
        repr(float(w.w44.imag)),
    ]
    return ",".join(cells)
