"""Closed-form band integrals and self-energy moments.

The ensemble averages of the channel self-energies reduce to integrals
of the semicircle density.  In units of the band edge (x = E'/E_m,
y = Gamma / (2 E_m), z the complex probe energy over E_m) the four
that appear are

    I1(z) = int_-1^1 sqrt(1-x^2) / (z - x) dx
          = pi (z - sqrt(z+1) sqrt(z-1)),
    I2(y) = int_-1^1 sqrt(1-x^2) / (x^2+y^2)^2 dx
          = pi / (2 y^3 sqrt(1+y^2)),
    I3(y) = int_-1^1 x^2 sqrt(1-x^2) / (x^2+y^2)^2 dx
          ~ pi / (2 y)           (small y),
    I4(y) = int_-1^1 sqrt(1-x^2) / (x^2+y^2) dx
          = (pi / y) (sqrt(1+y^2) - y).

Every closed form is paired with an adaptive-quadrature oracle (after
the substitution x = sin theta, which removes the edge singularities).
Exact forms must agree with quadrature to 1e-8 relative; leading
asymptotic forms carry validity windows and are only trusted to 1%
inside them.

At band center and to leading order in y these integrals give the
self-energy moment table used to validate the sampler:

    <w_kk>          = -i pi v_k^2 rho0
    SD(Re w_kk)     = SD(Im w_kk)  = sqrt(2 pi v_k^4 rho0 / Gamma)
    SD(Re w_kk')    = SD(Im w_kk') = sqrt(pi v_k^2 v_k'^2 rho0 / Gamma)
    <|w_kk'|^2>     = SD(|w_kk'|^2) = 2 pi v_k^2 v_k'^2 rho0 / Gamma
    SD(Re w_kk'^2)  = SD(Im w_kk'^2) = 2 pi v_k^2 v_k'^2 rho0 / Gamma
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .rmt import ReservoirParams

INTEGRALS_CSV_HEADER = "id,arg,closed_form,quadrature,rel_err,regime_flag"

# validity windows of the leading asymptotic forms (1% accuracy inside)
VALIDITY = {
    "I1_small": 0.008,  # |z| <= this
    "I1_large": 8.0,    # |z| >= this
    "I2_small": 0.1,    # y <= this
    "I3_small": 0.004,
    "I4_small": 0.008,
}

_QUAD_OPTS = dict(epsabs=0.0, epsrel=1e-11, limit=800)


@dataclass(frozen=True)
class IntegralValue:
    """One verification row: closed form against quadrature.

    regime_flag is 'exact' for mathematically exact closed forms,
    'asymptotic' for a leading form inside its validity window, and
    'extrapolated' for a leading form evaluated outside it (no
    accuracy promise).
    """

    name: str
    argument: complex
    closed_form: complex
    quadrature: complex
    rel_err: float
    regime_flag: str


def _check_y(y: float) -> float:
    y = float(y)
    if not (math.isfinite(y) and y > 0.0):
        raise ValueError("y must be finite and > 0")
    return y


def integral_i1(z) -> complex:
    """Exact I1(z); the branch cut is the band z in [-1, 1]."""
    z = complex(z)
    if z.imag == 0.0 and abs(z.real) <= 1.0:
        raise ValueError("z on the branch cut [-1, 1]; I1 undefined there")
    return math.pi * (z - cmath.sqrt(z + 1.0) * cmath.sqrt(z - 1.0))


def integral_i2(y: float) -> float:
    """Exact I2(y) = pi / (2 y^3 sqrt(1+y^2))."""
    y = _check_y(y)
    return math.pi / (2.0 * y**3 * math.sqrt(1.0 + y * y))


def integral_i3_small(y: float) -> float:
    """Leading small-y form I3 ~ pi / (2 y); relative error ~2y."""
    y = _check_y(y)
    return math.pi / (2.0 * y)


def integral_i4(y: float) -> float:
    """Exact I4(y) = (pi / y) (sqrt(1+y^2) - y)."""
    y = _check_y(y)
    return (math.pi / y) * (math.sqrt(1.0 + y * y) - y)


def asymptotic_i1_small(z) -> complex:
    """I1 for |z| -> 0 off the cut: -i pi above it, +i pi below."""
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError("small-z form needs z off the real axis")
    return -1j * math.pi if z.imag > 0.0 else 1j * math.pi


def asymptotic_i1_large(z) -> complex:
    """I1 for |z| -> infinity: pi / (2 z)."""
    z = complex(z)
    if z == 0.0:
        raise ValueError("z must be nonzero")
    return math.pi / (2.0 * z)


def asymptotic_i2_small(y: float) -> float:
    y = _check_y(y)
    return math.pi / (2.0 * y**3)


def asymptotic_i4_small(y: float) -> float:
    y = _check_y(y)
    return math.pi / y


def integral_i1_quad(z) -> complex:
    """Adaptive-quadrature oracle for I1 (x = sin theta)."""
    z = complex(z)
    if z.imag == 0.0 and abs(z.real) <= 1.0:
        raise ValueError("z on the branch cut [-1, 1]; I1 undefined there")

    def f(theta):
        c = math.cos(theta)
        return c * c / (z - math.sin(theta))

    pts = None
    if abs(z.real) < 1.0:
        # near-cut probe: split at the closest approach of the path
        pts = [math.asin(z.real)]
    with warnings.catch_warnings():
        # roundoff warnings fire on extreme peaks; accuracy is checked
        # against the exact forms instead
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(
            f, -0.5 * math.pi, 0.5 * math.pi, points=pts, complex_func=True, **_QUAD_OPTS
        )
    return complex(val)


def _quad_even_peaked(g, y: float) -> float:
    """Quadrature of cos^2(theta) g(sin^2 theta) with a peak at 0."""

    def f(theta):
        c = math.cos(theta)
        s = math.sin(theta)
        return c * c * g(s * s)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(f, -0.5 * math.pi, 0.5 * math.pi, points=[0.0], **_QUAD_OPTS)
    return float(val)


def integral_i2_quad(y: float) -> float:
    y = _check_y(y)
    y2 = y * y
    return _quad_even_peaked(lambda s2: 1.0 / (s2 + y2) ** 2, y)


def integral_i3_quad(y: float) -> float:
    y = _check_y(y)
    y2 = y * y
    return _quad_even_peaked(lambda s2: s2 / (s2 + y2) ** 2, y)


def integral_i4_quad(y: float) -> float:
    y = _check_y(y)
    y2 = y * y
    return _quad_even_peaked(lambda s2: 1.0 / (s2 + y2), y)


def _row(name: str, arg, closed, quadrature, flag: str) -> IntegralValue:
    closed = complex(closed)
    quadrature = complex(quadrature)
    scale = abs(quadrature)
    rel = abs(closed - quadrature) / scale if scale > 0.0 else abs(closed - quadrature)
    return IntegralValue(
        name=name,
        argument=complex(arg),
        closed_form=closed,
        quadrature=quadrature,
        rel_err=float(rel),
        regime_flag=flag,
    )


def integrals_i2_i3_i4(y: float) -> tuple[IntegralValue, IntegralValue, IntegralValue]:
    """Verification rows for I2 (exact), I3 (small-y form), I4 (exact)."""
    y = _check_y(y)
    flag3 = "asymptotic" if y <= VALIDITY["I3_small"] else "extrapolated"
    return (
        _row("I2", y, integral_i2(y), integral_i2_quad(y), "exact"),
        _row("I3", y, integral_i3_small(y), integral_i3_quad(y), flag3),
        _row("I4", y, integral_i4(y), integral_i4_quad(y), "exact"),
    )


def verification_table(i1_args=None, y_grid=None) -> list[IntegralValue]:
    """Exact and asymptotic rows over default argument grids.

    I1 is probed along the imaginary axis (the physical case: purely
    absorptive energies) plus a few real points outside the band; I2,
    I3, I4 over three decades of y.  Asymptotic rows are flagged by
    their validity windows.
    """
    if i1_args is None:
        i1_args = [1j * y for y in np.logspace(-2.0, 1.0, 7)] + [1.5, 5.0, 20.0]
    if y_grid is None:
        y_grid = list(np.logspace(-3.0, 0.0, 7))
    rows: list[IntegralValue] = []
    for z in i1_args:
        z = complex(z)
        q = integral_i1_quad(z)
        rows.append(_row("I1", z, integral_i1(z), q, "exact"))
        if z.imag != 0.0:
            flag = "asymptotic" if abs(z) <= VALIDITY["I1_small"] else "extrapolated"
            rows.append(_row("I1_small", z, asymptotic_i1_small(z), q, flag))
        flag = "asymptotic" if abs(z) >= VALIDITY["I1_large"] else "extrapolated"
        rows.append(_row("I1_large", z, asymptotic_i1_large(z), q, flag))
    for y in y_grid:
        y = float(y)
        r2, r3, r4 = integrals_i2_i3_i4(y)
        q2, q3, q4 = r2.quadrature, r3.quadrature, r4.quadrature
        rows.extend([r2, r3, r4])
        flag = "asymptotic" if y <= VALIDITY["I2_small"] else "extrapolated"
        rows.append(_row("I2_small", y, asymptotic_i2_small(y), q2, flag))
        flag = "asymptotic" if y <= VALIDITY["I4_small"] else "extrapolated"
        rows.append(_row("I4_small", y, asymptotic_i4_small(y), q4, flag))
    return rows


@dataclass(frozen=True)
class AnalyticMoments:
    """Closed-form self-energy moments at band center, leading order.

    Field names mirror the sampled MomentSummary: diag_* refers to
    w_kk, off_* and the |w|^2 / w^2 moments to w_kk' with independent
    coupling vectors.
    """

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


def table1_moments(v_k: float, v_kp: float, params: ReservoirParams) -> AnalyticMoments:
    """Moment table entries for coupling scales (v_k, v_k').

    Valid in the many-level regime rho0 * Gamma >> 1 with the probe at
    band center.  The density scale is rho0 = sqrt(N) / (pi v).
    """
    v_k = float(v_k)
    v_kp = float(v_kp)
    if v_k < 0.0 or v_kp < 0.0:
        raise ValueError("coupling scales must be >= 0")
    rho0 = params.rho0
    gamma = params.gamma
    diag_var = 2.0 * math.pi * v_k**4 * rho0 / gamma
    off_var = math.pi * v_k**2 * v_kp**2 * rho0 / gamma
    abs2 = 2.0 * off_var
    return AnalyticMoments(
        diag_mean=-1j * math.pi * v_k**2 * rho0,
        diag_re_sd=math.sqrt(diag_var),
        diag_im_sd=math.sqrt(diag_var),
        off_re_sd=math.sqrt(off_var),
        off_im_sd=math.sqrt(off_var),
        abs2_mean=abs2,
        abs2_sd=abs2,
        sq_mean=0.0 + 0.0j,
        sq_re_sd=abs2,
        sq_im_sd=abs2,
    )


def integral_csv_row(row: IntegralValue) -> str:
    """One verification-table CSV row (header INTEGRALS_CSV_HEADER)."""

    def fmt_c(c: complex) -> str:
        if c.imag == 0.0:
            return repr(float(c.real))
        return f"{c!r}".replace(",", ";")

    return ",".join(
        [
            row.name,
            fmt_c(row.argument),
            fmt_c(row.closed_form),
            fmt_c(row.quadrature),
            repr(float(row.rel_err)),
            row.regime_flag,
        ]
    )
