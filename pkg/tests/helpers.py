"""Shared construction helpers for the test suite."""

from __future__ import annotations

import numpy as np

from goereact import (
    ChannelParams,
    RandomStream,
    ReservoirParams,
    eig_sym,
    sample_coupling,
    sample_goe,
    self_energy_set,
)


def draw_system(
    seed: int,
    substream: int,
    na: int = 8,
    nb: int = 6,
    ch: ChannelParams | None = None,
    gamma_a: float = 0.15,
    gamma_b: float = 0.09,
    v_a: float = 0.3,
    v_b: float = 0.25,
):
    """One full random two-reservoir system plus its self-energy set."""
    if ch is None:
        ch = ChannelParams(t1=1.0, t2=0.8, v2=0.3, v3=0.25, v4=0.2, energy=0.0)
    pa = ReservoirParams(n=na, v=v_a, gamma=gamma_a)
    pb = ReservoirParams(n=nb, v=v_b, gamma=gamma_b)
    st = RandomStream(seed, substream)
    ha = sample_goe(pa, st)
    v2 = sample_coupling(pa, ch.v2, st)
    v3 = sample_coupling(pa, ch.v3, st)
    hb = sample_goe(pb, st)
    v4 = sample_coupling(pb, ch.v4, st)
    w = self_energy_set(eig_sym(ha), v2, v3, eig_sym(hb), v4, ch.energy, gamma_a, gamma_b)
    return ha, hb, v2, v3, v4, ch, pa, pb, w


def synthetic_chi2_runs(nu: int, n_runs: int, n_samples: int, seed: int) -> np.ndarray:
    """(n_runs, n_samples) draws from the chi-squared family, mean 1.

    Built from squared standard normals, which is an independent route
    from the pdf/cdf implementations under test.
    """
    out = np.empty((n_runs, n_samples))
    for r in range(n_runs):
        z = RandomStream(seed, r).standard_normal(nu * n_samples)
        out[r] = (z.reshape(n_samples, nu) ** 2).mean(axis=1)
    return out
