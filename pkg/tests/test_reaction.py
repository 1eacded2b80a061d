"""Reduced channel chain: amplitudes, fluxes, decay probability."""

import numpy as np
import pytest

from goereact import (
    BranchingOverflowError,
    ChannelParams,
    DegenerateDenominatorError,
    RandomStream,
    ReactionResult,
    REACTION_CSV_HEADER,
    SelfEnergySet,
    SingularSystemError,
    branching_ratio,
    fluxes,
    full_chain_oracle,
    p_b,
    p_b_closed,
    reaction_csv_row,
    reaction_from_self_energies,
    reduced_matrix,
    reduced_solve,
)
from helpers import draw_system


def random_w_set(seed: int, energy: float = 0.0) -> SelfEnergySet:
    """Synthetic but realizable self-energy set.

    Built from explicit pole sums so the 2x2 imaginary block keeps the
    Gram structure of a real spectral decomposition; arbitrary complex
    w23 can otherwise violate passivity and push the entrance flux
    negative.
    """
    r = RandomStream(seed, 0)
    poles_a = 2.0 * r.standard_normal(6)
    c2 = 0.4 * r.standard_normal(6)
    c3 = 0.4 * r.standard_normal(6)
    poles_b = 2.0 * r.standard_normal(6)
    c4 = 0.4 * r.standard_normal(6)
    ga = gb = 0.4
    da = energy - poles_a + 0.5j * ga
    db = energy - poles_b + 0.5j * gb
    return SelfEnergySet(
        w22=complex(np.sum(c2 * c2 / da)),
        w23=complex(np.sum(c2 * c3 / da)),
        w33=complex(np.sum(c3 * c3 / da)),
        w44=complex(np.sum(c4 * c4 / db)),
        energy=energy,
        gamma_a=ga,
        gamma_b=gb,
    )


def test_channel_params_validation():
    with pytest.raises(ValueError):
        ChannelParams(t1=0.0, t2=1.0, v2=0.1, v3=0.1, v4=0.1)
    with pytest.raises(ValueError):
        ChannelParams(t1=1.0, t2=float("inf"), v2=0.1, v3=0.1, v4=0.1)
    with pytest.raises(ValueError):
        ChannelParams(t1=1.0, t2=1.0, v2=-0.1, v3=0.1, v4=0.1)
    ChannelParams(t1=-2.0, t2=0.0, v2=0.0, v3=0.1, v4=0.1, energy=-0.5)


@pytest.mark.parametrize("energy", [0.0, 0.37, -0.2])
def test_reduced_solve_satisfies_linear_system(energy):
    ch = ChannelParams(t1=1.3, t2=-0.6, v2=0.1, v3=0.1, v4=0.1, energy=energy)
    for seed in range(40):
        w = random_w_set(seed, energy=energy)
        amp = reduced_solve(w, ch, phi1=0.8 - 0.3j)
        m = reduced_matrix(w, ch)
        phi = np.array([amp.phi2, amp.phi3, amp.phi4])
        rhs = np.array([-ch.t1 * amp.phi1, 0.0, 0.0])
        assert np.abs(m @ phi - rhs).max() < 1e-10 * max(1.0, np.abs(rhs).max())


def test_reduced_solve_energy_mismatch_rejected():
    ch = ChannelParams(t1=1.0, t2=1.0, v2=0.1, v3=0.1, v4=0.1, energy=0.1)
    with pytest.raises(ValueError):
        reduced_solve(random_w_set(0, energy=0.0), ch)


def test_degenerate_determinant_raises():
    w = SelfEnergySet(w22=0.0j, w23=0.0j, w33=0.0j, w44=0.0j)
    ch = ChannelParams(t1=1.0, t2=0.0, v2=0.1, v3=0.1, v4=0.1)
    with pytest.raises(DegenerateDenominatorError):
        reduced_solve(w, ch)
    with pytest.raises(DegenerateDenominatorError):
        p_b(w, ch.t2)


def test_fluxes_vanish_for_real_amplitudes():
    from goereact import ReactionAmplitudes

    ch = ChannelParams(t1=1.0, t2=0.7, v2=0.1, v3=0.1, v4=0.1)
    amp = ReactionAmplitudes(phi1=1.0, phi2=0.5, phi3=-0.3, phi4=0.2)
    f12, f34 = fluxes(amp, ch)
    assert f12 == 0.0
    assert f34 == 0.0


def test_closed_form_matches_flux_ratio():
    ch = ChannelParams(t1=0.9, t2=0.45, v2=0.1, v3=0.1, v4=0.1, energy=0.12)
    for seed in range(100, 160):
        w = random_w_set(seed, energy=ch.energy)
        res = reaction_from_self_energies(w, ch)
        assert res.flux_12 > 0.0
        assert res.flux_34 >= 0.0
        assert p_b(w, ch.t2) == pytest.approx(res.p_b, rel=1e-10)
        assert res.b_r == pytest.approx(res.p_b / (1.0 - res.p_b), rel=1e-12)


def test_closed_branch_off():
    ch = ChannelParams(t1=1.0, t2=0.0, v2=0.1, v3=0.1, v4=0.1)
    w = random_w_set(7)
    res = reaction_from_self_energies(w, ch)
    assert res.flux_34 == 0.0
    assert res.p_b == 0.0
    assert res.b_r == 0.0
    w0 = SelfEnergySet(
        w22=w.w22, w23=0.0j, w33=w.w33, w44=w.w44, gamma_a=w.gamma_a, gamma_b=w.gamma_b
    )
    res0 = reaction_from_self_energies(w0, ChannelParams(t1=1.0, t2=0.8, v2=0.1, v3=0.1, v4=0.1))
    assert res0.p_b == 0.0


def test_branching_ratio_identities():
    res = ReactionResult(flux_12=1.0, flux_34=0.25, p_b=0.25, b_r=0.0, denom=1j, s=1j)
    assert branching_ratio(res) == pytest.approx(1.0 / 3.0, rel=1e-14)
    sat = ReactionResult(flux_12=1.0, flux_34=1.0, p_b=1.0, b_r=0.0, denom=1j, s=1j)
    with pytest.raises(BranchingOverflowError):
        branching_ratio(sat)


def test_decay_probability_within_unit_interval():
    ch = ChannelParams(t1=1.0, t2=0.85, v2=0.1, v3=0.1, v4=0.1, energy=0.05)
    for seed in range(300, 500):
        w = random_w_set(seed, energy=ch.energy)
        val = p_b(w, ch.t2)
        assert 0.0 <= val <= 1.0


def test_p_b_closed_vectorizes():
    ws = [random_w_set(s) for s in range(20)]
    t2 = 0.6
    vec, den, _ = p_b_closed(
        np.array([w.w22 for w in ws]),
        np.array([w.w23 for w in ws]),
        np.array([w.w33 for w in ws]),
        np.array([w.w44 for w in ws]),
        t2,
    )
    for i, w in enumerate(ws):
        assert vec[i] == pytest.approx(p_b(w, t2), rel=1e-12)
    assert np.all(den < 0.0)  # absorbing reservoirs drive the sign


@pytest.mark.parametrize("energy", [0.0, 0.21])
def test_full_chain_matches_reduced_route(energy):
    ch = ChannelParams(t1=1.1, t2=-0.7, v2=0.3, v3=0.25, v4=0.2, energy=energy)
    for i in range(30):
        ha, hb, v2, v3, v4, _, pa, pb_, w = draw_system(900 + i, i, na=4, nb=4, ch=ch)
        reduced = reaction_from_self_energies(w, ch)
        oracle = full_chain_oracle(ha, hb, v2, v3, v4, ch, pa.gamma, pb_.gamma)
        assert oracle.p_b == pytest.approx(reduced.p_b, rel=1e-10)
        assert oracle.flux_12 == pytest.approx(reduced.flux_12, rel=1e-10)
        assert oracle.flux_34 == pytest.approx(reduced.flux_34, rel=1e-10, abs=1e-300)
        assert oracle.denom == pytest.approx(reduced.denom, rel=1e-10)


def test_full_chain_flux_conservation():
    ch = ChannelParams(t1=1.0, t2=0.8, v2=0.3, v3=0.25, v4=0.2, energy=0.0)
    for i in range(50):
        ha, hb, v2, v3, v4, _, pa, pb_, _ = draw_system(950 + i, i, ch=ch)
        r = full_chain_oracle(ha, hb, v2, v3, v4, ch, pa.gamma, pb_.gamma)
        assert r.flux_12 == pytest.approx(r.absorbed_a + r.flux_34, rel=1e-8)
        assert r.flux_34 == pytest.approx(r.absorbed_b, rel=1e-8)
        assert 0.0 <= r.p_b <= 1.0


def test_full_chain_entrance_amplitude_invariance():
    ha, hb, v2, v3, v4, ch, pa, pb_, _ = draw_system(977, 0)
    r1 = full_chain_oracle(ha, hb, v2, v3, v4, ch, pa.gamma, pb_.gamma, phi1=1.0)
    r2 = full_chain_oracle(ha, hb, v2, v3, v4, ch, pa.gamma, pb_.gamma, phi1=2.5 - 0.7j)
    assert r2.p_b == pytest.approx(r1.p_b, rel=1e-12)
    # fluxes scale with |phi1|^2
    scale = abs(2.5 - 0.7j) ** 2
    assert r2.flux_12 == pytest.approx(scale * r1.flux_12, rel=1e-12)


def test_full_chain_coupling_sign_invariance():
    ha, hb, v2, v3, v4, ch, pa, pb_, _ = draw_system(978, 0)
    r1 = full_chain_oracle(ha, hb, v2, v3, v4, ch, pa.gamma, pb_.gamma)
    r2 = full_chain_oracle(ha, hb, v2, v3, -v4, ch, pa.gamma, pb_.gamma)
    assert r2.p_b == pytest.approx(r1.p_b, rel=1e-12)


def test_full_chain_decoupled_decay_site():
    # v3 = 0 closes the only path to the decay branch
    ha, hb, v2, _, v4, ch, pa, pb_, _ = draw_system(979, 0)
    r = full_chain_oracle(ha, hb, v2, np.zeros_like(v2), v4, ch, pa.gamma, pb_.gamma)
    assert r.p_b == pytest.approx(0.0, abs=1e-14)
    assert r.flux_34 == pytest.approx(0.0, abs=1e-14)


def test_full_chain_singular_system():
    # v2 = 0 at E = 0 zeroes the entrance row: the driven system is
    # exactly singular
    ha, hb, _, v3, v4, ch, pa, pb_, _ = draw_system(980, 0)
    with pytest.raises(SingularSystemError):
        full_chain_oracle(ha, hb, np.zeros_like(v3), v3, v4, ch, pa.gamma, pb_.gamma)


def test_full_chain_validation():
    ha, hb, v2, v3, v4, ch, pa, pb_, _ = draw_system(981, 0)
    with pytest.raises(ValueError):
        full_chain_oracle(ha, hb, v2[:-1], v3, v4, ch, pa.gamma, pb_.gamma)
    with pytest.raises(ValueError):
        full_chain_oracle(ha, hb, v2, v3, v4, ch, 0.0, pb_.gamma)


def test_reaction_csv_row_shape():
    w = random_w_set(3)
    ch = ChannelParams(t1=1.0, t2=0.5, v2=0.1, v3=0.1, v4=0.1)
    res = reaction_from_self_energies(w, ch)
    row = reaction_csv_row(17, res, w)
    cells = row.split(",")
    assert len(cells) == len(REACTION_CSV_HEADER.split(","))
    assert cells[0] == "17"
    assert float(cells[1]) == pytest.approx(res.p_b)
