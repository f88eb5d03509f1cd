import math

import numpy as np
import pytest

from epolsim import (
    EnvelopeSamples,
    LadderConfig,
    build_ladder,
    comb_state,
    coupling_from_envelope,
    energy_to_velocity,
)

D = 11
CFG = LadderConfig(rungs=D, center=5)


def test_shift_action():
    b = build_ladder(CFG).matrix
    vec = np.zeros(D)
    vec[CFG.center] = 1.0
    shifted = b @ vec
    assert shifted[CFG.center - 1] == 1.0
    assert np.sum(np.abs(shifted)) == 1.0


def test_shift_exactly_unitary():
    b = build_ladder(CFG).matrix
    assert np.array_equal(b.conj().T @ b, np.eye(D))
    assert np.array_equal(b @ b.conj().T, np.eye(D))


def test_full_cycle_is_identity():
    b = build_ladder(CFG).matrix
    assert np.array_equal(np.linalg.matrix_power(b, D), np.eye(D))


def test_comb_norm_and_eigenvector():
    b = build_ladder(CFG).matrix
    for m in range(D):
        phi = 2 * math.pi * m / D
        comb = comb_state(phi, CFG)
        assert abs(comb.norm() - 1.0) < 1e-14
        assert np.max(np.abs(b @ comb.amplitudes - np.exp(1j * phi) * comb.amplitudes)) < 1e-13


def test_comb_orthogonality():
    first = comb_state(0.0, CFG)
    second = comb_state(2 * math.pi / D, CFG)
    assert abs(first.overlap(second)) < 1e-13


def test_comb_fourier_basis():
    vectors = np.column_stack([comb_state(2 * math.pi * m / D, CFG).amplitudes for m in range(D)])
    gram = vectors.conj().T @ vectors
    assert np.max(np.abs(gram - np.eye(D))) < 1e-12


def test_ladder_validation():
    with pytest.raises(ValueError):
        LadderConfig(rungs=2, center=0)
    with pytest.raises(ValueError):
        LadderConfig(rungs=5, center=5)


def test_wrap_rungs():
    cfg = LadderConfig(rungs=33, center=16)
    wrap = set(cfg.wrap_rungs().tolist())
    assert wrap == {0, 1, 31, 32}


def test_energy_to_velocity_values():
    assert abs(energy_to_velocity(200.0) - 0.6953) < 1e-4
    assert abs(energy_to_velocity(20.0) - 0.2719) < 1e-4
    assert energy_to_velocity(0.0) == 0.0
    with pytest.raises(ValueError):
        energy_to_velocity(-1.0)


def _constant_envelope(length, n, amplitude=1.0, prefactor=1.0):
    z = np.linspace(0.0, length, n)
    return EnvelopeSamples(z, amplitude * np.ones(n, dtype=complex), prefactor=prefactor)


def test_zero_envelope():
    env = EnvelopeSamples(np.linspace(0, 1, 10), np.zeros(10, dtype=complex))
    assert coupling_from_envelope(env, 3.0) == 0


def test_constant_envelope_matches_analytic_integral():
    # analytic: |prefactor * E0 * integral_0^L e^{-iqz} dz| = p E0 L |sinc(qL/2)|
    length, amp, pref = 4.0, 1.3, 0.7
    env = _constant_envelope(length, 6001, amp, pref)
    for q in (0.0, 0.4, 1.1, 2.9):
        expected = pref * amp * length * abs(np.sinc(q * length / (2 * math.pi)))
        assert abs(abs(coupling_from_envelope(env, q)) - expected) < 1e-6


def test_phase_matched_envelope_peaks_at_q0():
    q0, length = 2.5, 40.0
    z = np.linspace(0.0, length, 8001)
    env = EnvelopeSamples(z, np.exp(1j * q0 * z))
    grid = np.linspace(q0 - 1.0, q0 + 1.0, 81)
    values = [abs(coupling_from_envelope(env, q)) for q in grid]
    assert grid[int(np.argmax(values))] == pytest.approx(q0, abs=1e-9)


def test_first_zero_at_phase_matching_bandwidth():
    # constant envelope: first zero of |g_q| at |q| = 2 pi / L
    length = 7.0
    env = _constant_envelope(length, 4001)
    q_zero = 2 * math.pi / length
    assert abs(coupling_from_envelope(env, q_zero)) < 1e-10
    assert abs(coupling_from_envelope(env, 0.5 * q_zero)) > 1e-2


def test_quadrature_convergence():
    q = 1.7
    coarse = coupling_from_envelope(_smooth_envelope(2000), q)
    fine = coupling_from_envelope(_smooth_envelope(4000), q)
    assert abs(fine - coarse) / abs(fine) < 1e-6


def _smooth_envelope(n):
    z = np.linspace(0.0, 5.0, n)
    return EnvelopeSamples(z, np.exp(-((z - 2.5) ** 2)) * np.exp(0.3j * z))


def test_envelope_validation():
    with pytest.raises(ValueError):
        EnvelopeSamples(np.array([0.0]), np.array([1.0 + 0j]))
    with pytest.raises(ValueError):
        EnvelopeSamples(np.array([0.0, 0.0, 1.0]), np.ones(3, dtype=complex))
    with pytest.raises(ValueError):
        EnvelopeSamples(np.array([0.0, 1.0]), np.ones(3, dtype=complex))


def test_envelope_csv_round_trip(tmp_path):
    z = np.linspace(0, 2, 5)
    re = np.cos(z)
    im = np.sin(z)
    three_col = tmp_path / "env3.csv"
    three_col.write_text("".join(f"{a},{b},{c}\n" for a, b, c in zip(z, re, im)))
    env = EnvelopeSamples.from_csv(three_col, prefactor=2.0)
    assert np.allclose(env.values, re + 1j * im)
    assert env.prefactor == 2.0
    two_col = tmp_path / "env2.csv"
    two_col.write_text("".join(f"{a},{b}\n" for a, b in zip(z, re)))
    env2 = EnvelopeSamples.from_csv(two_col)
    assert np.allclose(env2.values, re)
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3,4\n5,6,7,8\n")
    with pytest.raises(ValueError):
        EnvelopeSamples.from_csv(bad)
