import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpt_dq.errors import SingularSystem
from wpt_dq.params import OperatingPoint, reference_params
from wpt_dq.phasor import (
    PhasorSolution,
    frequency_sweep,
    receiver_branch_impedance,
    solve_complex,
    solve_steady_state,
    steady_state_matrix,
    steady_state_phasors,
    transmitter_reactance,
    wrap_phase,
)

W105 = 2 * math.pi * 105e3
U_S = 80.0 / math.pi


def test_receiver_impedance_shorted_load():
    p = reference_params(9e-6, R_L=1e-12)
    assert receiver_branch_impedance(p, W105) == pytest.approx(p.R_r + 1j * W105 * p.L_r, abs=1e-9)


def test_receiver_impedance_open_capacitor():
    p = reference_params(9e-6).replace(C_r=1e-30)
    assert receiver_branch_impedance(p, W105) == pytest.approx(p.R_r + 1j * W105 * p.L_r + p.R_L, rel=1e-12)


def test_receiver_impedance_reference_value():
    # R_r + jwL_r + 1/(1/R_L + jwC_r), evaluated by hand
    z = receiver_branch_impedance(reference_params(9e-6), W105)
    assert z == pytest.approx(11.869154305487223 + 4.174116883109242j, rel=1e-12)
    assert abs(z) == pytest.approx(12.581735797628383, rel=1e-12)


def test_decoupled_transmitter():
    p = reference_params(0.0)
    sol = solve_steady_state(p, OperatingPoint(W105, U_S))
    assert sol.I_r_amp == 0.0 and sol.I_c_amp == 0.0
    assert sol.I_t_amp == pytest.approx(U_S / abs(p.R_t + 1j * transmitter_reactance(p, W105)), rel=1e-13)


def test_unforced_circuit_is_zero():
    sol = solve_steady_state(reference_params(9e-6), OperatingPoint(W105, 0.0))
    assert sol.amplitudes() == (0.0, 0.0, 0.0)


def test_solve_complex_against_numpy():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    assert np.allclose(solve_complex(A, b), np.linalg.solve(A, b), rtol=1e-12)


def test_solve_complex_needs_pivoting():
    A = [[0.0, 1.0], [1.0, 0.0]]
    assert np.allclose(solve_complex(A, [2.0, 3.0]), [3.0, 2.0])


def test_singular_system_raises():
    with pytest.raises(SingularSystem):
        solve_complex([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


def test_sweep_reports_offending_frequency(monkeypatch):
    import wpt_dq.phasor as ph

    def boom(params, op):
        raise SingularSystem("forced")

    monkeypatch.setattr(ph, "solve_steady_state", boom)
    with pytest.raises(SingularSystem) as info:
        ph.frequency_sweep(reference_params(9e-6), U_S, [95e3])
    assert info.value.frequency == 95e3


def test_sweep_empty_and_single():
    p = reference_params(9e-6)
    assert frequency_sweep(p, U_S, []) == []
    [(f, sol)] = frequency_sweep(p, U_S, [105e3])
    assert f == 105e3
    assert sol == solve_steady_state(p, OperatingPoint(W105, U_S))


def test_sweep_order_and_resonance_peak():
    p = reference_params(9e-6)
    fs = np.linspace(85e3, 125e3, 81)
    out = frequency_sweep(p, U_S, fs)
    assert [f for f, _ in out] == list(fs)
    amps = np.array([s.I_r_amp for _, s in out])
    assert 95e3 < fs[np.argmax(amps)] < 115e3


def test_phase_convention_matches_time_waveform():
    sol = solve_steady_state(reference_params(9e-6), OperatingPoint(W105, U_S))
    I_t = sol.phasors()[0]
    t = np.linspace(0, 1e-5, 7)
    assert np.allclose(
        (I_t * np.exp(1j * W105 * t)).real, sol.I_t_amp * np.cos(W105 * t - sol.phi_t), atol=1e-12
    )


def test_wrap_phase_range():
    assert wrap_phase(-math.pi) == math.pi
    assert wrap_phase(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_phase(0.5) == 0.5


def test_roundtrip_phasors():
    sol = PhasorSolution.from_phasors(1 + 2j, -3j, -0.5 + 0.1j)
    assert np.allclose(sol.phasors(), [1 + 2j, -3j, -0.5 + 0.1j])


freq = st.floats(60e3, 150e3)
mutual = st.floats(0.0, 30e-6)
load = st.floats(5.0, 500.0)


@settings(max_examples=60, deadline=None)
@given(freq, mutual, load, st.floats(0.01, 100.0))
def test_linearity_in_source(f, M, R_L, a):
    p = reference_params(M, R_L)
    s1 = solve_steady_state(p, OperatingPoint.at_frequency(f, U_S))
    s2 = solve_steady_state(p, OperatingPoint.at_frequency(f, a * U_S))
    assert np.allclose(s2.amplitudes(), np.multiply(a, s1.amplitudes()), rtol=1e-12, atol=0)
    for p1, p2, amp in zip(s1.phases(), s2.phases(), s1.amplitudes()):
        if amp > 0:
            assert abs(math.remainder(p1 - p2, 2 * math.pi)) < 1e-9


@settings(max_examples=60, deadline=None)
@given(freq, mutual, load)
def test_residual_of_mesh_equations(f, M, R_L):
    p = reference_params(M, R_L)
    w = 2 * math.pi * f
    I_t, I_r, I_c = steady_state_phasors(p, OperatingPoint(w, U_S))
    terms = [
        (p.R_t * I_t, 1j * transmitter_reactance(p, w) * I_t, 1j * w * M * I_r, -U_S),
        (p.R_r * I_r, 1j * w * p.L_r * I_r, 1j * w * M * I_t, (I_r - I_c) * R_L),
        (I_c / (1j * w * p.C_r), -(I_r - I_c) * R_L),
    ]
    for eq in terms:
        scale = max(abs(x) for x in eq)
        assert abs(sum(eq)) <= 1e-10 * scale


def test_matrix_is_symmetric_in_coupling():
    A = steady_state_matrix(reference_params(9e-6), W105)
    assert A[0, 1] == A[1, 0] == pytest.approx(1j * W105 * 9e-6)
    assert cmath.isclose(A[2, 1], -100.0)
