import math

import numpy as np
import pytest

from wpt_dq.dq_model import DqInput, dq_steady_state
from wpt_dq.errors import IdentificationError, InsufficientSamples, NegativeRadicand, RateMismatch
from wpt_dq.identify import (
    identify_from_state,
    identify_M,
    receiver_emf_magnitude,
    relative_error,
    solve_mutual_inductance,
    transmitter_back_emf_terms,
)
from wpt_dq.oracle import DRIVE_THETA0, SampledTrace, simulate_cycles
from wpt_dq.params import DriveSpec, OperatingPoint, fundamental_voltage, reference_params
from wpt_dq.phasor import solve_steady_state
from wpt_dq.runner import identification_point
from wpt_dq.transforms import DqSampleStream, moving_average, stream_to_dq

F = 105e3
K_GRID = (0.10, 0.12, 0.14, 0.16, 0.18, 0.20)


def m_from_k(k):
    p = reference_params(0.0)
    return k * math.sqrt(p.L_t * p.L_r)


def phasor_terms(params, drive):
    I_t, I_r, _ = solve_steady_state(params, OperatingPoint.from_drive(drive)).phasors()
    wM = drive.omega * params.M
    return -wM * I_r.imag, wM * I_r.real, abs(I_t), abs(I_r)


def test_receiver_emf_magnitude():
    assert receiver_emf_magnitude(0.0, 0.0) == 0.0
    assert receiver_emf_magnitude(3.0, 4.0) == 5.0


def test_relative_error():
    assert relative_error(9e-6, 9e-6) == 0.0
    assert relative_error(9.27e-6, 9e-6) == pytest.approx(0.03)
    with pytest.raises(ValueError):
        relative_error(1e-6, 0.0)


def test_solver_rejects_bad_inputs():
    with pytest.raises(NegativeRadicand):
        solve_mutual_inductance(-1.0, 1.0, 10.0, 2 * math.pi * F)
    with pytest.raises(NegativeRadicand):
        solve_mutual_inductance(math.nan, 1.0, 10.0, 2 * math.pi * F)
    with pytest.raises(IdentificationError):
        solve_mutual_inductance(1.0, 0.0, 10.0, 2 * math.pi * F)


def test_exact_steady_state_terms(params9, drive):
    U_s = fundamental_voltage(drive)
    s = dq_steady_state(params9, drive.omega, DqInput(U_s))
    stream = DqSampleStream(np.full(48, s.I_dt), np.full(48, s.I_qt), 24 * F, DRIVE_THETA0)
    # M is not read: a wrong value in params must not change the terms
    got = transmitter_back_emf_terms(stream, params9.replace(M=40e-6), drive.omega, U_s)
    want = phasor_terms(params9, drive)
    assert got == pytest.approx(want[:2], rel=1e-6)
    assert receiver_emf_magnitude(*got) == pytest.approx(drive.omega * params9.M * want[3], rel=1e-6)


def test_terms_need_two_samples(params9, drive):
    one = DqSampleStream([1.0], [0.0], 24 * F, DRIVE_THETA0)
    with pytest.raises(InsufficientSamples):
        transmitter_back_emf_terms(one, params9, drive.omega, 1.0)


def test_sampled_oracle_terms(params9, drive):
    run = simulate_cycles(params9, drive, 200).to_sensor(24)
    dq = moving_average(stream_to_dq(run.i_t.tail(24 * 12), F), 24)
    got = transmitter_back_emf_terms(dq, params9, drive.omega, fundamental_voltage(drive))
    want = phasor_terms(params9, drive)
    scale = math.hypot(*want[:2])
    assert abs(got[0] - want[0]) < 0.02 * scale
    assert abs(got[1] - want[1]) < 0.02 * scale


def test_decoupled_terms_vanish(drive):
    p = reference_params(0.0)
    U_s = fundamental_voltage(drive)
    run = simulate_cycles(p, drive, 160).to_sensor(24)
    dq = moving_average(stream_to_dq(run.i_t.tail(24 * 12), F), 24)
    a, b = transmitter_back_emf_terms(dq, p, drive.omega, U_s)
    assert abs(a) < 0.01 * U_s and abs(b) < 0.01 * U_s
    res = identify_M(run.i_t, p, drive, discard_cycles=140)
    assert res.M_hat < 0.5e-6 and res.relative_error is None


@pytest.mark.parametrize("R_L", [50.0, 100.0])
@pytest.mark.parametrize("k", K_GRID)
def test_idealised_identification(k, R_L, drive):
    p = reference_params(m_from_k(k), R_L)
    s = dq_steady_state(p, drive.omega, DqInput(fundamental_voltage(drive)))
    res = identify_from_state(s, p.replace(M=0.0), drive, M_true=p.M)
    assert res.relative_error < 5e-3
    assert res.k_hat == pytest.approx(k, rel=5e-3)


def test_idealised_monotone(drive):
    est = []
    for k in K_GRID:
        p = reference_params(m_from_k(k))
        s = dq_steady_state(p, drive.omega, DqInput(fundamental_voltage(drive)))
        est.append(identify_from_state(s, p, drive).M_hat)
    assert all(b > a for a, b in zip(est, est[1:]))


def test_reference_point(params9, drive):
    res = identification_point(params9, params9.replace(M=0.0), drive)
    assert res.relative_error < 0.03
    assert res.I_t_amp == pytest.approx(phasor_terms(params9, drive)[2], rel=5e-3)


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_drive_scale_invariance(params15, drive, a):
    base = identification_point(params15, params15, drive).M_hat
    scaled = identification_point(params15, params15, drive.replace(U_dc=a * drive.U_dc)).M_hat
    assert scaled == pytest.approx(base, rel=5e-3)


def test_true_coupling_is_ignored(params15, drive):
    run = simulate_cycles(params15, drive, 180).to_sensor(24)
    r1 = identify_M(run.i_t, params15, drive, discard_cycles=150)
    r2 = identify_M(run.i_t, params15.replace(M=40e-6), drive, discard_cycles=150)
    assert r1.M_hat == r2.M_hat


def test_pipeline_preconditions(params9, drive):
    run = simulate_cycles(params9, drive, 40).to_sensor(24)
    with pytest.raises(InsufficientSamples):
        identify_M(run.i_t, params9, drive, discard_cycles=35)
    bad = SampledTrace(run.i_t.values, 25 * F)
    with pytest.raises(RateMismatch):
        identify_M(bad, params9, drive)


def test_receiver_mismatch_is_visible(params15, drive):
    # a 10% error in the assumed L_r biases M_hat well beyond the accuracy band
    res = identification_point(params15, params15.replace(L_r=1.1 * params15.L_r), drive)
    assert res.relative_error > 0.03


@pytest.mark.slow
@pytest.mark.parametrize("waveform", ["sinusoidal", "phase_shift_square"])
@pytest.mark.parametrize("R_L", [50.0, 100.0])
def test_full_pipeline_monotone(waveform, R_L):
    d = DriveSpec(20.0, F, waveform=waveform)
    est = [identification_point(reference_params(m_from_k(k), R_L), reference_params(0.0, R_L), d) for k in K_GRID]
    assert all(r.relative_error < 0.03 for r in est)
    assert all(b.M_hat > a.M_hat for a, b in zip(est, est[1:]))
