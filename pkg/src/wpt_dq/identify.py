"""Transmitter-side mutual inductance identification.

Only the transmitter current and the drive are measured. The real and
imaginary parts of the transmitter dq equation yield the reflected EMF
components -wM I_qr and wM I_dr; their magnitude wM I_r, together with the
receiver mesh at steady state (wM I_t = |Z_r| I_r), gives

    M = sqrt(|Z_r| wM I_r / (w^2 I_t))
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dq_model import DqState, effective_transmitter_inductance, vector_magnitude
from .errors import IdentificationError, InsufficientSamples, NegativeRadicand
from .oracle import DRIVE_THETA0, SampledTrace
from .params import DriveSpec, SystemParams, fundamental_voltage
from .phasor import receiver_branch_impedance, transmitter_reactance
from .transforms import DqSampleStream, moving_average, samples_per_cycle, stream_to_dq

DEFAULT_WINDOW_CYCLES = 10
DEFAULT_DISCARD_CYCLES = 60
MIN_CURRENT = 1e-6


@dataclass(frozen=True)
class IdentificationResult:
    M_hat: float
    k_hat: float
    minus_wM_Iqr: float
    wM_Idr: float
    wM_Ir: float
    I_t_amp: float
    Z_r_abs: float
    relative_error: float | None = None


def transmitter_back_emf_terms(
    dq: DqSampleStream,
    params: SystemParams,
    omega: float,
    U_s: float,
    dt_sample: float | None = None,
    window_cycles: int = DEFAULT_WINDOW_CYCLES,
) -> tuple[float, float]:
    """Average (-wM I_qr, wM I_dr) over the last whole cycles of ``dq``.

    Derivatives are backward differences over one sample. ``params.M`` is
    not read.
    """
    if len(dq) < 2:
        raise InsufficientSamples(f"need at least 2 dq samples, got {len(dq)}")
    dt = dt_sample if dt_sample is not None else 1.0 / dq.sample_rate
    L_te = effective_transmitter_inductance(params, omega)
    X_t = transmitter_reactance(params, omega)

    i_d, i_q = dq.i_d, dq.i_q
    did = np.diff(i_d) / dt
    diq = np.diff(i_q) / dt
    i_d, i_q = i_d[1:], i_q[1:]
    minus_wM_Iqr = U_s - params.R_t * i_d - L_te * did + X_t * i_q
    wM_Idr = -params.R_t * i_q - L_te * diq - X_t * i_d

    spc = int(round(2.0 * math.pi / omega * dq.sample_rate))
    n_cyc = min(window_cycles, len(i_d) // spc) if spc > 0 else 0
    n = n_cyc * spc if n_cyc >= 1 else len(i_d)
    keep = (np.abs(i_d[-n:]) + np.abs(i_q[-n:])) >= MIN_CURRENT
    if not np.any(keep):
        return 0.0, 0.0
    return float(np.mean(minus_wM_Iqr[-n:][keep])), float(np.mean(wM_Idr[-n:][keep]))


def receiver_emf_magnitude(minus_wM_Iqr: float, wM_Idr: float) -> float:
    return math.hypot(minus_wM_Iqr, wM_Idr)


def relative_error(M_hat: float, M_true: float) -> float:
    if not M_true > 0:
        raise ValueError(f"M_true must be > 0, got {M_true!r}")
    return abs(M_hat - M_true) / M_true


def solve_mutual_inductance(wM_Ir: float, I_t_amp: float, Z_r_abs: float, omega: float) -> float:
    if not I_t_amp > 0:
        raise IdentificationError("transmitter current amplitude is zero")
    radicand = Z_r_abs * wM_Ir / (omega**2 * I_t_amp)
    if not (math.isfinite(radicand) and radicand >= 0.0):
        raise NegativeRadicand(f"radicand {radicand!r} is not a non-negative number")
    return math.sqrt(radicand)


def _result(params, omega, terms, I_t_amp, M_true) -> IdentificationResult:
    wM_Ir = receiver_emf_magnitude(*terms)
    Z_r_abs = abs(receiver_branch_impedance(params, omega))
    M_hat = solve_mutual_inductance(wM_Ir, I_t_amp, Z_r_abs, omega)
    return IdentificationResult(
        M_hat=M_hat,
        k_hat=M_hat / math.sqrt(params.L_t * params.L_r),
        minus_wM_Iqr=terms[0],
        wM_Idr=terms[1],
        wM_Ir=wM_Ir,
        I_t_amp=I_t_amp,
        Z_r_abs=Z_r_abs,
        relative_error=None if M_true is None else relative_error(M_hat, M_true),
    )


def identify_from_dq(
    dq: DqSampleStream,
    params: SystemParams,
    drive: DriveSpec,
    window_cycles: int = DEFAULT_WINDOW_CYCLES,
    M_true: float | None = None,
) -> IdentificationResult:
    """Identification arithmetic on an already formed dq stream."""
    omega = drive.omega
    U_s = fundamental_voltage(drive)
    terms = transmitter_back_emf_terms(dq, params, omega, U_s, window_cycles=window_cycles)
    spc = int(round(dq.sample_rate / drive.f))
    n = min(len(dq), max(spc * window_cycles, 1))
    I_t_amp = float(np.mean(vector_magnitude(dq.i_d[-n:], dq.i_q[-n:])))
    return _result(params, omega, terms, I_t_amp, M_true)


def identify_from_state(
    state: DqState, params: SystemParams, drive: DriveSpec, M_true: float | None = None
) -> IdentificationResult:
    """Idealised path: an exact dq transmitter vector, no sampling involved."""
    stream = DqSampleStream(np.full(2, state.I_dt), np.full(2, state.I_qt), 24.0 * drive.f, DRIVE_THETA0)
    return identify_from_dq(stream, params, drive, window_cycles=1, M_true=M_true)


def identify_M(
    i_t_trace: SampledTrace,
    params: SystemParams,
    drive: DriveSpec,
    discard_cycles: int = DEFAULT_DISCARD_CYCLES,
    window_cycles: int = DEFAULT_WINDOW_CYCLES,
    smooth: bool = True,
    theta0: float = DRIVE_THETA0,
    M_true: float | None = None,
) -> IdentificationResult:
    """Estimate M from a sampled transmitter current.

    The trace must be sampled at an integer multiple of the drive frequency
    divisible by 4 (24 samples per cycle in the reference setup). The first
    ``discard_cycles`` are dropped as start-up transient, the rest goes
    through the delay-line dq transform, an optional one-cycle moving
    average, and the identification arithmetic. ``params.M`` is ignored.
    """
    spc = samples_per_cycle(i_t_trace.sample_rate, drive.f)
    trace = i_t_trace.drop(discard_cycles * spc)
    needed = (window_cycles + (1 if smooth else 0)) * spc + spc // 4 + 1
    if len(trace) < needed:
        raise InsufficientSamples(
            f"{len(trace)} samples after discarding {discard_cycles} cycles, need {needed}"
        )
    dq = stream_to_dq(trace, drive.f, theta0)
    if smooth:
        dq = moving_average(dq, spc)
    return identify_from_dq(dq, params, drive, window_cycles=window_cycles, M_true=M_true)


RESULT_COLUMNS = ("m_true_h", "m_hat_h", "rel_err", "k_true", "r_l_ohm", "waveform", "f_hz")
