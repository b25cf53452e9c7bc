"""Sinusoidal steady state of the series-parallel link.

Phasors follow i(t) = Re(I * exp(j*w*t)), and the reported initial phase is
phi = -arg(I), so that i(t) = |I| cos(w*t - phi).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SingularSystem
from .params import OperatingPoint, SystemParams

SINGULAR_RTOL = 1e-12


def wrap_phase(phi: float) -> float:
    """Map an angle onto (-pi, pi]."""
    phi = math.remainder(phi, 2.0 * math.pi)
    if phi <= -math.pi:
        phi += 2.0 * math.pi
    return phi


def phase_of(phasor: complex) -> float:
    """Initial phase phi of Re(phasor * exp(jwt)) = |phasor| cos(wt - phi)."""
    return wrap_phase(-cmath.phase(phasor))


@dataclass(frozen=True)
class PhasorSolution:
    I_t_amp: float
    phi_t: float
    I_r_amp: float
    phi_r: float
    I_c_amp: float
    phi_c: float

    @classmethod
    def from_phasors(cls, I_t: complex, I_r: complex, I_c: complex) -> "PhasorSolution":
        def amp_phase(z):
            # a zero current has no phase; report 0 rather than a sign-of-zero artefact
            return (abs(z), phase_of(z) if z != 0 else 0.0)

        (a_t, p_t), (a_r, p_r), (a_c, p_c) = map(amp_phase, (I_t, I_r, I_c))
        return cls(a_t, p_t, a_r, p_r, a_c, p_c)

    def phasors(self) -> tuple[complex, complex, complex]:
        return (
            cmath.rect(self.I_t_amp, -self.phi_t),
            cmath.rect(self.I_r_amp, -self.phi_r),
            cmath.rect(self.I_c_amp, -self.phi_c),
        )

    def amplitudes(self) -> tuple[float, float, float]:
        return (self.I_t_amp, self.I_r_amp, self.I_c_amp)

    def phases(self) -> tuple[float, float, float]:
        return (self.phi_t, self.phi_r, self.phi_c)


def solve_complex(A, b, rtol: float = SINGULAR_RTOL) -> np.ndarray:
    """Gaussian elimination with partial pivoting for a small complex system.

    Raises SingularSystem when a pivot falls below ``rtol`` times the largest
    row norm of ``A``.
    """
    a = np.array(A, dtype=complex)
    x = np.array(b, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n) or x.shape != (n,):
        raise ValueError(f"shape mismatch: A {a.shape}, b {x.shape}")
    scale = max(float(np.max(np.linalg.norm(a, axis=1))), 0.0)
    tol = rtol * scale
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if scale == 0.0 or abs(a[pivot, col]) <= tol:
            raise SingularSystem(f"pivot {abs(a[pivot, col]):.3e} below {tol:.3e} in column {col}")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            x[[col, pivot]] = x[[pivot, col]]
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            x[row] -= factor * x[col]
    for col in range(n - 1, -1, -1):
        x[col] = (x[col] - a[col, col + 1:] @ x[col + 1:]) / a[col, col]
    return x


def receiver_branch_impedance(params: SystemParams, omega: float) -> complex:
    """Z_r = R_r + jwL_r + R_L / (1 + jwC_r R_L)."""
    return (
        params.R_r
        + 1j * omega * params.L_r
        + params.R_L / (1.0 + 1j * omega * params.C_r * params.R_L)
    )


def transmitter_reactance(params: SystemParams, omega: float) -> float:
    return omega * params.L_t - 1.0 / (omega * params.C_t)


def steady_state_matrix(params: SystemParams, omega: float) -> np.ndarray:
    """Mesh matrix acting on (I_t, I_r, I_c) for the three loop equations."""
    jwM = 1j * omega * params.M
    R_L = params.R_L
    return np.array(
        [
            [params.R_t + 1j * transmitter_reactance(params, omega), jwM, 0.0],
            [jwM, params.R_r + 1j * omega * params.L_r + R_L, -R_L],
            [0.0, -R_L, 1.0 / (1j * omega * params.C_r) + R_L],
        ],
        dtype=complex,
    )


def steady_state_phasors(params: SystemParams, op: OperatingPoint) -> np.ndarray:
    """Complex (I_t, I_r, I_c) for a zero-phase source of amplitude U_s."""
    A = steady_state_matrix(params, op.omega)
    return solve_complex(A, [op.U_s, 0.0, 0.0])


def solve_steady_state(params: SystemParams, op: OperatingPoint) -> PhasorSolution:
    I_t, I_r, I_c = steady_state_phasors(params, op)
    return PhasorSolution.from_phasors(I_t, I_r, I_c)


def frequency_sweep(
    params: SystemParams, U_s: float, f_list: Sequence[float]
) -> list[tuple[float, PhasorSolution]]:
    out = []
    for f in f_list:
        try:
            out.append((f, solve_steady_state(params, OperatingPoint.at_frequency(f, U_s))))
        except SingularSystem as exc:
            raise SingularSystem(f"singular system at f = {f} Hz: {exc}", frequency=f) from exc
    return out


SWEEP_COLUMNS = ("f_hz", "i_t_amp", "phi_t_deg", "i_r_amp", "phi_r_deg", "i_c_amp", "phi_c_deg")


def sweep_row(f: float, sol: PhasorSolution) -> list[float]:
    return [
        f,
        sol.I_t_amp,
        math.degrees(sol.phi_t),
        sol.I_r_amp,
        math.degrees(sol.phi_r),
        sol.I_c_amp,
        math.degrees(sol.phi_c),
    ]
