"""Complex first-order dq model of the series-parallel link.

In a frame rotating at the drive frequency every current becomes a slowly
varying complex vector I = I_d + j I_q, with the alpha-axis waveform
recovered as Re(I exp(jwt)). Expanding the capacitor integrals to first
order in d/dt gives three mesh equations:

    U_dqs = R_t I_t + (L_t + 1/(w^2 C_t)) dI_t/dt + j(wL_t - 1/(wC_t)) I_t + jwM I_r
    0     = R_r I_r + L_r dI_r/dt + jwL_r I_r + jwM I_t + (I_r - I_c) R_L
    0     = 1/(w^2 C_r) dI_c/dt + I_c/(jwC_r) - (I_r - I_c) R_L

Each line holds a single derivative, so the state equations are explicit.
The coupling enters only through jwM (the M dI/dt terms are not part of the
model), which makes transients approximate while the steady state is exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import integrate
from .errors import Diverged, ParameterError, UndefinedPhase
from .params import SystemParams
from .phasor import solve_complex, transmitter_reactance, wrap_phase

MAX_STEP_FRACTION = 1.0 / 20.0
DEFAULT_STEPS_PER_CYCLE = 100


@dataclass(frozen=True)
class DqState:
    I_dqt: complex
    I_dqr: complex
    I_dqc: complex

    def __post_init__(self):
        for name in ("I_dqt", "I_dqr", "I_dqc"):
            value = complex(getattr(self, name))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ParameterError(f"{name} is not finite: {value!r}")
            object.__setattr__(self, name, value)

    I_dt = property(lambda self: self.I_dqt.real)
    I_qt = property(lambda self: self.I_dqt.imag)
    I_dr = property(lambda self: self.I_dqr.real)
    I_qr = property(lambda self: self.I_dqr.imag)
    I_dc = property(lambda self: self.I_dqc.real)
    I_qc = property(lambda self: self.I_dqc.imag)

    def as_complex(self) -> np.ndarray:
        return np.array([self.I_dqt, self.I_dqr, self.I_dqc])

    def as_real(self) -> np.ndarray:
        """(I_dt, I_qt, I_dr, I_qr, I_dc, I_qc)."""
        z = self.as_complex()
        return np.column_stack([z.real, z.imag]).ravel()

    @classmethod
    def from_complex(cls, z) -> "DqState":
        return cls(*z)

    @classmethod
    def from_real(cls, x) -> "DqState":
        x = np.asarray(x, dtype=float)
        return cls.from_complex(x[0::2] + 1j * x[1::2])

    @classmethod
    def zero(cls) -> "DqState":
        return cls(0j, 0j, 0j)


@dataclass(frozen=True)
class DqInput:
    U_dqs: complex

    def __post_init__(self):
        object.__setattr__(self, "U_dqs", complex(self.U_dqs))


def effective_transmitter_inductance(params: SystemParams, omega: float) -> float:
    """L_t + 1/(w^2 C_t): series inductance seen by the transmitter envelope."""
    return params.L_t + 1.0 / (omega**2 * params.C_t)


def effective_capacitor_inductance(params: SystemParams, omega: float) -> float:
    """1/(w^2 C_r): the capacitor envelope's derivative coefficient."""
    return 1.0 / (omega**2 * params.C_r)


def _complex_rhs(params: SystemParams, omega: float):
    L_te = effective_transmitter_inductance(params, omega)
    L_ce = effective_capacitor_inductance(params, omega)
    X_t = transmitter_reactance(params, omega)
    jwM = 1j * omega * params.M
    R_L = params.R_L
    z_c = 1.0 / (1j * omega * params.C_r)

    def f(z, u):
        i_t, i_r, i_c = z
        v_load = (i_r - i_c) * R_L
        return np.array(
            [
                (u - params.R_t * i_t - 1j * X_t * i_t - jwM * i_r) / L_te,
                (-(params.R_r + 1j * omega * params.L_r) * i_r - jwM * i_t - v_load) / params.L_r,
                (v_load - z_c * i_c) / L_ce,
            ]
        )

    return f


def dq_derivatives(state: DqState, params: SystemParams, omega: float, inp: DqInput) -> DqState:
    if not omega > 0:
        raise ParameterError(f"omega must be > 0, got {omega!r}")
    f = _complex_rhs(params, omega)
    return DqState.from_complex(f(state.as_complex(), inp.U_dqs))


def complex_system(params: SystemParams, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """Complex (A, b) with dz/dt = A z + b U_dqs, read off ``dq_derivatives``."""
    zero = DqInput(0.0)
    cols = [
        dq_derivatives(DqState.from_complex(e), params, omega, zero).as_complex()
        for e in np.eye(3, dtype=complex)
    ]
    b = dq_derivatives(DqState.zero(), params, omega, DqInput(1.0)).as_complex()
    return np.column_stack(cols), b


def real_system(params: SystemParams, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """The complex model as six real states and two real inputs (Re U, Im U)."""

    def f(x, u):
        z = x[0::2] + 1j * x[1::2]
        dz = dq_derivatives(DqState.from_complex(z), params, omega, DqInput(u[0] + 1j * u[1])).as_complex()
        return np.column_stack([dz.real, dz.imag]).ravel()

    return integrate.probe_linear(f, 6, 2)


def dq_steady_state(params: SystemParams, omega: float, inp: DqInput) -> DqState:
    """Fixed point of the model: solve A z = -b U_dqs."""
    A, b = complex_system(params, omega)
    return DqState.from_complex(solve_complex(A, -b * inp.U_dqs))


@dataclass
class DqTrajectory:
    t: np.ndarray
    I_dqt: np.ndarray
    I_dqr: np.ndarray
    I_dqc: np.ndarray

    def state(self, k: int) -> DqState:
        return DqState(self.I_dqt[k], self.I_dqr[k], self.I_dqc[k])

    @property
    def final(self) -> DqState:
        return self.state(-1)

    def magnitude(self) -> np.ndarray:
        return np.abs(self.I_dqt)

    def phase(self) -> np.ndarray:
        return -np.angle(self.I_dqt)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "i_dt", "i_qt", "i_dr", "i_qr", "i_dc", "i_qc", "mag_i_dqt", "phase_i_dqt_deg"])
            for k in range(len(self.t)):
                zt, zr, zc = self.I_dqt[k], self.I_dqr[k], self.I_dqc[k]
                phase = math.degrees(-math.atan2(zt.imag, zt.real)) if zt != 0 else 0.0
                row = [self.t[k], zt.real, zt.imag, zr.real, zr.imag, zc.real, zc.imag, abs(zt), phase]
                w.writerow([repr(float(v)) for v in row])


def integrate_dq(
    params: SystemParams,
    omega: float,
    inp: DqInput,
    t_end: float,
    dt: float | None = None,
    changes: Sequence[tuple[float, DqInput]] = (),
) -> DqTrajectory:
    """RK4 integration from zero with piecewise-constant input.

    ``changes`` lists (t_switch, DqInput) pairs applied from t_switch on.
    """
    period = 2.0 * math.pi / omega
    if dt is None:
        dt = period / DEFAULT_STEPS_PER_CYCLE
    if dt > period * MAX_STEP_FRACTION * (1 + 1e-12):
        raise ParameterError(f"dt = {dt:g} s exceeds 1/(20 f)")
    starts = np.array([0.0] + [float(t) for t, _ in changes])
    values = np.array([inp.U_dqs] + [c.U_dqs for _, c in changes])
    order = np.argsort(starts, kind="stable")
    starts, values = starts[order], values[order]

    def u_of_t(t):
        idx = np.searchsorted(starts, t, side="right") - 1
        u = values[np.maximum(idx, 0)]
        return np.column_stack([u.real, u.imag])

    n_steps = int(round(t_end / dt))
    A, B = real_system(params, omega)
    states, bad = integrate.integrate_lti(A, B, np.zeros(6), dt, n_steps, u_of_t)
    if bad >= 0:
        raise Diverged(bad * dt)
    z = states[:, 0::2] + 1j * states[:, 1::2]
    return DqTrajectory(np.arange(n_steps + 1) * dt, z[:, 0], z[:, 1], z[:, 2])


def vector_magnitude(d, q):
    """|I_dq| = sqrt(d^2 + q^2), the amplitude of the alpha-axis current."""
    return np.hypot(d, q) if np.ndim(d) or np.ndim(q) else math.hypot(d, q)


def vector_phase(d: float, q: float) -> float:
    """Initial phase phi = -atan2(q, d), wrapped to (-pi, pi].

    Four-quadrant form of -arctan(q/d); identical to it whenever d > 0.
    """
    if d == 0 and q == 0:
        raise UndefinedPhase("phase of a zero dq vector is undefined")
    return wrap_phase(-math.atan2(q, d))
