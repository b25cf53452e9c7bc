"""Time-domain simulation of the physical series-parallel circuit.

State is (i_t, v_Ct, i_r, v_Cr): transmitter coil current, series capacitor
voltage, receiver coil current and the voltage across the parallel
capacitor/load pair. The coupled coils obey

    [L_t M; M L_r] d/dt [i_t; i_r] = [u_s - R_t i_t - v_Ct; -R_r i_r - v_Cr]

with the dot convention that makes both mesh equations carry +jwM in the
phasor domain. ``verify_coupling_convention`` checks that claim numerically.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import integrate
from .errors import ConventionError, DegenerateCoupling, Diverged, InsufficientData, ParameterError
from .params import DriveSpec, OperatingPoint, SystemParams, Waveform, fundamental_voltage
from .phasor import steady_state_phasors, wrap_phase

DEFAULT_STEPS_PER_CYCLE = 1200
MIN_STEPS_PER_CYCLE = 200
MIN_CYCLES = 20
DEFAULT_SETTLE_CYCLES = 60

# Angle of the drive fundamental at t = 0 in the sine-referenced frame used by
# the alpha-beta to dq rotation: U_s cos(wt) = U_s sin(wt + pi/2).
DRIVE_THETA0 = math.pi / 2.0


@dataclass(frozen=True)
class CircuitState:
    i_t: float
    v_Ct: float
    i_r: float
    v_Cr: float

    def as_array(self) -> np.ndarray:
        return np.array([self.i_t, self.v_Ct, self.i_r, self.v_Cr])

    @classmethod
    def from_array(cls, x) -> "CircuitState":
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class SampledTrace:
    values: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if not self.sample_rate > 0:
            raise ParameterError(f"sample_rate must be > 0, got {self.sample_rate!r}")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.values)) / self.sample_rate

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    def tail(self, n: int) -> "SampledTrace":
        """Last ``n`` samples, keeping absolute timing."""
        start = max(len(self.values) - n, 0)
        return SampledTrace(self.values[start:], self.sample_rate, self.t0 + start / self.sample_rate)

    def drop(self, n: int) -> "SampledTrace":
        """Drop the first ``n`` samples, keeping absolute timing."""
        n = min(n, len(self.values))
        return SampledTrace(self.values[n:], self.sample_rate, self.t0 + n / self.sample_rate)

    def decimate(self, factor: int) -> "SampledTrace":
        """Keep every ``factor``-th sample (zero-order hold on an aligned grid)."""
        return SampledTrace(self.values[::factor], self.sample_rate / factor, self.t0)


# -- drive -----------------------------------------------------------------


def _square_wave(drive: DriveSpec, t):
    x = np.remainder(drive.omega * np.asarray(t, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    half_width = (math.pi - drive.sigma) / 2.0
    # conduction intervals are closed on the left: a grid point sitting on an
    # edge takes the value that holds over the following step
    pos = (x >= -half_width) & (x < half_width)
    neg = (x >= math.pi - half_width) | (x < -math.pi + half_width)
    return drive.U_dc * (pos.astype(float) - neg.astype(float))


def drive_voltage(drive: DriveSpec, t):
    """Inverter output voltage at time(s) ``t``.

    Both waveforms have the fundamental U_s cos(wt). The phase-shift square
    wave sits at +U_dc over a (pi - sigma)-wide window centred on wt = 0,
    at -U_dc over the mirrored window centred on wt = pi, and at zero
    during the freewheeling intervals.
    """
    if drive.waveform is Waveform.SINUSOIDAL:
        out = fundamental_voltage(drive) * np.cos(drive.omega * np.asarray(t, dtype=float))
    else:
        out = _square_wave(drive, t)
    return float(out) if np.ndim(out) == 0 else out


def drive_angle(drive: DriveSpec, t):
    """Sine-referenced angle theta of the drive fundamental at time ``t``."""
    return DRIVE_THETA0 + drive.omega * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class DriveSchedule:
    """Piecewise drive: ``initial`` from t = 0, then each (t_switch, DriveSpec)."""

    initial: DriveSpec
    changes: tuple = ()

    def __post_init__(self):
        changes = tuple(sorted(((float(t), d) for t, d in self.changes), key=lambda c: c[0]))
        for t, d in changes:
            if d.f != self.initial.f:
                raise ParameterError("drive frequency must stay constant across a schedule")
            if t < 0:
                raise ParameterError(f"switch time must be >= 0, got {t}")
        object.__setattr__(self, "changes", changes)

    @property
    def f(self) -> float:
        return self.initial.f

    def segments(self):
        starts = [0.0] + [t for t, _ in self.changes]
        drives = [self.initial] + [d for _, d in self.changes]
        ends = starts[1:] + [math.inf]
        return list(zip(starts, ends, drives))

    def voltage(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for start, end, d in self.segments():
            mask = (t >= start) & (t < end)
            if np.any(mask):
                out[mask] = drive_voltage(d, t[mask])
        return out

    def at(self, t: float) -> DriveSpec:
        current = self.initial
        for ts, d in self.changes:
            if t >= ts:
                current = d
        return current


# -- circuit equations -----------------------------------------------------


def _coil_determinant(params: SystemParams) -> float:
    det = params.L_t * params.L_r - params.M**2
    if not det > 0.0:
        raise DegenerateCoupling(f"L_t*L_r - M^2 = {det!r} <= 0")
    return det


def _rhs(params: SystemParams, det: float):
    L_t, L_r, M = params.L_t, params.L_r, params.M

    def f(x, u):
        i_t, v_ct, i_r, v_cr = x[0], x[1], x[2], x[3]
        e_t = u[0] - params.R_t * i_t - v_ct
        e_r = -params.R_r * i_r - v_cr
        return np.array(
            [
                (L_r * e_t - M * e_r) / det,
                i_t / params.C_t,
                (L_t * e_r - M * e_t) / det,
                (i_r - v_cr / params.R_L) / params.C_r,
            ]
        )

    return f


def derivatives(state: CircuitState, params: SystemParams, u_s: float) -> CircuitState:
    """Time derivative of the circuit state for source voltage ``u_s``."""
    f = _rhs(params, _coil_determinant(params))
    return CircuitState.from_array(f(state.as_array(), np.array([u_s])))


def state_space(params: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """(A, B) of x' = A x + B u_s, read off ``derivatives``."""
    f = _rhs(params, _coil_determinant(params))
    return integrate.probe_linear(f, 4, 1)


def capacitor_current(params: SystemParams, i_r, v_cr):
    """i_c = C_r dv_Cr/dt from the state equation."""
    return np.asarray(i_r) - np.asarray(v_cr) / params.R_L


def verify_coupling_convention(params: SystemParams, omega: float, rtol: float = 1e-9) -> None:
    """Check the oracle's sinusoidal steady state against the phasor model.

    The steady state of x' = A x + B u for u = Re(exp(jwt)) is
    X = (jwI - A)^-1 B. A sign slip in the coupling term shows up as a
    mismatch in I_t and I_r.
    """
    A, B = state_space(params)
    X = np.linalg.solve(1j * omega * np.eye(4) - A, B[:, 0])
    ours = np.array([X[0], X[2], capacitor_current(params, X[2], X[3])])
    ref = steady_state_phasors(params, OperatingPoint(omega, 1.0))
    err = np.max(np.abs(ours - ref)) / np.max(np.abs(ref))
    if not err <= rtol:
        raise ConventionError(f"oracle/phasor steady-state mismatch {err:.3e} at omega = {omega}")


# -- simulation ------------------------------------------------------------


@dataclass
class OracleRun:
    """Traces of one simulation, all on the same time grid."""

    params: SystemParams
    schedule: DriveSchedule
    i_t: SampledTrace
    i_r: SampledTrace
    i_c: SampledTrace
    v_Cr: SampledTrace
    u_s: SampledTrace
    v_Ct: SampledTrace = field(repr=False, default=None)

    @property
    def f(self) -> float:
        return self.schedule.f

    @property
    def sample_rate(self) -> float:
        return self.i_t.sample_rate

    def traces(self) -> dict:
        return {"u_s": self.u_s, "i_t": self.i_t, "i_r": self.i_r, "i_c": self.i_c, "v_cr": self.v_Cr}

    def to_sensor(self, samples_per_cycle: int = 24) -> "OracleRun":
        """Resample every trace to ``samples_per_cycle`` by zero-order hold.

        Each sensor sample is the latest fine-grid sample at or before the
        sensor instant. The fine grid must be an integer multiple of the
        sensor grid.
        """
        steps = self.sample_rate / self.f
        ratio = steps / samples_per_cycle
        factor = int(round(ratio))
        if factor < 1 or abs(ratio - factor) > 1e-9:
            raise ParameterError(
                f"fine grid of {steps:g} steps/cycle is not a multiple of {samples_per_cycle}"
            )
        kw = {name: getattr(self, name).decimate(factor) for name in ("i_t", "i_r", "i_c", "v_Cr", "u_s", "v_Ct")}
        return OracleRun(self.params, self.schedule, **kw)

    def write_csv(self, path) -> None:
        cols = [self.u_s, self.i_t, self.i_r, self.i_c, self.v_Cr]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "u_s", "i_t", "i_r", "i_c", "v_cr"])
            for row in zip(self.i_t.times, *(c.values for c in cols)):
                w.writerow([repr(float(v)) for v in row])


def simulate(
    params: SystemParams,
    drive,
    t_end: float,
    dt: float | None = None,
    changes: Sequence[tuple[float, DriveSpec]] = (),
) -> OracleRun:
    """Integrate the circuit from rest with fixed-step RK4.

    ``drive`` is a DriveSpec or DriveSchedule; ``changes`` adds switch
    points to a plain DriveSpec. ``dt`` defaults to one 1200th of a period.
    """
    schedule = drive if isinstance(drive, DriveSchedule) else DriveSchedule(drive, tuple(changes))
    f = schedule.f
    period = 1.0 / f
    if dt is None:
        dt = period / DEFAULT_STEPS_PER_CYCLE
    if dt > period / MIN_STEPS_PER_CYCLE * (1 + 1e-12):
        raise ParameterError(f"dt = {dt:g} s exceeds 1/({MIN_STEPS_PER_CYCLE} f)")
    if t_end < MIN_CYCLES * period * (1 - 1e-12):
        raise ParameterError(f"t_end must span at least {MIN_CYCLES} cycles")
    n_steps = int(round(t_end / dt))
    A, B = state_space(params)
    states, bad = integrate.integrate_lti(A, B, np.zeros(4), dt, n_steps, lambda t: schedule.voltage(t)[:, None])
    if bad >= 0:
        raise Diverged(bad * dt)
    rate = 1.0 / dt
    t = np.arange(n_steps + 1) * dt
    u = schedule.voltage(t)
    i_t, v_ct, i_r, v_cr = states.T
    return OracleRun(
        params=params,
        schedule=schedule,
        i_t=SampledTrace(i_t, rate),
        i_r=SampledTrace(i_r, rate),
        i_c=SampledTrace(capacitor_current(params, i_r, v_cr), rate),
        v_Cr=SampledTrace(v_cr, rate),
        u_s=SampledTrace(u, rate),
        v_Ct=SampledTrace(v_ct, rate),
    )


def simulate_cycles(params, drive, n_cycles: int, steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE, changes=()) -> OracleRun:
    """``simulate`` with the horizon and step given in drive periods."""
    f = drive.f
    return simulate(params, drive, n_cycles / f, dt=1.0 / (steps_per_cycle * f), changes=changes)


# -- analysis --------------------------------------------------------------


def _window(trace: SampledTrace, f: float, n_cycles: float):
    n = int(round(n_cycles * trace.sample_rate / f))
    if n < 2 or n > len(trace):
        raise InsufficientData(f"need {n} samples for {n_cycles} cycles, trace has {len(trace)}")
    return trace.tail(n)


def fit_fundamental(trace: SampledTrace, f: float) -> tuple[float, float]:
    """Least-squares (a, b) of a cos(wt) + b sin(wt) over the whole trace."""
    w = 2.0 * math.pi * f
    t = trace.times
    design = np.column_stack([np.cos(w * t), np.sin(w * t)])
    (a, b), *_ = np.linalg.lstsq(design, trace.values, rcond=None)
    return float(a), float(b)


def extract_steady_state(trace: SampledTrace, f: float, n_cycles: int = 10) -> tuple[float, float]:
    """Amplitude and initial phase of the fundamental over the last ``n_cycles``.

    Returns (A, phi) with the trace ~ A cos(wt - phi), phi in (-pi, pi].
    """
    if n_cycles < 5:
        raise InsufficientData(f"n_cycles must be >= 5, got {n_cycles}")
    a, b = fit_fundamental(_window(trace, f, n_cycles), f)
    return math.hypot(a, b), wrap_phase(math.atan2(b, a))


def fundamental_phasor(trace: SampledTrace, f: float, n_cycles: float) -> complex:
    """Complex phasor a - jb of the last ``n_cycles`` (no minimum window)."""
    a, b = fit_fundamental(_window(trace, f, n_cycles), f)
    return complex(a, -b)


def cycle_peak_envelope(trace: SampledTrace, f: float) -> tuple[np.ndarray, np.ndarray]:
    """Largest |value| in each whole drive period and the time it occurs."""
    spc = trace.sample_rate / f
    n_per = int(round(spc))
    if abs(spc - n_per) > 1e-9:
        raise ParameterError("trace sample rate is not an integer multiple of f")
    n_cyc = len(trace) // n_per
    block = np.abs(trace.values[: n_cyc * n_per]).reshape(n_cyc, n_per)
    idx = np.argmax(block, axis=1)
    times = trace.t0 + (np.arange(n_cyc) * n_per + idx) / trace.sample_rate
    return times, block[np.arange(n_cyc), idx]


def cycle_fundamental_envelope(trace: SampledTrace, f: float) -> tuple[np.ndarray, np.ndarray]:
    """Fundamental amplitude of each whole drive period, stamped at its midpoint.

    Unlike the raw cycle peak this is not biased toward the early or late
    edge of a period when the amplitude is moving quickly.
    """
    spc = trace.sample_rate / f
    n_per = int(round(spc))
    if abs(spc - n_per) > 1e-9:
        raise ParameterError("trace sample rate is not an integer multiple of f")
    n_cyc = len(trace) // n_per
    block = trace.values[: n_cyc * n_per].reshape(n_cyc, n_per)
    t = trace.times[: n_cyc * n_per].reshape(n_cyc, n_per)
    w = 2.0 * math.pi * f
    # whole-period sums of a uniform grid are orthogonal, so this is the LS fit
    a = 2.0 / n_per * np.sum(block * np.cos(w * t), axis=1)
    b = 2.0 / n_per * np.sum(block * np.sin(w * t), axis=1)
    mid = trace.t0 + (np.arange(n_cyc) + 0.5) * n_per / trace.sample_rate
    return mid, np.hypot(a, b)


def mean_power_balance(run: OracleRun, n_cycles: int = 10) -> tuple[float, float]:
    """Mean input power u_s*i_t and mean dissipation over the last cycles."""
    p = run.params
    n = int(round(n_cycles * run.sample_rate / run.f))
    # trapezoid-free mean over whole periods: drop the duplicated end point
    sl = slice(len(run.i_t) - n - 1, len(run.i_t) - 1)
    u, i_t, i_r, v_cr = (x.values[sl] for x in (run.u_s, run.i_t, run.i_r, run.v_Cr))
    p_in = float(np.mean(u * i_t))
    p_loss = float(np.mean(p.R_t * i_t**2 + p.R_r * i_r**2 + v_cr**2 / p.R_L))
    return p_in, p_loss
