"""Sampled alpha-beta to dq signal chain.

The measured transmitter current is the alpha axis. Its beta partner, the
same waveform lagging by 90 degrees, is built with a quarter-period delay
line, and the pair is rotated into the synchronous frame with

    [i_d]   [sin(theta)  -cos(theta)] [i_alpha]
    [i_q] = [cos(theta)   sin(theta)] [i_beta ]

theta is the sine-referenced drive angle: with u_s = U_s cos(wt) the angle
is wt + pi/2 (see ``oracle.DRIVE_THETA0``). With that reference a current
I cos(wt - phi) maps to the constant vector I exp(-j phi).
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSamples, RateMismatch
from .oracle import DRIVE_THETA0, SampledTrace


@dataclass(frozen=True)
class DqSampleStream:
    i_d: np.ndarray
    i_q: np.ndarray
    sample_rate: float
    theta0: float
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "i_d", np.asarray(self.i_d, dtype=float))
        object.__setattr__(self, "i_q", np.asarray(self.i_q, dtype=float))
        if self.i_d.shape != self.i_q.shape:
            raise ValueError("i_d and i_q must have the same length")

    def __len__(self) -> int:
        return len(self.i_d)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self.i_d)) / self.sample_rate

    @property
    def vector(self) -> np.ndarray:
        return self.i_d + 1j * self.i_q

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.i_d, self.i_q)

    def phase(self) -> np.ndarray:
        return -np.arctan2(self.i_q, self.i_d)

    def tail(self, n: int) -> "DqSampleStream":
        start = max(len(self) - n, 0)
        return DqSampleStream(
            self.i_d[start:], self.i_q[start:], self.sample_rate, self.theta0, self.t0 + start / self.sample_rate
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_s", "i_d", "i_q"])
            for row in zip(self.times, self.i_d, self.i_q):
                w.writerow([repr(float(v)) for v in row])


def samples_per_cycle(sample_rate: float, f: float) -> int:
    """Integer samples per drive period; must also be divisible by 4."""
    ratio = sample_rate / f
    n = int(round(ratio))
    if n < 4 or abs(ratio - n) > 1e-9 * ratio or n % 4:
        raise RateMismatch(f"sample_rate/f = {ratio:g} is not an integer divisible by 4")
    return n


def quadrature_delay(alpha: SampledTrace, samples_per_cycle: int) -> SampledTrace:
    """beta[k] = alpha[k - N/4]; the first N/4 outputs are NaN (line not full)."""
    if samples_per_cycle % 4:
        raise RateMismatch(f"samples_per_cycle = {samples_per_cycle} is not divisible by 4")
    lag = samples_per_cycle // 4
    if len(alpha) <= lag:
        raise InsufficientSamples(f"need more than {lag} samples, got {len(alpha)}")
    beta = np.full(len(alpha), np.nan)
    beta[lag:] = alpha.values[:-lag]
    return SampledTrace(beta, alpha.sample_rate, alpha.t0)


def alphabeta_to_dq(i_alpha, i_beta, theta):
    s, c = np.sin(theta), np.cos(theta)
    return s * i_alpha - c * i_beta, c * i_alpha + s * i_beta


def stream_to_dq(alpha: SampledTrace, f: float, theta0: float = DRIVE_THETA0) -> DqSampleStream:
    """Delay-line quadrature plus rotation with theta_k = theta0 + 2 pi f t_k."""
    n = samples_per_cycle(alpha.sample_rate, f)
    lag = n // 4
    beta = quadrature_delay(alpha, n)
    theta = theta0 + 2.0 * math.pi * f * alpha.times[lag:]
    i_d, i_q = alphabeta_to_dq(alpha.values[lag:], beta.values[lag:], theta)
    return DqSampleStream(i_d, i_q, alpha.sample_rate, theta0, alpha.t0 + lag / alpha.sample_rate)


class DqStreamer:
    """Sample-by-sample version of ``stream_to_dq`` with an internal delay line.

    Not safe for concurrent feeding; use one instance per signal.
    """

    def __init__(self, f: float, sample_rate: float, theta0: float = DRIVE_THETA0, t0: float = 0.0):
        self.n = samples_per_cycle(sample_rate, f)
        self.f = f
        self.sample_rate = sample_rate
        self.theta0 = theta0
        self.t0 = t0
        self._line = deque(maxlen=self.n // 4 + 1)
        self._k = 0

    def push(self, i_alpha: float):
        """Feed one sample; returns (i_d, i_q) once the delay line is full, else None."""
        self._line.append(float(i_alpha))
        k = self._k
        self._k += 1
        if len(self._line) < self._line.maxlen:
            return None
        theta = self.theta0 + 2.0 * math.pi * self.f * (self.t0 + k / self.sample_rate)
        i_d, i_q = alphabeta_to_dq(i_alpha, self._line[0], theta)
        return float(i_d), float(i_q)


def moving_average(stream: DqSampleStream, window: int) -> DqSampleStream:
    """Causal boxcar over ``window`` samples; output starts once the window is full.

    A one-cycle window cancels ripple at every multiple of the drive
    frequency, which is where square-wave harmonics land after rotation.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if len(stream) < window:
        raise InsufficientSamples(f"need {window} samples, got {len(stream)}")
    kernel = np.ones(window) / window
    i_d = np.convolve(stream.i_d, kernel, mode="valid")
    i_q = np.convolve(stream.i_q, kernel, mode="valid")
    return DqSampleStream(i_d, i_q, stream.sample_rate, stream.theta0, stream.t0 + (window - 1) / stream.sample_rate)


def drift_rate(stream: DqSampleStream) -> float:
    """Rotation rate (rad/s) of the dq vector from a line fit of its unwrapped angle.

    A signal at f + df seen through a frame at f turns at 2 pi df.
    """
    if len(stream) < 2:
        raise InsufficientSamples("need at least two samples")
    angle = np.unwrap(np.angle(stream.vector))
    slope, _ = np.polyfit(stream.times, angle, 1)
    return float(slope)
