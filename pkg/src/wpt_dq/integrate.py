"""Fixed-step classical RK4 for the linear time-invariant circuit models.

Both the circuit oracle and the dq model are linear, x' = A x + B u(t). One
RK4 step is then itself linear in (x_n, u(t_n), u(t_n + h/2), u(t_n + h)):

    x_{n+1} = Phi x_n + G0 u_n + Gh u_{n+1/2} + G1 u_{n+1}

The matrices are obtained by pushing basis vectors through the plain RK4
step below, so the fast recurrence is the same scheme and not a
reformulation of it.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from numba import njit

DIVERGENCE_LIMIT = 1e9


def rk4_step(f: Callable, t: float, x: np.ndarray, h: float, u: Callable) -> np.ndarray:
    """One classical RK4 step of x' = f(x, u(t))."""
    k1 = f(x, u(t))
    k2 = f(x + 0.5 * h * k1, u(t + 0.5 * h))
    k3 = f(x + 0.5 * h * k2, u(t + 0.5 * h))
    k4 = f(x + h * k3, u(t + h))
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def probe_linear(f: Callable, nx: int, nu: int) -> tuple[np.ndarray, np.ndarray]:
    """Recover (A, B) of a linear right-hand side f(x, u) = A x + B u."""
    zx, zu = np.zeros(nx), np.zeros(nu)
    A = np.column_stack([f(e, zu) for e in np.eye(nx)]) if nx else np.zeros((0, 0))
    B = np.column_stack([f(zx, e) for e in np.eye(nu)])
    return A, B


def rk4_gains(A: np.ndarray, B: np.ndarray, h: float):
    """Step matrices (Phi, G0, Gh, G1) of RK4 applied to x' = A x + B u."""
    nx, nu = B.shape
    zero_u = np.zeros(nu)

    def f(x, u):
        return A @ x + B @ u

    Phi = np.column_stack([rk4_step(f, 0.0, e, h, lambda t: zero_u) for e in np.eye(nx)])
    gains = []
    # rk4_step evaluates u at exactly 0, h/2 and h when started from t = 0
    for stage_time in (0.0, 0.5 * h, h):
        cols = []
        for e in np.eye(nu):
            def pulse(t, e=e, stage_time=stage_time):
                return e if t == stage_time else zero_u

            cols.append(rk4_step(f, 0.0, np.zeros(nx), h, pulse))
        gains.append(np.column_stack(cols))
    return Phi, gains[0], gains[1], gains[2]


@njit(cache=True)
def _recurrence(Phi, G0, Gh, G1, x0, u0, uh, u1, limit):
    n = u0.shape[0]
    nx = x0.shape[0]
    out = np.empty((n + 1, nx))
    out[0] = x0
    x = x0.copy()
    for k in range(n):
        x = Phi @ x + G0 @ u0[k] + Gh @ uh[k] + G1 @ u1[k]
        for i in range(nx):
            if not abs(x[i]) <= limit:
                out[k + 1] = x
                return out, k + 1
        out[k + 1] = x
    return out, -1


def integrate_lti(
    A: np.ndarray,
    B: np.ndarray,
    x0: np.ndarray,
    h: float,
    n_steps: int,
    u_of_t: Callable[[np.ndarray], np.ndarray],
    limit: float = DIVERGENCE_LIMIT,
):
    """Integrate x' = A x + B u(t) from t = 0 with ``n_steps`` RK4 steps.

    ``u_of_t`` maps an array of times to an (n, nu) input array. Inputs are
    sampled just inside each step (right limit at t_n, left limit at
    t_{n+1}) so piecewise inputs that switch on grid points are integrated
    without straddling a discontinuity.

    Returns (states with shape (n_steps + 1, nx), index of first divergent
    state or -1).
    """
    Phi, G0, Gh, G1 = rk4_gains(A, B, h)
    t = np.arange(n_steps, dtype=float) * h
    eps = 1e-9 * h
    u0 = np.ascontiguousarray(u_of_t(t + eps), dtype=float)
    uh = np.ascontiguousarray(u_of_t(t + 0.5 * h), dtype=float)
    u1 = np.ascontiguousarray(u_of_t(t + h - eps), dtype=float)
    return _recurrence(
        np.ascontiguousarray(Phi),
        np.ascontiguousarray(G0),
        np.ascontiguousarray(Gh),
        np.ascontiguousarray(G1),
        np.asarray(x0, dtype=float).copy(),
        u0,
        uh,
        u1,
        float(limit),
    )


def integrate_reference(f: Callable, x0: np.ndarray, h: float, n_steps: int, u: Callable) -> np.ndarray:
    """Plain-Python RK4 loop; slow, used to cross-check ``integrate_lti``."""
    out = np.empty((n_steps + 1, len(x0)))
    out[0] = x = np.asarray(x0, dtype=float)
    for k in range(n_steps):
        x = rk4_step(f, k * h, x, h, u)
        out[k + 1] = x
    return out
