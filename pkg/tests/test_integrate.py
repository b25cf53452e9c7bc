import numpy as np
import pytest

from wpt_dq import integrate


def _system():
    A = np.array([[-0.3, 2.0], [-2.0, -0.1]])
    B = np.array([[1.0], [0.5]])
    return A, B


def test_probe_linear_recovers_matrices():
    A, B = _system()
    A2, B2 = integrate.probe_linear(lambda x, u: A @ x + B @ u, 2, 1)
    assert np.array_equal(A, A2) and np.array_equal(B, B2)


def test_lti_recurrence_equals_plain_rk4():
    A, B = _system()
    u = lambda t: np.array([np.cos(3.0 * t)])  # noqa: E731
    h, n = 0.01, 500
    ref = integrate.integrate_reference(lambda x, uu: A @ x + B @ uu, np.array([1.0, -1.0]), h, n, u)
    fast, bad = integrate.integrate_lti(A, B, np.array([1.0, -1.0]), h, n, lambda t: np.cos(3.0 * t)[:, None])
    assert bad == -1
    assert np.allclose(fast, ref, rtol=0, atol=1e-11)


def test_rk4_order_on_scalar_decay():
    # x' = -x, exact e^-t: error ratio on halving h tends to 2^4
    errs = []
    for h in (0.2, 0.1, 0.05):
        n = int(round(2.0 / h))
        xs, _ = integrate.integrate_lti(
            np.array([[-1.0]]), np.array([[0.0]]), np.array([1.0]), h, n, lambda t: np.zeros((len(t), 1))
        )
        errs.append(abs(xs[-1, 0] - np.exp(-2.0)))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.15)
    assert np.log2(errs[1] / errs[2]) == pytest.approx(4.0, abs=0.1)


def test_divergence_is_reported():
    xs, bad = integrate.integrate_lti(
        np.array([[50.0]]), np.array([[0.0]]), np.array([1.0]), 0.1, 100, lambda t: np.zeros((len(t), 1))
    )
    assert bad > 0
    assert abs(xs[bad, 0]) > integrate.DIVERGENCE_LIMIT
