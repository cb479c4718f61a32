"""NumPy fallback for the Beeler-Reuter membrane kernels.

Mirrors ``_brkernel.pyx`` line for line. State layout is a ``(7, n)`` float64
array with rows ``m, h, j, d, f, x1, ca``; currents are in the native
Beeler-Reuter unit of uA/cm^2.
"""

import numpy as np

# Columns of the parameter vector ``p``.
G_NA, G_NAC, E_NA, G_S, E_S0, E_S_SLOPE, G_K1, G_X1, CA_GAIN, CA_DECAY, CA_REST = range(11)

N_GATES = 6
CA_ROW = 6


def _rate(c, v):
    """Evaluate (c0 exp(c1 (v+c2)) + c3 (v+c4)) / (exp(c5 (v+c2)) + c6)."""
    x = v + c[2]
    if c[6] == -1.0:
        # removable 0/0 at v = -c2 (only the alpha_m form in the standard table)
        den = np.expm1(c[5] * x)
        num = c[0] * np.exp(c[1] * x) + c[3] * (v + c[4])
        small = np.abs(x) < 1e-9
        safe = np.where(small, 1.0, den)
        return np.where(small, c[3] / c[5], num / safe)
    return (c[0] * np.exp(c[1] * x) + c[3] * (v + c[4])) / (np.exp(c[5] * x) + c[6])


def _k1_linear(v):
    x = v + 23.0
    small = np.abs(x) < 1e-9
    safe = np.where(small, 1.0, x)
    return np.where(small, 5.0, 0.2 * safe / -np.expm1(-0.04 * safe))


def ionic_current(v, y, p):
    m, h, j, d, f, x1, ca = y
    i_na = (p[G_NA] * m * m * m * h * j + p[G_NAC]) * (v - p[E_NA])
    e_s = p[E_S0] - p[E_S_SLOPE] * np.log(ca)
    i_s = p[G_S] * d * f * (v - e_s)
    i_k1 = p[G_K1] * (
        4.0 * np.expm1(0.04 * (v + 85.0))
        / (np.exp(0.08 * (v + 53.0)) + np.exp(0.04 * (v + 53.0)))
        + _k1_linear(v)
    )
    i_x1 = p[G_X1] * x1 * np.expm1(0.04 * (v + 77.0)) / np.exp(0.04 * (v + 35.0))
    return i_na + i_s + i_k1 + i_x1


def steady_state(v, rates):
    """Return ``(g_inf, rate_sum)`` arrays of shape ``(6, n)``."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    alpha = np.stack([_rate(rates[2 * k], v) for k in range(N_GATES)])
    beta = np.stack([_rate(rates[2 * k + 1], v) for k in range(N_GATES)])
    total = alpha + beta
    return alpha / total, total


def step_gates(v, y, dt, rates, p):
    """Advance ``y`` in place by ``dt`` at membrane potential ``v``."""
    d, f, ca = y[3], y[4], y[CA_ROW]
    e_s = p[E_S0] - p[E_S_SLOPE] * np.log(ca)
    i_s = p[G_S] * d * f * (v - e_s)
    ca_new = ca + dt * (-p[CA_GAIN] * i_s + p[CA_DECAY] * (p[CA_REST] - ca))
    # floor keeps log(ca) defined under absurd dt
    y[CA_ROW] = np.maximum(ca_new, 1e-12)
    g_inf, total = steady_state(v, rates)
    y[:N_GATES] = g_inf + (y[:N_GATES] - g_inf) * np.exp(-dt * total)
