"""Independent reference implementations used only by the tests.

The membrane model here is written out scalar by scalar in its native
units (mV, ms, uA/cm^2, uF/cm^2) and shares no code with the package. It is
integrated with a stiff implicit solver at tight tolerances.
"""

import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, fsolve


def _ab(c1, c2, c3, c4, c5, c6, c7, v):
    num = c1 * math.exp(c2 * (v + c3)) + c4 * (v + c5)
    den = math.exp(c6 * (v + c3)) + c7
    if abs(den) < 1e-12:  # removable singularity of the sodium activation rate
        v = v + 1e-6
        num = c1 * math.exp(c2 * (v + c3)) + c4 * (v + c5)
        den = math.exp(c6 * (v + c3)) + c7
    return num / den


def rates(v):
    return {
        "m": (_ab(0, 0, 47, -1, 47, -0.1, -1, v), _ab(40, -0.056, 72, 0, 0, 0, 0, v)),
        "h": (_ab(0.126, -0.25, 77, 0, 0, 0, 0, v), _ab(1.7, 0, 22.5, 0, 0, -0.082, 1, v)),
        "j": (_ab(0.055, -0.25, 78, 0, 0, -0.2, 1, v), _ab(0.3, 0, 32, 0, 0, -0.1, 1, v)),
        "d": (_ab(0.095, -0.01, -5, 0, 0, -0.072, 1, v), _ab(0.07, -0.017, 44, 0, 0, 0.05, 1, v)),
        "f": (_ab(0.012, -0.008, 28, 0, 0, 0.15, 1, v), _ab(0.0065, -0.02, 30, 0, 0, -0.2, 1, v)),
        "x1": (_ab(0.0005, 0.083, 50, 0, 0, 0.057, 1, v), _ab(0.0013, -0.06, 20, 0, 0, -0.04, 1, v)),
    }


GATES = ("m", "h", "j", "d", "f", "x1")


def steady(v):
    return {g: a / (a + b) for g, (a, b) in rates(v).items()}


def currents(v, m, h, j, d, f, x1, ca):
    """Total ionic current (uA/cm^2) and the slow inward part."""
    i_na = (4.0 * m ** 3 * h * j + 0.003) * (v - 50.0)
    e_s = -82.3 - 13.0287 * math.log(ca)
    i_s = 0.09 * d * f * (v - e_s)
    i_x1 = x1 * 0.8 * (math.exp(0.04 * (v + 77.0)) - 1.0) / math.exp(0.04 * (v + 35.0))
    if abs(v + 23.0) < 1e-9:
        lin = 0.2 / 0.04
    else:
        lin = 0.2 * (v + 23.0) / (1.0 - math.exp(-0.04 * (v + 23.0)))
    i_k1 = 0.35 * (4.0 * (math.exp(0.04 * (v + 85.0)) - 1.0)
                   / (math.exp(0.08 * (v + 53.0)) + math.exp(0.04 * (v + 53.0))) + lin)
    return i_na + i_s + i_x1 + i_k1, i_s


def rhs(t, y, stim):
    v, m, h, j, d, f, x1, ca = y
    r = rates(v)
    i_ion, i_s = currents(v, m, h, j, d, f, x1, ca)
    out = [stim(t) - i_ion]  # C = 1 uF/cm^2
    for g, val in zip(GATES, (m, h, j, d, f, x1)):
        a, b = r[g]
        out.append(a * (1.0 - val) - b * val)
    out.append(-1e-7 * i_s + 0.07 * (1e-7 - ca))
    return out


def rest_state():
    """Rest by a direct root solve of the full right-hand side."""

    def i_at(v):
        g = steady(v)
        # calcium balance with d, f at steady state
        def ca_res(lc):
            _, i_s = currents(v, g["m"], g["h"], g["j"], g["d"], g["f"], g["x1"], math.exp(lc))
            return -1e-7 * i_s + 0.07 * (1e-7 - math.exp(lc))
        lc = brentq(ca_res, math.log(1e-12), math.log(1e-2))
        return currents(v, *(g[k] for k in GATES), math.exp(lc))[0], math.exp(lc)

    v0 = brentq(lambda v: i_at(v)[0], -100.0, -60.0, xtol=1e-14)
    g = steady(v0)
    y0 = [v0] + [g[k] for k in GATES] + [i_at(v0)[1]]
    # polish on the full system with calcium in log form
    def full(z):
        y = list(z[:7]) + [math.exp(z[7])]
        return rhs(0.0, y, lambda t: 0.0)
    z = fsolve(full, y0[:7] + [math.log(y0[7])], xtol=1e-14)
    return np.array(list(z[:7]) + [math.exp(z[7])])


def space_clamp(t_end, stim_amp_cm2, start, end, rtol=1e-10, atol=1e-12):
    """Reference space-clamped trajectory; stimulus in uA/cm^2 during [start, end).

    Integrated piecewise so the solver never steps across a stimulus edge.
    Returns a callable ``v(t)`` (dense output) covering ``[0, t_end]``.
    """
    y = rest_state()
    pieces = []
    edges = [0.0, start, end, t_end]
    for a, b in zip(edges[:-1], edges[1:]):
        amp = stim_amp_cm2 if a == start else 0.0
        sol = solve_ivp(rhs, (a, b), y, method="Radau", rtol=rtol, atol=atol, dense_output=True,
                        args=(lambda t, amp=amp: amp,), max_step=0.05)
        if not sol.success:
            raise RuntimeError(sol.message)
        pieces.append((a, b, sol.sol))
        y = sol.y[:, -1]

    def v_of(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty_like(t)
        for i, ti in enumerate(t):
            for a, b, s in pieces:
                if a <= ti <= b:
                    out[i] = s(ti)[0]
                    break
        return out

    return v_of


def series_conductance(L, delta, sigma_i, sigma_g, frac):
    """Effective conductivity of two slabs in series, by resistance addition."""
    r = delta / sigma_g + (L - delta) / sigma_i
    return frac * L / r


def gap_slopes(L, delta, sigma_i, sigma_g):
    """Corrector slopes (gap, cytoplasm) from periodicity plus flux continuity.

    Unknowns B1 (slope in the gap), B2 (slope in the cell): periodic W gives
    B1 delta + B2 (L - delta) = 0; continuous flux sigma (1 + W') gives
    sigma_g (1 + B1) = sigma_i (1 + B2).
    """
    a = np.array([[delta, L - delta], [sigma_g, -sigma_i]])
    b = np.array([0.0, sigma_i - sigma_g])
    return np.linalg.solve(a, b)
