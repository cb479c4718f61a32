"""Beeler-Reuter (1977) ventricular membrane model.

Potentials are in mV, time in ms. The published model is written per cm^2 of
membrane; :func:`ionic_current` converts to uA/mm^2 so that it pairs with a
capacitance of 0.01 uF/mm^2 (1 uF/cm^2). Calcium is in mol/L.

Constant table (rate form ``(c0 e^{c1(V+c2)} + c3 (V+c4)) / (e^{c5(V+c2)} + c6)``):

======  ========  ========  ======  ====  ====  =======  ====
rate    c0        c1        c2      c3    c4    c5       c6
======  ========  ========  ======  ====  ====  =======  ====
a_m     0         0         47      -1    47    -0.1     -1
b_m     40        -0.056    72      0     0     0        0
a_h     0.126     -0.25     77      0     0     0        0
b_h     1.7       0         22.5    0     0     -0.082   1
a_j     0.055     -0.25     78      0     0     -0.2     1
b_j     0.3       0         32      0     0     -0.1     1
a_d     0.095     -0.01     -5      0     0     -0.072   1
b_d     0.07      -0.017    44      0     0     0.05     1
a_f     0.012     -0.008    28      0     0     0.15     1
b_f     0.0065    -0.02     30      0     0     -0.2     1
a_x1    0.0005    0.083     50      0     0     0.057    1
b_x1    0.0013    -0.06     20      0     0     -0.04    1
======  ========  ========  ======  ====  ====  =======  ====

Currents (uA/cm^2)::

    I_Na = (g_Na m^3 h j + g_NaC)(V - E_Na)           g_Na=4, g_NaC=0.003, E_Na=50
    I_s  = g_s d f (V - E_s),  E_s = -82.3 - 13.0287 ln[Ca]   g_s=0.09
    I_K1 = g_K1 [4(e^{0.04(V+85)} - 1)/(e^{0.08(V+53)} + e^{0.04(V+53)})
                 + 0.2(V+23)/(1 - e^{-0.04(V+23)})]   g_K1=0.35
    I_x1 = g_x1 x1 (e^{0.04(V+77)} - 1)/e^{0.04(V+35)}  g_x1=0.8
    d[Ca]/dt = -1e-7 I_s + 0.07 (1e-7 - [Ca])
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import ConvergenceError, SolverDivergence

#: uA/cm^2 -> uA/mm^2
CURRENT_SCALE = 0.01

GATE_NAMES = ("m", "h", "j", "d", "f", "x1")
STATE_NAMES = ("v",) + GATE_NAMES + ("ca",)

DEFAULT_RATES = (
    (0.0, 0.0, 47.0, -1.0, 47.0, -0.1, -1.0),
    (40.0, -0.056, 72.0, 0.0, 0.0, 0.0, 0.0),
    (0.126, -0.25, 77.0, 0.0, 0.0, 0.0, 0.0),
    (1.7, 0.0, 22.5, 0.0, 0.0, -0.082, 1.0),
    (0.055, -0.25, 78.0, 0.0, 0.0, -0.2, 1.0),
    (0.3, 0.0, 32.0, 0.0, 0.0, -0.1, 1.0),
    (0.095, -0.01, -5.0, 0.0, 0.0, -0.072, 1.0),
    (0.07, -0.017, 44.0, 0.0, 0.0, 0.05, 1.0),
    (0.012, -0.008, 28.0, 0.0, 0.0, 0.15, 1.0),
    (0.0065, -0.02, 30.0, 0.0, 0.0, -0.2, 1.0),
    (0.0005, 0.083, 50.0, 0.0, 0.0, 0.057, 1.0),
    (0.0013, -0.06, 20.0, 0.0, 0.0, -0.04, 1.0),
)


@dataclass(frozen=True)
class IonicCurrentParams:
    """Beeler-Reuter conductances (mS/cm^2), reversal data and rate table.

    ``v_eq`` is not a parameter: it is the computed rest potential.
    """

    g_na: float = 4.0
    g_nac: float = 0.003
    e_na: float = 50.0
    g_s: float = 0.09
    e_s0: float = -82.3
    e_s_slope: float = 13.0287
    g_k1: float = 0.35
    g_x1: float = 0.8
    ca_gain: float = 1e-7
    ca_decay: float = 0.07
    ca_rest: float = 1e-7
    rates: tuple = field(default=DEFAULT_RATES, repr=False)

    def __post_init__(self):
        for name in ("g_na", "g_nac", "g_s", "g_k1", "g_x1"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if np.shape(self.rates) != (12, 7):
            raise ValueError("rate table must have 12 rows of 7 coefficients")

    @cached_property
    def vector(self) -> np.ndarray:
        return np.array(
            [self.g_na, self.g_nac, self.e_na, self.g_s, self.e_s0, self.e_s_slope,
             self.g_k1, self.g_x1, self.ca_gain, self.ca_decay, self.ca_rest],
            dtype=np.float64,
        )

    @cached_property
    def rate_table(self) -> np.ndarray:
        return np.ascontiguousarray(self.rates, dtype=np.float64)

    @cached_property
    def v_eq(self) -> float:
        return float(resting_state(self).v[0])

    def scaled(self, factor: float) -> IonicCurrentParams:
        """Copy with every conductance multiplied by ``factor``."""
        return dataclasses.replace(
            self,
            g_na=self.g_na * factor, g_nac=self.g_nac * factor, g_s=self.g_s * factor,
            g_k1=self.g_k1 * factor, g_x1=self.g_x1 * factor,
        )


DEFAULT_PARAMS = IonicCurrentParams()


@dataclass
class BrState:
    """Membrane state for ``n`` membrane sites.

    ``gates`` has shape ``(7, n)`` with rows ``m, h, j, d, f, x1, ca``.
    """

    v: np.ndarray
    gates: np.ndarray

    def __post_init__(self):
        self.v = np.ascontiguousarray(np.atleast_1d(self.v), dtype=np.float64)
        self.gates = np.ascontiguousarray(self.gates, dtype=np.float64).reshape(7, -1)
        if self.gates.shape[1] != self.v.shape[0]:
            raise ValueError("gate and potential arrays disagree in length")

    def __len__(self):
        return self.v.shape[0]

    def copy(self) -> BrState:
        return BrState(self.v.copy(), self.gates.copy())

    def take(self, index) -> BrState:
        return BrState(self.v[index], self.gates[:, index])

    m = property(lambda self: self.gates[0])
    h = property(lambda self: self.gates[1])
    j = property(lambda self: self.gates[2])
    d = property(lambda self: self.gates[3])
    f = property(lambda self: self.gates[4])
    x1 = property(lambda self: self.gates[5])
    ca = property(lambda self: self.gates[6])

    @classmethod
    def tile(cls, state: BrState, n: int) -> BrState:
        """Repeat a single-site state ``n`` times."""
        return cls(np.repeat(state.v[:1], n), np.repeat(state.gates[:, :1], n, axis=1))


def steady_gates(v, params: IonicCurrentParams = DEFAULT_PARAMS) -> np.ndarray:
    """Steady-state values of the six gates at ``v``, shape ``(6, n)``."""
    g_inf, _ = kernels.steady_state(np.asarray(v, dtype=float), params.rate_table)
    return g_inf


def ionic_current(s: BrState, params: IonicCurrentParams = DEFAULT_PARAMS) -> np.ndarray:
    """Total ionic current density in uA/mm^2 (positive = outward)."""
    return kernels.ionic_current(s.v, s.gates, params.vector) * CURRENT_SCALE


def step_gates(s: BrState, v, dt: float, params: IonicCurrentParams = DEFAULT_PARAMS) -> BrState:
    """Advance gates (exponential update) and calcium (forward Euler) by ``dt``.

    Gates are integrated with ``v`` frozen over the step; the returned state
    carries ``v`` as its potential.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    v = np.ascontiguousarray(np.broadcast_to(np.asarray(v, dtype=np.float64), s.v.shape))
    if not np.all(np.isfinite(v)):
        raise SolverDivergence("non-finite membrane potential passed to gate update")
    gates = s.gates.copy()
    kernels.step_gates(v, gates, float(dt), params.rate_table, params.vector)
    return BrState(v.copy(), gates)


def _steady_calcium(v: float, d_f: float, params: IonicCurrentParams) -> float:
    def residual(log_ca):
        ca = np.exp(log_ca)
        e_s = params.e_s0 - params.e_s_slope * log_ca
        i_s = params.g_s * d_f * (v - e_s)
        return -params.ca_gain * i_s + params.ca_decay * (params.ca_rest - ca)

    return float(np.exp(brentq(residual, np.log(1e-12), np.log(1e-2), xtol=1e-14)))


def _resting_at(v: float, params: IonicCurrentParams) -> BrState:
    g = steady_gates(v, params)[:, 0]
    ca = _steady_calcium(v, g[3] * g[4], params)
    return BrState(np.array([v]), np.concatenate([g, [ca]]))


def resting_state(params: IonicCurrentParams = DEFAULT_PARAMS, bracket=(-100.0, -60.0)) -> BrState:
    """Root-solve the quiescent steady state (gates and calcium at equilibrium)."""

    def current(v):
        return float(ionic_current(_resting_at(v, params), params)[0])

    lo, hi = bracket
    try:
        v_rest = brentq(current, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    except ValueError as exc:
        raise ConvergenceError(f"no rest potential in [{lo}, {hi}] mV") from exc
    state = _resting_at(v_rest, params)
    residual = abs(current(v_rest))
    if residual > 1e-9:
        raise ConvergenceError("rest-potential solve did not converge", residual)
    return state


def space_clamp(
    t_end: float,
    dt: float,
    stimulus=None,
    c_m: float = 0.01,
    params: IonicCurrentParams = DEFAULT_PARAMS,
    state: BrState | None = None,
):
    """Integrate ``c_m dv/dt = -I_ion + I_stim(t)`` for a single membrane patch.

    Uses the same split as the tissue solvers: explicit ionic current, then
    gates updated at the new potential. ``stimulus`` maps time (ms) to a
    current density in uA/mm^2.

    Returns
    -------
    t, v : ndarray
    """
    s = resting_state(params) if state is None else state.copy()
    n = int(round(t_end / dt))
    t = np.arange(n + 1) * dt
    v = np.empty(n + 1)
    v[0] = s.v[0]
    for k in range(n):
        i_stim = 0.0 if stimulus is None else stimulus(t[k])
        v_new = s.v + dt * (i_stim - ionic_current(s, params)) / c_m
        s = step_gates(s, v_new, dt, params)
        v[k + 1] = s.v[0]
    return t, v
