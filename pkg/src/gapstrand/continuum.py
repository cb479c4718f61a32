"""Homogenised (modified bidomain) strand model.

    (c_m chi_i + c_g chi_g) dV/dt = d/dx(Sigma_i d(V + phi_e)/dx) - (chi_i + i_g chi_g)(I_ion - I_stim)
    d/dx((Sigma_i + Sigma_e) dphi_e/dx + Sigma_i dV/dx) = 0

with zero-flux ends. Both tensors have a vanishing transverse entry on the
strand geometry, so only the x direction is discretised (linear elements,
lumped membrane terms). The time step mirrors the discrete solver: written
for ``(phi_i, phi_e)`` the update is the same symmetric coupled system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import cell_model
from ._coupled import CoupledOperator
from .cell_model import BrState, IonicCurrentParams
from ._fem import stiffness_1d
from ._timeloop import drive
from .discrete import DIVERGENCE_LIMIT, MembraneModel
from .errors import SolverDivergence
from .geometry import SubunitGeometry
from .homogenisation import EffectiveTensors, effective_tensors
from .records import ProbeSpec, SimulationRecord, StimulusSpec

DEFAULT_NODES = 1001


@dataclass(eq=False)
class ContinuumSystem:
    x: np.ndarray
    tensors: EffectiveTensors
    membrane: MembraneModel
    params: IonicCurrentParams
    K_i: sp.csr_matrix
    K_e: sp.csr_matrix
    mass: np.ndarray  # lumped nodal length (mm)
    linear_solver: str = "direct"
    _operators: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def capacitance(self) -> float:
        """Membrane capacitance per tissue volume (uF/mm^3)."""
        t, m = self.tensors, self.membrane
        return m.c_m * t.chi_i + m.c_g * t.chi_g

    @property
    def ionic_scale(self) -> float:
        """Ion-carrying membrane area per tissue volume (1/mm)."""
        t, m = self.tensors, self.membrane
        return t.chi_i + m.i_g * t.chi_g

    def operator(self, dt: float) -> CoupledOperator:
        key = (float(dt), self.linear_solver)
        if key not in self._operators:
            n = self.n
            eye = sp.identity(n, format="csr")
            self._operators[key] = CoupledOperator(
                sp.block_diag([self.K_i, self.K_e], format="csr"),
                sp.hstack([eye, -eye], format="csr"),
                self.mass,
                np.full(n, self.capacitance),
                dt,
                gauge=np.arange(n, 2 * n),
                method=self.linear_solver,
            )
        return self._operators[key]

    def stimulus_fraction(self, x_max: float) -> np.ndarray:
        h = np.diff(self.x)
        lo = self.x - np.concatenate([[0.0], 0.5 * h])
        hi = self.x + np.concatenate([0.5 * h, [0.0]])
        return np.clip((np.minimum(hi, x_max) - lo) / (hi - lo), 0.0, 1.0)


def build_continuum(
    g: SubunitGeometry,
    sigma_i: float,
    sigma_g: float,
    sigma_e: float,
    membrane: MembraneModel,
    n_nodes: int = DEFAULT_NODES,
    tensors: EffectiveTensors | None = None,
    params: IonicCurrentParams = cell_model.DEFAULT_PARAMS,
    linear_solver: str = "direct",
) -> ContinuumSystem:
    """Uniform grid over ``[0, n_cells_x L]`` carrying the effective tensors."""
    if n_nodes < 3:
        raise ValueError("need at least 3 nodes")
    if tensors is None:
        tensors = effective_tensors(g, sigma_i, sigma_g, sigma_e)
    x = np.linspace(0.0, g.length, n_nodes)
    ones = np.ones(n_nodes - 1)
    k_i, _ = stiffness_1d(x, tensors.Sigma_i[0, 0] * ones)
    k_e, _ = stiffness_1d(x, tensors.Sigma_e[0, 0] * ones)
    h = np.diff(x)
    mass = np.concatenate([[0.0], 0.5 * h]) + np.concatenate([0.5 * h, [0.0]])
    return ContinuumSystem(
        x=x, tensors=tensors, membrane=membrane, params=params,
        K_i=k_i, K_e=k_e, mass=mass, linear_solver=linear_solver,
    )


@dataclass
class ContinuumState:
    V: np.ndarray
    phi_e: np.ndarray
    cells: BrState
    t: float = 0.0

    @property
    def phi_i(self) -> np.ndarray:
        return self.V + self.phi_e

    def copy(self) -> ContinuumState:
        return ContinuumState(self.V.copy(), self.phi_e.copy(), self.cells.copy(), self.t)


def resting(sys: ContinuumSystem) -> ContinuumState:
    rest = cell_model.resting_state(sys.params)
    cells = BrState.tile(rest, sys.n)
    return ContinuumState(V=cells.v.copy(), phi_e=np.zeros(sys.n), cells=cells)


def step_continuum(
    sys: ContinuumSystem,
    s: ContinuumState,
    dt: float,
    stim: StimulusSpec | None = None,
) -> ContinuumState:
    """One semi-implicit step: explicit ionic source, implicit diffusion and capacitance."""
    op = sys.operator(dt)
    i_net = cell_model.ionic_current(s.cells, sys.params)
    if stim is not None and stim.amplitude != 0.0:
        i_net = i_net - stim.current(s.t) * sys.stimulus_fraction(stim.x_max)
    source = sys.ionic_scale * i_net
    x = op.solve(op.rhs(s.cells.v, source))
    n = sys.n
    phi_e = x[n:]
    v_new = x[:n] - phi_e
    if not np.all(np.isfinite(v_new)) or np.max(np.abs(v_new)) > DIVERGENCE_LIMIT:
        raise SolverDivergence(f"potential left [-{DIVERGENCE_LIMIT}, {DIVERGENCE_LIMIT}] mV at t = {s.t + dt:g} ms",
                               snapshot=s.copy())
    cells = cell_model.step_gates(s.cells, v_new, dt, sys.params)
    return ContinuumState(V=cells.v.copy(), phi_e=phi_e, cells=cells, t=s.t + dt)


def snapshot(sys: ContinuumSystem, s: ContinuumState) -> dict:
    return {
        "x": sys.x.copy(),
        "y": np.zeros(sys.n),
        "phi_i": s.phi_i.copy(),
        "phi_e": s.phi_e.copy(),
        "v": s.V.copy(),
    }


def run_continuum(
    sys: ContinuumSystem,
    protocol: StimulusSpec,
    t_end: float,
    dt: float,
    probes: ProbeSpec = ProbeSpec(),
    state: ContinuumState | None = None,
) -> SimulationRecord:
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    s = resting(sys) if state is None else state
    return drive(
        lambda st: step_continuum(sys, st, dt, protocol),
        lambda st: st.V,
        sys.x,
        lambda st: snapshot(sys, st),
        s,
        protocol,
        t_end,
        dt,
        probes,
        metadata={
            "solver": "continuum",
            "dt": dt,
            "n_nodes": sys.n,
            "stimulus_amplitude": protocol.amplitude,
        },
    )
