"""Cell-resolved strand model with explicit gap junctions.

Laplace equations hold in the intracellular domain (conductivity sigma_i in
the cytoplasm, sigma_g in gap slabs) and in the extracellular strips
(sigma_e). They couple only through membrane sites, where the outward
current density is

    I_m = c (dv/dt) + g (I_ion - I_stim),

with ``c = c_m, g = 1`` on cell membrane and ``c = c_g, g = i_g`` on gap
membrane. Conductivities are in mS/mm, capacitances in uF/mm^2, currents in
uA/mm^2, potentials in mV and time in ms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from . import cell_model
from ._coupled import CoupledOperator
from ._fem import assemble_laplacian
from ._timeloop import drive
from .cell_model import BrState, IonicCurrentParams
from .errors import ConvergenceError, SolverDivergence
from .geometry import GAP, StrandMesh
from .records import ProbeSpec, SimulationRecord, StimulusSpec

DIVERGENCE_LIMIT = 200.0  # mV


@dataclass(frozen=True)
class MembraneModel:
    c_m: float = 0.01
    c_g: float = 0.01
    i_g: int = 1

    def __post_init__(self):
        if self.c_m <= 0:
            raise ValueError("c_m must be positive")
        if self.c_g < 0:
            raise ValueError("c_g must be non-negative")
        if self.i_g not in (0, 1):
            raise ValueError("i_g is a 0/1 switch")

    @property
    def insulating_gap(self) -> bool:
        return self.c_g == 0 and self.i_g == 0


@dataclass(eq=False)
class DiscreteSystem:
    mesh: StrandMesh
    sigma_i: float
    sigma_g: float
    sigma_e: float
    membrane: MembraneModel
    params: IonicCurrentParams
    A_i: sp.csr_matrix
    A_e: sp.csr_matrix
    coupling: sp.csr_matrix  # v = coupling @ (phi_i, phi_e)
    pair_capacitance: np.ndarray
    pair_ionic: np.ndarray  # 1.0 where ionic current flows
    linear_solver: str = "direct"
    _operators: dict = field(default_factory=dict, repr=False)

    @property
    def n_intra(self) -> int:
        return self.A_i.shape[0]

    @property
    def n_unknowns(self) -> int:
        return self.A_i.shape[0] + self.A_e.shape[0]

    @property
    def extra_slice(self) -> slice:
        return slice(self.n_intra, self.n_unknowns)

    @property
    def stiffness(self) -> sp.csr_matrix:
        return sp.block_diag([self.A_i, self.A_e], format="csr")

    def operator(self, dt: float) -> CoupledOperator:
        key = (float(dt), self.linear_solver)
        if key not in self._operators:
            self._operators[key] = CoupledOperator(
                self.stiffness,
                self.coupling,
                self.mesh.pair_weight,
                self.pair_capacitance,
                dt,
                gauge=np.arange(self.n_intra, self.n_unknowns),
                method=self.linear_solver,
            )
        return self._operators[key]

    def stimulus_fraction(self, x_max: float) -> np.ndarray:
        """Fraction of each membrane site's support lying in ``[0, x_max]``."""
        lo, hi = self.mesh.pair_support.T
        return np.clip((np.minimum(hi, x_max) - lo) / (hi - lo), 0.0, 1.0)


def assemble(
    mesh: StrandMesh,
    sigma_i: float,
    sigma_g: float,
    sigma_e: float,
    membrane: MembraneModel,
    params: IonicCurrentParams = cell_model.DEFAULT_PARAMS,
    linear_solver: str = "direct",
) -> DiscreteSystem:
    """Assemble stiffness operators and membrane coupling on a strand mesh."""
    if min(sigma_i, sigma_g, sigma_e) <= 0:
        raise ValueError("conductivities must be positive")
    g = mesh.geometry
    nf = g.n_fibres_y
    sigma_x = np.where(mesh.element_gap, sigma_g, sigma_i)
    a_i = sp.block_diag([assemble_laplacian(mesh.x, mesh.y_intra, sigma_x)] * nf, format="csr")
    a_e = sp.block_diag(
        [assemble_laplacian(mesh.x, mesh.y_extra, np.full(mesh.nx - 1, sigma_e))] * nf, format="csr"
    )
    n_i, n_e = a_i.shape[0], a_e.shape[0]
    npairs = mesh.n_pairs
    rows = np.concatenate([np.arange(npairs), np.arange(npairs)])
    cols = np.concatenate([mesh.pair_intra, n_i + mesh.pair_extra])
    vals = np.concatenate([np.ones(npairs), -np.ones(npairs)])
    coupling = sp.csr_matrix((vals, (rows, cols)), shape=(npairs, n_i + n_e))

    gap = mesh.pair_kind == GAP
    capacitance = np.where(gap, membrane.c_g, membrane.c_m)
    ionic = np.where(gap, float(membrane.i_g), 1.0)

    # every intracellular piece needs a capacitive path to the extracellular space
    link = coupling.T @ sp.diags(capacitance * mesh.pair_weight) @ coupling
    graph = (abs(sp.block_diag([a_i, a_e])) + abs(link)).tocsr()
    n_comp, _ = csgraph.connected_components(graph, directed=False)
    if n_comp != 1:
        raise ConvergenceError(f"singular assembly: {n_comp} disconnected components")

    return DiscreteSystem(
        mesh=mesh,
        sigma_i=sigma_i,
        sigma_g=sigma_g,
        sigma_e=sigma_e,
        membrane=membrane,
        params=params,
        A_i=a_i,
        A_e=a_e,
        coupling=coupling,
        pair_capacitance=capacitance,
        pair_ionic=ionic,
        linear_solver=linear_solver,
    )


@dataclass
class DiscreteState:
    phi_i: np.ndarray
    phi_e: np.ndarray
    cells: BrState  # one entry per membrane pair
    t: float = 0.0

    @property
    def v(self) -> np.ndarray:
        return self.cells.v

    def copy(self) -> DiscreteState:
        return DiscreteState(self.phi_i.copy(), self.phi_e.copy(), self.cells.copy(), self.t)


def resting(sys: DiscreteSystem) -> DiscreteState:
    """Equilibrium initial state: phi_i = V_eq, phi_e = 0 everywhere."""
    rest = cell_model.resting_state(sys.params)
    return DiscreteState(
        phi_i=np.full(sys.n_intra, rest.v[0]),
        phi_e=np.zeros(sys.A_e.shape[0]),
        cells=BrState.tile(rest, sys.mesh.n_pairs),
        t=0.0,
    )


@dataclass
class StepDiagnostics:
    residual: float = 0.0
    #: |net membrane current| in uA, and the same relative to the balanced terms
    imbalance: float = 0.0
    conservation: float = 0.0
    membrane_current: np.ndarray | None = None


def step(
    sys: DiscreteSystem,
    s: DiscreteState,
    dt: float,
    stim: StimulusSpec | None = None,
    diagnostics: StepDiagnostics | None = None,
) -> DiscreteState:
    """Advance one semi-implicit step.

    Ionic current is taken at the old state (and switched by ``i_g`` on gap
    membrane); capacitive and conductive terms are implicit. Gates then move
    at the new transmembrane potential.
    """
    op = sys.operator(dt)
    i_ion = cell_model.ionic_current(s.cells, sys.params)
    source = sys.pair_ionic * i_ion
    if stim is not None and stim.amplitude != 0.0:
        source = source - sys.pair_ionic * stim.current(s.t) * sys.stimulus_fraction(stim.x_max)
    b = op.rhs(s.cells.v, source)
    x = op.solve(b)
    v_new = op.coupling @ x
    if not np.all(np.isfinite(v_new)) or np.max(np.abs(v_new)) > DIVERGENCE_LIMIT:
        raise SolverDivergence(f"membrane potential left [-{DIVERGENCE_LIMIT}, {DIVERGENCE_LIMIT}] mV at t = {s.t + dt:g} ms",
                               snapshot=s.copy())
    if diagnostics is not None:
        i_m = op.capacitance * (v_new - s.cells.v) / dt + source
        flux = op.weights * i_m
        # scale of the terms being balanced; |flux| alone is round-off at rest
        scale = op.weights @ (op.capacitance * np.abs(v_new) / dt + np.abs(source))
        diagnostics.residual = op.last_residual
        diagnostics.imbalance = float(abs(flux.sum()))
        diagnostics.conservation = diagnostics.imbalance / max(scale, 1e-300)
        diagnostics.membrane_current = i_m
    cells = cell_model.step_gates(s.cells, v_new, dt, sys.params)
    n_i = sys.n_intra
    return DiscreteState(phi_i=x[:n_i], phi_e=x[n_i:], cells=cells, t=s.t + dt)


def _face_line(sys: DiscreteSystem):
    idx = sys.mesh.face_pairs(0)
    return idx, sys.mesh.pair_x[idx]


def snapshot(sys: DiscreteSystem, s: DiscreteState) -> dict:
    """Profile along the lower membrane face of the first fibre."""
    idx, x = _face_line(sys)
    return {
        "x": x.copy(),
        "y": sys.mesh.pair_y[idx].copy(),
        "phi_i": s.phi_i[sys.mesh.pair_intra[idx]].copy(),
        "phi_e": s.phi_e[sys.mesh.pair_extra[idx]].copy(),
        "v": s.cells.v[idx].copy(),
    }


def run(
    sys: DiscreteSystem,
    protocol: StimulusSpec,
    t_end: float,
    dt: float,
    probes: ProbeSpec = ProbeSpec(),
    state: DiscreteState | None = None,
) -> SimulationRecord:
    """Integrate to ``t_end`` recording probe traces and snapshots."""
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    s = resting(sys) if state is None else state
    idx, x_line = _face_line(sys)
    return drive(
        lambda st: step(sys, st, dt, protocol),
        lambda st: st.cells.v[idx],
        x_line,
        lambda st: snapshot(sys, st),
        s,
        protocol,
        t_end,
        dt,
        probes,
        metadata={
            "solver": "discrete",
            "dt": dt,
            "nodes_per_cell": sys.mesh.geometry.nodes_per_cell,
            "n_unknowns": sys.n_unknowns,
            "stimulus_amplitude": protocol.amplitude,
        },
    )
