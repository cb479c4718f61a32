"""Strand geometry: periodic cell/ECM subunits with a gap-junction slab.

Each subunit of length ``L`` and height ``h`` holds an intracellular block
``[0, L] x [0, h1]`` whose first ``delta`` in x is the gap-junction slab, and an
extracellular strip ``[0, L] x [h1, h]`` above it. Subunits tile ``n_cells_x``
times along x into a fibre, and fibres stack ``n_fibres_y`` times in y with
periodic wrap, so each fibre is sandwiched between two extracellular strips.

Lengths are in mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

CELL, GAP = 0, 1
KIND_NAMES = ("cell", "gap")


@dataclass(frozen=True)
class SubunitGeometry:
    L: float = 0.1
    h: float = 0.02
    h1: float = 0.01
    delta: float = 0.001
    n_cells_x: int = 100
    n_fibres_y: int = 2
    nodes_per_cell: int = 320
    ny_intra: int = 4
    ny_extra: int = 4
    gap_elements: int = 2
    refine_gap: bool = True

    def __post_init__(self):
        if not 0 < self.h1 < self.h:
            raise GeometryError("need 0 < h1 < h")
        if not 0 < self.delta < self.L:
            raise GeometryError("need 0 < delta < L")
        if self.n_cells_x < 1 or self.n_fibres_y < 1:
            raise GeometryError("need at least one cell and one fibre")
        if self.ny_intra < 1 or self.ny_extra < 1:
            raise GeometryError("need at least one element across each domain")
        if self.columns_per_cell < 2:
            raise GeometryError("nodes_per_cell too small for the requested y resolution")

    @property
    def columns_per_cell(self) -> int:
        """Node columns per subunit (shared boundary column counted once)."""
        return self.nodes_per_cell // (self.ny_intra + self.ny_extra + 2)

    @property
    def length(self) -> float:
        return self.n_cells_x * self.L

    @property
    def volume_fraction_intra(self) -> float:
        return self.h1 / self.h

    def is_gap(self, x) -> np.ndarray:
        """True where x lies inside a gap slab ``[kL, kL + delta)``."""
        x = np.asarray(x, dtype=float)
        local = x - np.floor(x / self.L) * self.L
        # tolerate round-off at slab edges
        local = np.where(np.isclose(local, self.L, rtol=0, atol=1e-12 * self.L), 0.0, local)
        return (local < self.delta - 1e-12 * self.L) & (x >= 0) & (x < self.length)

    def sigma_label(self, x, y) -> np.ndarray:
        """Conductivity label at (x, y): ``"sigma_g"``, ``"sigma_i"`` or ``"sigma_e"``."""
        x = np.asarray(x, dtype=float)
        y_local = np.mod(np.asarray(y, dtype=float), self.h)
        intra = y_local <= self.h1
        return np.where(intra, np.where(self.is_gap(x), "sigma_g", "sigma_i"), "sigma_e")

    def subunit_x_nodes(self) -> np.ndarray:
        """Node x positions within one subunit, ``0 .. L`` inclusive."""
        ncol = self.columns_per_cell
        hx = self.L / ncol
        if self.refine_gap:
            n_gap = max(self.gap_elements, math.ceil(self.delta / hx - 1e-9))
            n_cell = max(1, ncol - n_gap)
            gap = np.linspace(0.0, self.delta, n_gap + 1)
            cell = np.linspace(self.delta, self.L, n_cell + 1)
            return np.concatenate([gap, cell[1:]])
        if self.delta < hx * (1 - 1e-9):
            raise GeometryError("gap junction unresolved: delta is smaller than one element width")
        ratio = self.delta / hx
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 2:
            raise GeometryError("gap junction unresolved: delta must span >= 2 whole elements")
        return np.linspace(0.0, self.L, ncol + 1)


def surface_ratios(g: SubunitGeometry) -> tuple[float, float]:
    """Membrane area per tissue volume for cell and gap membrane (1/mm).

    chi_i = 2 (L - delta) / (L h),  chi_g = 2 delta / (L h).
    """
    return 2.0 * (g.L - g.delta) / (g.L * g.h), 2.0 * g.delta / (g.L * g.h)


@dataclass(frozen=True, eq=False)
class StrandMesh:
    """Structured tensor-product mesh of the strand.

    Intracellular nodes are numbered ``(fibre, j, i) -> (fibre * (ny_intra+1) + j) * nx + i``,
    extracellular nodes ``(strip, j, i)`` likewise with ``ny_extra``. Strip ``k``
    sits directly above fibre ``k``.

    Membrane pairs are split by kind: a node on the cell/gap interface carries
    one pair per adjacent membrane kind, so per-kind surface sums are exact.
    """

    geometry: SubunitGeometry
    x: np.ndarray  # global node x positions, length nx
    y_intra: np.ndarray  # local y positions within a fibre
    y_extra: np.ndarray
    element_gap: np.ndarray  # bool per x-element: intracellular label sigma_g
    pair_intra: np.ndarray
    pair_extra: np.ndarray
    pair_weight: np.ndarray
    pair_kind: np.ndarray
    pair_x: np.ndarray
    pair_y: np.ndarray
    pair_support: np.ndarray  # (n_pairs, 2) x-interval owned by each pair
    pair_face: np.ndarray  # 2*fibre + (0 bottom, 1 top)

    @property
    def nx(self) -> int:
        return self.x.shape[0]

    @property
    def n_intra(self) -> int:
        return self.geometry.n_fibres_y * self.y_intra.shape[0] * self.nx

    @property
    def n_extra(self) -> int:
        return self.geometry.n_fibres_y * self.y_extra.shape[0] * self.nx

    @property
    def n_pairs(self) -> int:
        return self.pair_intra.shape[0]

    def intra_coords(self) -> np.ndarray:
        g = self.geometry
        fy = (np.arange(g.n_fibres_y)[:, None] * g.h + self.y_intra[None, :]).ravel()
        xx, yy = np.meshgrid(self.x, fy)
        return np.column_stack([xx.ravel(), yy.ravel()])

    def extra_coords(self) -> np.ndarray:
        g = self.geometry
        fy = (np.arange(g.n_fibres_y)[:, None] * g.h + self.y_extra[None, :]).ravel()
        xx, yy = np.meshgrid(self.x, fy)
        return np.column_stack([xx.ravel(), yy.ravel()])

    def intra_elements(self):
        """Quad connectivity and labels for Omega_i (counter-clockwise nodes)."""
        return self._quads(self.y_intra.shape[0], np.where(self.element_gap, "sigma_g", "sigma_i"))

    def extra_elements(self):
        return self._quads(self.y_extra.shape[0], np.full(self.nx - 1, "sigma_e"))

    def _quads(self, ny_nodes, x_labels):
        nx = self.nx
        quads, labels = [], []
        for fibre in range(self.geometry.n_fibres_y):
            base = fibre * ny_nodes * nx
            j, i = np.meshgrid(np.arange(ny_nodes - 1), np.arange(nx - 1), indexing="ij")
            n0 = base + j * nx + i
            quads.append(np.stack([n0, n0 + 1, n0 + nx + 1, n0 + nx], axis=-1).reshape(-1, 4))
            labels.append(np.broadcast_to(x_labels, j.shape).ravel())
        return np.concatenate(quads), np.concatenate(labels)

    def face_pairs(self, face: int = 0) -> np.ndarray:
        """Indices of one pair per node along a membrane face, sorted by x."""
        idx = np.flatnonzero(self.pair_face == face)
        _, first = np.unique(self.pair_intra[idx], return_index=True)
        idx = idx[first]
        return idx[np.argsort(self.pair_x[idx], kind="stable")]


def build_mesh(g: SubunitGeometry, with_gap: bool = True) -> StrandMesh:
    """Mesh the strand. ``with_gap=False`` labels every element as cell."""
    local = g.subunit_x_nodes()
    x = np.concatenate([k * g.L + local[:-1] for k in range(g.n_cells_x)] + [[g.length]])
    nx = x.shape[0]
    mid = 0.5 * (x[:-1] + x[1:])
    element_gap = g.is_gap(mid) if with_gap else np.zeros(nx - 1, dtype=bool)

    y_intra = np.linspace(0.0, g.h1, g.ny_intra + 1)
    y_extra = np.linspace(g.h1, g.h, g.ny_extra + 1)
    ni_f = (g.ny_intra + 1) * nx
    ne_f = (g.ny_extra + 1) * nx

    # per-node split of face length into cell and gap parts
    hx = np.diff(x)
    kinds = element_gap.astype(int)
    elem = np.arange(nx - 1)
    # each element gives its left node a right half-edge and its right node a left half-edge
    node_ids = np.concatenate([elem, elem + 1])
    kind_ids = np.concatenate([kinds, kinds])
    weights = np.concatenate([0.5 * hx, 0.5 * hx])
    lo = np.concatenate([x[:-1], mid])
    hi = np.concatenate([mid, x[1:]])
    # merge half-edges sharing (node, kind)
    key = node_ids * 2 + kind_ids
    order = np.argsort(key, kind="stable")
    ukey, start = np.unique(key[order], return_index=True)
    w_face = np.add.reduceat(weights[order], start)
    lo_face = np.minimum.reduceat(lo[order], start)
    hi_face = np.maximum.reduceat(hi[order], start)
    n_face = ukey // 2
    k_face = ukey % 2

    pi, pe, pw, pk, px, py, ps, pf = [], [], [], [], [], [], [], []
    nf = g.n_fibres_y
    for fibre in range(nf):
        below = (fibre - 1) % nf
        # bottom face y = fibre*h pairs with top row of the strip below (periodic)
        pi.append(fibre * ni_f + n_face)
        pe.append(below * ne_f + g.ny_extra * nx + n_face)
        py.append(np.full(n_face.shape, fibre * g.h))
        pf.append(np.full(n_face.shape, 2 * fibre))
        # top face y = fibre*h + h1 pairs with bottom row of strip fibre
        pi.append(fibre * ni_f + g.ny_intra * nx + n_face)
        pe.append(fibre * ne_f + n_face)
        py.append(np.full(n_face.shape, fibre * g.h + g.h1))
        pf.append(np.full(n_face.shape, 2 * fibre + 1))
        for _ in range(2):
            pw.append(w_face)
            pk.append(k_face)
            px.append(x[n_face])
            ps.append(np.column_stack([lo_face, hi_face]))

    return StrandMesh(
        geometry=g,
        x=x,
        y_intra=y_intra,
        y_extra=y_extra,
        element_gap=element_gap,
        pair_intra=np.concatenate(pi),
        pair_extra=np.concatenate(pe),
        pair_weight=np.concatenate(pw),
        pair_kind=np.concatenate(pk),
        pair_x=np.concatenate(px),
        pair_y=np.concatenate(py),
        pair_support=np.concatenate(ps),
        pair_face=np.concatenate(pf),
    )


def export_mesh_csv(mesh: StrandMesh, nodes_path, elements_path) -> None:
    """Write a node and element dump.

    ``nodes``: ``domain,id,x,y`` with domain ``intra``/``extra`` (mm).
    ``elements``: ``domain,id,n0,n1,n2,n3,label`` with counter-clockwise
    node ids local to the domain and label ``sigma_i``/``sigma_g``/``sigma_e``.
    """
    with open(nodes_path, "w", newline="") as fh:
        fh.write("domain,id,x,y\n")
        for name, xy in (("intra", mesh.intra_coords()), ("extra", mesh.extra_coords())):
            for k, (xv, yv) in enumerate(xy):
                fh.write(f"{name},{k},{xv:.12g},{yv:.12g}\n")
    with open(elements_path, "w", newline="") as fh:
        fh.write("domain,id,n0,n1,n2,n3,label\n")
        for name, (quads, labels) in (("intra", mesh.intra_elements()), ("extra", mesh.extra_elements())):
            for k, (q, lab) in enumerate(zip(quads, labels)):
                fh.write(f"{name},{k},{q[0]},{q[1]},{q[2]},{q[3]},{lab}\n")
