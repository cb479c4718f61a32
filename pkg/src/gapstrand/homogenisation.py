"""Effective conductivity tensors of the periodic strand subunit.

Closed forms and a numerical periodic cell-problem solver. On this geometry
the intracellular corrector problem for direction ``j`` reads

    div(sigma grad W_j) = -d sigma / d z_j  in the intracellular block,
    grad W_j . n = -n_j                     on the membrane,

periodic in z_1, and the tensor is ``(1/V_cell) int sigma (I + dW/dz) dV``.
The extracellular problem carries ``+n_j`` with ``n`` still pointing out of
the intracellular block, i.e. the same condition on its own outward normal. The
distributional source from the sigma jump is handled in weak form: the
bilinear form ``int sigma grad W . grad psi`` balances ``-int sigma e_j . grad psi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._fem import stiffness_1d
from .errors import ConvergenceError
from .geometry import SubunitGeometry, surface_ratios


@dataclass(frozen=True)
class EffectiveTensors:
    Sigma_i: np.ndarray
    Sigma_e: np.ndarray
    chi_i: float
    chi_g: float
    V_cell: float
    V_intra: float
    V_extra: float

    @property
    def chi(self) -> float:
        return self.chi_i + self.chi_g


def analytic_sigma_i(g: SubunitGeometry, sigma_i: float, sigma_g: float) -> np.ndarray:
    """Series (harmonic) combination of cytoplasm and gap slab, scaled by h1/h."""
    if sigma_i <= 0 or sigma_g <= 0:
        raise ValueError("conductivities must be positive")
    s11 = (g.h1 / g.h) * sigma_i * sigma_g * g.L / (g.delta * sigma_i + (g.L - g.delta) * sigma_g)
    return np.array([[s11, 0.0], [0.0, 0.0]])


def analytic_sigma_e(g: SubunitGeometry, sigma_e: float) -> np.ndarray:
    if sigma_e <= 0:
        raise ValueError("sigma_e must be positive")
    return np.array([[(1.0 - g.h1 / g.h) * sigma_e, 0.0], [0.0, 0.0]])


def effective_tensors(g: SubunitGeometry, sigma_i: float, sigma_g: float, sigma_e: float) -> EffectiveTensors:
    chi_i, chi_g = surface_ratios(g)
    v_cell = g.L * g.h
    return EffectiveTensors(
        Sigma_i=analytic_sigma_i(g, sigma_i, sigma_g),
        Sigma_e=analytic_sigma_e(g, sigma_e),
        chi_i=chi_i,
        chi_g=chi_g,
        V_cell=v_cell,
        V_intra=g.L * g.h1,
        V_extra=g.L * (g.h - g.h1),
    )


@dataclass(frozen=True)
class CellProblemSolution:
    """Corrector on a ``(nx, ny)`` periodic grid; ``W[j]`` has shape ``(ny+1, nx)``."""

    x: np.ndarray  # nx periodic node positions in [0, L)
    y: np.ndarray  # ny+1 node positions across the domain
    W: np.ndarray  # (2, ny+1, nx)
    sigma_x: np.ndarray  # per x-element conductivity (element k spans x[k]..x[k+1])
    domain: str
    L: float

    def mean(self, j: int) -> float:
        """Area-weighted mean of ``W_j`` (bilinear interpolation)."""
        wx = _periodic_lumped(self.x, self.L)
        wy = _lumped(self.y)
        return float(wy @ self.W[j] @ wx / (wx.sum() * wy.sum()))


def _lumped(x):
    h = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _periodic_lumped(x, L):
    h = np.diff(np.append(x, L))
    return 0.5 * (h + np.roll(h, 1))


def _periodic_1d(x, L, weight):
    """Periodic 1D stiffness and mass with per-element weight (element k: x[k] -> x[k+1 mod n])."""
    n = x.shape[0]
    h = np.diff(np.append(x, L))
    i = np.arange(n)
    ip = (i + 1) % n
    k = weight / h
    m = weight * h / 6.0
    rows = np.concatenate([i, ip, i, ip])
    cols = np.concatenate([i, ip, ip, i])
    stiff = sp.coo_matrix((np.concatenate([k, k, -k, -k]), (rows, cols)), shape=(n, n)).tocsr()
    mass = sp.coo_matrix((np.concatenate([2 * m, 2 * m, m, m]), (rows, cols)), shape=(n, n)).tocsr()
    # x-derivative load: int weight * dpsi/dx over each element
    grad = sp.coo_matrix(
        (np.concatenate([-weight, weight]), (np.concatenate([i, ip]), np.concatenate([i, i]))),
        shape=(n, n),
    ).tocsr()
    return stiff, mass, grad


def cell_grid(g: SubunitGeometry, nx: int = 256, ny: int = 32, domain: str = "intra"):
    """Periodic x nodes aligned with the gap slab and y nodes across ``domain``."""
    n_gap = max(2, int(round(nx * g.delta / g.L)))
    n_cell = nx - n_gap
    x = np.concatenate([np.linspace(0.0, g.delta, n_gap + 1)[:-1], np.linspace(g.delta, g.L, n_cell + 1)[:-1]])
    if domain == "intra":
        y = np.linspace(0.0, g.h1, ny + 1)
    elif domain == "extra":
        y = np.linspace(g.h1, g.h, ny + 1)
    else:
        raise ValueError("domain must be 'intra' or 'extra'")
    return x, y


def solve_cell_problem(
    g: SubunitGeometry,
    sigma_i: float,
    sigma_g: float | None = None,
    domain: str = "intra",
    nx: int = 256,
    ny: int = 32,
) -> CellProblemSolution:
    """Solve both corrector problems numerically with bilinear elements.

    For ``domain="extra"``, ``sigma_i`` is read as the uniform extracellular
    conductivity and ``sigma_g`` is ignored.
    """
    x, y = cell_grid(g, nx, ny, domain)
    if domain == "intra":
        sg = sigma_i if sigma_g is None else sigma_g
        sigma_x = np.where(np.append(x[1:], g.L) <= g.delta + 1e-15, sg, sigma_i)
    else:
        sigma_x = np.full(x.shape[0], sigma_i)
    if np.any(sigma_x <= 0):
        raise ValueError("conductivity must be positive")

    sx, mx, gx = _periodic_1d(x, g.L, sigma_x)
    sy, my = stiffness_1d(y, np.ones(y.shape[0] - 1))
    # index (j, i) -> j * nx + i
    a = (sp.kron(my, sx) + sp.kron(sy, mx)).tocsr()

    # weak form: int sigma grad W_j . grad psi = -int sigma e_j . grad psi
    # (the membrane condition makes sigma (grad W_j + e_j) . n vanish there)
    ones_y = _lumped(y)
    b1 = -np.kron(ones_y, gx @ np.ones(x.shape[0]))
    dy_load = np.zeros(y.shape[0])
    dy_load[0], dy_load[-1] = -1.0, 1.0
    b2 = -np.kron(dy_load, _periodic_sigma_lumped(x, g.L, sigma_x))
    nxn = x.shape[0]
    solutions = []
    wx = _periodic_lumped(x, g.L)
    mean_w = np.kron(ones_y, wx)
    for b in (b1, b2):
        w = _solve_periodic_neumann(a, b, mean_w)
        solutions.append(w.reshape(y.shape[0], nxn))
    return CellProblemSolution(x=x, y=y, W=np.array(solutions), sigma_x=sigma_x, domain=domain, L=g.L)


def _periodic_sigma_lumped(x, L, sigma_x):
    h = np.diff(np.append(x, L))
    half = 0.5 * h * sigma_x
    return half + np.roll(half, 1)


def _solve_periodic_neumann(a, b, mean_w):
    """Solve the singular pure-Neumann/periodic system with a zero-mean constraint."""
    n = a.shape[0]
    if abs(b.sum()) > 1e-10 * max(np.abs(b).sum(), 1e-300):
        raise ConvergenceError("incompatible cell-problem load", abs(b.sum()))
    c = sp.csr_matrix(mean_w.reshape(1, -1))
    k = sp.bmat([[a, c.T], [c, None]], format="csc")
    rhs = np.append(b, 0.0)
    sol = spla.spsolve(k, rhs)
    res = np.linalg.norm(k @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(res) or res > 1e-8:
        raise ConvergenceError("cell-problem solve failed", res)
    return sol[:n]


def tensor_from_corrector(sol: CellProblemSolution, g: SubunitGeometry) -> np.ndarray:
    """Integrate ``sigma (I + grad W)`` over the domain and divide by the subunit area."""
    x_ext = np.append(sol.x, sol.L)
    hx = np.diff(x_ext)
    hy = np.diff(sol.y)
    out = np.zeros((2, 2))
    for j in range(2):
        w = np.concatenate([sol.W[j], sol.W[j][:, :1]], axis=1)  # periodic wrap
        # bilinear element integrals of dW/dx and dW/dy
        dwdx = 0.5 * ((w[:-1, 1:] - w[:-1, :-1]) + (w[1:, 1:] - w[1:, :-1])) * hy[:, None]
        dwdy = 0.5 * ((w[1:, :-1] - w[:-1, :-1]) + (w[1:, 1:] - w[:-1, 1:])) * hx[None, :]
        sig = sol.sigma_x[None, :]
        area = hx[None, :] * hy[:, None]
        out[0, j] = np.sum(sig * ((1.0 if j == 0 else 0.0) * area + dwdx))
        out[1, j] = np.sum(sig * ((1.0 if j == 1 else 0.0) * area + dwdy))
    return out / (g.L * g.h)


def numeric_tensors(g: SubunitGeometry, sigma_i: float, sigma_g: float, sigma_e: float,
                    nx: int = 256, ny: int = 32) -> EffectiveTensors:
    intra = solve_cell_problem(g, sigma_i, sigma_g, "intra", nx, ny)
    extra = solve_cell_problem(g, sigma_e, None, "extra", nx, ny)
    ref = effective_tensors(g, sigma_i, sigma_g, sigma_e)
    return EffectiveTensors(
        Sigma_i=tensor_from_corrector(intra, g),
        Sigma_e=tensor_from_corrector(extra, g),
        chi_i=ref.chi_i,
        chi_g=ref.chi_g,
        V_cell=ref.V_cell,
        V_intra=ref.V_intra,
        V_extra=ref.V_extra,
    )


def write_tensor_report(rows, path) -> None:
    """CSV ``model,Sigma_i_11,Sigma_e_11,chi_i,chi_g`` (mS/mm, mS/mm, 1/mm, 1/mm)."""
    lines = ["model,Sigma_i_11,Sigma_e_11,chi_i,chi_g"]
    for model_id, t in rows:
        lines.append(f"{model_id},{t.Sigma_i[0, 0]:.12g},{t.Sigma_e[0, 0]:.12g},{t.chi_i:.12g},{t.chi_g:.12g}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
