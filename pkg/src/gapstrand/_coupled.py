"""Semi-implicit membrane-coupled step shared by the discrete and continuum solvers.

Both solvers advance unknowns ``x = (phi_i, phi_e)`` through

    (A + B^T W (c/dt) B) x^{n+1} = B^T W [(c/dt) v^n - s^n]

where ``A = diag(A_i, A_e)`` is the stiffness, ``B x = phi_i - phi_e`` maps onto
membrane sites, ``W`` holds membrane measures, ``c`` capacitances and ``s`` the
explicit ionic-plus-stimulus current per unit membrane. The matrix is
symmetric positive semidefinite with the constant vector as its kernel; the
gauge is fixed by a zero mean over extracellular unknowns.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError


class CoupledOperator:
    def __init__(self, stiffness, coupling, weights, capacitance, dt, gauge, method="direct", rtol=1e-9):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.coupling = sp.csr_matrix(coupling)
        self.coupling_t = self.coupling.T.tocsr()
        self.weights = np.asarray(weights, dtype=float)
        self.capacitance = np.asarray(capacitance, dtype=float)
        self.dt = float(dt)
        self.gauge = np.asarray(gauge)
        self.method = method
        self.rtol = rtol
        m = sp.diags(self.weights * self.capacitance / self.dt)
        self.matrix = (sp.csr_matrix(stiffness) + self.coupling_t @ m @ self.coupling).tocsr()
        self.matrix.sum_duplicates()
        n = self.matrix.shape[0]
        self.last_residual = 0.0
        if method == "direct":
            pin = int(self.gauge[0])
            self._keep = np.delete(np.arange(n), pin)
            reduced = self.matrix[self._keep][:, self._keep].tocsc()
            try:
                self._lu = spla.splu(
                    reduced,
                    permc_spec="MMD_AT_PLUS_A",
                    diag_pivot_thresh=0.0,
                    options={"SymmetricMode": True},
                )
            except RuntimeError as exc:
                raise ConvergenceError(f"singular coupled system: {exc}") from exc
        elif method == "cg":
            diag = self.matrix.diagonal()
            if np.any(diag <= 0):
                raise ConvergenceError("coupled system has an empty row (disconnected domain)")
            self._precond = spla.LinearOperator((n, n), matvec=lambda r: r / diag, dtype=float)
        else:
            raise ValueError(f"unknown linear solver {method!r}")

    def rhs(self, v_old, source) -> np.ndarray:
        """Assemble the right-hand side from per-site ``v^n`` and current ``s^n``."""
        r = self.weights * (self.capacitance / self.dt * v_old - source)
        return self.coupling_t @ r

    def solve(self, b) -> np.ndarray:
        if self.method == "direct":
            x = np.zeros(b.shape[0])
            x[self._keep] = self._lu.solve(b[self._keep])
        else:
            x, info = spla.cg(self.matrix, b, rtol=self.rtol, atol=0.0, M=self._precond, maxiter=20 * b.shape[0])
            if info != 0:
                res = np.linalg.norm(self.matrix @ x - b) / max(np.linalg.norm(b), 1e-300)
                raise ConvergenceError("conjugate gradient did not converge", res)
        x -= x[self.gauge].mean()
        bn = np.linalg.norm(b)
        self.last_residual = float(np.linalg.norm(self.matrix @ x - b) / bn) if bn > 0 else 0.0
        return x

    def membrane_current(self, x, v_old, source) -> np.ndarray:
        """Transmembrane current density per site implied by a solution ``x``."""
        v_new = self.coupling @ x
        return self.capacitance * (v_new - v_old) / self.dt + source
