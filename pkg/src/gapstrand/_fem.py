"""Low-order finite-element building blocks on tensor-product grids."""

import numpy as np
import scipy.sparse as sp


def stiffness_1d(x, weight):
    """1D linear-element stiffness and consistent mass, both scaled per element."""
    h = np.diff(x)
    n = x.shape[0]
    k = weight / h
    m = weight * h / 6.0
    i = np.arange(n - 1)
    rows = np.concatenate([i, i + 1, i, i + 1])
    cols = np.concatenate([i, i + 1, i + 1, i])
    stiff = sp.coo_matrix((np.concatenate([k, k, -k, -k]), (rows, cols)), shape=(n, n)).tocsr()
    mass = sp.coo_matrix((np.concatenate([2 * m, 2 * m, m, m]), (rows, cols)), shape=(n, n)).tocsr()
    return stiff, mass


def assemble_laplacian(x, y, sigma_x) -> sp.csr_matrix:
    """Bilinear-element stiffness of ``-div(sigma grad)`` on a tensor grid.

    ``sigma_x`` is the per-x-element conductivity (constant in y). Node
    ``(j, i)`` has index ``j * len(x) + i``.
    """
    sx, mx = stiffness_1d(x, np.asarray(sigma_x, dtype=float))
    sy, my = stiffness_1d(y, np.ones(y.shape[0] - 1))
    return (sp.kron(my, sx) + sp.kron(sy, mx)).tocsr()
