"""SPD solves used by the capacity and class-norm minimisations."""
from __future__ import annotations

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 200
DIRECT_LIMIT = 10_000
CG_RTOL = 1e-12


def solve_spd(A: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` for a symmetric positive definite ``A``.

    Dense Cholesky below ``DENSE_LIMIT`` unknowns, sparse LU up to
    ``DIRECT_LIMIT``, conjugate gradients (relative residual 1e-12) above.
    """
    n = A.shape[0]
    if n == 0:
        return np.zeros(0)
    if n <= DENSE_LIMIT:
        dense = A.toarray() if sp.issparse(A) else np.asarray(A)
        return la.cho_solve(la.cho_factor(dense), b)
    A = sp.csc_matrix(A)
    if n <= DIRECT_LIMIT:
        return spla.spsolve(A, b)
    x, info = spla.cg(A, b, rtol=CG_RTOL, atol=0.0, maxiter=20 * n)
    if info != 0:
        raise RuntimeError(f"conjugate gradients did not converge (info={info})")
    return x
