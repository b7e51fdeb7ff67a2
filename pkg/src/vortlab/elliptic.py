"""Dirichlet Poisson solves and Z_ij on ellipse domains.

The Laplacian uses the Shortley-Weller five-point stencil, whose arms are
shortened to the boundary crossing where a neighbour lies outside. Fields
are full ``n x n`` arrays over the masked grid; only interior entries are
read, and outputs are zero off the interior.

The Shortley-Weller matrix is not symmetric, so the solve is a sparse LU
factorization computed once per grid and reused. Solutions are polished by
iterative refinement with residuals in extended precision, and the
derivative stencils of Z_ij are applied in extended precision too: second
differences amplify potential errors by 1/h^2, and the constant solutions
of the blow-up models are unstable, so roundoff must stay at the level of
the last bit.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .geometry import MaskedGrid


class PoissonSolveError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


def _second_difference(grid: MaskedGrid, axis: int) -> sp.csr_matrix:
    """Nonuniform three-point d^2/dx_axis^2 with zero Dirichlet data at crossings."""
    h = grid.spacing
    fwd, bwd = ("e", "w") if axis == 0 else ("n", "s")
    step = (1, 0) if axis == 0 else (0, 1)
    inside = grid.interior
    idx = grid.index
    tf = grid.theta[fwd][inside] * h
    tb = grid.theta[bwd][inside] * h
    rows = idx[inside]

    cf = 2.0 / (tf * (tf + tb))
    cb = 2.0 / (tb * (tf + tb))
    data = [-(cf + cb)]
    r = [rows]
    c = [rows]

    ii, jj = np.nonzero(inside)
    for sign, coef in ((1, cf), (-1, cb)):
        ni, nj = ii + sign * step[0], jj + sign * step[1]
        nbr = idx[ni, nj]
        ok = nbr >= 0
        data.append(coef[ok])
        r.append(rows[ok])
        c.append(nbr[ok])
    m = grid.n_interior
    return sp.csr_matrix((np.concatenate(data), (np.concatenate(r), np.concatenate(c))), shape=(m, m))


@lru_cache(maxsize=32)
def laplacian_matrix(grid: MaskedGrid) -> sp.csr_matrix:
    return (_second_difference(grid, 0) + _second_difference(grid, 1)).tocsr()


@lru_cache(maxsize=32)
def _factorization(grid: MaskedGrid):
    return splu(laplacian_matrix(grid).tocsc())


@lru_cache(maxsize=32)
def _extended(matrix_fn, grid: MaskedGrid):
    return matrix_fn(grid).astype(np.longdouble)


def _solve_extended(grid: MaskedGrid, f: np.ndarray, sweeps: int = 2) -> np.ndarray:
    """LU solve plus refinement sweeps; returns the potential in long double."""
    lu = _factorization(grid)
    A = _extended(laplacian_matrix, grid)
    f_ext = f.astype(np.longdouble)
    phi = lu.solve(f).astype(np.longdouble)
    for _ in range(sweeps):
        r = f_ext - A @ phi
        phi = phi + lu.solve(np.asarray(r, dtype=float))
    return phi


def _quadratic_fit_row(offsets: np.ndarray) -> np.ndarray:
    """Weights giving d^2/dx dy of the least-squares quadratic through points.

    ``offsets`` are positions relative to the evaluation node in units of h.
    """
    x, y = offsets[:, 0], offsets[:, 1]
    V = np.column_stack([np.ones_like(x), x, y, x * x, x * y, y * y])
    return np.linalg.pinv(V)[4]


@lru_cache(maxsize=32)
def mixed_difference_matrix(grid: MaskedGrid) -> sp.csr_matrix:
    """d^2/dx1 dx2 on interior unknowns.

    The four-point cross stencil is used wherever all diagonal neighbours are
    interior. Elsewhere a quadratic is fitted by least squares to the interior
    nodes of the surrounding 5x5 block plus the boundary crossings (value 0)
    of the central 3x3 block; it is exact for quadratic potentials.
    """
    h = grid.spacing
    inside = grid.interior
    idx = grid.index
    n = grid.n
    rows, cols, vals = [], [], []

    diag_ok = np.zeros_like(inside)
    core = inside[1:-1, 1:-1]
    diag_ok[1:-1, 1:-1] = core & inside[2:, 2:] & inside[2:, :-2] & inside[:-2, 2:] & inside[:-2, :-2]

    ii, jj = np.nonzero(diag_ok)
    r = idx[ii, jj]
    for (di, dj), s in (((1, 1), 1), ((-1, -1), 1), ((1, -1), -1), ((-1, 1), -1)):
        rows.append(r)
        cols.append(idx[ii + di, jj + dj])
        vals.append(np.full(r.size, s / (4 * h * h)))

    for i, j in zip(*np.nonzero(inside & ~diag_ok)):
        pts, unknowns = [], []
        for di in range(-2, 3):
            for dj in range(-2, 3):
                a, b = i + di, j + dj
                if 0 <= a < n and 0 <= b < n and inside[a, b]:
                    pts.append((di, dj))
                    unknowns.append(idx[a, b])
        boundary_pts = []
        for di in range(-1, 2):
            for dj in range(-1, 2):
                a, b = i + di, j + dj
                if not (0 <= a < n and 0 <= b < n and inside[a, b]):
                    continue
                for name, (ei, ej) in MaskedGrid.DIRECTIONS.items():
                    t = grid.theta[name][a, b]
                    if t < 1.0:
                        boundary_pts.append((di + t * ei, dj + t * ej))
        offsets = np.array(pts + boundary_pts, dtype=float)
        weights = _quadratic_fit_row(offsets)[: len(pts)] / (h * h)
        rows.append(np.full(len(pts), idx[i, j]))
        cols.append(np.array(unknowns))
        vals.append(weights)

    m = grid.n_interior
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, m)
    )


def d11_matrix(grid: MaskedGrid) -> sp.csr_matrix:
    return _second_difference(grid, 0)


def d22_matrix(grid: MaskedGrid) -> sp.csr_matrix:
    return _second_difference(grid, 1)


def _derivative_matrix(grid: MaskedGrid, i: int, j: int):
    if (i, j) == (1, 1):
        return _extended(d11_matrix, grid)
    if (i, j) == (2, 2):
        return _extended(d22_matrix, grid)
    if {i, j} == {1, 2}:
        return _extended(mixed_difference_matrix, grid)
    raise ValueError(f"Z index ({i},{j}) invalid in two dimensions")


def to_interior(grid: MaskedGrid, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 0:
        return np.full(grid.n_interior, float(values))
    if values.shape != grid.interior.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.interior.shape}")
    return values[grid.interior]


def to_full(grid: MaskedGrid, vector: np.ndarray) -> np.ndarray:
    out = np.zeros(grid.interior.shape)
    out[grid.interior] = vector
    return out


def poisson_dirichlet(grid: MaskedGrid, rhs, tol: float = 1e-9) -> np.ndarray:
    """Solve Laplace(phi) = rhs with phi = 0 on the ellipse boundary.

    Returns phi as a full grid array. Raises :class:`PoissonSolveError` when
    the relative residual of the discrete system exceeds ``tol``.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    f = to_interior(grid, rhs)
    if not np.any(f):
        return np.zeros(grid.interior.shape)
    phi = _solve_extended(grid, f)
    res = _relative_residual(grid, phi, f)
    if not res <= tol:
        raise PoissonSolveError("Dirichlet Poisson solve did not reach tolerance", res)
    return to_full(grid, np.asarray(phi, dtype=float))


def _relative_residual(grid, phi, f) -> float:
    r = _extended(laplacian_matrix, grid) @ phi - f.astype(np.longdouble)
    return float(np.linalg.norm(np.asarray(r, dtype=float)) / np.linalg.norm(f))


def apply_Z_bounded(i: int, j: int, grid: MaskedGrid, w) -> np.ndarray:
    """Z_ij w = d_i d_j Laplace^{-1} w with homogeneous Dirichlet data."""
    D = _derivative_matrix(grid, i, j)
    f = to_interior(grid, w)
    if not np.any(f):
        return np.zeros(grid.interior.shape)
    phi = _solve_extended(grid, f)
    return to_full(grid, np.asarray(D @ phi, dtype=float))
