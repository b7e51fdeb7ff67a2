"""Steady solutions of (Z_11 + alpha Z_22) w * w = w on the rectangle (0, pi)^2.

Writing L = Z_11 + alpha Z_22, the equation is (L w - 1) w = 0, so it is
enough to pick a vanishing set E, set w = 0 on E and solve L w = 1 on the
complement. On the sine basis L is the diagonal multiplier
(k1^2 + alpha k2^2) / |k|^2, which lies in [min(1, alpha), max(1, alpha)];
the restriction P L P to grid functions supported off E is therefore
symmetric positive definite and is inverted by conjugate gradients.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import SineField


class SteadySolveError(RuntimeError):
    def __init__(self, message, best, certificate):
        super().__init__(message)
        self.best = best
        self.certificate = certificate


def L_multiplier(alpha: float, n: int) -> np.ndarray:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    k = np.arange(1, n + 1, dtype=float)
    k1, k2 = k[:, None], k[None, :]
    return (k1**2 + alpha * k2**2) / (k1**2 + k2**2)


def apply_L(alpha: float, w: SineField) -> SineField:
    return SineField(L_multiplier(alpha, w.n) * w.coeffs)


def coercivity_bound(alpha: float) -> float:
    """Infimum of the L multiplier over the sine spectrum (approached, not attained)."""
    return min(1.0, alpha)


@dataclass(frozen=True)
class VanishingSet:
    """Node mask on the rectangle's interior grid; True marks the set E."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"vanishing set must be an n x n mask, got shape {m.shape}")
        if m.all():
            raise ValueError("the complement of the vanishing set is empty")
        object.__setattr__(self, "mask", m)

    @property
    def n(self) -> int:
        return self.mask.shape[0]

    @classmethod
    def empty(cls, n: int) -> "VanishingSet":
        return cls(np.zeros((n, n), dtype=bool))

    @classmethod
    def left_half(cls, n: int) -> "VanishingSet":
        """E = {x1 < pi/2}, sampled at the nodes."""
        m = np.zeros((n, n), dtype=bool)
        m[: n // 2, :] = True
        return cls(m)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, fraction: float = 0.3) -> "VanishingSet":
        m = rng.random((n, n)) < fraction
        if m.all():
            m.flat[0] = False
        return cls(m)


@dataclass(frozen=True)
class RestrictedProblem:
    alpha: float
    E: VanishingSet
    tol: float = 1e-10
    max_iter: int = 10_000

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass
class Certificate:
    alpha: float
    iterations: int
    converged: bool
    relative_residual: float
    off_E_residual: float  # discrete L2 norm of (L w - 1) on the complement of E
    on_E_max: float  # max |w| on E
    residual_history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def apply_L_grid(alpha: float, values: np.ndarray) -> np.ndarray:
    return apply_L(alpha, SineField.from_grid(values)).to_grid()


def restricted_operator(alpha: float, E: VanishingSet):
    """P L P on grid arrays, P zeroing the nodes of E."""
    keep = ~E.mask

    def op(v):
        return apply_L_grid(alpha, v * keep) * keep

    return op


def conjugate_gradient(apply, b: np.ndarray, tol: float, max_iter: int, x0=None):
    """Plain CG for a symmetric positive definite ``apply``.

    Stops when ||r|| <= tol * ||b||. Returns (x, converged, residual norms).
    """
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply(x)
    p = r.copy()
    rr = float(np.vdot(r, r))
    b_norm = float(np.linalg.norm(b))
    history = [np.sqrt(rr)]
    if b_norm == 0.0:
        return x, True, history
    for _ in range(max_iter):
        if history[-1] <= tol * b_norm:
            return x, True, history
        Ap = apply(p)
        step = rr / float(np.vdot(p, Ap))
        x += step * p
        r -= step * Ap
        rr_new = float(np.vdot(r, r))
        history.append(np.sqrt(rr_new))
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x, history[-1] <= tol * b_norm, history


def solve_restricted(problem: RestrictedProblem):
    """Find w with w = 0 on E and L w = 1 off E.

    Returns ``(w, certificate)`` with ``w`` on the interior grid. The
    certificate's residual is recomputed from ``w`` with a fresh application
    of L, not taken from the CG recurrence.
    """
    alpha, E = problem.alpha, problem.E
    keep = ~E.mask
    h = np.pi / (E.n + 1)
    b = keep.astype(float)
    x, converged, history = conjugate_gradient(
        restricted_operator(alpha, E), b, problem.tol, problem.max_iter
    )
    w = np.where(keep, x, 0.0)
    r = (apply_L_grid(alpha, w) - 1.0)[keep]
    cert = Certificate(
        alpha=alpha,
        iterations=len(history) - 1,
        converged=converged,
        relative_residual=history[-1] / max(np.linalg.norm(b), 1e-300),
        off_E_residual=float(np.sqrt(np.sum(r**2)) * h),
        on_E_max=float(np.abs(w[E.mask]).max()) if E.mask.any() else 0.0,
        residual_history=[float(v) for v in history],
    )
    if not converged:
        raise SteadySolveError(
            f"CG stalled after {cert.iterations} iterations (relative residual {cert.relative_residual:.3e})",
            w,
            cert,
        )
    return w, cert


def rayleigh_quotient(alpha: float, w: SineField) -> float:
    lam2 = w.coeffs**2
    return float(np.sum(L_multiplier(alpha, w.n) * lam2) / np.sum(lam2))


def coercivity_check(alpha: float, trials: int, n: int = 32, seed: int = 0) -> float:
    """Smallest <L w, w> / ||w||^2 over ``trials`` random sine fields.

    Trials alternate between broadband fields with random spectral decay
    and fields concentrated on a band of modes with one small wavenumber,
    where the multiplier approaches its infimum.
    """
    rng = np.random.default_rng(seed)
    k = np.arange(1, n + 1, dtype=float)
    worst = np.inf
    for t in range(trials):
        if t % 2 == 0:
            decay = rng.uniform(0.0, 3.0)
            coeffs = rng.standard_normal((n, n)) / np.add.outer(k, k) ** decay
        else:
            coeffs = np.zeros((n, n))
            axis_small = rng.integers(2)
            band = rng.integers(1, 3)
            block = rng.standard_normal((n, band)) * k[:, None] ** rng.uniform(0, 2)
            if axis_small:
                coeffs[:, :band] = block  # k2 small, k1 spread
            else:
                coeffs[:band, :] = block.T
        worst = min(worst, rayleigh_quotient(alpha, SineField(coeffs)))
    return float(worst)
