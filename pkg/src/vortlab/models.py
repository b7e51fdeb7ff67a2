"""Right-hand sides of the nonlocal vorticity models.

Every model is written ``w_t = F(w)``. The variants are

``model1``          w_t = (Z_11 w) w                                (2D)
``model1prime``     w_t = (Z_12 w) w                                (2D)
``system32``        w_t = M(w) w, M = [[w1 + Z_11 w1, w1/2],
                                       [w1/2, w1 + Z_11 w1]]        (2D, 2 components)
``zero_order_3d``   w_t = (grad u) w, curl u = w, div u = 0         (3D torus)
``perturbed``       w_t = [Laplace w] - [u . grad w] + (Z_11 w) w   (2D torus)
``clm``             theta_t = H(theta) theta                        (1D torus)

On the torus Z_ij and H annihilate the zero mode, so a field that acquires a
mean carries it without feeding it back into the nonlocal terms.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import fft

from . import elliptic
from .geometry import EllipsoidForm, MaskedGrid, PeriodicBox, RectangleDomain
from .spectral import (
    FourierField,
    SineField,
    UnsupportedBasisError,
    apply_Z_periodic,
    apply_Z_rectangle_grid,
    dealiased_product,
    derivative_multiplier,
    hilbert_1d,
    inverse_laplacian,
    truncate_sine,
    z_multiplier,
)

VARIANTS = ("model1", "model1prime", "system32", "zero_order_3d", "perturbed", "clm")


class GaugeError(ValueError):
    """Raised when a torus field has a mean the Biot-Savart law cannot absorb."""


# Levi-Civita symbol; eps[i, j, l] is the generalized Kronecker sign delta^i_{jl}.
LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _l in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _l] = 1.0
    LEVI_CIVITA[_i, _l, _j] = -1.0


@dataclass(frozen=True)
class ModelSpec:
    variant: str
    domain: object
    convection: bool = False
    diffusion: bool = False
    reaction: bool = True  # the Z_11 w w term of "perturbed"; off only in linear tests

    def __post_init__(self):
        v, d = self.variant, self.domain
        if v not in VARIANTS:
            raise ValueError(f"unknown model {v!r}; choose from {', '.join(VARIANTS)}")
        if v in ("model1", "model1prime"):
            ok = isinstance(d, (MaskedGrid, RectangleDomain)) or (
                isinstance(d, PeriodicBox) and d.dim == 2
            )
        elif v == "system32":
            ok = isinstance(d, (MaskedGrid, RectangleDomain))
        elif v == "zero_order_3d":
            ok = isinstance(d, PeriodicBox) and d.dim == 3
        elif v == "perturbed":
            ok = isinstance(d, PeriodicBox) and d.dim == 2
        else:
            ok = isinstance(d, PeriodicBox) and d.dim == 1
        if not ok:
            raise ValueError(f"model {v!r} cannot run on {d!r}")

    @property
    def n_components(self) -> int:
        return {"system32": 2, "zero_order_3d": 3}.get(self.variant, 1)

    @property
    def state_shape(self) -> tuple[int, ...]:
        d = self.domain
        if isinstance(d, PeriodicBox):
            grid = d.shape
        else:
            grid = (d.n, d.n)
        return grid if self.n_components == 1 else (self.n_components, *grid)

    @property
    def stiff(self) -> bool:
        return self.variant == "perturbed" and self.diffusion


# ------------------------------------------------------------------ 2D scalar


def apply_Z(i: int, j: int, w: np.ndarray, domain, dealias: bool = True) -> np.ndarray:
    """Z_ij on grid values, routed by domain type."""
    if isinstance(domain, MaskedGrid):
        return elliptic.apply_Z_bounded(i, j, domain, w)
    if isinstance(domain, RectangleDomain):
        s = SineField.from_grid(w)
        return apply_Z_rectangle_grid(i, j, truncate_sine(s) if dealias else s)
    if isinstance(domain, PeriodicBox):
        return apply_Z_periodic(i, j, FourierField.from_grid(domain, w)).to_grid()
    raise UnsupportedBasisError(f"no Z_ij route for {type(domain).__name__}")


def _product(f: np.ndarray, g: np.ndarray, domain, dealias: bool) -> np.ndarray:
    if dealias and isinstance(domain, PeriodicBox):
        return dealiased_product(f, g, domain)
    return f * g


def rhs_zero_order_2d(i: int, j: int, w: np.ndarray, domain, dealias: bool = True) -> np.ndarray:
    """(Z_ij w) w: Model 1 for (1, 1), Model 1' for (1, 2)."""
    w = np.asarray(w, dtype=float)
    if isinstance(domain, MaskedGrid):
        w = np.where(domain.interior, w, 0.0)
    if isinstance(domain, RectangleDomain) and dealias:
        w = truncate_sine(SineField.from_grid(w)).to_grid()
    return _product(apply_Z(i, j, w, domain, dealias=False), w, domain, dealias)


def rhs_system32(w: np.ndarray, domain, dealias: bool = True) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape[0] != 2:
        raise ValueError(f"system32 needs a 2-component field, got {w.shape[0]} components")
    w1, w2 = w
    if isinstance(domain, MaskedGrid):
        w1 = np.where(domain.interior, w1, 0.0)
        w2 = np.where(domain.interior, w2, 0.0)
    elif isinstance(domain, RectangleDomain) and dealias:
        w1 = truncate_sine(SineField.from_grid(w1)).to_grid()
        w2 = truncate_sine(SineField.from_grid(w2)).to_grid()
    diag = w1 + apply_Z(1, 1, w1, domain, dealias=False)
    off = 0.5 * w1
    return np.stack([diag * w1 + off * w2, off * w1 + diag * w2])


# ---------------------------------------------------------------- 2D torus


def biot_savart_2d(w: np.ndarray, box: PeriodicBox, strict: bool = True, atol: float = 1e-10):
    """u = (-d_2 Laplace^{-1} w, d_1 Laplace^{-1} w) on a 2D torus.

    With ``strict`` a mean exceeding ``atol`` times the field's RMS raises
    :class:`GaugeError`; otherwise the mean is projected out.
    """
    if box.dim != 2:
        raise ValueError("biot_savart_2d needs a 2D periodic box")
    W = FourierField.from_grid(box, w)
    rms = np.sqrt(np.mean(np.asarray(w) ** 2))
    if strict and abs(W.mean) > atol * max(rms, 1.0):
        raise GaugeError(f"vorticity mean {W.mean:.3e} is not zero; Laplace^-1 is undefined on constants")
    psi = inverse_laplacian(W).coeffs
    u1 = fft.irfftn(-derivative_multiplier(box, 2) * psi, s=box.shape)
    u2 = fft.irfftn(derivative_multiplier(box, 1) * psi, s=box.shape)
    return np.stack([u1, u2])


def gradient(w: np.ndarray, box: PeriodicBox) -> np.ndarray:
    W = fft.rfftn(w)
    return np.stack([fft.irfftn(derivative_multiplier(box, a) * W, s=box.shape) for a in range(1, box.dim + 1)])


def divergence(u: np.ndarray, box: PeriodicBox) -> np.ndarray:
    return sum(fft.irfftn(derivative_multiplier(box, a + 1) * fft.rfftn(u[a]), s=box.shape) for a in range(box.dim))


def laplacian(w: np.ndarray, box: PeriodicBox) -> np.ndarray:
    return fft.irfftn(-box.k_squared * fft.rfftn(w), s=box.shape)


def convection_term(w: np.ndarray, box: PeriodicBox, dealias: bool = True) -> np.ndarray:
    """u . grad w with u from the 2D Biot-Savart law (mean gauged out)."""
    u = biot_savart_2d(w, box, strict=False)
    g = gradient(w, box)
    return sum(_product(u[a], g[a], box, dealias) for a in range(2))


def rhs_perturbed(
    w: np.ndarray,
    box: PeriodicBox,
    convection: bool,
    diffusion: bool,
    reaction: bool = True,
    dealias: bool = True,
) -> np.ndarray:
    """w_t = [diffusion] Laplace w - [convection] u . grad w + [reaction] (Z_11 w) w."""
    if not (convection or diffusion):
        return rhs_zero_order_2d(1, 1, w, box, dealias) if reaction else np.zeros_like(w)
    out = np.zeros_like(np.asarray(w, dtype=float))
    if reaction:
        out += rhs_zero_order_2d(1, 1, w, box, dealias)
    if convection:
        out -= convection_term(w, box, dealias)
    if diffusion:
        out += laplacian(w, box)
    return out


# ---------------------------------------------------------------- 3D torus


def _check_3d(w: np.ndarray, box: PeriodicBox):
    if box.dim != 3:
        raise ValueError("3D vorticity needs a 3D periodic box")
    if np.shape(w) != (3, *box.shape):
        raise ValueError(f"expected vorticity of shape {(3, *box.shape)}, got {np.shape(w)}")


def grad_u_3d(w: np.ndarray, box: PeriodicBox) -> np.ndarray:
    """The velocity gradient G[m, i] = d_m u_i written through Z_ij.

    The velocity is the one whose curl returns w, u = -curl Laplace^{-1} w
    (Laplace^{-1} being the inverse of the ordinary Laplacian). Row m,
    column i of G is minus::

        [Z21 w3 - Z31 w2,  Z31 w1 - Z11 w3,  Z11 w2 - Z21 w1]
        [Z22 w3 - Z32 w2,  Z32 w1 - Z12 w3,  Z12 w2 - Z22 w1]
        [Z23 w3 - Z33 w2,  Z33 w1 - Z13 w3,  Z13 w2 - Z23 w1]
    """
    _check_3d(w, box)
    W = [fft.rfftn(c) for c in w]

    def Z(i, j, c):
        return z_multiplier(box, i, j) * W[c - 1]

    entries = [
        [Z(2, m, 3) - Z(3, m, 2), Z(3, m, 1) - Z(1, m, 3), Z(1, m, 2) - Z(2, m, 1)]
        for m in (1, 2, 3)
    ]
    return -np.array([[fft.irfftn(e, s=box.shape) for e in row] for row in entries])


def rhs_zero_order_3d(w: np.ndarray, box: PeriodicBox, dealias: bool = True) -> np.ndarray:
    """(grad u w)_m = sum_i G[m, i] w_i."""
    G = grad_u_3d(w, box)
    return np.stack([sum(_product(G[m, i], w[i], box, dealias) for i in range(3)) for m in range(3)])


class Reconstruction(NamedTuple):
    u: np.ndarray
    div_norm: float
    curl_mismatch: float


def curl_3d(u: np.ndarray, box: PeriodicBox) -> np.ndarray:
    U = [fft.rfftn(c) for c in u]

    def d(axis, comp):
        return derivative_multiplier(box, axis) * U[comp - 1]

    parts = (d(2, 3) - d(3, 2), d(3, 1) - d(1, 3), d(1, 2) - d(2, 1))
    return np.stack([fft.irfftn(p, s=box.shape) for p in parts])


def rms(v: np.ndarray, vector: bool = False) -> float:
    """Root-mean-square over nodes; ``vector`` sums squares over axis 0 first."""
    v = np.asarray(v)
    sq = np.sum(v**2, axis=0) if vector else v**2
    return float(np.sqrt(np.mean(sq)))


def velocity_from_vorticity_3d(w: np.ndarray, box: PeriodicBox) -> Reconstruction:
    """u = -curl Laplace^{-1} w, with RMS norms of div u and curl u - w.

    The curl mismatch vanishes exactly when w is divergence-free (and zero
    mean); a nonzero mismatch is reported, never raised.
    """
    _check_3d(w, box)
    psi = np.stack([inverse_laplacian(FourierField.from_grid(box, c)).to_grid() for c in w])
    u = -curl_3d(psi, box)
    return Reconstruction(u, rms(divergence(u, box)), rms(curl_3d(u, box) - w, vector=True))


def skew_symmetry_residual(A, c) -> np.ndarray:
    """delta^i_{jl} a_{jm} c_l c_i for m = 1, 2, 3.

    Up to the sign fixed by the velocity convention, this is (grad u w)_m
    for constant vorticity c on the ellipsoid {a_ij x_i x_j < 1}, where
    Z_jm c = a_jm c.
    """
    A = A.A if isinstance(A, EllipsoidForm) else EllipsoidForm(A).A
    c = np.asarray(c, dtype=float)
    return np.einsum("ijl,jm,l,i->m", LEVI_CIVITA, A, c, c)


# ---------------------------------------------------------------------- CLM


def rhs_clm(theta: np.ndarray, box: PeriodicBox, dealias: bool = True) -> np.ndarray:
    T = FourierField.from_grid(box, theta)
    return _product(hilbert_1d(T).to_grid(), np.asarray(theta, dtype=float), box, dealias)


# ----------------------------------------------------------------- dispatch


def rhs(spec: ModelSpec, w: np.ndarray, dealias: bool = True, include_linear: bool = True) -> np.ndarray:
    """Full right-hand side F(w); ``include_linear=False`` drops the diffusion term."""
    d = spec.domain
    v = spec.variant
    if v == "model1":
        return rhs_zero_order_2d(1, 1, w, d, dealias)
    if v == "model1prime":
        return rhs_zero_order_2d(1, 2, w, d, dealias)
    if v == "system32":
        return rhs_system32(w, d, dealias)
    if v == "zero_order_3d":
        return rhs_zero_order_3d(w, d, dealias)
    if v == "perturbed":
        return rhs_perturbed(
            w, d, spec.convection, spec.diffusion and include_linear, spec.reaction, dealias
        )
    return rhs_clm(w, d, dealias)


def linear_symbol(spec: ModelSpec) -> np.ndarray | None:
    """Fourier symbol of the stiff linear part (``-|k|^2``), or None."""
    if not spec.stiff:
        return None
    return -spec.domain.k_squared

