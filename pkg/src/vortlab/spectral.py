"""Sine and Fourier bases, the Z_ij multipliers, the Hilbert transform and
dealiased products.

Z_ij denotes d_i d_j Laplace^{-1}. On the sine basis of (0, pi)^2 the diagonal
operators act by k_i^2 / |k|^2; on the torus every Z_ij acts by
k_i k_j / |k|^2 with the zero mode sent to zero (mean gauge).

Axis indices are 1-based throughout to match the usual Z_11, Z_12 notation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft

from .geometry import PeriodicBox


class UnsupportedBasisError(ValueError):
    """Raised when an operator cannot be represented in the requested basis."""


def _check_index(i: int, j: int, dim: int):
    if not (1 <= i <= dim and 1 <= j <= dim):
        raise ValueError(f"Z index ({i},{j}) invalid for dimension {dim}")


# ---------------------------------------------------------------- sine basis


@dataclass
class SineField:
    """w = sum_k coeffs[k1-1, k2-1] sin(k1 x1) sin(k2 x2) on (0, pi)^2."""

    coeffs: np.ndarray

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_grid(cls, values: np.ndarray) -> "SineField":
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"sine transform expects an n x n interior grid, got {values.shape}")
        n = values.shape[0]
        return cls(fft.dstn(values, type=1) / (n + 1) ** 2)

    def to_grid(self) -> np.ndarray:
        return fft.dstn(self.coeffs, type=1) / 4.0

    @classmethod
    def from_modes(cls, n: int, modes) -> "SineField":
        """Build from ``{(k1, k2): amplitude}``."""
        coeffs = np.zeros((n, n))
        for (k1, k2), amp in dict(modes).items():
            coeffs[k1 - 1, k2 - 1] += amp
        return cls(coeffs)

    def wavenumbers(self):
        k = np.arange(1, self.n + 1, dtype=float)
        return k[:, None], k[None, :]


def sine_transform(values: np.ndarray) -> SineField:
    return SineField.from_grid(values)


def inverse_sine_transform(field: SineField) -> np.ndarray:
    return field.to_grid()


def sine_multiplier(i: int, j: int, n: int) -> np.ndarray:
    _check_index(i, j, 2)
    if i != j:
        raise UnsupportedBasisError(
            f"Z_{i}{j} does not preserve the sine basis; use apply_Z_rectangle_grid "
            "or the periodic/bounded-grid routes"
        )
    k = np.arange(1, n + 1, dtype=float)
    k1, k2 = k[:, None], k[None, :]
    return (k1 if i == 1 else k2) ** 2 / (k1**2 + k2**2)


def apply_Z_sine(i: int, j: int, w: SineField) -> SineField:
    """Diagonal Z_ii on the sine basis: coefficient-wise k_i^2 / |k|^2."""
    return SineField(sine_multiplier(i, j, w.n) * w.coeffs)


def apply_Z_rectangle_grid(i: int, j: int, w: SineField) -> np.ndarray:
    """Grid values of Z_ij w on the rectangle's interior nodes.

    Diagonal pairs stay in the sine basis. Z_12 maps sin(k1 x1) sin(k2 x2) to
    -(k1 k2 / |k|^2) cos(k1 x1) cos(k2 x2), which is synthesized with DCT-I.
    """
    if i == j:
        return apply_Z_sine(i, j, w).to_grid()
    _check_index(i, j, 2)
    k1, k2 = w.wavenumbers()
    c = -(k1 * k2) / (k1**2 + k2**2) * w.coeffs
    padded = np.zeros((w.n + 2, w.n + 2))
    padded[1:-1, 1:-1] = c
    full = fft.dctn(padded, type=1) / 4.0
    return full[1:-1, 1:-1]


def truncate_sine(w: SineField) -> SineField:
    """Two-thirds truncation: keep k_i <= 2n/3."""
    keep = np.arange(1, w.n + 1) <= (2 * w.n) // 3
    return SineField(w.coeffs * (keep[:, None] & keep[None, :]))


# ------------------------------------------------------------- Fourier basis


@dataclass
class FourierField:
    """Real field on a periodic box, stored as ``rfftn`` coefficients."""

    box: PeriodicBox
    coeffs: np.ndarray

    @classmethod
    def from_grid(cls, box: PeriodicBox, values: np.ndarray) -> "FourierField":
        values = np.asarray(values, dtype=float)
        if values.shape != box.shape:
            raise ValueError(f"grid shape {values.shape} does not match box {box.shape}")
        return cls(box, fft.rfftn(values))

    def to_grid(self) -> np.ndarray:
        return fft.irfftn(self.coeffs, s=self.box.shape)

    @property
    def mean(self) -> float:
        return float(self.coeffs.flat[0].real) / self.box.n**self.box.dim


def _nonzero_k2(box: PeriodicBox) -> np.ndarray:
    k2 = box.k_squared.copy()
    k2.flat[0] = 1.0
    return k2


def z_multiplier(box: PeriodicBox, i: int, j: int) -> np.ndarray:
    _check_index(i, j, box.dim)
    ks = box.wavenumbers
    m = ks[i - 1] * ks[j - 1] / _nonzero_k2(box)
    m = np.broadcast_to(m, box.k_squared.shape).copy()
    m.flat[0] = 0.0
    return m


def apply_Z_periodic(i: int, j: int, w: FourierField) -> FourierField:
    """Z_ij on the torus: k_i k_j / |k|^2, zero mode annihilated."""
    return FourierField(w.box, z_multiplier(w.box, i, j) * w.coeffs)


def derivative_multiplier(box: PeriodicBox, axis: int) -> np.ndarray:
    """i k along a 1-based axis, with the Nyquist mode zeroed."""
    k = box.wavenumbers[axis - 1]
    nyquist = np.abs(box.mode_index[axis - 1]) == box.n // 2
    return np.where(nyquist, 0.0, 1j * k)


def inverse_laplacian(w: FourierField) -> FourierField:
    """Laplace^{-1} with zero mean."""
    out = -w.coeffs / _nonzero_k2(w.box)
    out.flat[0] = 0.0
    return FourierField(w.box, out)


def hilbert_1d(theta: FourierField) -> FourierField:
    """Hilbert transform with multiplier -i sgn(k); zero and Nyquist modes vanish."""
    if theta.box.dim != 1:
        raise ValueError("hilbert_1d needs a 1D periodic box")
    idx = theta.box.mode_index[0]
    m = -1j * np.sign(idx)
    m[idx == theta.box.n // 2] = 0.0
    return FourierField(theta.box, m * theta.coeffs)


def dealias_mask(box: PeriodicBox) -> np.ndarray:
    """True on modes kept by the 2/3 rule: |index| <= (n-1)//3 on every axis."""
    cutoff = (box.n - 1) // 3
    keep = np.ones(box.k_squared.shape, dtype=bool)
    for idx in box.mode_index:
        keep = keep & (np.abs(idx) <= cutoff)
    return keep


def dealiased_product(f, g, box: PeriodicBox | None = None):
    """Pointwise product of two fields without aliasing on the retained modes.

    On the torus (``FourierField`` inputs, or grid arrays with ``box``) both
    inputs and the output spectrum are truncated by the 2/3 rule. With
    ``SineField`` inputs only the inputs are truncated; the product of two
    sine series leaves the sine basis, so there is no output band to protect.
    """
    if isinstance(f, SineField):
        if f.n != g.n:
            raise ValueError("sine fields differ in size")
        return truncate_sine(f).to_grid() * truncate_sine(g).to_grid()

    as_grid = not isinstance(f, FourierField)
    if as_grid:
        if box is None:
            raise ValueError("grid inputs need a PeriodicBox")
        f = FourierField.from_grid(box, f)
        g = FourierField.from_grid(box, g)
    elif f.box != g.box:
        raise ValueError("Fourier fields live on different boxes")
    keep = dealias_mask(f.box)
    fg = fft.irfftn(f.coeffs * keep, s=f.box.shape) * fft.irfftn(g.coeffs * keep, s=f.box.shape)
    out = FourierField(f.box, fft.rfftn(fg) * keep)
    return out.to_grid() if as_grid else out


def rfft_weights(box: PeriodicBox) -> np.ndarray:
    """Multiplicity of each ``rfftn`` coefficient in the full spectrum."""
    n_half = box.n // 2 + 1
    w = np.full(n_half, 2.0)
    w[0] = 1.0
    w[-1] = 1.0  # n even: Nyquist is its own conjugate
    shape = [1] * box.dim
    shape[-1] = n_half
    return w.reshape(shape)


def inner_product_spectral(f: FourierField, g: FourierField) -> float:
    """Integral of f*g over the box, evaluated by Parseval."""
    box = f.box
    s = np.sum(rfft_weights(box) * (f.coeffs * np.conj(g.coeffs)).real)
    return float(s) * box.length**box.dim / (box.n**box.dim) ** 2


def inner_product_sine(f: SineField, g: SineField) -> float:
    """Integral of f*g over (0, pi)^2 by Parseval: (pi/2)^2 sum lambda mu."""
    return float(np.sum(f.coeffs * g.coeffs)) * (np.pi / 2) ** 2


