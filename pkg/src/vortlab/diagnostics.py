"""Quadratic forms, inner products and convergence-order estimates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elliptic
from .geometry import MaskedGrid, PeriodicBox, RectangleDomain
from .spectral import (
    FourierField,
    SineField,
    apply_Z_periodic,
    apply_Z_rectangle_grid,
    inner_product_sine,
    inner_product_spectral,
    sine_multiplier,
)


@dataclass(frozen=True)
class FormReport:
    value: float
    basis: str  # "sine", "periodic" or "bounded"
    norm: float  # L2 norm of the field

    @property
    def ratio(self) -> float:
        return self.value / self.norm**2 if self.norm > 0 else 0.0


def quadratic_form(i: int, j: int, w, domain=None) -> FormReport:
    """The integral of (Z_ij w) w over the domain.

    ``w`` may be a :class:`SineField`, a :class:`FourierField`, or grid values
    together with a ``domain`` (rectangle, periodic box or masked grid).
    Spectral routes use Parseval; the bounded route uses the h^2 node rule.
    """
    if isinstance(w, np.ndarray):
        if isinstance(domain, RectangleDomain):
            w = SineField.from_grid(w)
        elif isinstance(domain, PeriodicBox):
            w = FourierField.from_grid(domain, w)
        elif isinstance(domain, MaskedGrid):
            return _bounded_form(i, j, w, domain)
        else:
            raise TypeError(f"grid values need a domain, got {domain!r}")

    if isinstance(w, SineField):
        norm = np.sqrt(inner_product_sine(w, w))
        if i == j:
            value = inner_product_sine(SineField(sine_multiplier(i, j, w.n) * w.coeffs), w)
        else:
            h = np.pi / (w.n + 1)
            value = float(np.sum(apply_Z_rectangle_grid(i, j, w) * w.to_grid())) * h * h
        return FormReport(value, "sine", float(norm))

    if isinstance(w, FourierField):
        norm = np.sqrt(inner_product_spectral(w, w))
        value = inner_product_spectral(apply_Z_periodic(i, j, w), w)
        return FormReport(value, "periodic", float(norm))

    raise TypeError(f"unsupported field type {type(w).__name__}")


def _bounded_form(i, j, w, grid: MaskedGrid) -> FormReport:
    w = np.where(grid.interior, w, 0.0)
    zw = elliptic.apply_Z_bounded(i, j, grid, w)
    h2 = grid.cell_area
    return FormReport(float(np.sum(zw * w) * h2), "bounded", float(np.sqrt(np.sum(w**2) * h2)))


def grid_inner_product(f: np.ndarray, g: np.ndarray, domain) -> float:
    """Node-rule inner product on any supported domain."""
    if isinstance(domain, RectangleDomain):
        cell = domain.spacing**2
    elif isinstance(domain, PeriodicBox):
        cell = domain.cell_volume
    elif isinstance(domain, MaskedGrid):
        f = np.where(domain.interior, f, 0.0)
        cell = domain.cell_area
    else:
        raise TypeError(f"unsupported domain {domain!r}")
    return float(np.sum(f * g) * cell)


def convergence_order(samples) -> float:
    """Least-squares slope of log(error) against log(h).

    ``samples`` is a sequence of ``(h, error)`` pairs with h strictly
    decreasing and at least three entries.
    """
    h, e = (np.asarray(v, dtype=float) for v in zip(*samples))
    if h.size < 3:
        raise ValueError("convergence_order needs at least three (h, error) pairs")
    if np.any(np.diff(h) >= 0):
        raise ValueError("h must be strictly decreasing")
    if np.any(e <= 0) or np.any(h <= 0):
        raise ValueError("h and errors must be positive")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)
