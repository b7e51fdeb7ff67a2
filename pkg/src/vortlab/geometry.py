"""Domains and grids.

Four domain kinds are supported:

* :class:`RectangleDomain` -- the square (0, pi)^2 with a sine basis.
* :class:`EllipseDomain` -- {a x1^2 + b x1 x2 + c x2^2 < 1}, discretized on a
  uniform node grid with an interior mask (:class:`MaskedGrid`).
* :class:`PeriodicBox` -- a 1D/2D/3D torus, the whole-space surrogate.
* :class:`EllipsoidForm` -- a 3x3 quadratic form, used algebraically only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# Nodes closer than this fraction of a cell to the boundary are merged into it.
MERGE_FRACTION = 1e-6


class DomainError(ValueError):
    """Raised when domain parameters violate their invariants."""


@dataclass(frozen=True)
class RectangleDomain:
    """The square (0, pi) x (0, pi); sampled at ``n`` interior nodes per axis."""

    n: int = 64

    def __post_init__(self):
        if self.n < 4:
            raise DomainError(f"rectangle needs n >= 4 interior nodes, got {self.n}")

    length = np.pi

    @property
    def spacing(self) -> float:
        return np.pi / (self.n + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Interior node coordinates along one axis, j*pi/(n+1) for j = 1..n."""
        return np.arange(1, self.n + 1) * self.spacing

    def mesh(self):
        return np.meshgrid(self.nodes, self.nodes, indexing="ij")


@dataclass(frozen=True)
class EllipseDomain:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.c > 0):
            raise DomainError(f"ellipse needs a > 0 and c > 0, got a={self.a}, c={self.c}")
        disc = self.b**2 - 4 * self.a * self.c
        # a relative margin rejects forms that are numerically degenerate
        if disc >= -1e-6 * (self.a * self.c):
            raise DomainError(f"ellipse discriminant b^2 - 4ac = {disc:.3e} is not negative")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b / 2], [self.b / 2, self.c]])

    def form(self, x1, x2):
        return self.a * x1**2 + self.b * x1 * x2 + self.c * x2**2

    def semi_extents(self) -> np.ndarray:
        """Half-widths of the tight axis-aligned bounding box."""
        return np.sqrt(np.diag(np.linalg.inv(self.matrix)))

    def area(self) -> float:
        return np.pi / np.sqrt(np.linalg.det(self.matrix))

    def potential_of_one(self, x1, x2):
        """Closed-form Dirichlet solution of Laplace(phi) = 1 on the ellipse."""
        return (self.form(x1, x2) - 1.0) / (2.0 * (self.a + self.c))


def unit_disk() -> EllipseDomain:
    return EllipseDomain(1.0, 0.0, 1.0)


@dataclass(frozen=True)
class EllipsoidForm:
    """Symmetric positive definite 3x3 form with unit trace."""

    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.shape != (3, 3):
            raise DomainError(f"ellipsoid form must be 3x3, got {A.shape}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-14):
            raise DomainError("ellipsoid form must be symmetric")
        if np.linalg.eigvalsh(A).min() <= 0:
            raise DomainError("ellipsoid form must be positive definite")
        if abs(np.trace(A) - 1.0) > 1e-12:
            raise DomainError(f"ellipsoid form must have unit trace, got {np.trace(A)}")
        object.__setattr__(self, "A", A)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "EllipsoidForm":
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        eig = rng.uniform(0.05, 1.0, size=3)
        A = Q @ np.diag(eig / eig.sum()) @ Q.T
        A = 0.5 * (A + A.T)
        return cls(A / np.trace(A))


@dataclass(frozen=True)
class PeriodicBox:
    """Torus of ``dim`` dimensions with ``n`` nodes per axis and period ``length``."""

    dim: int
    n: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f"periodic box dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2:
            raise DomainError(f"periodic box needs even n >= 8, got {self.n}")
        if not self.length > 0:
            raise DomainError(f"period must be positive, got {self.length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    def mesh(self):
        return np.meshgrid(*([self.nodes] * self.dim), indexing="ij")

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber arrays matching ``rfftn`` layout."""
        k_full = np.fft.fftfreq(self.n, d=1.0 / self.n) * (2 * np.pi / self.length)
        k_half = np.fft.rfftfreq(self.n, d=1.0 / self.n) * (2 * np.pi / self.length)
        ks = []
        for axis in range(self.dim):
            k = k_half if axis == self.dim - 1 else k_full
            shape = [1] * self.dim
            shape[axis] = k.size
            ks.append(k.reshape(shape))
        return tuple(ks)

    @cached_property
    def mode_index(self) -> tuple[np.ndarray, ...]:
        """Integer mode indices in ``rfftn`` layout (independent of period)."""
        i_full = np.fft.fftfreq(self.n, d=1.0 / self.n)
        i_half = np.fft.rfftfreq(self.n, d=1.0 / self.n)
        out = []
        for axis in range(self.dim):
            idx = i_half if axis == self.dim - 1 else i_full
            shape = [1] * self.dim
            shape[axis] = idx.size
            out.append(np.rint(idx).astype(int).reshape(shape))
        return tuple(out)

    @cached_property
    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.wavenumbers)


@dataclass(frozen=True, eq=False)
class MaskedGrid:
    """Node grid over the square box [-R, R]^2 enclosing an ellipse.

    ``theta[d]`` holds, for each interior node, the arm length toward the
    neighbour in direction ``d`` (east, west, north, south) as a fraction of
    the spacing: 1 when the neighbour is interior, the distance to the
    boundary crossing otherwise, and NaN at non-interior nodes.

    Identity-hashed so solver factorizations can be cached per grid.
    """

    domain: EllipseDomain
    n: int
    spacing: float
    origin: float
    interior: np.ndarray
    theta: dict = field(repr=False)

    DIRECTIONS = {"e": (1, 0), "w": (-1, 0), "n": (0, 1), "s": (0, -1)}

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n)

    def mesh(self):
        return np.meshgrid(self.nodes, self.nodes, indexing="ij")

    @property
    def n_interior(self) -> int:
        return int(self.interior.sum())

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    def interior_fraction(self) -> float:
        """Share of the box area covered by interior nodes, one h x h cell each."""
        return self.n_interior * self.spacing**2 / (self.spacing * (self.n - 1)) ** 2

    @cached_property
    def index(self) -> np.ndarray:
        """Linear unknown number per interior node, -1 elsewhere."""
        idx = np.full(self.interior.shape, -1, dtype=np.int64)
        idx[self.interior] = np.arange(self.n_interior)
        return idx

    def bulk(self, margin: int = 3) -> np.ndarray:
        """Interior nodes whose (2*margin+1)^2 neighbourhood is entirely interior."""
        from scipy.ndimage import binary_erosion

        structure = np.ones((2 * margin + 1,) * 2, dtype=bool)
        return binary_erosion(self.interior, structure=structure, border_value=0)


def _arm_fractions(domain: EllipseDomain, X1, X2, interior, h):
    M = domain.matrix
    q = domain.form(X1, X2)
    theta = {}
    for name, (d1, d2) in MaskedGrid.DIRECTIONS.items():
        e = np.array([d1, d2], dtype=float)
        # q(x + t e) = q(x) + 2 t (M x).e + t^2 e.M.e
        A = e @ M @ e
        B = 2 * ((M[0] @ e) * X1 + (M[1] @ e) * X2)
        C = q - 1.0
        with np.errstate(invalid="ignore", divide="ignore"):
            root = np.sqrt(B**2 - 4 * A * C)
            # positive root, in the form that avoids cancellation
            t = np.where(B >= 0, -2 * C / (B + root), (-B + root) / (2 * A))
        neighbour = np.roll(interior, shift=(-d1, -d2), axis=(0, 1))
        # roll wraps; edge nodes are never interior so wrapped values are harmless
        frac = np.where(neighbour, 1.0, np.minimum(t / h, 1.0))
        theta[name] = np.where(interior, frac, np.nan)
    return theta


def build_masked_grid(domain: EllipseDomain, n: int) -> MaskedGrid:
    """Discretize an ellipse on an ``n`` x ``n`` node grid.

    The box is square, [-R, R]^2 with R the larger semi-extent, and includes
    its edges; spacing is 2R/(n-1). Interior nodes satisfy the strict form
    inequality and sit at least ``MERGE_FRACTION`` of a cell from the boundary.
    """
    if not isinstance(domain, EllipseDomain):
        raise DomainError(f"masked grids need an EllipseDomain, got {type(domain).__name__}")
    if n < 16:
        raise DomainError(f"masked grid needs n >= 16, got {n}")
    R = float(domain.semi_extents().max())
    h = 2 * R / (n - 1)
    x = -R + h * np.arange(n)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    interior = domain.form(X1, X2) < 1.0
    interior[[0, -1], :] = False
    interior[:, [0, -1]] = False

    while True:
        theta = _arm_fractions(domain, X1, X2, interior, h)
        too_close = np.zeros_like(interior)
        for frac in theta.values():
            too_close |= interior & (frac < MERGE_FRACTION)
        if not too_close.any():
            break
        interior = interior & ~too_close

    return MaskedGrid(domain=domain, n=n, spacing=h, origin=-R, interior=interior, theta=theta)
