"""Grid, layered media and boundary-condition descriptions on the unit square.

Unknowns are ordered gridline-major along x: the global index of the point
``(line, point)`` is ``line * line_size + point``.  Physical interior points sit
at ``(i*h, j*h)`` for ``1 <= i <= nx`` and ``1 <= j <= ny``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SIDE_KINDS = ("dirichlet", "robin", "pml")


class ConfigError(ValueError):
    """Raised for inadmissible grid, medium or boundary configurations."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform grid of interior points on the unit square."""

    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ConfigError(f"grid needs at least 2 interior points per axis, got {self.nx}x{self.ny}")
        if self.nx != self.ny:
            raise ConfigError("only square cells are supported: nx must equal ny")

    @property
    def h(self) -> float:
        return 1.0 / (self.nx + 1)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def x(self, i):
        return np.asarray(i) * self.h


def build_grid(nx: int, ny: int) -> Grid2D:
    return Grid2D(nx, ny)


@dataclass(frozen=True)
class MediumProfile:
    """Piecewise-constant wavenumber made of vertical layers.

    ``layer_edges`` holds the interior breakpoints, so there is one more
    layer than edges.
    """

    layer_edges: tuple
    base_k: tuple
    delta_k: tuple
    alpha: float = 0.0

    def __post_init__(self):
        if len(self.base_k) == 0 or len(self.base_k) != len(self.delta_k):
            raise ConfigError("base_k and delta_k must be non-empty and of equal length")
        if len(self.layer_edges) != len(self.base_k) - 1:
            raise ConfigError("need exactly one fewer layer edge than layers")
        edges = np.asarray(self.layer_edges, dtype=float)
        if edges.size and (np.any(np.diff(edges) <= 0) or edges[0] <= 0 or edges[-1] >= 1):
            raise ConfigError("layer edges must increase strictly inside (0, 1)")

    @property
    def layer_values(self) -> np.ndarray:
        return np.asarray(self.base_k, dtype=float) + self.alpha * np.asarray(self.delta_k, dtype=float)

    @property
    def max_k(self) -> float:
        return float(self.layer_values.max())

    def layer_of(self, x) -> np.ndarray:
        # half-open layers [edge_l, edge_{l+1}); a point on an edge goes right
        return np.searchsorted(np.asarray(self.layer_edges, dtype=float), np.asarray(x, dtype=float), side="right")

    def values_at(self, x) -> np.ndarray:
        """Vectorised wavenumber lookup without the open-interval check."""
        return self.layer_values[self.layer_of(x)]

    @classmethod
    def constant(cls, k: float) -> "MediumProfile":
        return cls((), (float(k),), (0.0,), 0.0)


def layered_wavenumber(base, delta, alpha: float, repeats: int = 1) -> MediumProfile:
    """Equal-width layers cycling through ``base + alpha*delta``."""
    base = list(base)
    delta = list(delta)
    if not base or not delta:
        raise ConfigError("base and delta must be non-empty")
    if len(base) != len(delta):
        raise ConfigError("base and delta must have the same length")
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    count = len(base) * repeats
    edges = tuple(layer / count for layer in range(1, count))
    return MediumProfile(edges, tuple(base * repeats), tuple(delta * repeats), float(alpha))


def evaluate_k(profile: MediumProfile, x: float) -> float:
    if not 0.0 < x < 1.0:
        raise ConfigError(f"x={x} lies outside the open unit interval")
    return float(profile.values_at(x))


def resolution_ok(grid: Grid2D, medium: MediumProfile, points_per_wavelength: int = 10) -> bool:
    """At least ``points_per_wavelength`` grid points per shortest wavelength."""
    return grid.h * medium.max_k <= 2 * math.pi / points_per_wavelength + 1e-12


@dataclass(frozen=True)
class PmlSpec:
    """Complex stretching ``s(t) = 1 + i*sigma(t)/omega`` with ``sigma = sigma0*(t/width)**exponent``.

    ``sigma0=None`` picks the strength whose round-trip amplitude factor
    ``exp(-2 * int sigma / omega)`` equals 1e-4 when the wavenumber equals ``omega``.
    """

    width_cells: int
    sigma0: float | None = None
    profile_exponent: int = 2
    omega: float | None = None
    target_reflection: float = 1e-4

    def __post_init__(self):
        if self.width_cells < 1:
            raise ConfigError("PML width must be at least one cell")
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ConfigError("sigma0 must be positive")

    def peak(self, h: float) -> float:
        if self.sigma0 is not None:
            return self.sigma0
        thickness = self.width_cells * h
        return (self.profile_exponent + 1) * math.log(1.0 / self.target_reflection) / (2.0 * thickness)

    def stretch(self, depth, h: float, omega: float) -> np.ndarray:
        """Stretch factor at signed depth into the layer (non-positive depth gives 1)."""
        thickness = self.width_cells * h
        ratio = np.clip(np.asarray(depth, dtype=float) / thickness, 0.0, None)
        sigma = self.peak(h) * ratio**self.profile_exponent
        return 1.0 + 1j * sigma / omega


@dataclass(frozen=True)
class Side:
    kind: str = "dirichlet"

    def __post_init__(self):
        if self.kind not in SIDE_KINDS:
            raise ConfigError(f"unknown side condition {self.kind!r}")


@dataclass(frozen=True)
class BoundarySpec:
    """Conditions on the four sides; every PML side uses ``pml``.

    ``robin_coefficient=None`` means ``p0 = -i*k`` at the boundary point.
    """

    left: Side = field(default_factory=Side)
    right: Side = field(default_factory=Side)
    bottom: Side = field(default_factory=Side)
    top: Side = field(default_factory=Side)
    pml: PmlSpec | None = None
    robin_coefficient: complex | None = None

    def __post_init__(self):
        uses_pml = any(side.kind == "pml" for side in self.sides)
        if uses_pml and self.pml is None:
            raise ConfigError("a PML side needs a PmlSpec")
        if not uses_pml and self.pml is not None:
            raise ConfigError("PmlSpec given but no side uses a PML")

    @property
    def sides(self):
        return (self.left, self.right, self.bottom, self.top)

    def robin_p0(self, k: float) -> complex:
        return -1j * k if self.robin_coefficient is None else complex(self.robin_coefficient)


def parse_outer(outer: str, omega: float | None = None) -> tuple[Side, PmlSpec | None]:
    """Parse ``"robin"``, ``"dirichlet"`` or ``"pml:<width>"``."""
    text = outer.strip().lower()
    if text in ("robin", "dirichlet"):
        return Side(text), None
    if text.startswith("pml:"):
        try:
            width = int(text.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad PML width in {outer!r}") from exc
        return Side("pml"), PmlSpec(width, omega=omega)
    raise ConfigError(f"unknown outer condition {outer!r}")


def boundary_for_setting(setting: str, outer: str, omega: float | None = None) -> BoundarySpec:
    """Waveguide: outer condition left/right, Dirichlet top/bottom.  Open: outer condition all around."""
    side, pml = parse_outer(outer, omega)
    if setting == "guide":
        return BoundarySpec(left=side, right=side, pml=pml)
    if setting == "open":
        return BoundarySpec(left=side, right=side, bottom=side, top=side, pml=pml)
    raise ConfigError(f"unknown setting {setting!r}")
