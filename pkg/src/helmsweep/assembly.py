"""Five-point Helmholtz operator ``Laplace + k^2`` in gridline block form.

Every row is multiplied by the product of its axis weights (stretch factors
in a PML, one half on a Robin boundary point), which keeps the matrix complex
symmetric.  Physical interior rows keep weight one, so their diagonal is
``-4/h^2 + k^2`` and the right-hand side there is the plain source.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .mesh import BoundarySpec, ConfigError, Grid2D, MediumProfile, PmlSpec, Side


@dataclass(frozen=True)
class AxisData:
    """One-dimensional scaled second difference along an axis.

    ``index`` is the grid index of each node (PML nodes lie outside ``1..n``),
    ``diag``/``off`` form the symmetric tridiagonal stiffness including ``1/h^2``,
    ``mass`` holds the row weights and ``robin`` flags Robin boundary nodes.
    """

    index: np.ndarray
    diag: np.ndarray
    off: np.ndarray
    mass: np.ndarray
    robin: np.ndarray

    @property
    def size(self) -> int:
        return self.index.size

    def stiffness(self) -> sp.csr_matrix:
        return sp.diags([self.off, self.diag, self.off], [-1, 0, 1], shape=(self.size, self.size), format="csr")

    def segment(self, start: int, stop: int) -> "AxisData":
        """Nodes ``start..stop-1``; couplings leaving the segment are dropped."""
        return AxisData(
            self.index[start:stop],
            self.diag[start:stop],
            self.off[start : max(start, stop - 1)],
            self.mass[start:stop],
            self.robin[start:stop],
        )


def build_axis(
    n: int,
    h: float,
    lower: Side,
    upper: Side,
    pml: PmlSpec | None = None,
    omega: float = 1.0,
) -> AxisData:
    """Nodes ``1..n`` plus boundary or PML nodes on each side."""
    low_extra = {"dirichlet": 0, "robin": 1, "pml": pml.width_cells if pml else 0}[lower.kind]
    high_extra = {"dirichlet": 0, "robin": 1, "pml": pml.width_cells if pml else 0}[upper.kind]
    index = np.arange(1 - low_extra, n + 1 + high_extra)
    # depth into the layer measured from the boundary node (index 0 or n+1)
    midpoints = np.arange(index[0] - 0.5, index[-1] + 1.0, 1.0)

    def stretch(points):
        result = np.ones(points.shape, dtype=complex)
        if lower.kind == "pml":
            result *= pml.stretch(-points * h, h, omega)
        if upper.kind == "pml":
            result *= pml.stretch((points - (n + 1)) * h, h, omega)
        return result

    node_s = stretch(index.astype(float))
    mid_c = 1.0 / stretch(midpoints)
    left_c, right_c = mid_c[:-1], mid_c[1:]
    diag = -(left_c + right_c) / h**2
    off = right_c[:-1] / h**2
    mass = node_s.copy()
    robin = np.zeros(index.size)
    if lower.kind == "robin":
        diag[0] = -right_c[0] / h**2
        mass[0] = 0.5
        robin[0] = 1.0
    if upper.kind == "robin":
        diag[-1] = -left_c[-1] / h**2
        mass[-1] = 0.5
        robin[-1] = 1.0
    return AxisData(index, diag.astype(complex), off.astype(complex), mass.astype(complex), robin)


@dataclass(frozen=True)
class SparseOperator:
    """Block-tridiagonal operator with one block per x-gridline.

    ``line_k`` is the wavenumber used on each gridline; ``source_mask`` marks
    the physical interior unknowns that may carry a source.
    """

    matrix: sp.csr_matrix
    x_axis: AxisData
    y_axis: AxisData
    line_k: np.ndarray
    h: float
    source_mask: np.ndarray
    robin_coefficient: complex | None = None

    @property
    def line_count(self) -> int:
        return self.x_axis.size

    @property
    def line_size(self) -> int:
        return self.y_axis.size

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def line_slice(self, line: int) -> slice:
        m = self.line_size
        return slice(line * m, (line + 1) * m)

    def lines_slice(self, first: int, last: int) -> slice:
        """Unknowns of gridlines ``first..last`` inclusive."""
        m = self.line_size
        return slice(first * m, (last + 1) * m)

    def line_of_index(self, grid_index: int) -> int:
        """Gridline position of the x grid index ``grid_index``."""
        return int(grid_index - self.x_axis.index[0])

    def diag_block(self, line: int) -> np.ndarray:
        s = self.line_slice(line)
        return self.matrix[s, s].toarray()

    def coupling(self, line: int) -> np.ndarray:
        """Diagonal of the block coupling gridline ``line`` to ``line + 1``."""
        return self.x_axis.off[line] * self.y_axis.mass

    def block(self, row_line: int, col_line: int) -> np.ndarray:
        return self.matrix[self.line_slice(row_line), self.line_slice(col_line)].toarray()

    def __matmul__(self, v):
        return self.matrix @ v

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def robin_shift(k, h: float, robin_coefficient: complex | None) -> np.ndarray:
    """Diagonal term ``-p0/h`` added by ghost elimination at a Robin node."""
    k = np.asarray(k, dtype=float)
    p0 = -1j * k if robin_coefficient is None else np.full(k.shape, complex(robin_coefficient))
    return -p0 / h


def assemble_lines(
    x_axis: AxisData,
    y_axis: AxisData,
    line_k,
    h: float,
    robin_coefficient: complex | None = None,
    physical_n: tuple[int, int] | None = None,
) -> SparseOperator:
    """Assemble ``Kx (x) My + Mx (x) Ky + k^2 Mx (x) My`` plus Robin terms."""
    line_k = np.asarray(line_k, dtype=float)
    if line_k.shape != (x_axis.size,):
        raise ConfigError("one wavenumber per gridline is required")
    y_robin = robin_shift(line_k, h, robin_coefficient)
    my = y_axis.mass
    stiff_x = sp.diags([x_axis.off, x_axis.off], [-1, 1], shape=(x_axis.size, x_axis.size))
    diag_x = x_axis.diag + x_axis.robin * y_robin
    diagonal = (
        np.outer(diag_x, my)
        + np.outer(x_axis.mass * y_robin, y_axis.robin)
        + np.outer(x_axis.mass * line_k**2, my)
    ).ravel()
    ky_off = sp.diags([y_axis.off, y_axis.off], [-1, 1], shape=(y_axis.size, y_axis.size))
    ky_diag = np.tile(y_axis.diag, x_axis.size) * np.repeat(x_axis.mass, y_axis.size)
    matrix = (
        sp.kron(stiff_x, sp.diags(my))
        + sp.kron(sp.diags(x_axis.mass), ky_off)
        + sp.diags(diagonal + ky_diag)
    ).tocsr()
    matrix.sum_duplicates()
    if physical_n is None:
        mask = np.zeros(matrix.shape[0], dtype=bool)
    else:
        nx, ny = physical_n
        in_x = (x_axis.index >= 1) & (x_axis.index <= nx)
        in_y = (y_axis.index >= 1) & (y_axis.index <= ny)
        mask = np.outer(in_x, in_y).ravel()
    return SparseOperator(matrix, x_axis, y_axis, line_k, h, mask, robin_coefficient)


def pml_omega(bc: BoundarySpec, medium: MediumProfile) -> float:
    """Frequency in the stretching: explicit ``omega`` or the mean base wavenumber."""
    if bc.pml is not None and bc.pml.omega is not None:
        return float(bc.pml.omega)
    return float(np.mean(medium.base_k))


def line_wavenumbers(grid: Grid2D, medium: MediumProfile, x_index) -> np.ndarray:
    """Wavenumber per gridline; boundary and PML lines copy the nearest physical line."""
    clipped = np.clip(np.asarray(x_index), 1, grid.nx)
    return medium.values_at(clipped * grid.h)


def assemble_helmholtz(grid: Grid2D, medium: MediumProfile, bc: BoundarySpec | None = None) -> SparseOperator:
    bc = bc or BoundarySpec()
    omega = pml_omega(bc, medium)
    x_axis = build_axis(grid.nx, grid.h, bc.left, bc.right, bc.pml, omega)
    y_axis = build_axis(grid.ny, grid.h, bc.bottom, bc.top, bc.pml, omega)
    k_lines = line_wavenumbers(grid, medium, x_axis.index)
    return assemble_lines(x_axis, y_axis, k_lines, grid.h, bc.robin_coefficient, (grid.nx, grid.ny))


def apply(op: SparseOperator, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] != op.size:
        raise ValueError(f"vector of length {v.shape[0]} does not match operator size {op.size}")
    return op.matrix @ v


def assemble_truncated(op: SparseOperator, first: int, last: int, line_k=None) -> SparseOperator:
    """Gridlines ``first..last`` of ``op`` as a standalone operator.

    ``line_k`` overrides the wavenumber (the identity-extension rule passes a
    constant).  An empty range gives an empty operator.
    """
    if last < first:
        empty = AxisData(*(np.zeros(0, dtype=t) for t in (int, complex, complex, complex, float)))
        return SparseOperator(sp.csr_matrix((0, 0), dtype=complex), empty, op.y_axis, np.zeros(0), op.h, np.zeros(0, bool))
    x_axis = op.x_axis.segment(first, last + 1)
    k = op.line_k[first : last + 1] if line_k is None else np.broadcast_to(np.asarray(line_k, dtype=float), (x_axis.size,)).copy()
    sub = assemble_lines(x_axis, op.y_axis, k, op.h, op.robin_coefficient)
    mask = op.source_mask[op.lines_slice(first, last)]
    return replace(sub, source_mask=mask)


def pml_exterior_axis(h: float, pml: PmlSpec, omega: float) -> tuple[AxisData, complex]:
    """Stretched lines beyond an interface line.

    The interface line sits at depth 0, followed by ``width_cells - 1``
    stretched lines and a Dirichlet line at depth ``width_cells``.  The layer is
    mirror symmetric, so the same data serves either side.  Returns the axis
    of the exterior lines (ordered away from the interface) and the midpoint
    coefficient ``1/s`` between the interface and the first exterior line.
    """
    width = pml.width_cells
    depth_nodes = np.arange(1, width) * h
    depth_mid = (np.arange(0, width) + 0.5) * h
    node_s = pml.stretch(depth_nodes, h, omega)
    mid_c = 1.0 / pml.stretch(depth_mid, h, omega)
    diag = -(mid_c[:-1] + mid_c[1:]) / h**2
    off = mid_c[1:-1] / h**2
    axis = AxisData(np.arange(1, width), diag.astype(complex), off.astype(complex), node_s.astype(complex), np.zeros(width - 1))
    return axis, complex(mid_c[0])


def format_complex(value: complex) -> str:
    return f"{value.real:.17g}{value.imag:+.17g}j"


def dumps_field(op: SparseOperator, u: np.ndarray, include_pml: bool = True) -> str:
    """CSV text with one row per gridline, cells ``re+imj``."""
    values = np.asarray(u).reshape(op.line_count, op.line_size)
    rows = range(op.line_count)
    cols = np.arange(op.line_size)
    if not include_pml:
        mask = op.source_mask.reshape(op.line_count, op.line_size)
        rows = [r for r in rows if mask[r].any()]
        cols = np.flatnonzero(mask.any(axis=0))
    return "\n".join(",".join(format_complex(values[r, c]) for c in cols) for r in rows) + "\n"


def loads_field(text: str) -> np.ndarray:
    rows = [line for line in text.strip().splitlines() if line]
    return np.array([[complex(cell) for cell in row.split(",")] for row in rows])


def dumps_matrix(matrix) -> str:
    """Coordinate triplet text ``row col re im`` of a sparse or dense matrix."""
    coo = sp.coo_matrix(matrix)
    return "".join(
        f"{r} {c} {v.real:.17g} {v.imag:.17g}\n" for r, c, v in zip(coo.row, coo.col, coo.data.astype(complex))
    )
