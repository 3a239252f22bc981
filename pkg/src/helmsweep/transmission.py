"""Interface operators ``S~`` closing a strip at a left or right interface line.

With ``Q = I`` the interface row of a subdomain system reads
``S~ u_a + A_{a,inner} u_inner = f_a + lambda`` where ``lambda`` carries the
neighbour data.  Kinds:

``exact``      Schur complement of everything beyond the interface.
``ident-ext``  the same, with the wavenumber beyond the interface replaced by
               its value on the line just outside.
``pml``        Schur complement of a stretched layer attached at the interface.
``robin``      half-cell Robin closure ``-p0`` with ``p0 = -i k``.
``dirichlet``  interface row replaced by the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import AxisData, SparseOperator, assemble_lines, assemble_truncated, pml_exterior_axis, robin_shift
from .linalg import DenseLU, SchurSequence, SingularMatrixError, block_tridiag_factor, schur_step
from .mesh import ConfigError, PmlSpec
from .partition import StripPartition

KINDS = ("exact", "ident-ext", "pml", "robin", "dirichlet")


@dataclass
class InterfaceOperator:
    kind: str
    side: str
    line: int
    matrix: np.ndarray | None = None
    exterior: dict = field(default_factory=dict)

    @property
    def is_dirichlet(self) -> bool:
        return self.kind == "dirichlet"


def _exterior_lines(op: SparseOperator, line: int, side: str) -> list[int]:
    """Gridlines beyond ``line`` ordered from the far boundary toward the interface."""
    if side == "left":
        return list(range(0, line))
    if side == "right":
        return list(range(op.line_count - 1, line, -1))
    raise ConfigError("side must be 'left' or 'right'")


def _outer_coupling(op: SparseOperator, line: int, side: str) -> np.ndarray:
    return op.coupling(line - 1) if side == "left" else op.coupling(line)


def exterior_sequence(op: SparseOperator, lines: list[int]) -> SchurSequence:
    """Schur recurrence over ``lines`` (consecutive, in elimination order)."""
    blocks = [op.diag_block(i) for i in lines]
    couplings = [op.coupling(min(p, q)) for p, q in zip(lines[:-1], lines[1:])]
    return block_tridiag_factor(blocks, couplings, label="exterior T")


class SchurCache:
    """Shared Schur recurrences of one operator.

    The recurrence run from the far boundary gives the exact Schur complement
    at every line in a single pass; identity-extension complements reuse one
    pass per distinct exterior wavenumber.
    """

    def __init__(self, op: SparseOperator):
        self.op = op
        self._exact: dict = {}
        self._extended: dict = {}

    def _run(self, op: SparseOperator, side: str) -> SchurSequence:
        order = _exterior_lines(op, op.line_count if side == "left" else -1, side)
        return exterior_sequence(op, order)

    def exact(self, side: str) -> SchurSequence:
        if side not in self._exact:
            self._exact[side] = self._run(self.op, side)
        return self._exact[side]

    def extended(self, side: str, k: float) -> SchurSequence:
        key = (side, float(k))
        if key not in self._extended:
            constant = assemble_truncated(self.op, 0, self.op.line_count - 1, line_k=k)
            self._extended[key] = self._run(constant, side)
        return self._extended[key]


def _position(op: SparseOperator, line: int, side: str) -> int:
    """Index of the line just beyond ``line`` within the far-to-near recurrence."""
    return line - 1 if side == "left" else op.line_count - 2 - line


def _close(op: SparseOperator, line: int, side: str, exterior: SchurSequence, kind: str) -> InterfaceOperator:
    position = _position(op, line, side)
    if position < 0:
        raise ConfigError(f"line {line} has no exterior on the {side}")
    coupling = _outer_coupling(op, line, side)
    try:
        matrix = schur_step(op.diag_block(line), coupling, exterior.factors[position])
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"exterior {side} of line {line} is singular: {exc}") from exc
    return InterfaceOperator(kind, side, line, matrix)


def _interface_line(p: StripPartition, j: int, side: str) -> int | None:
    a, b = p.lines(j)
    if side == "left":
        return a if j > 1 else None
    return b if j < p.count else None


def exact_schur(op: SparseOperator, p: StripPartition, j: int, side: str, cache: SchurCache | None = None):
    """Exact complement ``A_aa - A_a,ext A_ext^{-1} A_ext,a``; ``None`` on the domain boundary."""
    line = _interface_line(p, j, side)
    if line is None:
        return None
    return exact_schur_at(op, line, side, cache)


def exact_schur_at(op: SparseOperator, line: int, side: str, cache: SchurCache | None = None) -> InterfaceOperator:
    cache = cache or SchurCache(op)
    return _close(op, line, side, cache.exact(side), "exact")


EXTENSION_SOURCES = ("outside", "inside")


def ident_ext_schur(
    op: SparseOperator, p: StripPartition, j: int, side: str, cache: SchurCache | None = None, source: str = "outside"
):
    """Exact complement after copying one wavenumber to the whole exterior.

    ``source='outside'`` copies the line just beyond the interface (the
    neighbour's medium); ``'inside'`` copies the line just inside the strip.
    """
    line = _interface_line(p, j, side)
    if line is None:
        return None
    return ident_ext_schur_at(op, line, side, cache, source)


def ident_ext_schur_at(
    op: SparseOperator, line: int, side: str, cache: SchurCache | None = None, source: str = "outside"
) -> InterfaceOperator:
    if source not in EXTENSION_SOURCES:
        raise ConfigError(f"extension source must be one of {EXTENSION_SOURCES}")
    cache = cache or SchurCache(op)
    step = -1 if side == "left" else 1
    sample = line + step if source == "outside" else line - step
    k = float(op.line_k[sample])
    result = _close(op, line, side, cache.extended(side, k), "ident-ext")
    result.exterior["k"] = k
    return result


def pml_schur(op: SparseOperator, p: StripPartition, j: int, side: str, pml: PmlSpec, omega: float, k: float | None = None):
    line = _interface_line(p, j, side)
    if line is None:
        return None
    return pml_schur_at(op, line, side, pml, omega, k)


def pml_schur_at(op: SparseOperator, line: int, side: str, pml: PmlSpec, omega: float, k: float | None = None) -> InterfaceOperator:
    """Complement of a stretched layer of ``pml.width_cells`` cells attached at ``line``.

    The layer uses the wavenumber of the interface line unless ``k`` is given.
    The exterior data needed to solve with the layer unfolded is kept in
    ``exterior``.
    """
    if side not in ("left", "right"):
        raise ConfigError("side must be 'left' or 'right'")
    k = float(op.line_k[line]) if k is None else float(k)
    h = op.h
    axis, half_coeff = pml_exterior_axis(h, pml, omega)
    inner = op.x_axis.off[line] if side == "left" else op.x_axis.off[line - 1]
    inner_coeff = inner * h**2
    my = op.y_axis.mass
    modified = op.diag_block(line) + np.diag((-(inner_coeff + half_coeff) / h**2 - op.x_axis.diag[line]) * my)
    link = half_coeff / h**2 * my
    matrix = modified
    layer = None
    if axis.size:
        layer = assemble_lines(axis, op.y_axis, np.full(axis.size, k), h, op.robin_coefficient)
        order = list(range(axis.size - 1, -1, -1))
        sequence = exterior_sequence(layer, order)
        matrix = schur_step(modified, link, sequence.factors[-1])
    return InterfaceOperator(
        "pml", side, line, matrix,
        {"modified": modified, "link": link, "layer": layer, "k": k, "width": pml.width_cells},
    )


def robin_operator(op: SparseOperator, p: StripPartition, j: int, side: str):
    line = _interface_line(p, j, side)
    if line is None:
        return None
    return robin_at(op, line, side)


def robin_at(op: SparseOperator, line: int, side: str) -> InterfaceOperator:
    """Half-cell closure: ``(-c/h^2 - p0/h) My + (D_a - Kxx_a My)/2``."""
    h = op.h
    my = op.y_axis.mass
    x_diag = op.x_axis.diag[line]
    inner = op.x_axis.off[line] if side == "left" else op.x_axis.off[line - 1]
    shift = robin_shift(op.line_k[line], h, op.robin_coefficient)
    transverse = op.diag_block(line) - np.diag(x_diag * my)
    matrix = 0.5 * transverse + np.diag((-inner + shift) * my)
    return InterfaceOperator("robin", side, line, matrix)


def dirichlet_at(line: int, side: str) -> InterfaceOperator:
    return InterfaceOperator("dirichlet", side, line, None)


class TransmissionFactory:
    """Builds and caches interface operators of one kind for an operator."""

    def __init__(self, op: SparseOperator, pml: PmlSpec | None = None, omega: float | None = None, extension: str = "outside"):
        if extension not in EXTENSION_SOURCES:
            raise ConfigError(f"extension source must be one of {EXTENSION_SOURCES}")
        self.op = op
        self.extension = extension
        self.cache = SchurCache(op)
        self.pml = pml
        self.omega = omega
        self._built: dict = {}

    def at(self, kind: str, line: int, side: str) -> InterfaceOperator:
        key = (kind, line, side)
        if key in self._built:
            return self._built[key]
        if kind == "exact":
            result = exact_schur_at(self.op, line, side, self.cache)
        elif kind == "ident-ext":
            result = ident_ext_schur_at(self.op, line, side, self.cache, self.extension)
        elif kind == "pml":
            if self.pml is None:
                raise ConfigError("PML transmission needs a PmlSpec")
            shared = ("pml", line, "left" if side == "right" else "right")
            # the stretched layer is mirror symmetric, so both sides share one matrix
            result = self._built.get(shared) or pml_schur_at(self.op, line, side, self.pml, self.omega or 1.0)
            if result.side != side:
                result = InterfaceOperator("pml", side, line, result.matrix, result.exterior)
        elif kind == "robin":
            result = robin_at(self.op, line, side)
        elif kind == "dirichlet":
            result = dirichlet_at(line, side)
        else:
            raise ConfigError(f"unknown transmission kind {kind!r}")
        self._built[key] = result
        return result

    def for_subdomain(self, p: StripPartition, j: int, side: str, kind: str) -> InterfaceOperator | None:
        line = _interface_line(p, j, side)
        if line is None:
            return None
        return self.at(kind, line, side)


def dense_exterior_schur(op: SparseOperator, line: int, side: str) -> np.ndarray:
    """Brute-force complement via dense elimination (test oracle for small grids)."""
    dense = op.to_dense()
    s = op.line_slice(line)
    ext = op.lines_slice(0, line - 1) if side == "left" else op.lines_slice(line + 1, op.line_count - 1)
    a_ee = dense[ext, ext]
    return dense[s, s] - dense[s, ext] @ np.linalg.solve(a_ee, dense[ext, s])
