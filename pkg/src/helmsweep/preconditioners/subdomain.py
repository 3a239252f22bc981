"""Strip subproblems closed by interface operators, with cached sparse LU factors."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..assembly import SparseOperator
from ..linalg import SingularMatrixError
from ..transmission import InterfaceOperator


def _replace_line_block(matrix: sp.csr_matrix, start: int, size: int, block, dirichlet: bool) -> sp.csr_matrix:
    coo = matrix.tocoo()
    in_rows = (coo.row >= start) & (coo.row < start + size)
    in_cols = (coo.col >= start) & (coo.col < start + size)
    drop = in_rows if dirichlet else (in_rows & in_cols)
    keep = ~drop
    rows, cols, vals = [coo.row[keep]], [coo.col[keep]], [coo.data[keep]]
    if dirichlet:
        idx = np.arange(start, start + size)
        rows.append(idx)
        cols.append(idx)
        vals.append(np.ones(size, dtype=complex))
    else:
        r, c = np.nonzero(block)
        rows.append(r + start)
        cols.append(c + start)
        vals.append(block[r, c])
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=matrix.shape
    )


class LocalProblem:
    """Subdomain matrix on gridlines ``first..last`` with interface rows closed.

    ``left``/``right`` are interface operators or ``None`` for the physical
    boundary.  With ``unfold_pml`` the stretched layers of PML closures are kept
    as explicit unknowns instead of their Schur complement.
    """

    def __init__(
        self,
        op: SparseOperator,
        first: int,
        last: int,
        left: InterfaceOperator | None = None,
        right: InterfaceOperator | None = None,
        unfold_pml: bool = False,
    ):
        self.op = op
        self.first, self.last = first, last
        self.left, self.right = left, right
        self.m = op.line_size
        self.lines = last - first + 1
        self.size = self.lines * self.m
        self.unfold_pml = unfold_pml
        self._blocks: dict = {}
        sub = op.matrix[op.lines_slice(first, last)][:, op.lines_slice(first, last)].tocsr()
        self.pad_left = self.pad_right = 0
        if unfold_pml:
            sub = self._unfold(sub)
        else:
            if left is not None:
                sub = _replace_line_block(sub, 0, self.m, left.matrix, left.is_dirichlet)
            if right is not None:
                sub = _replace_line_block(sub, self.size - self.m, self.m, right.matrix, right.is_dirichlet)
        self.matrix = sub.tocsc()
        try:
            self.lu = spla.splu(self.matrix)
        except RuntimeError as exc:
            raise SingularMatrixError(f"subdomain on lines {first}..{last} is singular: {exc}") from exc
        if not np.all(np.isfinite(self.lu.U.diagonal())) or np.min(np.abs(self.lu.U.diagonal())) == 0:
            raise SingularMatrixError(f"subdomain on lines {first}..{last} is singular")

    def _unfold(self, sub: sp.csr_matrix) -> sp.csr_matrix:
        """Append the PML lines of PML closures as extra unknowns."""
        m = self.m
        left_layer = self.left.exterior.get("layer") if self.left is not None and self.left.kind == "pml" else None
        right_layer = self.right.exterior.get("layer") if self.right is not None and self.right.kind == "pml" else None
        core = sub.tolil()
        for side, closure in (("left", self.left), ("right", self.right)):
            if closure is None:
                continue
            start = 0 if side == "left" else self.size - m
            if closure.kind == "pml":
                core[start : start + m, start : start + m] = closure.exterior["modified"]
            elif closure.is_dirichlet:
                core[start : start + m, :] = 0
                core[start : start + m, start : start + m] = np.eye(m)
            else:
                core[start : start + m, start : start + m] = closure.matrix
        core = core.tocsr()
        if left_layer is None and right_layer is None:
            return core
        pieces = []
        if left_layer is not None:
            layer = _reverse_lines(left_layer, m)
            self.pad_left = layer.shape[0]
            pieces.append(("left", layer, self.left.exterior["link"]))
        if right_layer is not None:
            layer = right_layer.matrix
            self.pad_right = layer.shape[0]
            pieces.append(("right", layer, self.right.exterior["link"]))
        n_core = core.shape[0]
        total = self.pad_left + n_core + self.pad_right
        out = sp.lil_matrix((total, total), dtype=complex)
        out[self.pad_left : self.pad_left + n_core, self.pad_left : self.pad_left + n_core] = core
        for side, layer, link in pieces:
            if side == "left":
                out[: self.pad_left, : self.pad_left] = layer
                near, iface = self.pad_left - m, self.pad_left
            else:
                base = self.pad_left + n_core
                out[base:, base:] = layer
                near, iface = base, self.pad_left + n_core - m
            coupling = sp.diags(link)
            out[near : near + m, iface : iface + m] = coupling
            out[iface : iface + m, near : near + m] = coupling
        return out.tocsr()

    def block(self, row_line: int, col_line: int) -> np.ndarray:
        key = (row_line, col_line)
        if key not in self._blocks:
            self._blocks[key] = self.op.block(row_line, col_line)
        return self._blocks[key]

    def line(self, local: np.ndarray, line: int) -> np.ndarray:
        """Values of ``local`` on global gridline ``line``."""
        offset = line - self.first
        return local[offset * self.m : (offset + 1) * self.m]

    def set_line(self, local: np.ndarray, line: int, values) -> None:
        offset = line - self.first
        local[offset * self.m : (offset + 1) * self.m] = values

    def restrict(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=complex)[self.op.lines_slice(self.first, self.last)].copy()

    def trace(self, side: str, neighbour: "LocalProblem", values: np.ndarray) -> np.ndarray:
        """Interface data ``lambda`` for this problem from a neighbour's local solution.

        Left side at line ``a``: ``-A_{a,a-1} w_{a-1} + (S~ - A_aa) w_a``; the right
        side mirrors it; a Dirichlet closure takes ``w_a`` itself.
        """
        closure = self.left if side == "left" else self.right
        line = self.first if side == "left" else self.last
        outer = line - 1 if side == "left" else line + 1
        w_line = neighbour.line(values, line)
        if closure.is_dirichlet:
            return w_line.copy()
        coupling = self.op.coupling(outer if side == "left" else line)
        return -coupling * neighbour.line(values, outer) + closure.matrix @ w_line - self.block(line, line) @ w_line

    def rhs(self, f_local: np.ndarray, left_data=None, right_data=None) -> np.ndarray:
        """Right-hand side with interface data added (Dirichlet rows take the data itself)."""
        rhs = np.array(f_local, dtype=complex)
        for closure, data, start in ((self.left, left_data, 0), (self.right, right_data, self.size - self.m)):
            if closure is None:
                continue
            rows = slice(start, start + self.m)
            if closure.is_dirichlet:
                rhs[rows] = 0.0 if data is None else data
            elif data is not None:
                rhs[rows] += data
        return rhs

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=complex)
        if self.pad_left or self.pad_right:
            padded = np.concatenate([np.zeros(self.pad_left, complex), rhs, np.zeros(self.pad_right, complex)])
            return self.lu.solve(padded)[self.pad_left : self.pad_left + self.size]
        return self.lu.solve(rhs)

    def solve_with(self, f_local, left_data=None, right_data=None) -> np.ndarray:
        return self.solve(self.rhs(f_local, left_data, right_data))


def _reverse_lines(layer: SparseOperator, m: int) -> sp.csr_matrix:
    """Reverse the gridline order of a layer (built outward) so it ends next to the interface."""
    count = layer.line_count
    perm = (np.arange(count)[::-1][:, None] * m + np.arange(m)[None, :]).ravel()
    return layer.matrix[perm][:, perm].tocsr()
