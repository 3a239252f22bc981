"""Single layer potential sweeps on non-overlapping strips closed by PML complements.

The forward sweep moves the neighbour's solution into a surface source on
the left interface; the backward sweep corrects the residual the same way on
the right interface.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import scipy.sparse as sp

from ..assembly import SparseOperator
from ..mesh import ConfigError
from ..partition import StripPartition
from ..transmission import InterfaceOperator, TransmissionFactory
from .base import Preconditioner
from .subdomain import LocalProblem


def _require_strips(partition: StripPartition):
    if partition.overlap or partition.layout != "strips":
        raise ConfigError("single layer potential sweeps need a non-overlapping strip partition")


class SingleLayerPreconditioner(Preconditioner):
    """Strips closed by the interface operator ``kind`` on both sides (second matrix form).

    Forward: the left row of strip ``j`` carries
    ``f_a - 2 A_{a,a-1} v_{j-1}(a-1) - A_aa v_{j-1}(a)`` and the right row zero.
    Backward mirrors it on the residual with the right interface.
    """

    method = "slp2"

    def __init__(self, op: SparseOperator, partition: StripPartition, factory: TransmissionFactory, kind: str = "pml"):
        super().__init__(op)
        _require_strips(partition)
        self.partition = partition
        self.factory = factory
        self.problems = []
        for j in range(1, partition.count + 1):
            a, b = partition.lines(j)
            left = factory.for_subdomain(partition, j, "left", kind)
            right = factory.for_subdomain(partition, j, "right", kind)
            self.problems.append(LocalProblem(op, a, b, left, right))

    def _layer_source(self, line: int, outer: int, neighbour: LocalProblem, values: np.ndarray) -> np.ndarray:
        coupling = self.op.coupling(min(line, outer))
        return -2.0 * coupling * neighbour.line(values, outer) - self.op.diag_block(line) @ neighbour.line(values, line)

    def apply(self, f):
        op, count, m = self.op, self.partition.count, self.op.line_size
        forward: list = [None] * count
        for j in range(1, count + 1):
            problem = self.problems[j - 1]
            rhs = problem.restrict(f)
            if j > 1:
                a = problem.first
                rhs[:m] += self._layer_source(a, a - 1, self.problems[j - 2], forward[j - 2])
            if j < count:
                rhs[-m:] = 0.0
            forward[j - 1] = problem.solve(rhs)
        v = self.partition.glue(forward, "bwd")
        residual = f - op.matrix @ v
        backward: list = [None] * count
        backward[-1] = np.zeros(self.problems[-1].size, dtype=complex)
        for j in range(count - 1, 0, -1):
            problem = self.problems[j - 1]
            rhs = problem.restrict(residual)
            if j > 1:
                rhs[:m] = 0.0
            if j + 1 < count:
                b = problem.last
                rhs[-m:] += self._layer_source(b, b + 1, self.problems[j], backward[j])
            backward[j - 1] = problem.solve(rhs)
        return v + self.partition.glue(backward, "fwd")


def normalized_operator(op: SparseOperator) -> tuple[SparseOperator, np.ndarray]:
    """Row-scaled copy whose couplings between physical gridlines are ``-I``.

    Returns the copy and the per-unknown scaling ``d`` so that ``A_hat = diag(d) A``.
    Only the matrix is scaled: ``coupling()`` of the copy still reports the
    unscaled couplings.
    """
    per_line = -op.h**2 / op.y_axis.mass
    d = np.tile(per_line, op.line_count)
    scaled = sp.diags(d) @ op.matrix
    return replace(op, matrix=sp.csr_matrix(scaled)), d


class ExtendedSingleLayerPreconditioner(Preconditioner):
    """First matrix form: strips extended by one gridline past each interface.

    The extra lines carry the complement of ``kind`` and the sweep works on the
    row-scaled system whose interface couplings are ``-I``.
    """

    method = "slp1"

    def __init__(self, op: SparseOperator, partition: StripPartition, factory: TransmissionFactory, kind: str = "pml"):
        super().__init__(op)
        _require_strips(partition)
        self.partition = partition
        self.scaled, self.scale = normalized_operator(op)
        per_line = self.scale[: op.line_size]
        self.per_line = per_line
        count = partition.count
        self.problems = []
        for j in range(1, count + 1):
            a, b = partition.lines(j)
            first = a - 1 if j > 1 else a
            last = b + 1 if j < count else b
            if first < 0 or last > op.line_count - 1:
                raise ConfigError("extended strips leave the grid")
            left = right = None
            if j > 1:
                left = self._scaled_closure(factory.at(kind, first, "left"), per_line)
            if j < count:
                right = self._scaled_closure(factory.at(kind, last, "right"), per_line)
            self.problems.append(LocalProblem(self.scaled, first, last, left, right))

    @staticmethod
    def _scaled_closure(closure: InterfaceOperator, per_line: np.ndarray) -> InterfaceOperator:
        if closure.is_dirichlet:
            return closure
        return InterfaceOperator(closure.kind, closure.side, closure.line, per_line[:, None] * closure.matrix, closure.exterior)

    def _link(self, line: int) -> np.ndarray:
        """Scaled coupling between ``line`` and ``line + 1`` (``-1`` between physical gridlines)."""
        return self.per_line * self.op.coupling(line)

    def _core(self, j: int, local: np.ndarray) -> np.ndarray:
        """Values on the strip's own gridlines."""
        problem = self.problems[j - 1]
        a, b = self.partition.lines(j)
        m = self.op.line_size
        return local[(a - problem.first) * m : (b - problem.first + 1) * m]

    def apply(self, f):
        scaled, count, m = self.scaled, self.partition.count, self.op.line_size
        f_hat = self.scale * f
        forward: list = [None] * count
        for j in range(1, count + 1):
            problem = self.problems[j - 1]
            rhs = problem.restrict(f_hat)
            if j > 1:
                a = problem.first + 1
                prev = self.problems[j - 2]
                outer, inner = prev.line(forward[j - 2], a - 1), prev.line(forward[j - 2], a)
                link = self._link(a - 1)
                rhs[:m] = outer + link * inner
                rhs[m : 2 * m] = f_hat[scaled.line_slice(a)] - link * outer - inner
            if j < count:
                rhs[-2 * m :] = 0.0
            forward[j - 1] = problem.solve(rhs)
        v = self.partition.glue([self._core(j, u) for j, u in enumerate(forward, start=1)], "bwd")
        residual = f_hat - scaled.matrix @ v
        backward: list = [None] * count
        for j in range(count - 1, 0, -1):
            problem = self.problems[j - 1]
            rhs = problem.restrict(residual)
            if j > 1:
                rhs[: 2 * m] = 0.0
            b = problem.last - 1
            if j + 1 < count:
                nxt = self.problems[j]
                outer, inner = nxt.line(backward[j], b + 1), nxt.line(backward[j], b)
            else:
                outer = inner = np.zeros(m, dtype=complex)
            link = self._link(b)
            rhs[-2 * m : -m] = residual[scaled.line_slice(b)] - link * outer - inner
            rhs[-m:] = outer + link * inner
            backward[j - 1] = problem.solve(rhs)
        backward[-1] = np.zeros(self.problems[-1].size, dtype=complex)
        cores = [self._core(j, w) for j, w in enumerate(backward, start=1)]
        return v + self.partition.glue(cores, "fwd")
