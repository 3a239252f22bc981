"""Source transfer: forward sweep moving damped sources into the next overlap, backward correction sweep."""

from __future__ import annotations

import numpy as np

from ..assembly import SparseOperator
from ..mesh import ConfigError
from ..partition import StripPartition, source_transfer_middles
from ..transmission import TransmissionFactory
from .base import Preconditioner, closures
from .subdomain import LocalProblem


def damping_lines(middle: int, next_middle: int) -> np.ndarray:
    """0/1 weights on gridlines ``middle..next_middle`` of one overlap.

    One on the middle line, on its neighbour and on every line up to the
    midpoint of the overlap; zero on the far middle line and its neighbour.
    """
    interior = next_middle - middle - 1
    if interior < 2:
        raise ConfigError("an overlap needs at least two interior lines for the damping weights")
    weights = np.zeros(next_middle - middle + 1)
    ones = max(1, (interior + 1) // 2)
    weights[: ones + 1] = 1.0
    weights[-2:] = 0.0
    return weights


def damping_matrix_checks(op: SparseOperator, middle: int, next_middle: int) -> list[float]:
    """Max moduli of the four products that must vanish for a damping weight ``D``.

    With ``D`` on lines ``middle..next_middle`` and the interior overlap lines
    ``O`` in between: ``I_far D``, ``A_{far,O} I_O D``, ``I_mid (D - I)`` and
    ``A_{mid,O} I_O (D - I)``.
    """
    weights = damping_lines(middle, next_middle)
    m = op.line_size
    lines = np.arange(middle, next_middle + 1)
    diag = np.repeat(weights, m)
    overlap = (lines > middle) & (lines < next_middle)
    mask_o = np.repeat(overlap.astype(float), m)
    sl = op.lines_slice(middle, next_middle)
    local = op.matrix[sl][:, sl].toarray()
    far = slice((next_middle - middle) * m, (next_middle - middle + 1) * m)
    mid = slice(0, m)
    identity = np.ones_like(diag)
    products = [
        np.abs(diag[far]).max(),
        np.abs(local[far] @ np.diag(mask_o * diag)).max(),
        np.abs((diag - identity)[mid]).max(),
        np.abs(local[mid] @ np.diag(mask_o * (diag - identity))).max(),
    ]
    return [float(x) for x in products]


class SourceTransferPreconditioner(Preconditioner):
    """Forward sweep with closures ``left_kind``/``right_kind``; backward sweep closed by ``left_kind`` and Dirichlet.

    Needs a source-transfer layout: subdomain ``j`` spans the middle lines
    ``L_{j-1}..L_{j+1}``.
    """

    method = "source-transfer"

    def __init__(
        self,
        op: SparseOperator,
        partition: StripPartition,
        left_kind: str = "pml",
        right_kind: str = "pml",
        factory: TransmissionFactory | None = None,
    ):
        super().__init__(op)
        if partition.layout != "source-transfer":
            raise ConfigError("source transfer needs a source-transfer layout")
        self.partition = partition
        self.factory = factory or TransmissionFactory(op)
        self.middles = source_transfer_middles(partition)
        count = partition.count
        self.forward = []
        self.backward = []
        for j in range(1, count + 1):
            first, last = partition.lines(j)
            left, right = closures(self.factory, partition, j, left_kind, right_kind)
            if j < count:
                self.forward.append(LocalProblem(op, first, last, left, right))
            dirichlet = self.factory.for_subdomain(partition, j, "right", "dirichlet")
            self.backward.append(LocalProblem(op, first, last, left, dirichlet))
        self.damping = [damping_lines(self.middles[j], self.middles[j + 1]) for j in range(count - 1)]

    def _transfer(self, j: int, v: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Source on the interior of overlap ``O_j`` for subdomain ``j+1``: ``f - A (D_j v_j)``."""
        op = self.op
        m = op.line_size
        middle, next_middle = self.middles[j - 1], self.middles[j]
        problem = self.forward[j - 1]
        damped = np.repeat(self.damping[j - 1], m) * v[(middle - problem.first) * m : (next_middle - problem.first + 1) * m]
        rows = op.lines_slice(middle + 1, next_middle - 1)
        cols = op.lines_slice(middle, next_middle)
        return f[rows] - op.matrix[rows][:, cols] @ damped

    def _overlap_source(self, problem: LocalProblem, rhs: np.ndarray, source: np.ndarray) -> None:
        """Place a transferred source on the interior of the left overlap of ``problem``."""
        m = self.op.line_size
        rhs[m : m + source.size] = source

    def apply(self, f):
        op = self.op
        count = self.partition.count
        transferred = [None] * (count + 1)
        for j in range(1, count):
            problem = self.forward[j - 1]
            middle = self.middles[j - 1]
            rhs = np.zeros(problem.size, dtype=complex)
            if j == 1:
                rhs[: op.lines_slice(0, middle).stop] = f[op.lines_slice(0, middle)]
            else:
                self._overlap_source(problem, rhs, transferred[j])
                problem.set_line(rhs, middle, f[op.line_slice(middle)])
            transferred[j + 1] = self._transfer(j, problem.solve(rhs), f)
        pieces = [None] * count
        for j in range(count, 0, -1):
            problem = self.backward[j - 1]
            start = problem.first if j == 1 else self.middles[j - 1]
            rhs = np.zeros(problem.size, dtype=complex)
            if j > 1:
                self._overlap_source(problem, rhs, transferred[j])
            offset = (start - problem.first) * op.line_size
            rhs[offset:] = f[op.lines_slice(start, problem.last)]
            if j < count:
                upper = self.backward[j]
                problem.set_line(rhs, problem.last, upper.line(pieces[j], problem.last))
            pieces[j - 1] = problem.solve(rhs)
        return self._glue(pieces)

    def _glue(self, pieces: list) -> np.ndarray:
        """``u_j`` on ``[L_j, L_{j+1})`` and ``u_1`` on everything left of ``L_1``."""
        return self.partition.glue(pieces, "bwd")
