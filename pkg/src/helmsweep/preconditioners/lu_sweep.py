"""Block LU sweep over strips with approximate Schur blocks on each strip's first line."""

from __future__ import annotations

import numpy as np

from ..assembly import SparseOperator
from ..partition import StripPartition
from ..transmission import TransmissionFactory
from .base import Preconditioner
from .subdomain import LocalProblem


def superblock_lines(p: StripPartition) -> list[tuple[int, int]]:
    """Line ranges ``[c_{j-1}, c_j - 1]`` of the block factorization (last one closed)."""
    if p.overlap or p.layout != "strips":
        raise ValueError("the LU sweep needs a non-overlapping strip partition")
    starts = list(p.first)
    ends = [start - 1 for start in starts[1:]] + [p.line_count - 1]
    return list(zip(starts, ends))


class LUSweepPreconditioner(Preconditioner):
    """Forward ``T_j v_j = f_j - L v_{j-1}`` and backward ``u_j = v_j - T_j^{-1} U u_{j+1}``.

    ``T_j`` is the block of the strip's lines with its first diagonal block
    replaced by the interface operator of ``kind`` (the exact kind gives the
    true block LU factors).
    """

    method = "lu-sweep"

    def __init__(self, op: SparseOperator, partition: StripPartition, kind: str = "exact", factory: TransmissionFactory | None = None):
        super().__init__(op)
        self.partition = partition
        self.factory = factory or TransmissionFactory(op)
        self.ranges = superblock_lines(partition)
        self.blocks = []
        for j, (first, last) in enumerate(self.ranges):
            left = self.factory.at(kind, first, "left") if j > 0 else None
            self.blocks.append(LocalProblem(op, first, last, left, None))

    def apply(self, f):
        m = self.op.line_size
        v_parts = []
        for j, block in enumerate(self.blocks):
            rhs = block.restrict(f)
            if j > 0:
                first = block.first
                rhs[:m] -= self.op.coupling(first - 1) * v_parts[-1][-m:]
            v_parts.append(block.solve(rhs))
        u_parts = [None] * len(self.blocks)
        u_parts[-1] = v_parts[-1]
        for j in range(len(self.blocks) - 2, -1, -1):
            block = self.blocks[j]
            correction = np.zeros(block.size, dtype=complex)
            correction[-m:] = self.op.coupling(block.last) * u_parts[j + 1][:m]
            u_parts[j] = v_parts[j] - block.solve(correction)
        return np.concatenate(u_parts)
