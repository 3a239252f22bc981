"""Polarized traces: Dirichlet and Neumann interface traces swept through local Green's matrices.

Every product with a local Green's matrix is one solve with the factored
strip problem, so no dense potential is formed.  The interface diagonal block
is split as ``A_cc = A_left + A_right`` with ``A_left = theta A_cc``.
"""

from __future__ import annotations

import numpy as np

from ..assembly import SparseOperator
from ..mesh import ConfigError
from ..partition import StripPartition
from ..transmission import TransmissionFactory
from .base import Preconditioner
from .subdomain import LocalProblem


class PolarizedTracesPreconditioner(Preconditioner):
    """Forward and backward trace recursions followed by independent local recoveries.

    ``output='forward'`` places the Dirichlet trace of the forward recursion
    on each left interface line.  ``output='total'`` adds that trace to the
    recovered local value there, since the recovery rows on the interface miss
    the incoming field; this reproduces the backward-glued double sweep.

    ``start='full'`` seeds the backward recursion with the traces of the whole
    last-strip solution (local source plus the forward trace), which makes the
    result coincide with the double sweep for two strips and for exact
    complements.  ``start='local'`` seeds it with the local source alone.
    """

    method = "polarized"

    def __init__(
        self,
        op: SparseOperator,
        partition: StripPartition,
        factory: TransmissionFactory,
        kind: str = "pml",
        theta: float = 0.5,
        output: str = "total",
        start: str = "full",
    ):
        super().__init__(op)
        if partition.overlap or partition.layout != "strips":
            raise ConfigError("polarized traces need a non-overlapping strip partition")
        if output not in ("total", "forward"):
            raise ConfigError("output must be 'total' or 'forward'")
        self.partition = partition
        self.theta = theta
        self.output = output
        if start not in ("full", "local"):
            raise ConfigError("start must be 'full' or 'local'")
        self.start = start
        self.problems = []
        for j in range(1, partition.count + 1):
            a, b = partition.lines(j)
            if b - a < 2:
                raise ConfigError("each strip needs an interior gridline; use fewer subdomains")
            left = factory.for_subdomain(partition, j, "left", kind)
            right = factory.for_subdomain(partition, j, "right", kind)
            self.problems.append(LocalProblem(op, a, b, left, right))

    def _split(self, line: int) -> tuple[np.ndarray, np.ndarray]:
        block = self.op.diag_block(line)
        return self.theta * block, (1.0 - self.theta) * block

    def _potential_rhs(self, problem: LocalProblem, line: int, inward: int, neumann, dirichlet, part) -> np.ndarray:
        """Contribution of one interface pair to a local right-hand side (in place of a Green's product)."""
        rhs = np.zeros(problem.size, dtype=complex)
        problem.set_line(rhs, line, neumann - part @ dirichlet)
        problem.set_line(rhs, inward, -self.op.coupling(min(line, inward)) * dirichlet)
        return rhs

    def _neumann(self, line: int, inward: int, part: np.ndarray, problem: LocalProblem, values: np.ndarray) -> np.ndarray:
        """``-A_part u(line) - A_{line,inward} u(inward)``."""
        coupling = self.op.coupling(min(line, inward))
        return -part @ problem.line(values, line) - coupling * problem.line(values, inward)

    def traces(self, f: np.ndarray):
        """Local solutions ``v0`` and the forward/backward Dirichlet and Neumann traces.

        ``left[j-1]`` holds ``(lambda_D, lambda_N)`` at the left interface of
        strip ``j`` and ``right[j-1]`` at its right interface (``None`` on the
        physical boundary).
        """
        count = self.partition.count
        v0 = [problem.solve(problem.restrict(f)) for problem in self.problems]
        left: list = [None] * count
        for j in range(2, count + 1):
            prev = self.problems[j - 2]
            b = prev.last
            left_part, right_part = self._split(b)
            dirichlet = prev.line(v0[j - 2], b).copy()
            neumann = self._neumann(b, b - 1, right_part, prev, v0[j - 2])
            if j >= 3:
                a = prev.first
                d_prev, n_prev = left[j - 2]
                lp, _ = self._split(a)
                z = prev.solve(self._potential_rhs(prev, a, a + 1, n_prev, d_prev, lp))
                dirichlet += prev.line(z, b)
                neumann += self._neumann(b, b - 1, right_part, prev, z)
            left[j - 1] = (dirichlet, neumann)
        right: list = [None] * count
        for j in range(count - 1, 0, -1):
            nxt = self.problems[j]
            a = nxt.first
            left_part, right_part = self._split(a)
            dirichlet = nxt.line(v0[j], a).copy()
            neumann = self._neumann(a, a + 1, left_part, nxt, v0[j])
            if j == count - 1 and self.start == "full":
                d_left, n_left = left[j]
                z = nxt.solve(self._potential_rhs(nxt, a, a + 1, n_left, d_left, left_part))
                z[: self.op.line_size] += d_left
                dirichlet += nxt.line(z, a)
                neumann += self._neumann(a, a + 1, left_part, nxt, z)
            if j <= count - 2:
                b = nxt.last
                d_next, n_next = right[j]
                _, rp = self._split(b)
                z = nxt.solve(self._potential_rhs(nxt, b, b - 1, n_next, d_next, rp))
                dirichlet += nxt.line(z, a)
                neumann += self._neumann(a, a + 1, left_part, nxt, z)
            right[j - 1] = (dirichlet, neumann)
        return v0, left, right

    def recover(self, j: int, v0: np.ndarray, left, right) -> np.ndarray:
        """Local solution of strip ``j`` from its interface traces."""
        problem = self.problems[j - 1]
        rhs = np.zeros(problem.size, dtype=complex)
        if left is not None:
            a = problem.first
            rhs += self._potential_rhs(problem, a, a + 1, left[1], left[0], self._split(a)[0])
        if right is not None:
            b = problem.last
            rhs += self._potential_rhs(problem, b, b - 1, right[1], right[0], self._split(b)[1])
        return problem.solve(rhs) + v0

    def apply(self, f):
        v0, left, right = self.traces(f)
        m = self.op.line_size
        out = np.zeros(self.op.size, dtype=complex)
        for j in range(1, self.partition.count + 1):
            local = self.recover(j, v0[j - 1], left[j - 1], right[j - 1])
            a, b = self.partition.lines(j)
            if j < self.partition.count:
                b -= 1
            out[a * m : (b + 1) * m] = local[: (b - a + 1) * m]
            if j > 1:
                dirichlet = left[j - 1][0]
                if self.output == "forward":
                    out[a * m : (a + 1) * m] = dirichlet
                else:
                    out[a * m : (a + 1) * m] += dirichlet
        return out
