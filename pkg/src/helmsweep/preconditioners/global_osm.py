"""Optimal Schwarz with global transmission: every strip receives the traces of every other strip's field."""

from __future__ import annotations

import numpy as np
import scipy.sparse.linalg as spla

from ..assembly import SparseOperator
from ..linalg import SingularMatrixError
from ..mesh import ConfigError
from ..partition import StripPartition
from ..transmission import TransmissionFactory
from .base import Preconditioner
from .subdomain import LocalProblem


class GlobalOSMPreconditioner(Preconditioner):
    """Two independent phases of strip solves joined by an all-to-all trace exchange.

    Phase one solves each strip with its owned source and transparent closures.
    Each local field is continued beyond its strip by solving the exterior
    systems with the strip's boundary values as Dirichlet data (the discrete
    map from ``lambda_{j,j}`` to every other strip), and its transmission data
    is read off on every other strip.  Phase two solves each strip with the
    full local source plus the summed incoming data.
    """

    method = "global-osm"

    def __init__(self, op: SparseOperator, partition: StripPartition, factory: TransmissionFactory | None = None, kind: str = "exact"):
        super().__init__(op)
        if partition.overlap or partition.layout != "strips":
            raise ConfigError("the global method is implemented for non-overlapping strips")
        self.partition = partition
        self.factory = factory or TransmissionFactory(op)
        self.problems = []
        self.exteriors = []
        for j in range(1, partition.count + 1):
            a, b = partition.lines(j)
            left = self.factory.for_subdomain(partition, j, "left", kind)
            right = self.factory.for_subdomain(partition, j, "right", kind)
            self.problems.append(LocalProblem(op, a, b, left, right))
            self.exteriors.append((self._exterior(0, a - 1), self._exterior(b + 1, op.line_count - 1)))

    def _exterior(self, first: int, last: int):
        if last < first:
            return None
        sl = self.op.lines_slice(first, last)
        try:
            return first, last, spla.splu(self.op.matrix[sl][:, sl].tocsc())
        except RuntimeError as exc:
            raise SingularMatrixError(f"exterior on lines {first}..{last} is singular: {exc}") from exc

    def continue_field(self, j: int, local: np.ndarray) -> np.ndarray:
        """Global field of strip ``j``'s owned source from its local solution."""
        op, m = self.op, self.op.line_size
        a, b = self.partition.lines(j)
        field = np.zeros(op.size, dtype=complex)
        field[op.lines_slice(a, b)] = local
        left, right = self.exteriors[j - 1]
        if left is not None:
            first, last, lu = left
            rhs = np.zeros((last - first + 1) * m, dtype=complex)
            rhs[-m:] = -op.coupling(a - 1) * local[:m]
            field[op.lines_slice(first, last)] = lu.solve(rhs)
        if right is not None:
            first, last, lu = right
            rhs = np.zeros((last - first + 1) * m, dtype=complex)
            rhs[:m] = -op.coupling(b) * local[-m:]
            field[op.lines_slice(first, last)] = lu.solve(rhs)
        return field

    def incoming(self, l: int, field: np.ndarray) -> tuple:
        """Transmission data of strip ``l`` produced by a global field (``None`` on the domain boundary)."""
        problem = self.problems[l - 1]
        data = []
        for side, closure in (("left", problem.left), ("right", problem.right)):
            if closure is None:
                data.append(None)
                continue
            line = problem.first if side == "left" else problem.last
            outer = line - 1 if side == "left" else line + 1
            coupling = self.op.coupling(min(line, outer))
            values = field[self.op.line_slice(line)]
            data.append(closure.matrix @ values - self.op.diag_block(line) @ values - coupling * field[self.op.line_slice(outer)])
        return tuple(data)

    def phase_one(self, f: np.ndarray) -> list:
        fields = []
        for j, problem in enumerate(self.problems, start=1):
            owned = problem.restrict(f) * self.partition.weights(j, "bwd")
            fields.append(self.continue_field(j, problem.solve(owned)))
        return fields

    def apply(self, f):
        fields = self.phase_one(f)
        count = self.partition.count
        locals_ = []
        for l, problem in enumerate(self.problems, start=1):
            left_sum = np.zeros(self.op.line_size, dtype=complex)
            right_sum = np.zeros(self.op.line_size, dtype=complex)
            for j in range(1, count + 1):
                if j == l:
                    continue
                left, right = self.incoming(l, fields[j - 1])
                if left is not None:
                    left_sum += left
                if right is not None:
                    right_sum += right
            locals_.append(problem.solve_with(problem.restrict(f), left_sum, right_sum))
        return self.partition.glue(locals_, "bwd")
