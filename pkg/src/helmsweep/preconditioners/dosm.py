"""Double-sweep optimized Schwarz in transmission, deferred-correction and trace forms, plus its parallel variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..assembly import SparseOperator
from ..partition import StripPartition
from ..transmission import TransmissionFactory
from .base import Preconditioner, closures
from .subdomain import LocalProblem


@dataclass(frozen=True)
class SweepKinds:
    """Transmission kinds per side for the forward and the backward sweep."""

    forward_left: str
    forward_right: str
    backward_left: str
    backward_right: str

    @classmethod
    def uniform(cls, kind: str) -> "SweepKinds":
        return cls(kind, kind, kind, kind)


class DoubleSweep:
    """Subproblems and sweep schedules shared by every form of the method.

    ``cut_forward_sources`` zeroes, during the forward sweep, the source of
    subdomain ``j`` beyond the left boundary of subdomain ``j+1``.
    """

    def __init__(
        self,
        op: SparseOperator,
        partition: StripPartition,
        kinds: SweepKinds,
        factory: TransmissionFactory | None = None,
        cut_forward_sources: bool = False,
        unfold_pml: bool = False,
    ):
        self.op = op
        self.partition = partition
        self.kinds = kinds
        self.factory = factory or TransmissionFactory(op)
        self.cut_forward_sources = cut_forward_sources
        count = partition.count
        built: dict = {}

        def problem(j, left_kind, right_kind):
            left, right = closures(self.factory, partition, j, left_kind, right_kind)
            key = (j, id(left), id(right))
            if key not in built:
                first, last = partition.lines(j)
                built[key] = LocalProblem(op, first, last, left, right, unfold_pml)
            return built[key]

        self.forward = [problem(j, kinds.forward_left, kinds.forward_right) for j in range(1, count)]
        self.backward = [problem(j, kinds.backward_left, kinds.backward_right) for j in range(1, count + 1)]
        self.forward.append(self.backward[-1])

    @property
    def count(self) -> int:
        return self.partition.count

    def _forward_source(self, j: int, f: np.ndarray) -> np.ndarray:
        local = self.forward[j - 1].restrict(f)
        if self.cut_forward_sources and j < self.count:
            a, _ = self.partition.lines(j)
            keep_until = self.partition.lines(j + 1)[0]
            local[(keep_until - a + 1) * self.op.line_size :] = 0.0
        return local

    def sweep(self, f: np.ndarray, previous: list | None = None) -> tuple[list, list]:
        """One double sweep of the transmission form.

        ``previous`` holds the subdomain iterates ``u_j^{(n-1)}`` (zero when
        ``None``).  Returns the forward iterates ``u_j^{(n-1/2)}`` for
        ``j < J`` and the backward iterates ``u_j^{(n)}``.
        """
        count = self.count
        half: list = [None] * count
        full: list = [None] * count
        for j in range(1, count):
            problem = self.forward[j - 1]
            left = problem.trace("left", self.forward[j - 2], half[j - 2]) if j > 1 else None
            right = None
            if previous is not None and previous[j] is not None:
                right = problem.trace("right", self.backward[j], previous[j])
            half[j - 1] = problem.solve_with(self._forward_source(j, f), left, right)
        for j in range(count, 0, -1):
            problem = self.backward[j - 1]
            left = problem.trace("left", self.forward[j - 2], half[j - 2]) if j > 1 else None
            right = problem.trace("right", self.backward[j], full[j]) if j < count else None
            full[j - 1] = problem.solve_with(problem.restrict(f), left, right)
        return half[: count - 1], full

    def glue(self, locals_: list, direction: str = "bwd") -> np.ndarray:
        return self.partition.glue(locals_, direction)

    def parallel_step(self, f: np.ndarray, previous: list | None, order=None) -> list:
        """Simultaneous update: every subdomain uses neighbour iterates from step ``n-1``."""
        count = self.count
        result: list = [None] * count
        for j in order or range(1, count + 1):
            problem = self.backward[j - 1]
            left = right = None
            if previous is not None:
                if j > 1:
                    left = problem.trace("left", self.backward[j - 2], previous[j - 2])
                if j < count:
                    right = problem.trace("right", self.backward[j], previous[j])
            result[j - 1] = problem.solve_with(problem.restrict(f), left, right)
        return result

    def gdc_sweep(self, f: np.ndarray, u: np.ndarray, variant: str = "ras", ash_weights: str = "interface-zero") -> np.ndarray:
        """One double sweep of the deferred-correction form.

        Each subdomain solves with the local residual and homogeneous interface
        data.  ``ras`` restricts the extension with the 0/1 weights; ``ash``
        restricts the residual instead and extends fully.  With
        ``ash_weights='interface-zero'`` the ash residual weight vanishes on the
        interface ahead of the sweep (right in the forward sweep, left in the
        backward sweep; the last subdomain keeps its left interface);
        ``'gluing'`` reuses the gluing weights.
        """
        if variant not in ("ras", "ash"):
            raise ValueError("variant must be 'ras' or 'ash'")
        u = np.array(u, dtype=complex)
        count = self.count
        schedule = [(j, self.forward[j - 1], "fwd") for j in range(1, count)]
        schedule += [(j, self.backward[j - 1], "bwd") for j in range(count, 0, -1)]
        for j, problem, direction in schedule:
            residual = problem.restrict(f - self.op.matrix @ u)
            if variant == "ras":
                v = problem.solve(problem.rhs(residual))
                u += self.partition.extend(j, v * self.partition.weights(j, direction))
            else:
                if ash_weights == "interface-zero" and j < count:
                    direction = "bwd" if direction == "fwd" else "fwd"
                v = problem.solve(problem.rhs(residual * self.partition.weights(j, direction)))
                u += self.partition.extend(j, v)
        return u

    def trace_sweep(self, f: np.ndarray, right_traces: list) -> tuple[list, list, list]:
        """Substructured double sweep acting on the right-interface data.

        ``right_traces[j-1]`` is ``lambda_{j>}`` for ``j < J``.  Returns the new
        right traces together with the forward and backward volume iterates.
        """
        kinds = self.kinds
        if (kinds.forward_left, kinds.forward_right) != (kinds.backward_left, kinds.backward_right):
            raise ValueError("the trace form needs the same transmission kinds in both sweeps")
        count = self.count
        left_traces: list = [None] * count
        new_right: list = [None] * (count - 1)
        half: list = [None] * count
        full: list = [None] * count
        for j in range(1, count):
            problem = self.forward[j - 1]
            half[j - 1] = problem.solve_with(self._forward_source(j, f), left_traces[j - 1], right_traces[j - 1])
            left_traces[j] = self.backward[j].trace("left", problem, half[j - 1])
        for j in range(count, 0, -1):
            problem = self.backward[j - 1]
            right = new_right[j - 1] if j < count else None
            full[j - 1] = problem.solve_with(problem.restrict(f), left_traces[j - 1], right)
            if j > 1:
                new_right[j - 2] = self.backward[j - 2].trace("right", problem, full[j - 1])
        return new_right, half[: count - 1], full

    def trace_size(self) -> int:
        return (self.count - 1) * self.op.line_size

    def split_traces(self, stacked: np.ndarray) -> list:
        m = self.op.line_size
        return [stacked[i * m : (i + 1) * m] for i in range(self.count - 1)]

    def trace_system(self, f: np.ndarray):
        """Affine form ``lambda -> F lambda + g``; returns ``(apply I - F, g)``."""
        zero_f = np.zeros(self.op.size, dtype=complex)
        zero_traces = [np.zeros(self.op.line_size, dtype=complex) for _ in range(self.count - 1)]
        g_list, _, _ = self.trace_sweep(f, zero_traces)
        g = np.concatenate(g_list) if g_list else np.zeros(0, complex)

        def apply_i_minus_f(stacked):
            image, _, _ = self.trace_sweep(zero_f, self.split_traces(stacked))
            return stacked - (np.concatenate(image) if image else np.zeros(0, complex))

        return apply_i_minus_f, g


def gdc_iterate(engine: DoubleSweep, f: np.ndarray, iterations: int, variant: str = "ras", u0=None) -> list:
    """Successive global iterates of the deferred-correction form."""
    u = np.zeros(engine.op.size, dtype=complex) if u0 is None else np.array(u0, dtype=complex)
    out = []
    for _ in range(iterations):
        u = engine.gdc_sweep(f, u, variant)
        out.append(u.copy())
    return out


def dosm_iterate(engine: DoubleSweep, f: np.ndarray, iterations: int, previous=None) -> list:
    """Successive glued iterates of the transmission form."""
    out = []
    for _ in range(iterations):
        _, previous = engine.sweep(f, previous)
        out.append(engine.glue(previous))
    return out


class DOSMPreconditioner(Preconditioner):
    """One double sweep from zero data, glued with the backward weights."""

    method = "dosm"

    def __init__(self, engine: DoubleSweep):
        super().__init__(engine.op)
        self.engine = engine

    def apply(self, f):
        _, full = self.engine.sweep(f)
        return self.engine.glue(full)


class GDCPreconditioner(Preconditioner):
    """One deferred-correction double sweep from a zero iterate."""

    method = "dosm-gdc"

    def __init__(self, engine: DoubleSweep, variant: str = "ras"):
        super().__init__(engine.op)
        self.engine = engine
        self.variant = variant

    def apply(self, f):
        return self.engine.gdc_sweep(f, np.zeros_like(f), self.variant)


class SubstructuredPreconditioner(Preconditioner):
    """One trace-space double sweep from zero traces, reconstructed in the volume."""

    method = "dosm-sub"

    def __init__(self, engine: DoubleSweep):
        super().__init__(engine.op)
        self.engine = engine

    def apply(self, f):
        zero = [np.zeros(self.op.line_size, dtype=complex) for _ in range(self.engine.count - 1)]
        _, _, full = self.engine.trace_sweep(f, zero)
        return self.engine.glue(full)


class POSMPreconditioner(Preconditioner):
    """``iterations`` parallel Schwarz steps from zero, glued with the backward weights."""

    method = "posm"

    def __init__(self, engine: DoubleSweep, iterations: int | None = None):
        super().__init__(engine.op)
        self.engine = engine
        self.iterations = iterations or engine.count

    def apply(self, f):
        previous = None
        for _ in range(self.iterations):
            previous = self.engine.parallel_step(f, previous)
        return self.engine.glue(previous)


def posm_iterate(engine: DoubleSweep, f: np.ndarray, iterations: int, order=None) -> list:
    previous = None
    out = []
    for _ in range(iterations):
        previous = engine.parallel_step(f, previous, order)
        out.append(engine.glue(previous))
    return out
