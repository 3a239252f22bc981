"""Residual substructuring: Krylov iteration on the few rows where ``I - A M^{-1}`` does not vanish."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..assembly import SparseOperator
from ..linalg import IterationReport, gmres
from .base import Preconditioner

log = logging.getLogger(__name__)


def residual_support(op: SparseOperator, precond: Preconditioner, probes: int = 2, seed: int = 0, threshold: float = 1e-10) -> np.ndarray:
    """Rows where ``(I - A M^{-1}) x`` is not negligible for random probes ``x``."""
    rng = np.random.default_rng(seed)
    support = np.zeros(op.size, dtype=bool)
    for _ in range(probes):
        x = rng.standard_normal(op.size) + 1j * rng.standard_normal(op.size)
        image = x - op.matrix @ precond(x)
        if np.any(image):
            support |= np.abs(image) > threshold * np.abs(image).max()
    return np.flatnonzero(support)


@dataclass
class ResidualSolve:
    solution: np.ndarray
    report: IterationReport
    support: np.ndarray
    reduced: bool


def residual_substructure_solve(
    op: SparseOperator, precond: Preconditioner, f: np.ndarray, tol: float = 1e-14, maxit: int = 200, support=None
) -> ResidualSolve:
    """Solve ``A u = f`` through ``(R A M^{-1} R^T) r = R (f - A M^{-1} f)``.

    Returns ``u = M^{-1} R^T r + M^{-1} f``.  When the support covers every row
    the reduction is pointless and plain right-preconditioned GMRES runs instead.
    """
    f = np.asarray(f, dtype=complex)
    if support is None:
        support = residual_support(op, precond)
    support = np.asarray(support, dtype=int)
    if support.size == op.size:
        log.warning("residual support covers every row; falling back to full GMRES")
        u, report = gmres(op, f, precond, side="right", tol=tol, maxit=maxit, method="resid-sub")
        return ResidualSolve(u, report, support, False)
    u0 = precond(f)
    h = (f - op.matrix @ u0)[support]

    def reduced_operator(r):
        full = np.zeros(op.size, dtype=complex)
        full[support] = r
        return (op.matrix @ precond(full))[support]

    r, report = gmres(reduced_operator, h, None, side="left", tol=tol, maxit=maxit, method="resid-sub")
    full = np.zeros(op.size, dtype=complex)
    full[support] = r
    return ResidualSolve(precond(full) + u0, report, support, True)


class ResidualSubstructuredSolver(Preconditioner):
    """Maps ``f`` to the residual-substructured solution; usable wherever a preconditioner is."""

    method = "resid-sub"

    def __init__(self, op: SparseOperator, inner: Preconditioner, tol: float = 1e-14, maxit: int = 200):
        super().__init__(op)
        self.inner = inner
        self.tol, self.maxit = tol, maxit
        self.support = residual_support(op, inner)
        self.last: ResidualSolve | None = None

    def apply(self, f):
        self.last = residual_substructure_solve(self.op, self.inner, f, self.tol, self.maxit, self.support)
        return self.last.solution
