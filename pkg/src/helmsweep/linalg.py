"""Dense and block-tridiagonal factorizations plus Krylov and Richardson drivers."""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

SINGULAR_RCOND = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    """A matrix is singular to working precision."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class DenseLU:
    """Partial-pivoting LU factors of a dense complex matrix."""

    def __init__(self, matrix, label: str = "matrix"):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"{label} must be square, got shape {matrix.shape}")
        self.shape = matrix.shape
        if matrix.shape[0] == 0:
            self.lu, self.piv, self.rcond = matrix, np.zeros(0, dtype=np.int32), 1.0
            return
        with warnings.catch_warnings():
            # exact singularity is reported below through the condition estimate
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self.lu, self.piv = sla.lu_factor(matrix, check_finite=True)
        gecon = sla.get_lapack_funcs("gecon", (self.lu,))
        anorm = np.abs(matrix).sum(axis=0).max()
        self.rcond, _ = gecon(self.lu, anorm, norm="1")
        if not np.isfinite(self.rcond) or self.rcond < SINGULAR_RCOND:
            raise SingularMatrixError(f"{label} is singular to working precision (rcond={self.rcond:.2e})")

    def solve(self, rhs) -> np.ndarray:
        if self.shape[0] == 0:
            return np.zeros_like(rhs, dtype=complex)
        return sla.lu_solve((self.lu, self.piv), rhs)

    def factors(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Permutation ``P``, unit lower ``L`` and upper ``U`` with ``P @ M = L @ U``."""
        n = self.shape[0]
        lower = np.tril(self.lu, -1) + np.eye(n)
        upper = np.triu(self.lu)
        order = np.arange(n)
        for row, pivot in enumerate(self.piv):
            order[row], order[pivot] = order[pivot], order[row]
        perm = np.eye(n)[order]
        return perm, lower, upper


def dense_lu_factor(matrix, label: str = "matrix") -> DenseLU:
    return DenseLU(matrix, label)


@dataclass
class SchurSequence:
    """Blocks ``T_1 = D_1`` and ``T_j = D_j - L_{j-1} T_{j-1}^{-1} U_{j-1}``.

    Couplings are the diagonals of the gridline coupling blocks (``L_j = U_j``).
    """

    diag_blocks: list
    couplings: list
    schur: list = field(default_factory=list)
    factors: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.diag_blocks)


def schur_step(block: np.ndarray, coupling: np.ndarray, previous: DenseLU) -> np.ndarray:
    """``D - C T^{-1} C`` for a diagonal coupling ``C``."""
    return block - coupling[:, None] * previous.solve(np.diag(coupling))


def block_tridiag_factor(diag_blocks, couplings, label: str = "T") -> SchurSequence:
    diag_blocks = [np.asarray(b, dtype=complex) for b in diag_blocks]
    couplings = [np.asarray(c, dtype=complex) for c in couplings]
    if len(couplings) != max(len(diag_blocks) - 1, 0):
        raise ValueError("need one coupling between each pair of consecutive blocks")
    seq = SchurSequence(diag_blocks, couplings)
    for j, block in enumerate(diag_blocks):
        current = block if j == 0 else schur_step(block, couplings[j - 1], seq.factors[-1])
        try:
            lu = DenseLU(current, f"{label}_{j + 1}")
        except SingularMatrixError as exc:
            raise SingularMatrixError(str(exc), index=j) from exc
        seq.schur.append(current)
        seq.factors.append(lu)
    return seq


def factor_operator(op) -> SchurSequence:
    """Schur sequence of a gridline-blocked operator."""
    blocks = [op.diag_block(i) for i in range(op.line_count)]
    couplings = [op.coupling(i) for i in range(op.line_count - 1)]
    return block_tridiag_factor(blocks, couplings)


def block_forward(seq: SchurSequence, f: np.ndarray) -> np.ndarray:
    """Forward substitution ``T_j v_j = f_j - L_{j-1} v_{j-1}``."""
    blocks = np.asarray(f, dtype=complex).reshape(seq.count, -1)
    v = np.empty_like(blocks)
    for j in range(seq.count):
        rhs = blocks[j] if j == 0 else blocks[j] - seq.couplings[j - 1] * v[j - 1]
        v[j] = seq.factors[j].solve(rhs)
    return v.ravel()


def block_backward(seq: SchurSequence, v: np.ndarray) -> np.ndarray:
    """Backward substitution ``u_j = v_j - T_j^{-1} U_j u_{j+1}``; ``u_J = v_J``."""
    v = np.asarray(v, dtype=complex).reshape(seq.count, -1)
    u = np.empty_like(v)
    u[-1] = v[-1]
    for j in range(seq.count - 2, -1, -1):
        u[j] = v[j] - seq.factors[j].solve(seq.couplings[j] * u[j + 1])
    return u.ravel()


def block_lu_solve(seq: SchurSequence, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f)
    expected = sum(b.shape[0] for b in seq.diag_blocks)
    if f.shape[0] != expected:
        raise ValueError(f"right-hand side of length {f.shape[0]} does not match {expected}")
    return block_backward(seq, block_forward(seq, f))


@dataclass
class IterationReport:
    method: str
    iters: int
    converged: bool
    history: list
    wall_ms: float = 0.0
    diverged: bool = False
    error: str | None = None

    @property
    def final_res(self) -> float:
        return self.history[-1] if self.history else 0.0

    def to_json(self) -> str:
        data = asdict(self)
        data["history"] = [float(x) for x in self.history]
        return json.dumps(data)


Operator = Callable[[np.ndarray], np.ndarray]


def as_operator(op) -> Operator:
    if op is None:
        return lambda v: v
    if callable(op) and not hasattr(op, "matrix") and not sp.issparse(op) and not isinstance(op, np.ndarray):
        return op
    matrix = getattr(op, "matrix", op)
    return lambda v: matrix @ v


def _givens(a: complex, b: complex) -> tuple[float, complex]:
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, np.conj(b) / abs(b)
    scale = abs(a)
    norm = np.hypot(scale, abs(b))
    c = scale / norm
    s = (a / scale) * np.conj(b) / norm
    return c, s


def gmres(
    op,
    b: np.ndarray,
    precond=None,
    side: str = "left",
    tol: float = 1e-6,
    maxit: int = 100,
    x0: np.ndarray | None = None,
    method: str = "gmres",
) -> tuple[np.ndarray, IterationReport]:
    """Unrestarted GMRES with modified Gram-Schmidt and Givens rotations.

    Left preconditioning monitors ``|M^{-1}(b - A x)| / |M^{-1} b|``; right
    preconditioning monitors ``|b - A x| / |b|``.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if tol <= 0 or maxit < 1:
        raise ValueError("tol must be positive and maxit at least 1")
    start = time.perf_counter()
    apply_a = as_operator(op)
    apply_m = as_operator(precond)
    b = np.asarray(b, dtype=complex)
    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=complex).copy()

    def report(iters, converged, history):
        return IterationReport(method, iters, converged, history, (time.perf_counter() - start) * 1e3)

    if not np.any(b):
        return np.zeros_like(b), report(0, True, [0.0])
    residual = b - apply_a(x) if np.any(x) else b.copy()
    if side == "left":
        residual = apply_m(residual)
        reference = np.linalg.norm(apply_m(b)) if np.any(x) else np.linalg.norm(residual)
    else:
        reference = np.linalg.norm(b)
    beta = np.linalg.norm(residual)
    history = [beta / reference]
    if history[0] <= tol:
        return x, report(0, True, history)
    basis = [residual / beta]
    hessenberg = np.zeros((maxit + 1, maxit), dtype=complex)
    rotations = []
    g = np.zeros(maxit + 1, dtype=complex)
    g[0] = beta
    iters = 0
    converged = False
    for k in range(maxit):
        if side == "left":
            w = apply_m(apply_a(basis[k]))
        else:
            w = apply_a(apply_m(basis[k]))
        for i, q in enumerate(basis):
            hessenberg[i, k] = np.vdot(q, w)
            w = w - hessenberg[i, k] * q
        hessenberg[k + 1, k] = np.linalg.norm(w)
        breakdown = abs(hessenberg[k + 1, k]) <= 1e-14 * max(abs(hessenberg[: k + 1, k]).max(), 1e-300)
        for i, (c, s) in enumerate(rotations):
            upper, lower = hessenberg[i, k], hessenberg[i + 1, k]
            hessenberg[i, k] = c * upper + s * lower
            hessenberg[i + 1, k] = -np.conj(s) * upper + c * lower
        c, s = _givens(hessenberg[k, k], hessenberg[k + 1, k])
        rotations.append((c, s))
        hessenberg[k, k] = c * hessenberg[k, k] + s * hessenberg[k + 1, k]
        hessenberg[k + 1, k] = 0.0
        g[k + 1] = -np.conj(s) * g[k]
        g[k] = c * g[k]
        iters = k + 1
        history.append(abs(g[k + 1]) / reference)
        if history[-1] <= tol or breakdown:
            converged = True
            break
        basis.append(w / np.linalg.norm(w) if not breakdown else w)
    y = sla.solve_triangular(hessenberg[:iters, :iters], g[:iters])
    update = sum(coef * q for coef, q in zip(y, basis[:iters]))
    x = x + (apply_m(update) if side == "right" else update)
    return x, report(iters, converged, history)


def richardson(
    op,
    b: np.ndarray,
    precond=None,
    tol: float = 1e-6,
    maxit: int = 100,
    true_residual: bool = False,
    divergence: float = 1e6,
    method: str = "richardson",
) -> tuple[np.ndarray, IterationReport]:
    """Stationary iteration ``x += M^{-1}(b - A x)`` from ``x = 0``.

    Monitors ``|M^{-1} r| / |M^{-1} b|`` by default, or ``|r| / |b|`` with
    ``true_residual``; stops early once the monitored ratio exceeds ``divergence``.
    """
    if tol <= 0 or maxit < 1:
        raise ValueError("tol must be positive and maxit at least 1")
    start = time.perf_counter()
    apply_a = as_operator(op)
    apply_m = as_operator(precond)
    b = np.asarray(b, dtype=complex)
    x = np.zeros_like(b)

    def report(iters, converged, history, diverged=False):
        return IterationReport(method, iters, converged, history, (time.perf_counter() - start) * 1e3, diverged)

    if not np.any(b):
        return x, report(0, True, [0.0])
    correction = apply_m(b)
    reference = np.linalg.norm(b) if true_residual else np.linalg.norm(correction)
    history = [1.0]
    for k in range(1, maxit + 1):
        x = x + correction
        residual = b - apply_a(x)
        correction = apply_m(residual)
        measured = np.linalg.norm(residual if true_residual else correction) / reference
        history.append(measured)
        if measured <= tol:
            return x, report(k, True, history)
        if not np.isfinite(measured) or measured > divergence:
            return x, report(k, False, history, diverged=True)
    return x, report(maxit, False, history)
