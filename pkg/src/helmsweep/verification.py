"""Numerical checks of the nilpotency, equivalence and structural claims on small grids.

Every check runs over a fixed matrix of configurations and reports the worst
measured discrepancy against its tolerance.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import SparseOperator, assemble_helmholtz
from .harness import ExperimentConfig, build_operator, random_source
from .mesh import BoundarySpec, ConfigError, PmlSpec, Side, build_grid, layered_wavenumber
from .partition import make_source_transfer_partition, make_strip_partition, source_transfer_middles
from .preconditioners.dosm import DoubleSweep, SweepKinds, dosm_iterate, gdc_iterate, posm_iterate
from .preconditioners.global_osm import GlobalOSMPreconditioner
from .preconditioners.lu_sweep import LUSweepPreconditioner
from .preconditioners.polarized import PolarizedTracesPreconditioner
from .preconditioners.residual import residual_substructure_solve
from .preconditioners.slp import SingleLayerPreconditioner
from .preconditioners.source_transfer import SourceTransferPreconditioner, damping_matrix_checks
from .transmission import TransmissionFactory, dense_exterior_schur, exact_schur_at

SUITES = ("nilpotency", "equivalence", "structure")
GRIDS = (16, 32)
COUNTS = (2, 3, 4)
ALPHAS = (0.0, 0.1, 1.0)
SETTINGS = (("guide", "robin"), ("open", "pml:5"))
PML = PmlSpec(5)
ITERATIONS = 3


@dataclass
class Check:
    """Worst discrepancy of one claim over the configurations it ran on."""

    name: str
    claim: str
    tolerance: float
    lower: bool = False
    measured: float = 0.0
    worst: dict = field(default_factory=dict)
    runs: int = 0

    def record(self, value: float, **config):
        value = float(value)
        worse = value < self.measured if self.lower else value > self.measured
        if self.runs == 0 or worse:
            self.measured, self.worst = value, config
        self.runs += 1

    @property
    def passed(self) -> bool:
        if self.runs == 0:
            return False
        if self.lower:
            return self.measured >= self.tolerance
        return self.measured <= self.tolerance


@dataclass
class SuiteReport:
    suite: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [asdict(check) | {"passed": check.passed} for check in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def lines(self) -> list[str]:
        out = []
        for check in self.checks:
            relation = ">=" if check.lower else "<="
            verdict = "PASS" if check.passed else "FAIL"
            out.append(f"{verdict} {check.name}: {check.measured:.3e} {relation} {check.tolerance:.0e} ({check.claim})")
        return out


@dataclass
class Setup:
    """Operator, source and direct solution of one small configuration."""

    op: SparseOperator
    f: np.ndarray
    u: np.ndarray
    factory: TransmissionFactory
    config: dict

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.u))

    def relative(self, v: np.ndarray, w: np.ndarray) -> float:
        """Gap measured against the norm of the exact solution."""
        return float(np.linalg.norm(v - w)) / self.norm

    @staticmethod
    def gap(v: np.ndarray, w: np.ndarray) -> float:
        """Gap between two iterates measured against the norm of the reference iterate ``w``."""
        scale = float(np.linalg.norm(w))
        return float(np.linalg.norm(v - w)) / scale if scale else float(np.linalg.norm(v))

    def residual(self, v: np.ndarray) -> float:
        return float(np.linalg.norm(self.op.matrix @ v - self.f) / np.linalg.norm(self.f))


def make_setup(n: int, alpha: float, setting: str, outer: str, seed: int = 0) -> Setup:
    cfg = ExperimentConfig(nx=n, ny=n, alpha=alpha, p=1, setting=setting, outer=outer, seed=seed)
    op = build_operator(cfg)
    f = random_source(op, seed)
    u = spla.spsolve(op.matrix.tocsc(), f)
    factory = TransmissionFactory(op, PML, float(np.mean(cfg.base_k)))
    return Setup(op, f, u, factory, {"n": n, "alpha": alpha, "setting": setting, "outer": outer})


def _setups(grids, alphas):
    for n, alpha, (setting, outer) in itertools.product(grids, alphas, SETTINGS):
        yield make_setup(n, alpha, setting, outer)


def _worst_difference(first: list, second: list) -> float:
    return max(Setup.gap(a, b) for a, b in zip(first, second, strict=True))


def nilpotency_suite(grids=GRIDS, counts=COUNTS, alphas=ALPHAS) -> SuiteReport:
    checks = {
        "dosm": Check("dosm-exact-one-sweep", "double sweep with exact complements solves in one application", 1e-10),
        "lu": Check("lu-sweep-exact", "block LU sweep with exact Schur blocks solves in one application", 1e-10),
        "st": Check("source-transfer-exact", "source transfer with exact complements solves in one application", 1e-10),
        "pol": Check("polarized-exact", "polarized traces with exact complements solve in one application", 1e-10),
        "posm": Check("posm-exact-after-J", "parallel Schwarz with exact complements is exact after J steps", 1e-10),
        "posm_early": Check(
            "posm-inexact-before-J", "parallel Schwarz error after J-1 steps stays large", 1e-3, lower=True
        ),
        "global": Check("global-osm-two-phase", "global transmission solves in one two-phase application", 1e-10),
        "resid": Check("residual-substructuring", "reduced Krylov solve on the residual support returns the solution", 1e-10),
        "resid_size": Check("residual-support-size", "support dimension over N stays below one", 1.0 - 1e-12),
        "resid_near": Check("residual-support-distance", "support gridlines lie within one line of an interface", 1.0),
    }
    for setup in _setups(grids, alphas):
        op, f, factory = setup.op, setup.f, setup.factory
        for count in counts:
            config = setup.config | {"J": count}
            strips = make_strip_partition(op, count)
            engine = DoubleSweep(op, strips, SweepKinds.uniform("exact"), factory)
            _, full = engine.sweep(f)
            checks["dosm"].record(setup.residual(engine.glue(full)), **config)
            lu = LUSweepPreconditioner(op, strips, "exact", factory)
            checks["lu"].record(setup.residual(lu(f)), **config)
            layout = make_source_transfer_partition(op, count)
            st = SourceTransferPreconditioner(op, layout, "exact", "exact", factory)
            checks["st"].record(setup.residual(st(f)), **config)
            polarized = PolarizedTracesPreconditioner(op, strips, factory, "exact")
            checks["pol"].record(setup.residual(polarized(f)), **config)
            iterates = posm_iterate(engine, f, count)
            checks["posm"].record(setup.relative(iterates[-1], setup.u), **config)
            checks["posm_early"].record(setup.relative(iterates[-2], setup.u) if count > 1 else 1.0, **config)
            checks["global"].record(setup.residual(GlobalOSMPreconditioner(op, strips, factory)(f)), **config)
            inner = SingleLayerPreconditioner(op, strips, factory, "pml")
            solve = residual_substructure_solve(op, inner, f)
            checks["resid"].record(setup.residual(solve.solution), **config)
            checks["resid_size"].record(solve.support.size / op.size, **config)
            checks["resid_near"].record(support_distance(op, strips, solve.support), **config)
    return SuiteReport("nilpotency", list(checks.values()))


def support_distance(op: SparseOperator, partition, support: np.ndarray) -> float:
    """Largest gridline distance from a support row to the nearest interface line."""
    interfaces = np.asarray(partition.interface_lines())
    if support.size == 0:
        return 0.0
    if interfaces.size == 0:
        return float("inf")
    lines = np.unique(support // op.line_size)
    return float(np.abs(lines[:, None] - interfaces[None, :]).min(axis=1).max())


def equivalence_suite(grids=GRIDS, counts=COUNTS, alphas=ALPHAS) -> SuiteReport:
    checks = {
        "gdc": Check("gdc-vs-dosm", "deferred-correction iterates equal the glued double-sweep iterates", 1e-10),
        "sub": Check("substructured-vs-dosm", "interface-trace iteration reproduces the double-sweep iterates", 1e-10),
        "lu": Check("lu-vs-dosm", "LU sweep equals the double sweep with Dirichlet right closures", 1e-10),
        "st": Check("source-transfer-vs-dosm", "source transfer equals the PML double sweep with cut forward sources", 1e-10),
        "slp": Check("slp2-vs-ash", "second single-layer form equals the harmonic-extension double sweep", 1e-10),
        "pol_exact": Check("polarized-vs-dosm-exact", "polarized traces equal the double sweep, exact complements", 1e-10),
        "pol_two": Check("polarized-vs-dosm-pml-two-strips", "polarized traces equal the PML double sweep, two strips", 1e-10),
        "pol_many": Check("polarized-vs-dosm-pml", "polarized traces equal the PML double sweep, three or more strips", 1e-10),
    }
    for setup in _setups(grids, alphas):
        op, f, factory = setup.op, setup.f, setup.factory
        for count in counts:
            config = setup.config | {"J": count}
            strips = make_strip_partition(op, count)
            for kind in ("ident-ext", "pml"):
                engine = DoubleSweep(op, strips, SweepKinds.uniform(kind), factory)
                reference = dosm_iterate(engine, f, ITERATIONS)
                checks["gdc"].record(_worst_difference(gdc_iterate(engine, f, ITERATIONS), reference), kind=kind, **config)
                checks["sub"].record(_worst_difference(trace_iterates(engine, f, ITERATIONS), reference), kind=kind, **config)
            for overlap in (2,):
                try:
                    wide = make_strip_partition(op, count, overlap)
                    engine = DoubleSweep(op, wide, SweepKinds.uniform("pml"), factory)
                except ConfigError:
                    continue
                reference = dosm_iterate(engine, f, ITERATIONS)
                gdc = gdc_iterate(engine, f, ITERATIONS)
                checks["gdc"].record(_worst_difference(gdc, reference), kind="pml", overlap=overlap, **config)
            lu = LUSweepPreconditioner(op, strips, "ident-ext", factory)(f)
            special = DoubleSweep(op, strips, SweepKinds("ident-ext", "dirichlet", "ident-ext", "dirichlet"), factory)
            _, full = special.sweep(f)
            checks["lu"].record(Setup.gap(lu, special.glue(full)), **config)
            layout = make_source_transfer_partition(op, count)
            st = SourceTransferPreconditioner(op, layout, "pml", "pml", factory)(f)
            cut = DoubleSweep(op, layout, SweepKinds("pml", "pml", "pml", "dirichlet"), factory, cut_forward_sources=True)
            _, full = cut.sweep(f)
            checks["st"].record(Setup.gap(st, cut.glue(full)), **config)
            engine = DoubleSweep(op, strips, SweepKinds.uniform("pml"), factory)
            slp = SingleLayerPreconditioner(op, strips, factory, "pml")(f)
            ash = engine.gdc_sweep(f, np.zeros_like(f), "ash")
            checks["slp"].record(Setup.gap(slp, ash), **config)
            for kind in ("exact", "pml"):
                engine = DoubleSweep(op, strips, SweepKinds.uniform(kind), factory)
                _, full = engine.sweep(f)
                polarized = PolarizedTracesPreconditioner(op, strips, factory, kind)(f)
                gap = Setup.gap(polarized, engine.glue(full))
                key = "pol_exact" if kind == "exact" else ("pol_two" if count == 2 else "pol_many")
                checks[key].record(gap, **config)
    return SuiteReport("equivalence", list(checks.values()))


def trace_iterates(engine: DoubleSweep, f: np.ndarray, iterations: int) -> list:
    """Glued volume iterates of the interface-trace iteration from zero traces."""
    traces = [np.zeros(engine.op.line_size, dtype=complex) for _ in range(engine.count - 1)]
    out = []
    for _ in range(iterations):
        traces, _, full = engine.trace_sweep(f, traces)
        out.append(engine.glue(full))
    return out


def block_tridiagonal_gap(op: SparseOperator) -> float:
    """Largest modulus outside the three central block diagonals."""
    coo = op.matrix.tocoo()
    far = np.abs(coo.row // op.line_size - coo.col // op.line_size) > 1
    return float(np.abs(coo.data[far]).max()) if far.any() else 0.0


def partition_of_unity_gap(partition, size: int) -> float:
    """Deviation of ``sum_j R_j^T Phi_j R_j`` from the identity plus overlap of distinct weights."""
    worst = 0.0
    m = partition.line_size
    for direction in ("fwd", "bwd"):
        masks = []
        for j in range(1, partition.count + 1):
            a, _ = partition.lines(j)
            mask = np.zeros(size)
            weights = partition.weights(j, direction)
            mask[a * m : a * m + weights.size] = weights
            masks.append(mask)
        total = np.sum(masks, axis=0)
        worst = max(worst, float(np.abs(total - 1).max()))
        for first, second in itertools.combinations(masks, 2):
            worst = max(worst, float(np.abs(first * second).max()))
        for j, mask in enumerate(masks, start=1):
            a, b = partition.lines(j)
            # forward weights vanish on the left interface, backward ones on the right interface
            if direction == "fwd" and j > 1:
                worst = max(worst, float(np.abs(mask[a * m : (a + 1) * m]).max()))
            if direction == "bwd" and j < partition.count:
                worst = max(worst, float(np.abs(mask[b * m : (b + 1) * m]).max()))
    return worst


def schur_oracle_gap(op: SparseOperator) -> float:
    """Relative entrywise gap between the recurrence and dense elimination at every admissible line."""
    worst = 0.0
    for line in range(1, op.line_count - 1):
        for side in ("left", "right"):
            recurrence = exact_schur_at(op, line, side).matrix
            dense = dense_exterior_schur(op, line, side)
            worst = max(worst, float(np.abs(recurrence - dense).max() / np.abs(dense).max()))
    return worst


def representation_gap(n: int = 8, seed: int = 0) -> float:
    """Discrete representation formula on an ``n x n`` grid split into exterior, interface and interior lines."""
    rng = np.random.default_rng(seed)
    medium = layered_wavenumber((9.0, 9.0), (0.0, 4.0), 1.0)
    op = assemble_helmholtz(build_grid(n, n), medium, BoundarySpec(Side("robin"), Side("robin")))
    dense = op.to_dense()
    m = op.line_size
    line = op.line_count // 2
    b = np.arange(line * m, (line + 1) * m)
    i = np.arange((line + 1) * m, op.size)
    green = np.linalg.inv(dense)
    g_i, g_ib = green[np.ix_(i, i)], green[np.ix_(i, b)]
    a_bi, a_ib, a_i = dense[np.ix_(b, i)], dense[np.ix_(i, b)], dense[np.ix_(i, i)]

    def random_matrix(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    modified_b = random_matrix(m, m)
    f_b, f_i, lam = random_matrix(m), random_matrix(i.size), random_matrix(m)
    system = np.block([[modified_b, a_bi], [a_ib, a_i]])
    u = np.linalg.solve(system, np.concatenate([f_b + lam, f_i]))
    u_b, u_i = u[:m], u[m:]
    arbitrary = random_matrix(m, m)
    neumann = arbitrary @ u_b + a_bi @ u_i - f_b
    formula = g_i @ f_i + g_ib @ f_b + g_ib @ neumann - (g_ib @ arbitrary + g_i @ a_ib) @ u_b
    return float(np.linalg.norm(formula - u_i) / np.linalg.norm(u_i))


def structure_suite(grids=GRIDS, counts=COUNTS, alphas=ALPHAS) -> SuiteReport:
    checks = {
        "tri": Check("block-tridiagonal", "no coupling beyond neighbouring gridlines", 0.0),
        "sym": Check("complex-symmetric", "assembled matrix equals its transpose", 0.0),
        "unity": Check("partition-of-unity", "0/1 weights sum to one, never overlap, vanish on the trailing interface", 0.0),
        "std": Check("damping-products", "the four damping products vanish exactly", 0.0),
        "schur": Check("schur-vs-dense", "Schur recurrence equals dense elimination on grids up to 12x12", 1e-12),
        "repmat": Check("representation-formula", "discrete representation formula on an 8x8 split", 1e-12),
        "split": Check("polarized-splitting", "polarized output does not depend on the interface splitting", 1e-12),
    }
    for setup in _setups(grids, alphas):
        op, f, factory = setup.op, setup.f, setup.factory
        checks["tri"].record(block_tridiagonal_gap(op), **setup.config)
        checks["sym"].record(float(abs(op.matrix - op.matrix.T).max()), **setup.config)
        for count in counts:
            config = setup.config | {"J": count}
            for overlap in (0, 2):
                try:
                    partition = make_strip_partition(op, count, overlap)
                except ConfigError:
                    continue
                checks["unity"].record(partition_of_unity_gap(partition, op.size), overlap=overlap, **config)
            layout = make_source_transfer_partition(op, count)
            checks["unity"].record(partition_of_unity_gap(layout, op.size), layout="source-transfer", **config)
            middles = source_transfer_middles(layout)
            for left, right in zip(middles[:-1], middles[1:]):
                checks["std"].record(max(damping_matrix_checks(op, left, right)), **config)
            strips = make_strip_partition(op, count)
            half = PolarizedTracesPreconditioner(op, strips, factory, "pml", theta=0.5)(f)
            whole = PolarizedTracesPreconditioner(op, strips, factory, "pml", theta=1.0)(f)
            checks["split"].record(Setup.gap(half, whole), **config)
    for n, alpha, (setting, outer) in itertools.product((6, 9, 12), (0.0, 1.0), SETTINGS):
        small = make_setup(n, alpha, setting, outer)
        checks["schur"].record(schur_oracle_gap(small.op), **small.config)
    for seed in range(3):
        checks["repmat"].record(representation_gap(8, seed), seed=seed)
    return SuiteReport("structure", list(checks.values()))


def verify_suite(name: str, **options) -> SuiteReport:
    if name == "nilpotency":
        return nilpotency_suite(**options)
    if name == "equivalence":
        return equivalence_suite(**options)
    if name == "structure":
        return structure_suite(**options)
    raise ConfigError(f"suite must be one of {SUITES}")
