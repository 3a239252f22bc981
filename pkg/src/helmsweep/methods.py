"""Construction of every preconditioner from its method string."""

from __future__ import annotations

from .assembly import SparseOperator
from .mesh import ConfigError, PmlSpec
from .partition import make_source_transfer_partition, make_strip_partition
from .preconditioners.base import Preconditioner
from .preconditioners.dosm import (
    DOSMPreconditioner,
    DoubleSweep,
    GDCPreconditioner,
    POSMPreconditioner,
    SubstructuredPreconditioner,
    SweepKinds,
)
from .preconditioners.global_osm import GlobalOSMPreconditioner
from .preconditioners.lu_sweep import LUSweepPreconditioner
from .preconditioners.polarized import PolarizedTracesPreconditioner
from .preconditioners.residual import ResidualSubstructuredSolver
from .preconditioners.slp import ExtendedSingleLayerPreconditioner, SingleLayerPreconditioner
from .preconditioners.source_transfer import SourceTransferPreconditioner
from .transmission import KINDS, TransmissionFactory

METHODS = (
    "lu-sweep", "dosm", "dosm-gdc", "dosm-sub", "source-transfer", "slp1", "slp2",
    "polarized", "resid-sub", "posm", "global-osm",
)

# Methods whose construction assumes PML complements unless told otherwise.
_PML_DEFAULT = {"source-transfer", "slp1", "slp2", "polarized", "resid-sub"}


def default_transmission(method: str) -> str:
    if method == "global-osm":
        return "exact"
    return "pml" if method in _PML_DEFAULT else "ident-ext"


def build_preconditioner(
    method: str,
    op: SparseOperator,
    count: int,
    transmission: str | None = None,
    pml: PmlSpec | None = None,
    omega: float | None = None,
    overlap: int = 0,
    factory: TransmissionFactory | None = None,
    extension: str = "outside",
    **options,
) -> Preconditioner:
    """Preconditioner ``method`` on ``count`` strips of ``op``.

    ``pml`` and ``omega`` configure PML complements, ``extension`` picks the
    medium copied by identity-extension complements; ``options`` pass
    method-specific settings (``variant`` for dosm-gdc, ``iterations`` for
    posm, ``inner`` for resid-sub, ``theta``/``output``/``start`` for polarized).
    """
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    kind = transmission or default_transmission(method)
    if kind not in KINDS:
        raise ConfigError(f"unknown transmission kind {kind!r}")
    if kind == "pml" and pml is None:
        pml = PmlSpec(5)
    if factory is None:
        factory = TransmissionFactory(op, pml, omega, extension)
    if method == "source-transfer":
        partition = make_source_transfer_partition(op, count)
        return SourceTransferPreconditioner(op, partition, kind, kind, factory)
    partition = make_strip_partition(op, count, overlap)
    if method == "lu-sweep":
        return LUSweepPreconditioner(op, partition, kind, factory)
    if method in ("dosm", "dosm-gdc", "dosm-sub", "posm"):
        engine = DoubleSweep(op, partition, SweepKinds.uniform(kind), factory)
        if method == "dosm":
            return DOSMPreconditioner(engine)
        if method == "dosm-gdc":
            return GDCPreconditioner(engine, options.get("variant", "ras"))
        if method == "dosm-sub":
            return SubstructuredPreconditioner(engine)
        return POSMPreconditioner(engine, options.get("iterations"))
    if method == "slp1":
        return ExtendedSingleLayerPreconditioner(op, partition, factory, kind)
    if method == "slp2":
        return SingleLayerPreconditioner(op, partition, factory, kind)
    if method == "polarized":
        picked = {key: options[key] for key in ("theta", "output", "start") if key in options}
        return PolarizedTracesPreconditioner(op, partition, factory, kind, **picked)
    if method == "resid-sub":
        inner = options.get("inner", "slp2")
        if inner == "resid-sub":
            raise ConfigError("resid-sub cannot wrap itself")
        inner_pre = build_preconditioner(inner, op, count, kind, pml, omega, overlap, factory)
        return ResidualSubstructuredSolver(op, inner_pre)
    return GlobalOSMPreconditioner(op, partition, factory, kind)
