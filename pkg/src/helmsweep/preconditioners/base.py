"""Common interface of the sweeping preconditioners."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..assembly import SparseOperator
from ..partition import StripPartition
from ..transmission import TransmissionFactory


class Preconditioner(ABC):
    """Linear map ``f -> M^{-1} f`` built on a gridline-blocked operator."""

    method = "abstract"

    def __init__(self, op: SparseOperator):
        self.op = op

    @abstractmethod
    def apply(self, f: np.ndarray) -> np.ndarray:
        """Return ``M^{-1} f``."""

    def __call__(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=complex)
        if f.shape != (self.op.size,):
            raise ValueError(f"input of shape {f.shape} does not match operator size {self.op.size}")
        return self.apply(f)

    @property
    def name(self) -> str:
        return self.method


def closures(factory: TransmissionFactory, p: StripPartition, j: int, left_kind: str, right_kind: str):
    """Left and right interface operators of subdomain ``j`` (``None`` on the physical boundary)."""
    return factory.for_subdomain(p, j, "left", left_kind), factory.for_subdomain(p, j, "right", right_kind)
