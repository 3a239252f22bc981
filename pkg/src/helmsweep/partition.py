"""Strip decompositions along x and their gridline index algebra.

Subdomain ``j`` (1-based) covers the gridlines ``first[j]..last[j]``
inclusive.  The first and last gridline of a strip are interface lines when a
neighbour exists on that side.  Tags follow the usual subscript conventions:

========  ==============================================================
``<``     left interface line ``a_j``
``>``     right interface line ``b_j``
``]``     right boundary of the left neighbour, ``b_{j-1}``
``[``     left boundary of the right neighbour, ``a_{j+1}``
``<.]``   lines strictly between ``a_j`` and ``b_{j-1}`` (left overlap)
``[.>``   lines strictly between ``a_{j+1}`` and ``b_j`` (right overlap)
``.``     every line of the strip except its interface lines
``[.]``   lines covered by no neighbour
``full``  every line of the strip
``~j``    every line left of the strip; ``j~`` every line right of it
========  ==============================================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .mesh import ConfigError

TAGS = ("<", ">", "]", "[", "<.]", "[.>", ".", "[.]", "full", "~j", "j~")


def strip_cuts(physical_lines: int, count: int) -> list[int]:
    """Cut positions (in cells) of ``count`` equal strips; leftmost strips take the remainder."""
    cells = physical_lines + 1
    base, extra = divmod(cells, count)
    widths = [base + (1 if j < extra else 0) for j in range(count)]
    return [int(c) for c in np.cumsum(widths)[:-1]]


@dataclass(frozen=True)
class StripPartition:
    line_count: int
    line_size: int
    first: tuple
    last: tuple
    overlap: int = 0
    layout: str = "strips"

    def __post_init__(self):
        object.__setattr__(self, "first", tuple(int(line) for line in self.first))
        object.__setattr__(self, "last", tuple(int(line) for line in self.last))
        count = len(self.first)
        if count < 1 or len(self.last) != count:
            raise ConfigError("a partition needs matching first/last lists")
        if self.first[0] != 0 or self.last[-1] != self.line_count - 1:
            raise ConfigError("strips must cover every gridline")
        for j in range(count):
            if self.last[j] < self.first[j]:
                raise ConfigError(f"strip {j + 1} is empty")
        for j in range(count - 1):
            if self.first[j + 1] > self.last[j]:
                raise ConfigError(f"strips {j + 1} and {j + 2} do not touch")
            if self.first[j + 1] <= self.first[j] or self.last[j + 1] <= self.last[j]:
                raise ConfigError("strips must advance monotonically")
        touching_allowed = self.layout == "source-transfer"
        for j in range(count - 2):
            gap = self.first[j + 2] - self.last[j]
            if gap < 0 or (gap == 0 and not touching_allowed):
                raise ConfigError(f"strips {j + 1} and {j + 3} overlap; reduce the overlap")

    @property
    def count(self) -> int:
        return len(self.first)

    def lines(self, j: int) -> tuple[int, int]:
        self._check(j)
        return self.first[j - 1], self.last[j - 1]

    def _check(self, j: int):
        if not 1 <= j <= self.count:
            raise ConfigError(f"subdomain {j} outside 1..{self.count}")

    def _a(self, j):
        return self.first[j - 1]

    def _b(self, j):
        return self.last[j - 1]

    def tag_lines(self, j: int, tag: str) -> np.ndarray:
        """Global gridline numbers carried by ``tag`` in subdomain ``j``."""
        self._check(j)
        if tag not in TAGS:
            raise ConfigError(f"unknown tag {tag!r}")
        count = self.count
        a, b = self._a(j), self._b(j)
        has_left, has_right = j > 1, j < count
        if tag == "<":
            return np.array([a]) if has_left else np.zeros(0, int)
        if tag == ">":
            return np.array([b]) if has_right else np.zeros(0, int)
        if tag == "]":
            return np.array([self._b(j - 1)]) if has_left else np.zeros(0, int)
        if tag == "[":
            return np.array([self._a(j + 1)]) if has_right else np.zeros(0, int)
        if tag == "<.]":
            return np.arange(a + 1, self._b(j - 1)) if has_left else np.zeros(0, int)
        if tag == "[.>":
            return np.arange(self._a(j + 1) + 1, b) if has_right else np.zeros(0, int)
        if tag == ".":
            return np.arange(a + 1 if has_left else a, b if has_right else b + 1)
        if tag == "[.]":
            low = self._b(j - 1) + 1 if has_left else a
            high = self._a(j + 1) if has_right else b + 1
            return np.arange(low, high)
        if tag == "full":
            return np.arange(a, b + 1)
        if tag == "~j":
            return np.arange(0, a)
        return np.arange(b + 1, self.line_count)

    def index_set(self, j: int, tag: str) -> np.ndarray:
        """Global unknown indices carried by ``tag`` in subdomain ``j``."""
        lines = self.tag_lines(j, tag)
        m = self.line_size
        return (lines[:, None] * m + np.arange(m)[None, :]).ravel()

    def restrict(self, j: int, v: np.ndarray) -> np.ndarray:
        a, b = self.lines(j)
        m = self.line_size
        return np.asarray(v)[a * m : (b + 1) * m]

    def extend(self, j: int, local: np.ndarray) -> np.ndarray:
        out = np.zeros(self.line_count * self.line_size, dtype=np.result_type(local, complex))
        a, b = self.lines(j)
        out[a * self.line_size : (b + 1) * self.line_size] = local
        return out

    def owned_lines(self, j: int, direction: str) -> tuple[int, int]:
        """Inclusive line range where the 0/1 weight of subdomain ``j`` is one.

        ``fwd`` owns ``(a_j, a_{j+1}]`` (zero on the left interface), ``bwd``
        owns ``[b_{j-1}, b_j)`` (zero on the right interface).
        """
        a, b = self.lines(j)
        if direction == "fwd":
            low = a if j == 1 else a + 1
            high = b if j == self.count else self._a(j + 1)
        elif direction == "bwd":
            low = a if j == 1 else self._b(j - 1)
            high = b if j == self.count else b - 1
        else:
            raise ConfigError("direction must be 'fwd' or 'bwd'")
        return low, high

    def weights(self, j: int, direction: str) -> np.ndarray:
        """Diagonal of the 0/1 weighting on the unknowns of subdomain ``j``."""
        a, b = self.lines(j)
        low, high = self.owned_lines(j, direction)
        per_line = np.zeros(b - a + 1)
        per_line[low - a : high - a + 1] = 1.0
        return np.repeat(per_line, self.line_size)

    def glue(self, locals_: list, direction: str) -> np.ndarray:
        """``sum_j R_j^T Phi_j u_j``."""
        m = self.line_size
        out = np.zeros(self.line_count * m, dtype=complex)
        for j, local in enumerate(locals_, start=1):
            a, _ = self.lines(j)
            low, high = self.owned_lines(j, direction)
            out[low * m : (high + 1) * m] = local[(low - a) * m : (high - a + 1) * m]
        return out

    def interface_lines(self) -> list[int]:
        lines = set()
        for j in range(1, self.count + 1):
            lines.update(self.tag_lines(j, "<").tolist())
            lines.update(self.tag_lines(j, ">").tolist())
        return sorted(lines)

    def to_json(self) -> str:
        return json.dumps(
            {"line_count": self.line_count, "line_size": self.line_size, "first": list(map(int, self.first)),
             "last": list(map(int, self.last)), "overlap": self.overlap, "layout": self.layout}
        )


def _physical_offset(op) -> int:
    """Gridline position of the physical grid index 0."""
    return -int(op.x_axis.index[0])


def _physical_extent(op) -> int:
    """Largest physical grid index along x (boundary and PML nodes excluded)."""
    physical = op.source_mask.reshape(op.line_count, op.line_size).any(axis=1)
    return int(op.x_axis.index[physical].max()) if physical.any() else 0


def make_strip_partition(op, count: int, overlap_lines: int = 0) -> StripPartition:
    """Equal strips cut at physical grid indices ``j*(nx+1)/count``.

    With ``overlap_lines > 0`` the strips around each cut share that many
    interior lines (plus the two interface lines bounding the overlap).
    """
    nx = _physical_extent(op)
    if count < 1:
        raise ConfigError("need at least one strip")
    if count > nx + 1:
        raise ConfigError(f"{count} strips exceed the {nx} gridlines")
    if overlap_lines < 0:
        raise ConfigError("overlap must be non-negative")
    offset = _physical_offset(op)
    cuts = [c + offset for c in strip_cuts(nx, count)]
    first, last = [0], []
    for cut in cuts:
        if overlap_lines == 0:
            left, right = cut, cut
        else:
            left = cut - (overlap_lines + 1) // 2
            right = left + overlap_lines + 1
        last.append(right)
        first.append(left)
    last.append(op.line_count - 1)
    if any(f < 0 for f in first) or any(l > op.line_count - 1 for l in last):
        raise ConfigError("overlap extends beyond the domain")
    return StripPartition(op.line_count, op.line_size, tuple(first), tuple(last), overlap_lines)


def make_source_transfer_partition(op, count: int) -> StripPartition:
    """Layout ``Omega_j = O_{j-1} u Gamma_j u O_j`` built on ``count`` base strips.

    The middle line ``L_j`` of strip ``j`` separates overlaps ``O_{j-1}`` and
    ``O_j``; subdomain ``j`` spans ``L_{j-1}..L_{j+1}``.  Each inner overlap
    must hold at least two lines so the damping matrices exist.
    """
    if count < 2:
        raise ConfigError("source transfer needs at least two subdomains")
    offset = _physical_offset(op)
    nx = _physical_extent(op)
    cuts = [0] + list(strip_cuts(nx, count)) + [nx + 1]
    middles = [offset + (cuts[j] + cuts[j + 1]) // 2 for j in range(count)]
    for j in range(count - 1):
        if middles[j + 1] - middles[j] - 1 < 2:
            raise ConfigError("overlaps need at least two interior lines; use fewer subdomains")
    first = [0] + middles[:-1]
    last = middles[1:] + [op.line_count - 1]
    if first[1] < 1 or middles[0] < 1:
        raise ConfigError("the first overlap must contain at least one line")
    return StripPartition(op.line_count, op.line_size, tuple(first), tuple(last), 0, "source-transfer")


def source_transfer_middles(p: StripPartition) -> list[int]:
    """Middle lines ``L_1..L_J`` of a source-transfer layout."""
    return list(p.first[1:]) + [p.last[-2]]
