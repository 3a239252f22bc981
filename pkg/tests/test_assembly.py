import numpy as np
import pytest
import scipy.sparse.linalg as spla

from helmsweep.assembly import apply, assemble_helmholtz, assemble_truncated, dumps_field, loads_field
from helmsweep.mesh import BoundarySpec, MediumProfile, boundary_for_setting, build_grid, layered_wavenumber


def dense_dirichlet_stencil(n, k_of_x):
    """Textbook five-point matrix, rows ordered gridline-major along x."""
    h = 1 / (n + 1)
    size = n * n
    dense = np.zeros((size, size), dtype=complex)
    for i in range(n):
        k = k_of_x((i + 1) * h)
        for j in range(n):
            row = i * n + j
            dense[row, row] = -4 / h**2 + k**2
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < n and 0 <= jj < n:
                    dense[row, ii * n + jj] = 1 / h**2
    return dense


def test_dirichlet_matches_textbook_stencil():
    n = 7
    medium = layered_wavenumber((5, 5, 5, 5), (0, 4, 2, -2), 1.0)
    op = assemble_helmholtz(build_grid(n, n), medium, BoundarySpec())
    oracle = dense_dirichlet_stencil(n, lambda x: float(medium.values_at(x)))
    np.testing.assert_allclose(op.to_dense(), oracle, rtol=0, atol=1e-9)
    assert op.source_mask.all()


@pytest.mark.parametrize("setting, outer", [("guide", "robin"), ("open", "robin"), ("guide", "pml:5"), ("open", "pml:10")])
def test_complex_symmetric_and_block_tridiagonal(setting, outer):
    op = assemble_helmholtz(build_grid(9, 9), MediumProfile.constant(12.0), boundary_for_setting(setting, outer))
    dense = op.to_dense()
    np.testing.assert_array_equal(dense, dense.T)
    m = op.line_size
    for r in range(op.line_count):
        for c in range(op.line_count):
            if abs(r - c) > 1:
                assert not dense[r * m : (r + 1) * m, c * m : (c + 1) * m].any()
    for line in range(op.line_count - 1):
        np.testing.assert_array_equal(op.block(line, line + 1), np.diag(op.coupling(line)))


def test_layout_sizes():
    grid = build_grid(15, 15)
    medium = MediumProfile.constant(10.0)
    robin = assemble_helmholtz(grid, medium, boundary_for_setting("guide", "robin"))
    assert (robin.line_count, robin.line_size) == (17, 15)
    assert robin.source_mask.sum() == 15 * 15
    pml = assemble_helmholtz(grid, medium, boundary_for_setting("open", "pml:5"))
    assert (pml.line_count, pml.line_size) == (15 + 2 * 5, 15 + 2 * 5)
    assert pml.x_axis.index[0] == -4 and pml.x_axis.index[-1] == 20
    assert pml.source_mask.sum() == 15 * 15


def test_robin_absorbs_outgoing_plane_wave():
    n, k = 63, 30.0
    grid = build_grid(n, n)
    op = assemble_helmholtz(grid, MediumProfile.constant(k), boundary_for_setting("guide", "robin"))
    x = op.x_axis.index * grid.h
    y = op.y_axis.index * grid.h
    kx = np.sqrt(k**2 - np.pi**2)
    right_going = np.outer(np.exp(1j * kx * x), np.sin(np.pi * y)).ravel()
    rows = (op.matrix @ right_going).reshape(op.line_count, -1)
    # the outgoing wave nearly satisfies the right boundary row, the incoming one does not
    assert np.abs(rows[-1]).max() * 20 < np.abs(rows[0]).max()


def _point_response(outer, setting="open", n=31, k=20.0):
    op = assemble_helmholtz(build_grid(n, n), MediumProfile.constant(k), boundary_for_setting(setting, outer))
    f = np.zeros(op.size, dtype=complex)
    centre = n // 2 + 1
    f[op.line_of_index(centre) * op.line_size + int(np.flatnonzero(op.y_axis.index == centre)[0])] = 1.0
    return op, spla.spsolve(op.matrix.tocsc(), f)


def test_pml_decays_through_the_layer():
    op, u = _point_response("pml:10")
    profile = np.abs(u.reshape(op.line_count, -1)).max(axis=1)
    layer = profile[: op.line_of_index(1)]
    assert np.all(np.diff(layer) > 0)
    assert layer[0] < 0.1 * profile[op.line_of_index(1)]


def test_pml_width_barely_changes_the_physical_field():
    op10, u10 = _point_response("pml:10")
    op20, u20 = _point_response("pml:20")
    opd, ud = _point_response("dirichlet")
    physical = u10[op10.source_mask]
    reflection_gap = np.linalg.norm(physical - u20[op20.source_mask]) / np.linalg.norm(physical)
    box_gap = np.linalg.norm(physical - ud[opd.source_mask]) / np.linalg.norm(physical)
    assert reflection_gap < 0.05
    assert box_gap > 10 * reflection_gap


def test_apply_checks_size():
    op = assemble_helmholtz(build_grid(4, 4), MediumProfile.constant(1.0))
    np.testing.assert_allclose(apply(op, np.ones(16)), op.to_dense() @ np.ones(16))
    with pytest.raises(ValueError):
        apply(op, np.ones(15))


def test_truncation_keeps_lines_and_overrides_k():
    op = assemble_helmholtz(build_grid(8, 8), layered_wavenumber((3, 3), (0, 2), 1.0), boundary_for_setting("guide", "robin"))
    sub = assemble_truncated(op, 2, 5)
    s = op.lines_slice(2, 5)
    np.testing.assert_allclose(sub.to_dense(), op.to_dense()[s, s])
    constant = assemble_truncated(op, 2, 5, line_k=7.0)
    np.testing.assert_allclose(constant.line_k, 7.0)
    assert assemble_truncated(op, 5, 4).size == 0


def test_field_text_round_trip(rng):
    op = assemble_helmholtz(build_grid(6, 6), MediumProfile.constant(2.0), boundary_for_setting("open", "pml:3"))
    u = rng.standard_normal(op.size) + 1j * rng.standard_normal(op.size)
    parsed = loads_field(dumps_field(op, u))
    np.testing.assert_array_equal(parsed.ravel(), u)
    inner = loads_field(dumps_field(op, u, include_pml=False))
    assert inner.shape == (6, 6)
    np.testing.assert_array_equal(inner.ravel(), u[op.source_mask])


def test_zero_field_dump_is_all_zero():
    op = assemble_helmholtz(build_grid(5, 5), MediumProfile.constant(2.0))
    parsed = loads_field(dumps_field(op, np.zeros(op.size)))
    assert parsed.shape == (5, 5) and not parsed.any()
