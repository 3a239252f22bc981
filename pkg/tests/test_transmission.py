import numpy as np
import pytest

from helmsweep.assembly import assemble_helmholtz
from helmsweep.mesh import ConfigError, MediumProfile, PmlSpec, boundary_for_setting, build_grid, layered_wavenumber
from helmsweep.partition import make_strip_partition
from helmsweep.transmission import (
    TransmissionFactory,
    exact_schur,
    exact_schur_at,
    ident_ext_schur_at,
    pml_schur_at,
    robin_at,
)


def layered_operator(n=11, setting="guide", outer="robin", alpha=1.0):
    medium = layered_wavenumber((8, 8, 8, 8), (0, 8, 4, -4), alpha)
    return assemble_helmholtz(build_grid(n, n), medium, boundary_for_setting(setting, outer))


def dense_complement(dense, m, line, side, line_count):
    """Schur complement of the exterior lines by dense elimination."""
    s = slice(line * m, (line + 1) * m)
    ext = slice(0, line * m) if side == "left" else slice((line + 1) * m, line_count * m)
    return dense[s, s] - dense[s, ext] @ np.linalg.solve(dense[ext, ext], dense[ext, s])


@pytest.mark.parametrize("setting, outer", [("guide", "robin"), ("open", "pml:3")])
@pytest.mark.parametrize("side", ["left", "right"])
def test_exact_complement_matches_dense_elimination(setting, outer, side):
    op = layered_operator(11, setting, outer)
    dense = op.to_dense()
    for line in range(2, op.line_count - 2):
        oracle = dense_complement(dense, op.line_size, line, side, op.line_count)
        np.testing.assert_allclose(exact_schur_at(op, line, side).matrix, oracle, rtol=0, atol=1e-10 * np.abs(oracle).max())


@pytest.mark.parametrize("source", ["outside", "inside"])
def test_identity_extension_copies_one_wavenumber(source):
    op = layered_operator(11)
    line, side = op.line_of_index(6), "right"
    sample = line + 1 if source == "outside" else line - 1
    k = op.line_k[sample]
    constant = assemble_helmholtz(build_grid(11, 11), MediumProfile.constant(k), boundary_for_setting("guide", "robin"))
    # the interface row keeps its own wavenumber, only the exterior is replaced
    dense = op.to_dense()
    m = op.line_size
    ext = slice((line + 1) * m, op.size)
    dense[ext, ext] = constant.to_dense()[ext, ext]
    oracle = dense_complement(dense, m, line, side, op.line_count)
    result = ident_ext_schur_at(op, line, side, source=source)
    assert result.exterior["k"] == k
    np.testing.assert_allclose(result.matrix, oracle, atol=1e-10 * np.abs(oracle).max())


def test_identity_extension_is_exact_in_constant_medium():
    op = layered_operator(11, alpha=0.0)
    line = op.line_of_index(4)
    for side in ("left", "right"):
        np.testing.assert_allclose(
            ident_ext_schur_at(op, line, side).matrix, exact_schur_at(op, line, side).matrix, atol=1e-9
        )


def test_pml_complement_approaches_exact_with_width():
    op = assemble_helmholtz(build_grid(31, 31), MediumProfile.constant(20.0), boundary_for_setting("open", "pml:10"))
    line = op.line_of_index(16)
    exact = exact_schur_at(op, line, "right").matrix
    errors = []
    for width in (5, 10, 20):
        pml = pml_schur_at(op, line, "right", PmlSpec(width), 20.0).matrix
        np.testing.assert_allclose(pml, pml.T, atol=1e-10)
        errors.append(np.linalg.norm(pml - exact) / np.linalg.norm(exact))
    assert errors[0] > errors[1] > errors[2]
    assert errors[-1] < 1e-3
    robin = robin_at(op, line, "right").matrix
    assert np.linalg.norm(robin - exact) / np.linalg.norm(exact) > 10 * errors[0]


def test_factory_caches_and_shares_mirror_pml():
    op = layered_operator(15, "open", "pml:5")
    factory = TransmissionFactory(op, PmlSpec(4), 8.0)
    line = op.line_of_index(8)
    left = factory.at("pml", line, "left")
    right = factory.at("pml", line, "right")
    assert factory.at("pml", line, "left") is left
    np.testing.assert_array_equal(left.matrix, right.matrix)
    assert factory.at("dirichlet", line, "left").is_dirichlet
    partition = make_strip_partition(op, 3)
    assert factory.for_subdomain(partition, 1, "left", "exact") is None
    assert exact_schur(op, partition, 3, "right") is None


def test_factory_errors():
    op = layered_operator(7)
    with pytest.raises(ConfigError):
        TransmissionFactory(op, extension="sideways")
    with pytest.raises(ConfigError):
        TransmissionFactory(op).at("pml", 3, "left")
    with pytest.raises(ConfigError):
        TransmissionFactory(op).at("magic", 3, "left")
    with pytest.raises(ConfigError):
        exact_schur_at(op, 0, "left")
