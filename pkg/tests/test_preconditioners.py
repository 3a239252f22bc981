import numpy as np
import pytest

from helmsweep.linalg import gmres
from helmsweep.mesh import ConfigError, PmlSpec
from helmsweep.methods import METHODS, build_preconditioner, default_transmission
from helmsweep.partition import make_strip_partition
from helmsweep.preconditioners.dosm import DoubleSweep, SweepKinds, dosm_iterate, gdc_iterate, posm_iterate
from helmsweep.preconditioners.residual import residual_substructure_solve

SETTINGS = [("guide", "robin"), ("open", "pml:5")]


def build(method, setup, count=3, kind=None, **options):
    return build_preconditioner(method, setup.op, count, kind, PmlSpec(5), 20.0, factory=setup.factory, **options)


@pytest.mark.parametrize("method", METHODS)
def test_linear_and_zero_preserving(method, setups, rng):
    setup = setups(16, 0.1, "guide", "robin")
    precond = build(method, setup)
    n = setup.op.size
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    a, b = 0.7 - 0.2j, -1.3 + 0.5j
    combined = precond(a * x + b * y)
    separate = a * precond(x) + b * precond(y)
    assert np.linalg.norm(combined - separate) <= 1e-9 * np.linalg.norm(separate)
    assert not precond(np.zeros(n)).any()
    with pytest.raises(ValueError):
        precond(np.zeros(n + 1))


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("setting, outer", SETTINGS)
def test_every_method_accelerates_gmres(method, setting, outer, setups):
    setup = setups(16, 1.0, setting, outer)
    precond = build(method, setup)
    _, plain = gmres(setup.op, setup.f, None, tol=1e-6, maxit=60)
    x, report = gmres(setup.op, setup.f, precond, tol=1e-6, maxit=60, method=method)
    assert report.converged
    assert report.iters < plain.iters
    assert setup.residual(x) < 1e-3


@pytest.mark.parametrize("method", ["dosm", "lu-sweep", "source-transfer", "polarized", "dosm-gdc", "dosm-sub"])
@pytest.mark.parametrize("setting, outer", SETTINGS)
@pytest.mark.parametrize("count", [2, 4])
def test_exact_complements_give_the_solution(method, setting, outer, count, setups):
    setup = setups(16, 1.0, setting, outer)
    precond = build(method, setup, count, "exact")
    assert setup.relative(precond(setup.f), setup.u) < 1e-10


def test_global_method_solves_in_one_application(setups):
    setup = setups(16, 1.0, "open", "pml:5")
    precond = build("global-osm", setup, 4, "exact")
    assert setup.relative(precond(setup.f), setup.u) < 1e-10


@pytest.mark.parametrize("count", [2, 3, 4])
def test_parallel_iteration_terminates_after_count_steps(count, setups):
    setup = setups(16, 1.0, "guide", "robin")
    partition = make_strip_partition(setup.op, count)
    engine = DoubleSweep(setup.op, partition, SweepKinds.uniform("exact"), setup.factory)
    iterates = posm_iterate(engine, setup.f, count)
    assert setup.relative(iterates[-1], setup.u) < 1e-10
    assert setup.relative(iterates[-2], setup.u) > 1e-3


def test_transmission_and_deferred_correction_iterates_agree(setups):
    setup = setups(16, 0.1, "open", "pml:5")
    partition = make_strip_partition(setup.op, 3)
    engine = DoubleSweep(setup.op, partition, SweepKinds.uniform("ident-ext"), setup.factory)
    for a, b in zip(gdc_iterate(engine, setup.f, 3), dosm_iterate(engine, setup.f, 3)):
        assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)


def test_overlapping_double_sweep_converges(setups):
    setup = setups(16, 0.1, "guide", "robin")
    precond = build("dosm", setup, 3, overlap=2)
    _, report = gmres(setup.op, setup.f, precond, tol=1e-8, maxit=40)
    assert report.converged and report.iters < 15
    exact = build("dosm", setup, 3, "exact", overlap=2)
    assert setup.relative(exact(setup.f), setup.u) < 1e-10


def test_residual_substructuring_is_exact_and_reduced(setups):
    setup = setups(16, 1.0, "open", "pml:5")
    inner = build("slp2", setup, 3)
    result = residual_substructure_solve(setup.op, inner, setup.f)
    assert result.reduced
    assert 0 < result.support.size < setup.op.size
    assert setup.residual(result.solution) < 1e-10


def test_defaults_and_errors(setups):
    assert default_transmission("dosm") == "ident-ext"
    assert default_transmission("polarized") == "pml"
    assert default_transmission("global-osm") == "exact"
    setup = setups(16, 0.1, "guide", "robin")
    with pytest.raises(ConfigError):
        build("multigrid", setup)
    with pytest.raises(ConfigError):
        build("dosm", setup, kind="magic")
    with pytest.raises(ConfigError):
        build("resid-sub", setup, inner="resid-sub")
    with pytest.raises(ConfigError):
        build("polarized", setup, output="sideways")
    with pytest.raises(ConfigError):
        build("global-osm", setup, overlap=2)


def test_extended_single_layer_transfers_a_left_source_exactly(setups):
    setup = setups(16, 0.0, "open", "pml:5")
    op, m = setup.op, setup.op.line_size
    precond = build("slp1", setup, 2, "exact")
    interface = make_strip_partition(op, 2).first[1]
    f = setup.f.copy()
    f[(interface - 1) * m :] = 0.0
    u = np.linalg.solve(op.to_dense(), f)
    assert np.linalg.norm(precond(f) - u) <= 1e-10 * np.linalg.norm(u)
