import csv
import io

import numpy as np
import pytest

from helmsweep.assembly import loads_field
from helmsweep.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    TableCell,
    build_operator,
    cell_seed,
    cells_to_csv,
    dump_field,
    parse_source,
    point_source,
    random_source,
    report_to_csv,
    reproduce_table,
    run_experiment,
    solve_field,
    table_config,
    within_tolerance,
)
from helmsweep.linalg import IterationReport
from helmsweep.mesh import ConfigError
from helmsweep.reference_counts import reference_counts

SMALL = dict(nx=31, ny=31)


@pytest.mark.parametrize(
    "overrides",
    [
        {"nx": 31, "ny": 30},
        {"p": 0},
        {"p": 64},
        {"setting": "cavity"},
        {"outer": "pml:x"},
        {"method": "multigrid"},
        {"transmission": "magic"},
        {"driver": "cg"},
        {"tol": 0},
        {"maxit": 0},
        {"repeats": 0},
        {"overlap": -1},
        {"extension": "sideways"},
    ],
)
def test_config_validation(overrides):
    with pytest.raises(ConfigError):
        ExperimentConfig(**overrides)


def test_config_json_round_trip_and_unknown_keys():
    cfg = ExperimentConfig(nx=15, ny=15, alpha=0.1, method="dosm", outer="pml:5")
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"nx": 15, "ny": 15, "colour": "red"})
    for text in ("not json", "[1, 2]"):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json(text)


def test_config_defaults():
    cfg = ExperimentConfig(p=16)
    assert cfg.layer_repeats == 4
    assert ExperimentConfig(p=2).layer_repeats == 1
    assert cfg.kind == "ident-ext"
    assert ExperimentConfig(method="polarized").kind == "pml"


def test_sources(setups):
    op = build_operator(ExperimentConfig(nx=15, ny=15, setting="open", outer="pml:5"))
    f = random_source(op, 3)
    assert np.all(f[~op.source_mask] == 0) and np.all(f[op.source_mask] != 0)
    np.testing.assert_array_equal(f, random_source(op, 3))
    point = point_source(op, 2, 8)
    assert point.sum() == 1 and point[op.source_mask].sum() == 1
    with pytest.raises(ConfigError):
        point_source(op, 0, 8)
    with pytest.raises(ConfigError):
        point_source(op, 99, 8)
    np.testing.assert_array_equal(parse_source(op, "point:2,8"), point)
    np.testing.assert_array_equal(parse_source(op, "random:3"), f)
    for bad in ("point:2", "random:x", "line:3"):
        with pytest.raises(ConfigError):
            parse_source(op, bad)


def test_exact_transmission_needs_one_iteration():
    for driver in ("gmres", "richardson"):
        cfg = ExperimentConfig(**SMALL, alpha=1.0, method="dosm", transmission="exact", driver=driver)
        report = run_experiment(cfg)
        assert report.converged and report.iters == 1


def test_loose_tolerance_stops_immediately():
    report = run_experiment(ExperimentConfig(**SMALL, alpha=0.1, tol=1.0))
    assert report.converged and report.iters <= 1


def test_nonconvergence_is_reported():
    cfg = ExperimentConfig(**SMALL, alpha=1.0, method="dosm", transmission="robin", driver="richardson", maxit=3)
    report = run_experiment(cfg)
    assert not report.converged
    row = next(csv.DictReader(io.StringIO(report_to_csv(cfg, report))))
    assert row["iters"] == "-" and row["converged"] == "false"


def test_csv_schema_and_determinism():
    cfg = ExperimentConfig(**SMALL, alpha=0.05, method="dosm", setting="open", outer="pml:5")
    first = report_to_csv(cfg, run_experiment(cfg))
    second = report_to_csv(cfg, run_experiment(cfg))
    assert first == second
    header, row = first.strip().split("\n")
    assert tuple(header.split(",")) == CSV_COLUMNS
    values = dict(zip(CSV_COLUMNS, row.split(",")))
    assert values["wall_ms"] == ""
    assert values["method"] == "dosm" and values["outer"] == "pml:5"
    timed = report_to_csv(cfg, run_experiment(cfg), timing=True)
    assert float(timed.strip().split("\n")[1].split(",")[-1]) >= 0


def test_table_configuration():
    cfg = table_config(2, 128, 0.01, 4, "pml:10")
    assert cfg.nx == 127 and cfg.base_k == (40.0,) * 4 and cfg.delta_k == (0.0, 40.0, 20.0, -20.0)
    assert cfg.method == "dosm" and cfg.setting == "guide" and cfg.transmission == "ident-ext"
    assert table_config(3, 64, 0.0, 8, "robin").transmission == "exact"
    assert table_config(3, 64, 0.0, 8, "robin").layer_repeats == 2
    assert cell_seed(1, 64, 0.1, 4, "robin") == cell_seed(1, 64, 0.1, 4, "robin")
    assert cell_seed(1, 64, 0.1, 4, "robin") != cell_seed(1, 64, 0.1, 8, "robin")


def test_reference_counts_anchors():
    t1 = reference_counts(1, 64)
    assert [t1[(1.0, 4, outer, "gmres")] for outer in ("robin", "pml:5", "pml:10")] == [20, 19, 19]
    assert t1[(1.0, 4, "robin", "richardson")] is None
    t4 = reference_counts(4, 64)
    assert [t4[(0.05, 16, outer, "richardson")] for outer in ("robin", "pml:5", "pml:10")] == [5, 5, 4]
    assert len(t4) == 7 * 3 * 3 * 2
    assert len(reference_counts(2, 128)) == 7 * 3 * 2


def _cell(iters, converged, reference, alpha=0.1):
    return TableCell("dosm", 4, alpha, "robin", "gmres", IterationReport("dosm", iters, converged, [1.0]), reference)


def test_tolerance_rule():
    assert within_tolerance(_cell(7, True, 5))
    assert not within_tolerance(_cell(8, True, 5))
    assert within_tolerance(_cell(100, False, None))
    assert not within_tolerance(_cell(30, True, None))
    assert not within_tolerance(_cell(100, False, 30))
    assert within_tolerance(_cell(1, True, 1, alpha=0.0))
    assert not within_tolerance(_cell(2, True, 1, alpha=0.0))


def test_small_table_slice_matches_exact_rows():
    cells = reproduce_table(4, 64, ps=(4,), alphas=(0.0,), outers=("robin",))
    assert [cell.driver for cell in cells] == ["richardson", "gmres"]
    assert all(cell.report.iters == 1 and within_tolerance(cell) for cell in cells)
    text = cells_to_csv(cells)
    assert text.count("\n") == 3
    with pytest.raises(ConfigError):
        reproduce_table(5)
    with pytest.raises(ConfigError):
        reproduce_table(1, 32)


def test_point_source_peak_lies_in_its_layer(tmp_path):
    cfg = ExperimentConfig(nx=63, ny=63, alpha=1.0, setting="guide")
    op = build_operator(cfg)
    u = solve_field(op, point_source(op, 2, 32))
    path = tmp_path / "field.csv"
    dump_field(op, u, path, include_pml=False)
    field = loads_field(path.read_text())
    assert field.shape == (63, 63)
    peak_i = np.unravel_index(np.abs(field).argmax(), field.shape)[0] + 1
    assert peak_i < 16
    dump_field(op, u, path)
    np.testing.assert_array_equal(loads_field(path.read_text()).ravel(), u)
