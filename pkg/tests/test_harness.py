import numpy as np
import pytest

from wsbm import harness
from wsbm.core import BlockModelParams, FunctionalSpec, PointMass
from wsbm.errors import RankDeficiencyError, WSBMError
from wsbm.harness import EstimationConfig, McSummary, param_names, run_design, run_replication
from wsbm.simulate import binary_design


def test_param_names():
    assert param_names(2) == ["phi[0,0]", "phi[0,1]", "phi[1,1]", "p[0]", "p[1]"]


def test_deterministic():
    a = run_design(binary_design(1), 60, reps=6, seed0=5)
    b = run_design(binary_design(1), 60, reps=6, seed0=5)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.table_csv() == b.table_csv()
    c = run_design(binary_design(1), 60, reps=6, seed0=6)
    assert not np.array_equal(a.values, c.values)


def test_seed_offsets():
    # replication k uses seed seed0 + k, so shifted runs overlap
    a = run_design(binary_design(2), 50, reps=4, seed0=0)
    b = run_design(binary_design(2), 50, reps=3, seed0=1)
    np.testing.assert_array_equal(a.values[1:], b.values)
    vals, _ = run_replication(binary_design(2), 50, 2, EstimationConfig())
    np.testing.assert_array_equal(vals, a.values[2])


def test_workers_do_not_change_results():
    serial = run_design(binary_design(3), 50, reps=8, seed0=2)
    pooled = run_design(binary_design(3), 50, reps=8, seed0=2, workers=2)
    np.testing.assert_array_equal(serial.values, pooled.values)


def test_point_mass_zero_dispersion():
    design = BlockModelParams((1.0,), ((PointMass(0.5),),))
    s = run_design(design, 20, reps=5)
    for row in s.rows:
        assert row.std_dev == 0.0 and row.iqr == 0.0
    assert s.row("phi[0,0]").mean == pytest.approx(0.5, abs=1e-12)
    assert s.row("p[0]").mean == pytest.approx(1.0, abs=1e-12)


def test_summary_invariants():
    s = run_design(binary_design(1), 80, reps=20, seed0=1)
    assert isinstance(s, McSummary)
    assert s.values.shape == (20 - s.failures, 5)
    for k, row in enumerate(s.rows):
        col = s.values[:, k]
        assert row.min <= row.median <= row.max
        assert row.min <= row.mean <= row.max
        assert row.std_dev == pytest.approx(np.std(col, ddof=1))
        assert row.iqr >= 0
    assert s.row("phi[1,1]").true == pytest.approx(0.4)
    assert s.row("p[0]").true == pytest.approx(0.3)
    lines = s.table_csv().splitlines()
    assert lines[0].split(",")[0] == "statistic"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["true value", "mean", "median", "std. dev.", "iqr"]
    assert "std. dev." in s.report()
    assert s.to_dict()["reps"] == 20


def test_failures_counted_not_imputed(monkeypatch):
    real = harness.run_replication

    def flaky(design, n, seed, config):
        if seed % 3 == 0:
            raise RankDeficiencyError("injected")
        return real(design, n, seed, config)

    monkeypatch.setattr(harness, "run_replication", flaky)
    s = run_design(binary_design(1), 50, reps=9, seed0=0)
    assert s.failures == 3
    assert s.values.shape[0] == 6
    assert all("RankDeficiencyError" in m for m in s.failure_messages)


def test_all_failed_raises():
    # two communities with identical point-mass edges cannot be separated
    design = BlockModelParams((0.5, 0.5), ((PointMass(1.0), PointMass(1.0)), (PointMass(1.0), PointMass(1.0))))
    with pytest.raises(WSBMError):
        run_design(design, 20, reps=3)


def test_reps_must_be_at_least_two():
    with pytest.raises(ValueError):
        run_design(binary_design(1), 50, reps=1)


def test_custom_functional():
    config = EstimationConfig(functional=FunctionalSpec.cdf(0.5))
    s = run_design(binary_design(1), 80, reps=4, config=config)
    assert s.row("phi[0,0]").true == pytest.approx(0.8)


def test_time_per_replication():
    s = run_design(binary_design(1), 100, reps=10)
    assert s.seconds_per_rep < 1.0
