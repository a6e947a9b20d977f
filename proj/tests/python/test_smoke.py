import math
from pathlib import Path

import numpy as np
import pytest

import spinsim

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_reference_config_matches_builtin_model():
    loaded = spinsim.load_config(CONFIGS / "reference.json")
    builtin = spinsim.reference_model()
    np.testing.assert_array_equal(loaded.base_inertia, builtin.base_inertia)
    assert loaded.target_mass == 200.0
    assert loaded.servicer_mass == pytest.approx(164.0)


def test_invalid_config_raises_validation_error():
    with pytest.raises(spinsim.ValidationError, match="base.inertia_kgm2"):
        spinsim.load_config(CONFIGS / "bad.json")


def test_rotation_matrix_half_turn():
    np.testing.assert_allclose(spinsim.quat_to_rotmat([1.0, 0.0, 0.0, 0.0]), np.diag([1.0, -1.0, -1.0]))


def test_planner_rate_branch():
    theta_i = np.zeros(6)
    theta_f = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    assert spinsim.plan_capture_trajectory(theta_i, theta_f, 1.0, 1e6) == pytest.approx(1.5)


def test_compound_inertia_is_symmetric_positive_definite():
    model = spinsim.reference_model()
    mt = spinsim.compound_inertia(model, model.theta_i)
    np.testing.assert_allclose(mt, mt.T, atol=1e-12)
    assert np.all(np.linalg.eigvalsh(mt) > 0)


def test_detumbling_only_run_transfers_momentum(tmp_path):
    model = spinsim.reference_model()
    result = spinsim.run_mission(model, phase="C")
    assert result.success
    assert result.constraint_violations == 0
    assert result.transfer_ratio == pytest.approx(1.0, abs=0.01)
    assert set(result.events) == {"capture_completes", "detumbling_starts", "detumbling_completes"}

    tel = result.telemetry
    assert tel["t"][0] == 0.0
    assert np.all(np.diff(tel["t"]) > 0)
    assert np.max(np.abs(tel["sigma"])) <= model.tau_r_max + 1e-12

    spinsim.write_outputs(tmp_path, model, result, plots=True)
    assert (tmp_path / "telemetry.csv").read_text().startswith("t,wrel_x")
    assert (tmp_path / "fig_momentum.svg").exists()
    assert "status: success" in spinsim.summary(model, result)


def test_short_run_reports_failure_instead_of_raising():
    model = spinsim.reference_model()
    model.duration = 2.0
    result = spinsim.run_mission(model)
    assert not result.success
    assert "duration elapsed" in result.failure
    assert not math.isnan(result.telemetry["V"][0])


def test_bad_phase_name():
    with pytest.raises(ValueError):
        spinsim.run_mission(spinsim.reference_model(), phase="D")
