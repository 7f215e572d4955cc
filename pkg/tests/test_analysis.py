import logging

import numpy as np
import pytest

from magic_coupling_studio import ConfigurationError, FitError, NumericalError
from magic_coupling_studio import analysis
from magic_coupling_studio.analysis import FitModel, FitSpace, fit_arrays, fit_scaling, run_sweep, sweep_row


def test_sweep_rows(yb_config):
    rows = run_sweep(yb_config(), (2, 6))
    assert [row.n_ions for row in rows] == [2, 3, 4, 5, 6]
    assert rows[0].j2_max == rows[0].j2_min
    assert all(row.j2_max >= row.j2_min > 0 for row in rows)
    assert set(rows[0].to_dict()) == {"n_ions", "j2_max", "j2_min", "local_field_edge", "resonance_gap"}


def test_sweep_is_deterministic(yb_config):
    first = [row.to_dict() for row in run_sweep(yb_config(), (2, 8))]
    second = [row.to_dict() for row in run_sweep(yb_config(), (2, 8))]
    assert first == second


def test_sweep_uses_the_configured_range(yb_config):
    rows = run_sweep(yb_config(n_range="3:5"))
    assert [row.n_ions for row in rows] == [3, 4, 5]


@pytest.mark.parametrize("n_range", [(1, 10), (2, 61), (9, 3)])
def test_sweep_range_limits(yb_config, n_range):
    with pytest.raises(ConfigurationError):
        run_sweep(yb_config(), n_range)


def test_sweep_skips_failing_rows(yb_config, monkeypatch, caplog):
    def failing(cfg):
        if cfg.n_ions == 4:
            raise NumericalError("no modes")
        return sweep_row(cfg)

    monkeypatch.setattr(analysis, "sweep_row", failing)
    with caplog.at_level(logging.WARNING, logger="magic_coupling_studio.analysis"):
        rows = run_sweep(yb_config(), (2, 6))
    assert [row.n_ions for row in rows] == [2, 3, 5, 6]
    assert "skipping N=4" in caplog.text


def test_two_ion_row(yb_config):
    row = sweep_row(yb_config(n_ions=2))
    cfg = yb_config(n_ions=2)
    assert row.resonance_gap == pytest.approx((2 - 3 ** 0.5) * cfg.omega_z, rel=1e-9)
    assert row.local_field_edge > 0


def _noisy(values, n, amplitude=1e-4):
    return values * (1.0 + amplitude * np.sin(n))


def test_power_law_fit_recovers_parameters():
    n = np.arange(2, 41, dtype=float)
    result = fit_arrays(n, _noisy(3.0 * n ** -0.5, n), FitModel.POWER_LAW, "synthetic")
    assert result.space is FitSpace.LINEAR
    assert result.a == pytest.approx(-0.5, abs=1e-3)
    assert result.c == pytest.approx(3.0, rel=3e-3)
    assert result.b is None
    assert result.n_points == 39
    assert result.residual < 2e-4
    assert all(u > 0 for u in result.param_uncertainties)
    np.testing.assert_allclose(result.predict([4.0]), [result.c * 4.0 ** result.a], rtol=1e-12)


def test_log_corrected_fit_recovers_parameters():
    n = np.arange(2, 41, dtype=float)
    y = _noisy(2.0 * n ** 0.18 * np.log(1.38 * n), n, amplitude=1e-6)
    result = fit_arrays(n, y, FitModel.LOG_CORRECTED, "synthetic")
    assert result.a == pytest.approx(0.18, abs=5e-3)
    assert result.b == pytest.approx(1.38, rel=2e-2)
    np.testing.assert_allclose(result.predict(n), y, rtol=1e-3)


@pytest.mark.parametrize("space", [FitSpace.LINEAR, FitSpace.LOG])
def test_clean_power_law_in_either_space(space):
    n = np.arange(2, 41, dtype=float)
    result = fit_arrays(n, _noisy(4.0e3 * n ** -1.2, n, amplitude=1e-7), FitModel.POWER_LAW, "exact", space)
    assert result.space is space
    assert result.a == pytest.approx(-1.2, abs=1e-5)
    assert result.c == pytest.approx(4.0e3, rel=1e-5)
    assert result.residual < 1e-6


def test_fit_spaces_weight_the_points_differently():
    # a curved log-log profile: the raw-value fit follows the small-N points
    n = np.arange(2, 41, dtype=float)
    y = n ** -1.0 * np.exp(-0.02 * n)
    linear = fit_arrays(n, y, FitModel.POWER_LAW, space=FitSpace.LINEAR)
    logarithmic = fit_arrays(n, y, FitModel.POWER_LAW, space=FitSpace.LOG)
    assert linear.a > logarithmic.a


def test_log_corrected_fit_needs_log_space():
    n = np.arange(2, 41, dtype=float)
    with pytest.raises(ConfigurationError) as info:
        fit_arrays(n, n ** 0.2 * np.log(1.4 * n), FitModel.LOG_CORRECTED, space=FitSpace.LINEAR)
    assert info.value.field == "fit_space"


def test_fit_needs_five_points():
    n = np.arange(2, 6, dtype=float)
    with pytest.raises(FitError, match="at least 5"):
        fit_arrays(n, n ** -0.5, FitModel.POWER_LAW)


def test_fit_rejects_non_positive_values():
    n = np.arange(2, 10, dtype=float)
    y = n ** -0.5
    y[3] = 0.0
    with pytest.raises(FitError, match="positive"):
        fit_arrays(n, y, FitModel.POWER_LAW)


def test_singular_covariance_raises(monkeypatch):
    monkeypatch.setattr(analysis, "curve_fit", lambda *args, **kwargs: (np.array([0.0, -0.5]), np.full((2, 2), np.inf)))
    n = np.arange(2, 10, dtype=float)
    with pytest.raises(FitError, match="singular covariance"):
        fit_arrays(n, n ** -0.5, FitModel.POWER_LAW)


def test_failed_fit_keeps_the_parameter_trace(monkeypatch):
    def diverging(function, x, y, p0, **kwargs):
        function(x, *p0)
        raise RuntimeError("Optimal parameters not found")

    monkeypatch.setattr(analysis, "curve_fit", diverging)
    n = np.arange(2, 10, dtype=float)
    with pytest.raises(FitError) as info:
        fit_arrays(n, n ** -0.5, FitModel.POWER_LAW)
    assert len(info.value.trace) == 1
    assert len(info.value.trace[0]) == 2


def test_unknown_column(yb_config):
    rows = run_sweep(yb_config(), (2, 7))
    with pytest.raises(ConfigurationError):
        fit_scaling(rows, "j3_max")


def test_coupling_exponents_do_not_depend_on_the_gradient(yb_config):
    strong = fit_scaling(run_sweep(yb_config(), (2, 12)), "j2_max")
    weak = fit_scaling(run_sweep(yb_config(dB_dz=19.0), (2, 12)), "j2_max")
    assert strong.a == pytest.approx(weak.a, abs=1e-8)
    assert strong.c / weak.c == pytest.approx((150.0 / 19.0) ** 2, rel=1e-6)
