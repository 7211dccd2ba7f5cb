import json
import math

import numpy as np
import pytest

import drdcbf


def test_barrier_values():
    assert drdcbf.ellipse_h0([0.0, 0.0], [0.0, 0.0], [1.0, 4.0]) == pytest.approx(1.0)
    assert drdcbf.ellipse_h0([1.0, 0.0], [0.0, 0.0], [1.0, 4.0]) == pytest.approx(0.0)
    assert drdcbf.obstacle_h([3.0, 4.0], [0.0, 0.0], 2.0) == pytest.approx(21.0)
    assert drdcbf.geofence_h([0.15, 0.0, 1.0], 0.2) == pytest.approx(0.05)


def test_parameter_condition():
    ok = drdcbf.check_parameter_condition(gamma=0.1, epsilon=50.0, mu=0.06, beta=0.5, lambda_=2.0)
    assert ok["pass"]
    assert ok["threshold"] == pytest.approx(1.6)
    bad = drdcbf.check_parameter_condition(0.1, 50.0, 0.06, 0.5, 1.5)
    assert not bad["pass"]
    assert bad["slack"] == pytest.approx(-0.1)


def test_qp_filter_projects_onto_halfspace():
    inactive = drdcbf.qp_filter(np.array([1.0, 0.0]), np.array([1.0, 0.0]), 0.0)
    assert not inactive["active"]
    np.testing.assert_allclose(inactive["u"], [1.0, 0.0])

    active = drdcbf.qp_filter(np.array([-2.0, 1.0]), np.array([1.0, 0.0]), 1.0)
    assert active["active"]
    np.testing.assert_allclose(active["u"], [-1.0, 1.0])
    assert active["residual"] == pytest.approx(0.0, abs=1e-12)


def test_lemma_bound():
    for dim in (2, 3):
        r = drdcbf.lemma_bound(dim, 2000, seed=3)
        assert r["samples"] == 2000
        assert r["bound_violations"] == 0
        assert r["angle_violations"] == 0


def test_simulate_short_horizon():
    runs = drdcbf.simulate(drdcbf.bundled_scenario("unicycle_obstacle"), horizon=1.0)
    assert len(runs) == 1
    run = runs[0]
    assert len(run["t"]) == len(run["h"]) == 1001
    assert np.asarray(run["x"]).shape[0] == 1001
    assert min(run["h0"]) >= 0.0
    assert "unfiltered" in run
    assert math.isclose(run["min_h0"], min(run["h0"]))


def test_verify_returns_json():
    report = json.loads(drdcbf.verify(drdcbf.bundled_scenario("unicycle_ellipse")))
    assert report["pass"] is True
    assert report["suites"]


def test_config_error_is_value_error(tmp_path):
    cfg = json.loads(open(drdcbf.bundled_scenario("unicycle_ellipse")).read())
    cfg["drd"]["lambda"] = 1.5
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    with pytest.raises(ValueError, match=r"lambda >= gamma"):
        drdcbf.simulate(str(path), horizon=0.1)
    assert issubclass(drdcbf.ConfigError, ValueError)


def test_run_cli_exit_codes(tmp_path):
    code, out, _ = drdcbf.run_cli(["--help"])
    assert code == 0
    assert "simulate" in out
    assert drdcbf.run_cli(["launch"])[0] == 2
    code, _, err = drdcbf.run_cli(
        ["simulate", "--config", drdcbf.bundled_scenario("unicycle_ellipse"), "--horizon", "0.5",
         "--out", str(tmp_path)])
    assert code == 0, err
    assert (tmp_path / "unicycle_ellipse.csv").exists()
