import numpy as np

from fdqpt import validation


def test_small_run_is_clean():
    report = validation.run(seed=7, draws=40)
    assert report.ok, report.failures[:3]
    assert set(report.max_error) == {
        "floquet.xi_eff", "floquet.n_eff", "floquet.fidelity", "criticality.closure",
        "criticality.echo_min", "dynamics.amplitude", "topology.total_phase", "bloch.trajectory",
    }


def test_draws_replay_individually():
    a = validation.random_draw(11, 5)
    b = validation.random_draw(11, 5)
    assert a.params == b.params and a.k == b.k
    np.testing.assert_array_equal(a.times, b.times)
    assert validation.random_draw(11, 6).k != a.k


def test_breach_is_reported_with_draw_and_seed(monkeypatch):
    monkeypatch.setattr(validation, "ORACLE_TOL", 0.0)
    report = validation.run(seed=3, draws=2)
    assert not report.ok
    f = report.failures[0]
    assert f.seed == 3 and f.draw in (0, 1) and f.tol == 0.0 and f.error > 0
    doc = report.as_dict()
    assert doc["ok"] is False and doc["failures"][0]["module"] == f.module
