import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from physlearn import perceptron as P
from physlearn import switch as S
from physlearn import thermo as T
from physlearn.core import RngStream


def test_energy_change_examples():
    assert T.trial_energy_change(1.0, 1, 2.0, 0.0) == 0.0
    assert T.trial_energy_change(1.0, 1, 2.0, -0.1) == pytest.approx(0.4)
    assert T.trial_energy_change(1.0, -1, 2.0, -0.1) == pytest.approx(-0.4)


def test_entropy_change_examples():
    assert T.trial_entropy_change(1.0, 1, 1.0, 0.0, 0.3) == 0.0
    assert T.trial_entropy_change(1.0, 1, 1.0, 2.0, 0.0) == 0.0
    assert T.trial_entropy_change(1.0, 1, 1.0, 2.0, -0.05) == pytest.approx(-0.1)


@given(st.floats(0.01, 5), st.floats(-5, 5), st.floats(-0.5, 0.5))
def test_entropy_proportional_to_beta(beta, A, d):
    assert T.trial_entropy_change(1.0, 1, 2 * beta, A, d) == pytest.approx(
        2 * T.trial_entropy_change(1.0, 1, beta, A, d))


def test_ledger_rows_and_quantum_tag(tmp_path):
    led = T.ThermoLedger(2.0)
    assert T.ledger_step(led, 1.0, 1, 1.0, 1.0, 0.5, 0.0) == (0.0, 0.0, 0.0, 0.0)
    row = T.ledger_step(led, 1.0, -1, 1.0, 1.0, 0.5, -0.1)
    assert row[3] == pytest.approx(row[1] - row[2] / 2.0, abs=1e-15)
    assert len(led) == 2
    led.to_csv(tmp_path / "l.csv")
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == "trial,d_eps,d_energy,d_entropy,d_free"
    q = T.ThermoLedger(None)
    assert math.isnan(T.ledger_step(q, 1.0, 1, 1.0, 1.0, 0.5, -0.1)[3])
    with pytest.raises(ValueError):
        T.ThermoLedger(0.0)


def test_ledger_energy_tracks_error_ratio():
    _, rec = P.train_not(epochs=200, rng=RngStream(2))
    led = T.ThermoLedger(1.0)
    for k in range(len(rec)):
        n_T = P.NOT_DATA[rec.datum[k]][1]
        T.ledger_step(led, 1.0, n_T, 1.5, 1.0, rec.activation[k], rec.eps_after[k] - rec.eps_before[k])
    rows = led.as_array()
    np.testing.assert_allclose(np.abs(rows[:, 1]), 2 * 1.0 * 1.5 * np.abs(rows[:, 0]), rtol=1e-12)


def test_jackknife_matches_plain_stderr():
    x = RngStream(1).generator().standard_normal(5000)
    assert T.jackknife_mean(x) == pytest.approx(x.std(ddof=1) / math.sqrt(x.size), rel=0.05)


def test_jarzynski_constant_protocol():
    res = T.jarzynski_check(T.linear_protocol(0.2, 0.2, 1.0), 20.0, 1.0, 500, 0.01, RngStream(0))
    assert res.lhs == 1.0 and res.rhs == 1.0 and res.delta_F == 0.0


def test_jarzynski_free_energy_oracle():
    res = T.jarzynski_check(T.linear_protocol(0.0, 0.5, 1.0), 20.0, 1.0, 200, 0.01, RngStream(0))
    assert res.delta_F == pytest.approx(-0.334741095934018565, abs=1e-9)


def test_jarzynski_slow_ramp_and_second_law():
    slow = T.jarzynski_check(T.linear_protocol(0.0, 0.1, 20.0), 10.0, 20.0, 4000, 0.01, RngStream(3))
    assert abs(slow.z_score) < 4
    assert slow.mean_work >= slow.delta_F - 3 * 0.01
    fast = T.jarzynski_check(T.linear_protocol(0.0, 0.5, 0.5), 10.0, 0.5, 4000, 0.01, RngStream(4))
    assert fast.mean_work > fast.delta_F
    # the slow protocol dissipates less
    assert slow.mean_work - slow.delta_F < fast.mean_work - fast.delta_F


def test_two_state_fluctuation_relation_long_ramp():
    # in the long-ramp limit the realised energy change averages to E0 (nu - mu)/(nu + mu)
    mu, nu, E0, tau = 1.0, 3.0, 1.0, 100.0
    sched = S.RateSchedule.linear_ramp(mu, nu, tau)
    res = S.sample_ensemble(sched, tau, 20000, RngStream(8))
    dE = E0 * (res["n"] - res["n0"]) / 2
    target = S.mean_energy_change_finite(mu, nu, E0, tau)
    assert abs(dE.mean() - target) < 3 * dE.std() / math.sqrt(dE.size)
    assert target == pytest.approx(S.mean_work(mu, nu, E0), rel=0.01)
