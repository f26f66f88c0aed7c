import numpy as np
import pytest

from mpccert.certify import (
    Certificate,
    SlackAccumulator,
    alpha_asymptotic,
    alpha_from_slack,
    alpha_m_step,
    certificates_to_csv,
    rho,
    splice_control,
    update_acceptable,
)
from mpccert.errors import CertificateError, ConfigError


def test_alpha_m_step_basic():
    assert alpha_m_step(10.0, 4.0, 3.0) == pytest.approx(2.0)
    assert alpha_m_step(5.0, 5.0, 0.0) == 1.0
    with pytest.raises(ConfigError):
        alpha_m_step(5.0, 4.0, -1.0)


def test_two_step_degrees_at_reference_states(solver):
    # The quotient of value drop to paid cost after two planned steps.
    for x, expected in (([0.0, 1.0], 0.514376631), ([1.0, 0.0], 0.747027227)):
        sol = solver.solve(np.array(x), 3)
        v2 = solver.value_of(sol.trajectory[2], 3)
        cost = float(sol.stage_costs[0] + sol.stage_costs[1])
        assert alpha_m_step(sol.value, v2, cost) == pytest.approx(expected, abs=1e-8)


def test_rho_identity_with_alpha():
    rng = np.random.default_rng(3)
    for _ in range(200):
        v0, drop, cost = rng.uniform(0.5, 10.0, size=3)
        alpha_bar = rng.uniform(0.0, 1.0)
        v1 = v0 - drop
        r = rho(v0, v1, cost, alpha_bar)
        a = alpha_m_step(v0, v1, cost)
        assert r == pytest.approx(cost * (a - alpha_bar), rel=1e-12)
    with pytest.raises(ConfigError):
        rho(1.0, 0.5, -0.1, 0.0)


def test_certificate_build_consistency():
    cert = Certificate.build(
        n=2, sigma=5, m=3, v_before=9.0, v_after=4.0, cost_sum=4.0, alpha_bar=0.25
    )
    assert cert.alpha == pytest.approx(1.25)
    assert cert.rho == pytest.approx(5.0 - 1.0)


def test_slack_accumulator_history():
    acc = SlackAccumulator()
    assert acc.total == 0.0
    acc.add(0.5)
    acc.add(-0.2)
    acc.add(0.1)
    assert acc.total == pytest.approx(0.4)
    assert acc.values == pytest.approx([0.5, 0.3, 0.4])


def test_update_acceptable_threshold(solver):
    # Re-planning after one of two steps from (0,1): the replacement
    # certifies 0.5136..., so it passes at 0.5 and fails at 0.52.
    x = np.array([0.0, 1.0])
    sol = solver.solve(x, 3)
    sol2 = solver.solve(sol.trajectory[1], 3)
    end_value = solver.value_of(sol2.trajectory[1], 3)
    assert update_acceptable(sol, sol2, j=1, m=2, alpha_bar=0.5, end_value=end_value)
    assert not update_acceptable(sol, sol2, j=1, m=2, alpha_bar=0.52, end_value=end_value)


def test_update_acceptable_validates_offsets(solver):
    x = np.array([0.0, 1.0])
    sol = solver.solve(x, 3)
    sol2 = solver.solve(sol.trajectory[1], 3)
    with pytest.raises(ConfigError):
        update_acceptable(sol, sol2, j=0, m=2, alpha_bar=0.5, end_value=1.0)
    with pytest.raises(ConfigError):
        update_acceptable(sol, sol2, j=2, m=2, alpha_bar=0.5, end_value=1.0)
    with pytest.raises(ConfigError):
        update_acceptable(sol, sol2, j=1, m=6, alpha_bar=0.5, end_value=1.0)


def test_accepted_updates_preserve_window_inequality(solver, model):
    # Whenever the budget check accepts a replacement, the realized
    # two-step window still satisfies the descent inequality at the
    # same threshold.
    rng = np.random.default_rng(17)
    alpha_bar = 0.4
    accepted = 0
    for _ in range(200):
        x = rng.uniform(-2.0, 2.0, size=2)
        sol = solver.solve(x, 3)
        sol2 = solver.solve(sol.trajectory[1], 3)
        end_value = solver.value_of(sol2.trajectory[1], 3)
        if update_acceptable(sol, sol2, j=1, m=2, alpha_bar=alpha_bar, end_value=end_value):
            accepted += 1
            paid = float(sol.stage_costs[0] + sol2.stage_costs[0])
            assert sol.value - end_value >= alpha_bar * paid - 1e-10
    assert accepted > 100


def test_splice_control_reproduces_both_plans(solver, model):
    from mpccert.model import trajectory_cost

    rng = np.random.default_rng(29)
    for _ in range(200):
        x = rng.uniform(-2.0, 2.0, size=2)
        j = int(rng.integers(1, 3))
        sol = solver.solve(x, 3)
        sol2 = solver.solve(sol.trajectory[j], 3)
        controls = splice_control(sol, sol2, j)
        assert controls.shape == (j + 3, 1)
        _, states = trajectory_cost(model, x, controls)
        assert np.allclose(states[:j], sol.trajectory[:j], atol=1e-10)
        assert np.allclose(states[j:], sol2.trajectory, atol=1e-10)


def test_splice_control_rejects_mismatched_anchor(solver):
    sol = solver.solve(np.array([0.0, 1.0]), 3)
    other = solver.solve(np.array([0.5, 0.5]), 3)
    with pytest.raises(CertificateError) as err:
        splice_control(sol, other, 1)
    assert "anchor" in str(err.value)
    with pytest.raises(ConfigError):
        splice_control(sol, other, 0)


def test_alpha_from_slack():
    assert alpha_from_slack(10.0, 2.0, 0.0, 0.3) == pytest.approx(0.3)
    # v0 - v_end = 8, slack 4: the certified degree doubles.
    assert alpha_from_slack(10.0, 2.0, 4.0, 0.3) == pytest.approx(0.6)
    with pytest.raises(CertificateError):
        alpha_from_slack(10.0, 2.0, 8.0, 0.3)


def test_alpha_asymptotic():
    assert alpha_asymptotic(10.0, 5.0, 0.3) == pytest.approx(0.6)
    with pytest.raises(ConfigError):
        alpha_asymptotic(5.0, 5.0, 0.3)


def test_certificates_to_csv_format(tmp_path):
    certs = [
        Certificate.build(0, 0, 1, 5.0, 4.0, 2.0, 0.25),
        Certificate.build(1, 1, 2, 4.0, 1.0, 3.0, 0.25),
    ]
    acc = SlackAccumulator()
    for c in certs:
        acc.add(c.rho)
    path = tmp_path / "certs.csv"
    certificates_to_csv(certs, acc.values, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,sigma_n,m_n,v_before,v_after,cost_sum,alpha,rho,s_n"
    assert lines[1].startswith("0,0,1,5,4,2,0.5,0.5,")
    assert len(lines) == 3
    with pytest.raises(ConfigError):
        certificates_to_csv(certs, [0.0], path)
