import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import certified_mixed, pd_rate_game, random_instance, single, symmetric_pair
from qvipower import GameInstance, SolverConfig, iwfp, ncp_solve, ne_residual, spa_solve
from qvipower.errors import InvalidPrice
from qvipower.fractional import dinkelbach_zeta
from qvipower.model import effective_noise, is_feasible, uniform_profile
from qvipower.oracles import penalized_response_bisection
from qvipower.solvers import initial_step, penalized_response


@pytest.fixture(scope="module")
def certified():
    return certified_mixed(np.random.default_rng(30), 4)


def test_iwfp_single_link():
    inst = GameInstance(np.ones((1, 1, 2)), [[0.1, 0.3]], [1.0], [1.0], ("EE",))
    np.testing.assert_allclose(iwfp(inst, [0.0]), [[0.6, 0.4]])


def test_iwfp_price_above_channel_quality():
    assert iwfp(single(1.0, budget=10.0), [2.0]).tolist() == [[0.0]]


def test_iwfp_fixed_point():
    inst = symmetric_pair(0.2, role=("EE", "EE"), budget=3.0)
    gamma = np.array([0.3, 0.0])
    p = iwfp(inst, gamma, cfg=SolverConfig(inner_eps=1e-13))
    for k in range(2):
        zeta = effective_noise(inst, k, p)
        free = np.maximum(1 / gamma[k] - zeta, 0) if gamma[k] > 0 else None
        if free is not None and free.sum() < inst.budget[k]:
            expect = free
        else:
            from qvipower.waterfill import level_for_budget
            expect = level_for_budget(zeta, inst.budget[k]).power
        assert np.max(np.abs(p[k] - expect)) < 1e-8


@pytest.mark.parametrize("gamma", [[-0.1, 0.0], [0.0, 0.5], [0.1]])
def test_iwfp_rejects_bad_prices(gamma):
    inst = symmetric_pair(0.2, role=("EE", "RATE"))
    with pytest.raises(InvalidPrice):
        iwfp(inst, gamma)


def test_ncp_single_link_reaches_optimum():
    p, trace = ncp_solve(single(1.0, budget=10.0))
    assert trace.converged
    assert p[0, 0] == pytest.approx(math.e - 1, abs=1e-4)


def test_spa_single_link_reaches_optimum():
    p, trace = spa_solve(single(1.0, budget=10.0))
    assert trace.converged
    assert p[0, 0] == pytest.approx(math.e - 1, abs=1e-4)
    g = -trace.records[-1].phi[0]
    assert g < 1e-6 and abs(g) < 1e-4


def test_rate_only_game_reduces_to_iwfp():
    inst = pd_rate_game(np.random.default_rng(31), K=3, N=4)
    ref = iwfp(inst, np.zeros(3), cfg=SolverConfig(inner_eps=1e-12))
    for solve in (ncp_solve, spa_solve):
        p, trace = solve(inst)
        assert trace.converged
        np.testing.assert_allclose(p, ref, atol=1e-7)
        assert ne_residual(inst, p) < 1e-6
    _, trace = ncp_solve(inst)
    assert all(np.all(r.price == 0) for r in trace.records)
    assert trace.iterations == 1


def test_solvers_agree_on_certified_games(certified):
    for inst in certified:
        ps, ts = spa_solve(inst)
        pn, tn = ncp_solve(inst)
        assert ts.converged and tn.converged
        assert np.max(np.abs(ps - pn)) <= 1e-3 * np.max(np.abs(ps))
        assert ne_residual(inst, pn) < 1e-4


def test_trace_profiles_feasible(certified):
    for inst in certified[:2]:
        for solve in (ncp_solve, spa_solve):
            _, trace = solve(inst)
            assert all(is_feasible(inst, r.power, tol=1e-9) for r in trace.records)


def test_ncp_complementarity_at_termination(certified):
    for inst in certified:
        _, trace = ncp_solve(inst)
        last = trace.records[-1]
        ee = inst.ee_players
        assert np.max(np.abs(last.price * last.phi)) <= 1e-6
        assert np.all(last.price >= 0)
        assert np.all(last.phi[ee] >= -1e-4)


def test_spa_inner_kkt(certified):
    inst = certified[0]
    _, trace = spa_solve(inst)
    for rec in trace.records:
        for k in range(inst.K):
            zeta = effective_noise(inst, k, rec.power)
            active = rec.power[k] > 1e-9
            grad = 1.0 / (zeta + rec.power[k])
            level = rec.price[k] + rec.budget_multiplier[k]
            np.testing.assert_allclose(grad[active], level, rtol=1e-6)


def test_ne_residual_values():
    inst = single(1.0, budget=10.0)
    z = dinkelbach_zeta([1.0], 1.0, eps=1e-14).z_star
    assert ne_residual(inst, [z], eps=1e-14) < 1e-10
    rng = np.random.default_rng(32)
    pair = random_instance(rng, K=2, N=3)
    assert ne_residual(pair, uniform_profile(pair)) > 0


def test_fixed_step_overshoot_is_damped():
    p, trace = ncp_solve(single(1.0, budget=10.0), SolverConfig(step_rule="fixed", step=50.0))
    assert trace.converged
    assert trace.records[-1].step < 50.0
    assert p[0, 0] == pytest.approx(math.e - 1, abs=1e-4)


def test_step_rule_selection(certified):
    tau, rule = initial_step(certified[0], SolverConfig())
    assert rule == "kappa" and tau > 0
    _, rule = initial_step(symmetric_pair(0.5, role=("EE", "RATE")), SolverConfig())
    assert rule == "adaptive"
    assert initial_step(single(), SolverConfig(step_rule="fixed", step=0.3)) == (0.3, "fixed")


def test_outer_cap_reported():
    _, trace = ncp_solve(single(1.0, budget=10.0), SolverConfig(max_outer=2))
    assert not trace.converged and "cap" in trace.message
    assert trace.iterations == 3


@pytest.mark.parametrize("kwargs", [
    dict(outer_eps=0.0), dict(rho_growth=1.0), dict(step_rule="magic"), dict(step_rule="fixed"),
    dict(max_outer=0), dict(certify_samples=0),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_trace_csv_and_summary(certified):
    inst = certified[0]
    _, trace = ncp_solve(inst)
    rows = list(csv.reader(io.StringIO(trace.to_csv())))
    assert rows[0] == ["iter", "k", "sum_power_k", "rate_k", "ee_k", "gamma_k", "phi_k", "residual"]
    assert len(rows) == 1 + trace.iterations * inst.K
    summary = trace.summary()
    assert summary["converged"] is True and summary["iterations"] == trace.iterations
    assert summary["final_residual"] == trace.final_residual


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_penalized_response_matches_bisection(seed):
    rng = np.random.default_rng(seed)
    zeta = rng.uniform(0.05, 5.0, int(rng.integers(1, 8)))
    budget = float(rng.uniform(0.1, 10.0))
    omega = float(rng.uniform(0.0, 10.0))
    rho = float(5.0 ** rng.integers(0, 8))
    alpha = float(rng.uniform(0, 1)) if rng.uniform() < 0.3 else 0.0
    p, price, mult = penalized_response(zeta, budget, omega, rho, alpha)
    q, qprice, qmult = penalized_response_bisection(zeta, budget, omega, rho, alpha)
    np.testing.assert_allclose(p, q, atol=1e-8)
    assert price == pytest.approx(qprice, abs=1e-6 * max(1.0, rho))
    assert mult == pytest.approx(qmult, abs=1e-6 * max(1.0, rho))
