import json

import numpy as np
import pytest

from instances import random_instance, random_profile, symmetric_pair
from qvipower import GameInstance, analyze, mapping_F, operator_constants
from qvipower.analysis import build_A, build_B, diagonal_dominance, estimate_delta, omega, sample_profile


def unit():
    return GameInstance(np.ones((1, 1, 1)), [[1.0]], [1.0], [1.0], ("RATE",))


def test_unit_instance_constants():
    rep = analyze(unit(), sample_count=10)
    assert rep.A.tolist() == [[1.0]] and rep.B.tolist() == [[1.0]]
    assert rep.L == pytest.approx(1.0, abs=1e-12)
    assert rep.lambda_min_Bsym == pytest.approx(1.0, abs=1e-12)
    assert rep.beta == pytest.approx(0.25, abs=1e-12)
    assert rep.Gamma == pytest.approx(4.0, abs=1e-12)
    assert rep.kappa == pytest.approx(4 / 17, abs=1e-12)
    assert rep.delta_hat == 0.0
    assert rep.uniqueness_certified and not rep.heuristic


def test_pair_matrices_hand_values():
    inst = symmetric_pair(0.2)
    np.testing.assert_allclose(build_A(inst), [[1.0, 0.2], [0.2, 1.0]])
    B = build_B(inst)
    np.testing.assert_allclose(B, [[1.0, -0.44], [-0.44, 1.0]])
    assert operator_constants(inst).B_positive_definite


def test_strong_coupling_not_pd():
    inst = symmetric_pair(0.5, role=("RATE", "EE"))
    np.testing.assert_allclose(build_B(inst)[0, 1], -1.25)
    rep = analyze(inst, sample_count=20)
    assert not rep.B_positive_definite and not rep.uniqueness_certified
    assert rep.Gamma is None and rep.kappa is None
    assert rep.lambda_min_Bsym == pytest.approx(-0.25)


def test_A_scales_with_inverse_noise_squared():
    rng = np.random.default_rng(20)
    inst = random_instance(rng, K=3, N=4)
    louder = GameInstance(inst.gain2, 2 * inst.noise2, inst.budget, inst.circuit, inst.role)
    np.testing.assert_allclose(build_A(louder), build_A(inst) / 4)


def test_report_identities():
    rng = np.random.default_rng(21)
    seen = 0
    for _ in range(40):
        c = operator_constants(random_instance(rng, cross=0.05))
        if not c.B_positive_definite:
            continue
        seen += 1
        assert c.Gamma * c.beta == pytest.approx(c.L, rel=1e-12)
        assert c.kappa * (1 + c.Gamma ** -2) == pytest.approx(c.beta, rel=1e-12)
        assert c.beta > 0
    assert seen > 10


def test_row_dominance_implies_pd():
    rng = np.random.default_rng(22)
    for _ in range(200):
        inst = random_instance(rng, cross=float(rng.uniform(0.01, 0.5)))
        row_ok, _ = diagonal_dominance(inst)
        if row_ok:
            assert operator_constants(inst).B_positive_definite


def test_weighted_dominance_validates_weights():
    with pytest.raises(ValueError):
        diagonal_dominance(symmetric_pair(0.1), w=[1.0, -1.0])
    assert diagonal_dominance(symmetric_pair(0.1), w=[1.0, 2.0]) == (True, True)


def test_rate_only_delta_is_zero():
    rng = np.random.default_rng(23)
    inst = random_instance(rng, K=3, N=3, roles=("RATE",) * 3)
    assert estimate_delta(inst, 50, seed=0) == 0.0
    np.testing.assert_array_equal(omega(inst, random_profile(rng, inst)), inst.budget)


def test_delta_sampling_is_seeded():
    rng = np.random.default_rng(24)
    inst = random_instance(rng, K=3, N=3, roles=("EE", "RATE", "EE"))
    assert estimate_delta(inst, 30, seed=5) == estimate_delta(inst, 30, seed=5)
    assert estimate_delta(inst, 30, seed=5) > 0


def test_sampled_profiles_feasible():
    rng = np.random.default_rng(25)
    inst = random_instance(rng, K=4, N=6)
    for _ in range(100):
        p = sample_profile(inst, rng)
        assert np.all(p >= 0) and np.all(p.sum(axis=1) <= inst.budget + 1e-12)


def test_monotone_and_lipschitz_on_samples():
    rng = np.random.default_rng(26)
    checked = 0
    while checked < 5:
        inst = random_instance(rng, cross=0.05)
        c = operator_constants(inst)
        if not c.B_positive_definite:
            continue
        checked += 1
        for _ in range(500):
            p, q = sample_profile(inst, rng), sample_profile(inst, rng)
            d = (p - q).ravel()
            dF = mapping_F(inst, p) - mapping_F(inst, q)
            assert d @ dF >= c.beta * (d @ d) - 1e-9
            assert np.linalg.norm(dF) <= c.L * np.linalg.norm(d) + 1e-9


def test_report_serializes():
    rep = analyze(symmetric_pair(0.2, role=("EE", "RATE")), sample_count=20)
    doc = json.loads(json.dumps(rep.to_dict()))
    np.testing.assert_allclose(doc["B"], [[1.0, -0.44], [-0.44, 1.0]])
    assert doc["heuristic"] is True and doc["sample_count"] == 20


def test_sample_count_must_be_positive():
    with pytest.raises(ValueError):
        analyze(unit(), sample_count=0)
