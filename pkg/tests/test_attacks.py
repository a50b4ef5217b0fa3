import numpy as np
import pytest

from pwavep.attacks.addition import addition_init, point_addition_attack
from pwavep.attacks.gradient import attack_target, fgsm_attack, pgd_attack
from pwavep.attacks.spectral import run_attack, spectral_band_attack
from pwavep.core.config import AttackBudget
from pwavep.oracle.base import Oracle


@pytest.fixture
def oracle(small_model):
    return Oracle(small_model)


@pytest.fixture
def cloud(make_sphere):
    return make_sphere(64, seed=2, label=1)


def test_attack_target_precedence(oracle, make_sphere):
    labeled = make_sphere(32, label=3)
    unlabeled = make_sphere(32)
    assert attack_target(labeled, oracle, 0) == 0
    assert attack_target(labeled, oracle) == 3
    assert attack_target(unlabeled, oracle) == oracle.predict(unlabeled)


def test_pgd_stays_in_the_ball_and_raises_the_loss(cloud, oracle):
    budget = AttackBudget(epsilon=0.05, steps=5)
    attacked = pgd_attack(cloud, oracle, budget)

    assert np.abs(attacked.points - cloud.points).max() <= 0.05 + 1e-12
    np.testing.assert_array_equal(attacked.ids, cloud.ids)
    assert attacked.label == cloud.label
    clean_loss = oracle.evaluate(cloud, target=1, alpha=0.0, need_gradient=False).loss
    attacked_loss = oracle.evaluate(attacked, target=1, alpha=0.0, need_gradient=False).loss
    assert attacked_loss >= clean_loss


def test_pgd_defaults_to_a_step_of_two_and_a_half_eps_over_steps():
    assert AttackBudget(epsilon=0.04, steps=10).resolved_step_size == pytest.approx(0.01)
    assert AttackBudget(epsilon=0.04, step_size=0.002).resolved_step_size == 0.002


def test_fgsm_is_one_full_step(cloud, oracle):
    attacked = fgsm_attack(cloud, oracle, AttackBudget(epsilon=0.03))
    moved = np.abs(attacked.points - cloud.points)
    assert moved.max() <= 0.03 + 1e-12
    # a single sign step lands on the ball boundary or stays at the clean cloud
    assert np.all(np.isclose(moved, 0.03) | np.isclose(moved, 0.0))


def test_point_addition_appends_fresh_points(cloud, oracle):
    budget = AttackBudget(kind="point-addition", added_points=8, epsilon=0.05, steps=3, seed=1)
    attacked = point_addition_attack(cloud, oracle, budget)

    assert attacked.n == cloud.n + 8
    np.testing.assert_array_equal(attacked.points[: cloud.n], cloud.points)
    np.testing.assert_array_equal(attacked.ids[: cloud.n], cloud.ids)
    assert set(attacked.ids[cloud.n :]).isdisjoint(cloud.ids)

    init = addition_init(cloud, budget)
    assert np.abs(attacked.points[cloud.n :] - init).max() <= 0.05 + 1e-12


def test_point_addition_without_points_is_a_no_op(cloud, oracle):
    budget = AttackBudget(kind="point-addition", added_points=0)
    assert point_addition_attack(cloud, oracle, budget) is cloud


def test_spectral_band_attack_spends_the_whole_budget(make_sphere):
    cloud = make_sphere(100)
    budget = AttackBudget(kind="spectral-band", epsilon=0.5, band_index=8, band_count=10, seed=3)
    attacked = spectral_band_attack(cloud, budget, k=10)
    assert np.linalg.norm(attacked.points - cloud.points) == pytest.approx(0.5, abs=1e-9)
    np.testing.assert_array_equal(attacked.ids, cloud.ids)


def test_run_attack_dispatches(cloud, oracle):
    band = AttackBudget(kind="spectral-band", epsilon=0.2, band_index=2, band_count=4)
    np.testing.assert_array_equal(
        run_attack(cloud, None, band, k=8).points, spectral_band_attack(cloud, band, k=8).points
    )
    pgd = AttackBudget(steps=2)
    np.testing.assert_array_equal(run_attack(cloud, oracle, pgd).points, pgd_attack(cloud, oracle, pgd).points)
