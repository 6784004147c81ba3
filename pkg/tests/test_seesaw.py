import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.bounds import bound_generalized_ghz, bound_ghz_qudit, bound_singlet
from src.core.errors import ValidationError
from src.core.lhv import maximal_violation
from src.core.quantum import generalized_ghz, ghz_qudit, joint_probabilities, maximally_mixed, singlet
from src.core.scenario import BellFunctional, behavior_average, dichotomic_scenario, mermin
from src.core.seesaw import SeesawOptimizer, seesaw_optimize


def random_functional(n_parties, n_settings, seed):
    """Gaussian coefficients on the +-1 scenario"""
    scenario = dichotomic_scenario(n_parties, n_settings)
    return BellFunctional.from_array(scenario, np.random.default_rng(seed).standard_normal(scenario.table_shape))


class TestSeesaw:

    def test_chsh_on_singlet(self, chsh_functional):
        povms, value = seesaw_optimize(singlet(), chsh_functional, restarts=32, seed=0)
        assert value >= 2 * np.sqrt(2) - 1e-3
        assert value <= 2 * np.sqrt(2) + 1e-9
        behavior = joint_probabilities(singlet(), povms)
        assert_allclose(behavior_average(behavior, chsh_functional), value, atol=1e-9)

    def test_upsilon_of_optimized_behavior(self, chsh_functional):
        povms, _ = seesaw_optimize(singlet(), chsh_functional, restarts=32, seed=0)
        upsilon = maximal_violation(joint_probabilities(singlet(), povms)).upsilon
        assert np.sqrt(2) - 1e-3 <= upsilon <= np.sqrt(2) + 1e-6

    def test_mermin_on_ghz(self, mermin3):
        _, value = seesaw_optimize(ghz_qudit(3, 2), mermin3, restarts=32, seed=0)
        assert value >= 4.0 - 1e-3

    def test_history_is_monotone(self, chsh_functional):
        result = SeesawOptimizer(restarts=4, seed=5).optimize(singlet(), chsh_functional)
        assert np.all(np.diff(result.history) >= -1e-10)
        assert result.value == max(result.restart_values)
        assert len(result.restart_values) == 4

    @pytest.mark.parametrize("seed", range(4))
    def test_value_is_attained(self, mermin3, seed):
        state = ghz_qudit(3, 2)
        result = SeesawOptimizer(restarts=2, seed=seed).optimize(state, mermin3)
        assert_allclose(behavior_average(joint_probabilities(state, result.povms), mermin3), result.value,
                        atol=1e-12, rtol=0)

    def test_deterministic_for_seed(self, chsh_functional):
        first = SeesawOptimizer(restarts=3, seed=9).optimize(singlet(), chsh_functional)
        second = SeesawOptimizer(restarts=3, seed=9).optimize(singlet(), chsh_functional)
        assert first.value == second.value
        for a, b in zip(first.povms.elements, second.povms.elements):
            assert np.array_equal(a, b)

    def test_threads_do_not_change_result(self, chsh_functional):
        serial = SeesawOptimizer(restarts=4, seed=2, threads=1).optimize(singlet(), chsh_functional)
        pooled = SeesawOptimizer(restarts=4, seed=2, threads=2).optimize(singlet(), chsh_functional)
        assert serial.restart_values == pooled.restart_values
        assert serial.value == pooled.value

    def test_separable_state_stays_classical(self, chsh_functional):
        _, value = seesaw_optimize(maximally_mixed([2, 2]), chsh_functional, restarts=4, seed=0)
        assert abs(value) <= 2.0 + 1e-9

    def test_progress_callback(self, chsh_functional):
        seen = []
        optimizer = SeesawOptimizer(restarts=3, seed=0)
        optimizer.set_progress_callback(lambda progress, message: seen.append(progress))
        optimizer.optimize(singlet(), chsh_functional)
        assert seen[-1] == 100

    def test_party_mismatch(self, mermin3):
        with pytest.raises(ValidationError):
            seesaw_optimize(singlet(), mermin3, restarts=1)


class TestCatalogAgainstSeesaw:

    @pytest.mark.parametrize("n_settings", [2, 3])
    def test_singlet_random_functionals(self, n_settings):
        for seed in range(3):
            functional = random_functional(2, n_settings, seed)
            povms, _ = seesaw_optimize(singlet(), functional, restarts=4, seed=seed)
            upsilon = maximal_violation(joint_probabilities(singlet(), povms)).upsilon
            assert upsilon <= bound_singlet(n_settings) + 1e-6

    @pytest.mark.slow
    @pytest.mark.parametrize("n, d, s", [(n, d, s) for n in (2, 3) for d in (2, 3) for s in (2, 3)])
    def test_ghz_qudit(self, n, d, s):
        state = ghz_qudit(n, d)
        functional = mermin(n) if s == 2 else random_functional(n, s, 10 * n + d)
        povms, _ = seesaw_optimize(state, functional, restarts=4, seed=0)
        upsilon = maximal_violation(joint_probabilities(state, povms)).upsilon
        assert upsilon <= bound_ghz_qudit(n, d, s) + 1e-6

    @pytest.mark.slow
    @pytest.mark.parametrize("n, s", [(2, 2), (2, 3), (3, 2), (3, 3)])
    @pytest.mark.parametrize("phi", np.linspace(0.0, np.pi / 2, 8))
    def test_generalized_ghz(self, n, s, phi):
        state = generalized_ghz(n, phi)
        functional = mermin(n) if s == 2 else random_functional(n, s, 7 * n)
        povms, _ = seesaw_optimize(state, functional, restarts=4, seed=0)
        upsilon = maximal_violation(joint_probabilities(state, povms)).upsilon
        assert upsilon <= bound_generalized_ghz(n, phi) + 1e-6
