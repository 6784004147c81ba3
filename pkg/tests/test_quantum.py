import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.errors import CapExceededError, ValidationError
from src.core.quantum import (
    DensityState, PovmFamily, generalized_ghz, ghz_qudit, joint_probabilities, maximally_mixed,
    product_state, random_povms, random_state, separable_mixture, singlet, spin_measurement,
    state_from_descriptor, werner
)
from src.core.scenario import behavior_average, dichotomic_scenario
from src.utils.serialization import dump_json, state_to_dict

from tests.conftest import tsirelson_povms


def planar_spin(theta):
    """cos(theta) X + sin(theta) Y as a two-outcome measurement"""
    return spin_measurement([np.cos(theta), np.sin(theta), 0.0])


class TestDensityState:

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            DensityState([2], [[0.5, 0.5], [0.0, 0.5]])

    def test_rejects_bad_trace(self):
        with pytest.raises(ValidationError):
            DensityState([2], np.eye(2))

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            DensityState([2], [[1.5, 0.0], [0.0, -0.5]])

    def test_rejects_shape(self):
        with pytest.raises(ValidationError):
            DensityState([2, 2], np.eye(2) / 2)

    def test_dimension_cap(self):
        with pytest.raises(CapExceededError):
            DensityState([2] * 9, np.eye(512) / 512)

    def test_matrix_read_only(self):
        state = singlet()
        with pytest.raises(ValueError):
            state.matrix[0, 0] = 1.0


class TestStates:

    def test_singlet(self):
        state = singlet()
        assert_allclose(state.purity(), 1.0)
        assert_allclose(state.reduced([0]), np.eye(2) / 2, atol=1e-12)

    def test_ghz_reduced(self):
        state = ghz_qudit(3, 3)
        assert state.dims == [3, 3, 3]
        assert_allclose(state.reduced([1]), np.eye(3) / 3, atol=1e-12)
        two_sites = state.reduced([0, 2])
        assert_allclose(np.trace(two_sites).real, 1.0)
        assert_allclose(two_sites[0, 0], 1 / 3)

    def test_generalized_ghz_components(self):
        assert generalized_ghz(3, np.pi / 4).product_components is None
        state = generalized_ghz(3, 0.0)
        weight, sites = state.product_components[0]
        assert weight == 1.0
        assert_allclose(sites[0], [[0, 0], [0, 1]])
        assert_allclose(state.matrix[-1, -1], 1.0)

    def test_werner(self):
        assert_allclose(werner(0.0).matrix, np.eye(4) / 4)
        with pytest.raises(ValidationError):
            werner(1.5)

    def test_separable_mixture(self):
        up = np.diag([1.0, 0.0])
        down = np.diag([0.0, 1.0])
        state = separable_mixture([0.5, 0.5], [[up, up], [down, down]])
        assert_allclose(np.diag(state.matrix).real, [0.5, 0.0, 0.0, 0.5])
        assert len(state.product_components) == 2

    def test_product_state(self):
        state = maximally_mixed([2, 3])
        assert_allclose(state.matrix, np.eye(6) / 6)
        assert state.family == "mixed"
        assert len(product_state([np.eye(2) / 2]).product_components) == 1


class TestJointProbabilities:

    def test_tsirelson(self, chsh_scenario, chsh_functional):
        behavior = joint_probabilities(singlet(), tsirelson_povms(chsh_scenario))
        assert_allclose(behavior_average(behavior, chsh_functional), 2 * np.sqrt(2), atol=1e-9)
        assert behavior.is_no_signaling()

    def test_mermin_on_ghz(self, mermin3):
        stack = np.stack([planar_spin(-np.pi / 6), planar_spin(np.pi / 3)])
        povms = PovmFamily(mermin3.scenario, [stack] * 3)
        behavior = joint_probabilities(ghz_qudit(3, 2), povms)
        assert_allclose(behavior_average(behavior, mermin3), 4.0, atol=1e-9)

    def test_random_behaviors_are_valid(self):
        rng = np.random.default_rng(11)
        scenario = dichotomic_scenario(3, 2)
        state = random_state([2, 2, 2], rng)
        behavior = joint_probabilities(state, random_povms(scenario, [2, 2, 2], rng))
        assert behavior.tables.min() >= -1e-12
        assert behavior.is_no_signaling(tol=1e-9)

    def test_dims_mismatch(self, chsh_scenario):
        with pytest.raises(ValidationError):
            joint_probabilities(ghz_qudit(2, 3), tsirelson_povms(chsh_scenario))


class TestPovmFamily:

    def test_incomplete(self, chsh_scenario):
        stack = np.stack([spin_measurement([0, 0, 1])] * 2)
        broken = stack.copy()
        broken[1, 1] = 0.0
        with pytest.raises(ValidationError):
            PovmFamily(chsh_scenario, [stack, broken])

    def test_not_positive(self, chsh_scenario):
        stack = np.stack([spin_measurement([0, 0, 1])] * 2)
        broken = stack.copy()
        broken[0] = [np.diag([1.5, 0.0]), np.diag([-0.5, 1.0])]
        with pytest.raises(ValidationError):
            PovmFamily(chsh_scenario, [stack, broken])

    def test_wrong_shape(self, chsh_scenario):
        with pytest.raises(ValidationError):
            PovmFamily(chsh_scenario, [np.stack([spin_measurement([0, 0, 1])])] * 2)

    def test_dims(self, chsh_scenario):
        assert tsirelson_povms(chsh_scenario).dims == [2, 2]


class TestDescriptors:

    def test_named_states(self):
        assert state_from_descriptor("singlet").family == "singlet"
        assert state_from_descriptor("ghz:N=3,d=2").dims == [2, 2, 2]
        assert state_from_descriptor("gghz:N=2,phi=0.3").params["phi"] == 0.3
        assert_allclose(state_from_descriptor("werner:p=0.5").params["p"], 0.5)
        assert state_from_descriptor("mixed:dims=2x3").dims == [2, 3]

    def test_seeded_states(self):
        first = state_from_descriptor("separable:dims=2x2,terms=2", seed=4)
        second = state_from_descriptor("separable:dims=2x2,terms=2", seed=4)
        assert np.array_equal(first.matrix, second.matrix)
        assert len(first.product_components) == 2

    def test_random_state_rank(self):
        state = state_from_descriptor("random:dims=2x2,rank=1", seed=1)
        assert_allclose(state.purity(), 1.0, atol=1e-12)
        assert state.family == "random"

    @pytest.mark.parametrize("text", ["bogus", "ghz:N=x", "werner:p=2", "ghz:N"])
    def test_bad_descriptors(self, text):
        with pytest.raises(ValidationError):
            state_from_descriptor(text)

    def test_json_file(self, tmp_path):
        path = tmp_path / "state.json"
        dump_json(state_to_dict(singlet()), str(path))
        state = state_from_descriptor(str(path))
        assert_allclose(state.matrix, singlet().matrix, atol=1e-15)
        assert state.family == "singlet"

    def test_json_file_with_wrong_family(self, tmp_path):
        path = tmp_path / "state.json"
        data = state_to_dict(singlet())
        data["family"] = "product"
        dump_json(data, str(path))
        state = state_from_descriptor(str(path))
        assert state.family is None
        assert state.product_components is None

    def test_json_file_with_ghz_family(self, tmp_path):
        path = tmp_path / "state.json"
        dump_json(state_to_dict(ghz_qudit(3, 2)), str(path))
        state = state_from_descriptor(str(path))
        assert state.family == "ghz"
        assert state.params == {"N": 3, "d": 2}
