import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.bounds import (
    BoundContext, bound_bipartite, bound_equal_settings, bound_equal_settings_relaxed,
    bound_general, bound_generalized_ghz, bound_ghz_qudit, bound_ghz_qudit_relaxed, bound_singlet,
    bound_tripartite, bound_tripartite_equal_dims, compare, prior_bipartite_bounds,
    settings_growth_threshold, universal_envelope
)
from src.core.errors import ValidationError
from src.core.lhv import maximal_violation
from src.core.quantum import joint_probabilities, random_povms, random_state, singlet
from src.core.scenario import dichotomic_scenario

GRID = [(n, s, d) for n in range(2, 5) for s in range(1, 5) for d in range(2, 6)]


def chsh_context(family=None):
    return BoundContext(2, [2, 2], [2, 2], [2, 2], family=family)


class TestCatalog:

    def test_examples(self):
        assert bound_general([2, 3, 4], [2, 2, 3]) == 13
        assert universal_envelope(3, 2) == 9
        assert bound_equal_settings([2, 2, 2], 3, 2) == 9
        assert bound_equal_settings_relaxed([2, 2, 2], 3, 2) == 13
        assert bound_bipartite(3, 5, 4, 10) == 5
        assert bound_tripartite(2, 2, 2, 2) == 9
        assert bound_tripartite_equal_dims(2, 2) == (9, 13)
        assert bound_tripartite_equal_dims(1, 3) == (1, 1)
        assert bound_ghz_qudit(3, 2, 2) == 5
        assert bound_ghz_qudit(2, 3, 2) == 3
        assert bound_ghz_qudit_relaxed(3, 2, 2) == 5

    def test_integer_results_are_exact(self):
        assert isinstance(bound_general([2, 2], [2, 2]), int)
        assert isinstance(universal_envelope(5, 3), int)
        assert universal_envelope(20, 4) == 7 ** 19

    def test_singlet(self):
        assert_allclose(bound_singlet(2), math.sqrt(3))
        assert_allclose(bound_singlet(7), math.sqrt(3))
        with pytest.raises(ValidationError):
            bound_singlet(1)

    def test_generalized_ghz(self):
        assert_allclose(bound_generalized_ghz(3, math.pi / 4), 5.0)
        assert_allclose(bound_generalized_ghz(3, 0.0), 1.0)
        assert_allclose(bound_generalized_ghz(2, math.pi / 12), 2.0)

    def test_prior_bounds(self):
        prior = prior_bipartite_bounds(2, 2, n_settings=2, d=2)
        assert_allclose(prior["bound_i"], 4.564)
        assert_allclose(prior["bound_ii"], 21.256)
        assert prior["estimate_jp"] == 2
        other = prior_bipartite_bounds(3, 2)
        assert other["bound_i"] is None
        assert_allclose(other["bound_ii"], 32.384)
        assert other["estimate_jp"] is None

    @pytest.mark.parametrize("d, expected", [(16, 2), (10 ** 4, 6), (1, 1), (17, 2), (81, 2), (82, 3)])
    def test_settings_growth_threshold(self, d, expected):
        assert settings_growth_threshold(d) == expected

    def test_threshold_is_smallest(self):
        for d in range(1, 2000):
            s = settings_growth_threshold(d)
            assert (2 * s - 1) ** 4 >= d
            assert s == 1 or (2 * s - 3) ** 4 < d

    @pytest.mark.parametrize("call", [
        lambda: bound_general([2], [2, 2]),
        lambda: bound_general([], []),
        lambda: bound_bipartite(0, 2, 2, 2),
        lambda: bound_ghz_qudit(1, 2, 2),
        lambda: bound_equal_settings([2, 2], 3, 2),
        lambda: universal_envelope(2, 2.5),
    ])
    def test_validation(self, call):
        with pytest.raises(ValidationError):
            call()


class TestCatalogIdentities:

    @pytest.mark.parametrize("n, s, d", GRID)
    def test_relaxed_equals_general(self, n, s, d):
        assert bound_equal_settings_relaxed([d] * n, n, s) == bound_general([d] * n, [s] * n)

    @pytest.mark.parametrize("n, s, d", GRID)
    def test_tight_below_relaxed(self, n, s, d):
        assert bound_equal_settings([d] * n, n, s) <= bound_equal_settings_relaxed([d] * n, n, s)
        assert bound_equal_settings([d] * n, n, s) <= universal_envelope(n, s)

    @pytest.mark.parametrize("n, s, d", GRID)
    def test_ghz_below_equal_settings(self, n, s, d):
        assert bound_ghz_qudit(n, d, s) <= bound_equal_settings([d] * n, n, s)
        assert bound_ghz_qudit(n, d, s) <= bound_ghz_qudit_relaxed(n, d, s)

    @pytest.mark.parametrize("s1, s2, d1, d2", [(1, 3, 2, 4), (2, 2, 2, 2), (4, 3, 5, 6), (5, 5, 2, 3)])
    def test_bipartite_is_general(self, s1, s2, d1, d2):
        assert bound_bipartite(s1, s2, d1, d2) == bound_general([d1, d2], [s1, s2])

    @pytest.mark.parametrize("s, d", [(s, d) for s in range(1, 5) for d in range(2, 6)])
    def test_tripartite_forms(self, s, d):
        tight, relaxed = bound_tripartite_equal_dims(s, d)
        assert tight == bound_tripartite(s, d, d, d) == bound_equal_settings([d] * 3, 3, s)
        assert tight <= relaxed


class TestCompare:

    def test_chsh_entries(self):
        report = compare(chsh_context("singlet"), math.sqrt(2))
        expected = {
            "general": 3.0, "universal-envelope": 3.0, "equal-settings": 3.0,
            "equal-settings-relaxed": 3.0, "bipartite": 3.0, "dichotomic-2x2": math.sqrt(2),
            "prior-dichotomic": 4.564, "prior-outcomes": 21.256, "singlet": math.sqrt(3),
        }
        for name, value in expected.items():
            assert_allclose(report.entry(name).value, value, err_msg=name)
            assert report.entry(name).applicable
        assert not report.entry("estimate-min-s-d").applicable
        assert not report.entry("singlet-correlation").applicable
        assert report.all_pass
        assert_allclose(report.applicable_minimum(), math.sqrt(2))

    def test_classical_value_passes(self):
        assert compare(chsh_context(), 1.0).all_pass

    def test_large_value_fails(self):
        report = compare(chsh_context(), 10.0)
        assert not report.all_pass
        names = {e.name for e in report.failures}
        assert {"general", "bipartite", "dichotomic-2x2", "prior-dichotomic"} <= names
        assert "prior-outcomes" not in names
        assert "estimate-min-s-d" not in names

    def test_no_violation_value(self):
        report = compare(chsh_context())
        assert report.all_pass
        assert report.to_dict()["violation_value"] is None

    def test_ghz_context(self):
        context = BoundContext(3, [2, 2, 2], [2, 2, 2], [2, 2, 2], family="ghz", params={"N": 3, "d": 2})
        report = compare(context, 2.0)
        assert report.entry("ghz-qudit").value == 5.0
        assert report.entry("tripartite").value == 9.0
        assert report.applicable_minimum() == 5.0
        assert report.all_pass

    def test_separable_context(self):
        report = compare(BoundContext(2, [2, 2], [2, 2], [2, 2], family="mixed"), 1.5)
        assert not report.all_pass
        assert [e.name for e in report.failures] == ["dichotomic-2x2", "separable"]

    def test_from_state(self):
        context = BoundContext.from_state(singlet(), dichotomic_scenario(2, 2))
        assert context.family == "singlet"
        assert context.outcome_counts == [2, 2]

    def test_rows(self):
        rows = compare(chsh_context()).to_rows()
        assert rows[0] == ["general", "1+2^(N-1)[min{prod S/max S, prod d/max d}-1]", "3.000000", "true"]
        assert all(len(row) == 4 for row in rows)

    def test_missing_entry(self):
        with pytest.raises(KeyError):
            compare(chsh_context()).entry("tripartite")

    def test_context_validation(self):
        with pytest.raises(ValidationError):
            BoundContext(2, [2], [2, 2])


@pytest.mark.slow
@pytest.mark.parametrize("dims, n_settings", [([2, 2], 2), ([3, 3], 2), ([3, 3], 3), ([2, 2, 2], 2)])
@pytest.mark.parametrize("seed", range(10))
def test_catalog_dominates_random_behaviors(dims, n_settings, seed):
    rng = np.random.default_rng(seed)
    n = len(dims)
    scenario = dichotomic_scenario(n, n_settings)
    state = random_state(dims, rng)
    envelope = universal_envelope(n, n_settings)
    general = bound_general(dims, [n_settings] * n)
    for _ in range(10):
        upsilon = maximal_violation(joint_probabilities(state, random_povms(scenario, dims, rng))).upsilon
        assert upsilon <= envelope + 1e-6
        assert upsilon <= general + 1e-6
