import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.core.dilation import (
    NO_VIOLATION_FOUND, PSD_CERTIFIED, VIOLATED, DilationBounder, SourceOperator, check_dilation,
    covering_norm_interval, expansion_source_operator, lhv_certificate_from_tensor_positive,
    product_expectation, product_source_operator, separable_source_operator, solve_source_operator,
    tensor_positivity_check, upsilon_upper_bound
)
from src.core.errors import (
    CapExceededError, DilationError, TensorPositivityError, ValidationError
)
from src.core.lhv import lqhv_from_source, maximal_violation, total_variation
from src.core.quantum import (
    PAULI_Z, joint_probabilities, maximally_mixed, random_povms, random_product_state,
    random_state, singlet
)
from src.core.scenario import dichotomic_scenario, new_scenario
from src.utils.linalg import kron_all, random_hermitian, trace_norm

from tests.conftest import tsirelson_povms

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def signed_source():
    """Dilation of I/4 to copies (1, 2) with a negative eigenvalue"""
    state = maximally_mixed([2, 2])
    matrix = np.eye(8) / 8 + kron_all([PAULI_Z] * 3) / 4
    return SourceOperator(state, [1, 2], matrix)


class TestSourceOperators:

    def test_product_construction(self):
        rng = np.random.default_rng(1)
        state = random_product_state([2, 3], rng)
        source = separable_source_operator(state, [2, 2])
        assert source.factor_dims == [2, 2, 3, 3]
        passed, residual = check_dilation(source)
        assert passed and residual <= 1e-12
        assert source.is_psd()

    def test_product_helper(self):
        sites = [np.diag([0.75, 0.25]), np.eye(2) / 2]
        source = product_source_operator(sites, [3, 1])
        assert_allclose(np.trace(source.matrix).real, 1.0)
        assert source.matrix.shape == (16, 16)

    def test_expansion_of_product_is_product(self):
        rng = np.random.default_rng(2)
        state = random_product_state([2, 2], rng)
        expanded = expansion_source_operator(state, [2, 3])
        product = separable_source_operator(state, [2, 3])
        assert_allclose(expanded.matrix, product.matrix, atol=1e-12)

    @pytest.mark.parametrize("copies", [[2, 1], [2, 2], [1, 3]])
    def test_expansion_trace_norm_bound(self, copies):
        source = expansion_source_operator(singlet(), copies)
        assert check_dilation(source)[0]
        limit = np.prod([2 * s - 1 for s in copies])
        assert trace_norm(source.matrix) <= limit + 1e-9

    def test_expansion_three_sites(self):
        rng = np.random.default_rng(3)
        source = expansion_source_operator(random_state([2, 2, 2], rng), [2, 1, 2])
        assert check_dilation(source)[0]

    @pytest.mark.parametrize("copies", [[2, 2], [1, 3]])
    def test_solve(self, copies):
        source = solve_source_operator(singlet(), copies)
        passed, residual = check_dilation(source)
        assert passed and residual <= 1e-9

    def test_trace_norm_objective_does_not_increase(self):
        frobenius = solve_source_operator(singlet(), [2, 2])
        reweighted = solve_source_operator(singlet(), [2, 2], objective="min-trace-norm", iterations=5)
        assert check_dilation(reweighted)[0]
        assert trace_norm(reweighted.matrix) <= trace_norm(frobenius.matrix) + 1e-9

    def test_trivial_copies(self):
        source = solve_source_operator(singlet(), [1, 1])
        assert_allclose(source.matrix, singlet().matrix)

    def test_unknown_objective(self):
        with pytest.raises(ValidationError):
            solve_source_operator(singlet(), [2, 2], objective="min-rank")

    def test_perturbed_dilation_rejected(self):
        source = separable_source_operator(maximally_mixed([2, 2]), [1, 2])
        with pytest.raises(DilationError):
            SourceOperator(source.base_state, [1, 2],
                           source.matrix + 0.01 * kron_all([PAULI_Z, np.eye(2), np.eye(2)]))
        with pytest.raises(DilationError):
            SourceOperator(source.base_state, [1, 2], 2.0 * source.matrix)
        skew = np.zeros((8, 8), dtype=complex)
        skew[0, 1] = 0.1
        with pytest.raises(DilationError):
            SourceOperator(source.base_state, [1, 2], source.matrix + skew)

    def test_unvalidated_operator_reports_residual(self):
        state = maximally_mixed([2, 2])
        broken = SourceOperator(state, [1, 2], np.eye(8) / 4, validate=False)
        passed, residual = check_dilation(broken)
        assert not passed
        assert_allclose(residual, 0.25)

    def test_copied_cap(self):
        with pytest.raises(CapExceededError):
            expansion_source_operator(singlet(), [7, 7])

    def test_copies_mismatch(self):
        with pytest.raises(ValidationError):
            solve_source_operator(singlet(), [2, 2, 2])

    def test_product_needs_decomposition(self):
        with pytest.raises(ValidationError):
            separable_source_operator(singlet(), [2, 2])


class TestTensorPositivity:

    def test_psd(self):
        assert tensor_positivity_check(np.eye(4) / 4, [2, 2]).status == PSD_CERTIFIED

    def test_swap_is_tensor_positive(self):
        verdict = tensor_positivity_check(SWAP / 2, [2, 2], restarts=8)
        assert verdict.status == NO_VIOLATION_FOUND
        assert verdict.value >= -1e-8

    def test_negative_product_found(self):
        w = np.zeros((4, 4), dtype=complex)
        w[0, 0] = -1.0
        verdict = tensor_positivity_check(w, [2, 2], restarts=4)
        assert verdict.status == VIOLATED
        assert_allclose(verdict.value, -1.0, atol=1e-9)
        assert len(verdict.witness) == 2

    def test_signed_source(self):
        source = signed_source()
        verdict = tensor_positivity_check(source.matrix, source.factor_dims, restarts=8)
        assert verdict.status == VIOLATED
        assert_allclose(verdict.value, -0.125, atol=1e-9)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            tensor_positivity_check(np.array([[0, 1], [0, 0]]), [2])

    @pytest.mark.parametrize("matrix, dims", [(SWAP / 2, [2, 2]), (signed_source().matrix, [2, 2, 2])])
    def test_witness_reproduces_value(self, matrix, dims):
        verdict = tensor_positivity_check(matrix, dims, restarts=4)
        assert_allclose(product_expectation(matrix, dims, verdict.witness), verdict.value, atol=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_rank_one_reduction(self, seed):
        rng = np.random.default_rng(300 + seed)
        dims = [2, 3]
        w = random_hermitian(6, rng)
        factors = [random_hermitian(d, rng) for d in dims]
        expected = np.trace(w @ kron_all(factors)).real
        spectra = [np.linalg.eigh(x) for x in factors]
        mixture = 0.0
        for i in range(dims[0]):
            for j in range(dims[1]):
                vectors = [spectra[0][1][:, i], spectra[1][1][:, j]]
                mixture += spectra[0][0][i] * spectra[1][0][j] * product_expectation(w, dims, vectors)
        assert_allclose(mixture, expected, atol=1e-10)

    def test_deterministic(self):
        first = tensor_positivity_check(SWAP / 2, [2, 2], restarts=3, seed=4)
        second = tensor_positivity_check(SWAP / 2, [2, 2], restarts=3, seed=4)
        assert first.value == second.value


class TestCoveringNorm:

    def test_single_factor(self):
        interval = covering_norm_interval(np.diag([1.0, -1.0]), [2], restarts=4)
        assert_allclose(interval.lower, 2.0, atol=1e-9)
        assert_allclose(interval.upper, 2.0, atol=1e-9)

    def test_psd_is_exact(self):
        rng = np.random.default_rng(0)
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        w = g @ g.conj().T
        interval = covering_norm_interval(w, [2, 2])
        assert interval.lower == interval.upper
        assert_allclose(interval.upper, np.trace(w).real)
        assert interval.methods == ["psd"]

    def test_swap(self):
        interval = covering_norm_interval(SWAP / 2, [2, 2], restarts=8)
        assert interval.verdict.status == NO_VIOLATION_FOUND
        assert_allclose(interval.lower, 1.0, atol=1e-9)
        assert_allclose(interval.upper, 2.0, atol=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_interval_is_ordered(self, seed):
        rng = np.random.default_rng(seed)
        w = random_hermitian(4, rng)
        interval = covering_norm_interval(w, [2, 2], restarts=4, seed=seed)
        assert abs(np.trace(w).real) <= interval.lower + 1e-12
        assert interval.lower <= interval.upper + 1e-12
        assert_allclose(interval.upper, trace_norm(w))

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(100))
    def test_interval_is_ordered_three_factors(self, seed):
        rng = np.random.default_rng(1000 + seed)
        w = random_hermitian(8, rng)
        interval = covering_norm_interval(w, [2, 2, 2], restarts=4, seed=seed)
        assert abs(np.trace(w).real) <= interval.lower + 1e-12
        assert interval.lower <= interval.upper + 1e-12


class TestUpsilonBound:

    def test_product_state_bound_is_one(self):
        rng = np.random.default_rng(5)
        bound = upsilon_upper_bound(random_product_state([2, 2], rng), [2, 2],
                                    candidates=["product", "expansion"], restarts=4)
        assert_allclose(bound.value, 1.0, atol=1e-9)
        assert bound.best.interval.verdict.status == PSD_CERTIFIED

    def test_singlet_expansion(self):
        bound = upsilon_upper_bound(singlet(), [2, 2], candidates=["expansion"], restarts=4)
        assert np.sqrt(2) - 1e-3 <= bound.value <= 3.0 + 1e-9
        assert {row.site for row in bound.rows} == {0, 1}

    def test_singlet_trace_norm_candidate(self):
        bound = upsilon_upper_bound(singlet(), [2, 2], candidates=["trace-norm"], restarts=2)
        assert np.sqrt(2) - 1e-3 <= bound.value <= np.sqrt(3) + 1e-2
        assert bound.best.candidate == "trace-norm"

    def test_bound_dominates_violation(self, chsh_scenario):
        behavior = joint_probabilities(singlet(), tsirelson_povms(chsh_scenario))
        upsilon = maximal_violation(behavior).upsilon
        bound = upsilon_upper_bound(singlet(), [2, 2], candidates=["expansion", "solve"], restarts=4)
        assert upsilon <= bound.value + 1e-6

    def test_no_applicable_candidate(self):
        with pytest.raises(ValidationError):
            upsilon_upper_bound(singlet(), [2, 2], candidates=["product"], restarts=2)

    def test_unknown_candidate(self):
        with pytest.raises(ValidationError):
            upsilon_upper_bound(singlet(), [2, 2], candidates=["magic"], restarts=2)

    def test_progress_reaches_end(self):
        seen = []
        bounder = DilationBounder(candidates=["expansion"], restarts=2)
        bounder.set_progress_callback(lambda progress, message: seen.append(progress))
        bounder.bound(maximally_mixed([2, 2]), [2, 2])
        assert seen[-1] == 100

    def test_report_dict(self):
        bound = upsilon_upper_bound(maximally_mixed([2, 2]), [2, 2], candidates=["product"], restarts=2)
        data = bound.to_dict()
        assert_allclose(data["bound"], 1.0)
        assert data["best"]["tensor_positivity"] == PSD_CERTIFIED
        assert len(data["candidates"]) == 2


class TestLqhvFromSource:

    def test_marginal_identity(self, chsh_scenario):
        state = singlet()
        povms = tsirelson_povms(chsh_scenario)
        source = solve_source_operator(state, [2, 2])
        model = lqhv_from_source(source, povms)
        behavior = joint_probabilities(state, povms)
        assert_allclose(model.reconstruct().tables, behavior.tables, atol=1e-9, rtol=0)
        assert maximal_violation(behavior).upsilon <= total_variation(model) + 1e-8

    def test_copies_must_match_settings(self, chsh_scenario):
        source = solve_source_operator(singlet(), [2, 1])
        with pytest.raises(ValidationError):
            lqhv_from_source(source, tsirelson_povms(chsh_scenario))

    def test_certified_for_separable(self):
        rng = np.random.default_rng(6)
        state = random_product_state([2, 2], rng)
        scenario = dichotomic_scenario(2, 2)
        povms = random_povms(scenario, [2, 2], rng)
        certificate = lhv_certificate_from_tensor_positive(separable_source_operator(state, [2, 2]), povms)
        assert certificate.certified
        assert certificate.model.is_proper
        assert_allclose(certificate.model.reconstruct().tables,
                        joint_probabilities(state, povms).tables, atol=1e-9)
        assert certificate.to_dict()["certified_lhv"] is True

    def test_signed_source_is_refused(self):
        scenario = new_scenario(2, [1, 2], [[1, -1], [1, -1]])
        povms = random_povms(scenario, [2, 2], np.random.default_rng(0))
        with pytest.raises(TensorPositivityError):
            lhv_certificate_from_tensor_positive(signed_source(), povms, restarts=8)

    @pytest.mark.parametrize("seed", range(50))
    def test_marginal_identity_random_states(self, seed):
        rng = np.random.default_rng(200 + seed)
        scenario = dichotomic_scenario(2, 2)
        state = random_state([2, 2], rng)
        povms = random_povms(scenario, [2, 2], rng)
        model = lqhv_from_source(solve_source_operator(state, [2, 2]), povms)
        behavior = joint_probabilities(state, povms)
        assert_allclose(model.reconstruct().tables, behavior.tables, atol=1e-9, rtol=0)
        assert maximal_violation(behavior).upsilon <= total_variation(model) + 1e-8
