"""
Source operators (dilations of a state to S_n copies per site), tensor
positivity, covering-norm intervals and the dilation bound on the maximal
Bell violation
"""

import itertools

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import LinearOperator, lsqr

import bellbound_conf
from src.core.errors import (
    CapExceededError, DilationError, NonConvergenceError, TensorPositivityError, ValidationError
)
from src.core.lhv import lqhv_from_source
from src.utils.helpers import get_logger
from src.utils.linalg import (
    contract_factors, hermitian_part, is_hermitian, kron_all, min_eigenvalue,
    partial_trace, positive_projector, random_projector, random_unit_vector, trace_norm
)

logger = get_logger(__name__)

PSD_CERTIFIED = "PsdCertified"
NO_VIOLATION_FOUND = "NoViolationFound"
VIOLATED = "Violated"


def _copied_dims(site_dims, copies):
    """Factor dimensions of H_1^S_1 x ... x H_N^S_N in site-major order"""
    return [d for d, s in zip(site_dims, copies) for _ in range(s)]


def _check_copied_cap(site_dims, copies, cap=None):
    """Raise when the copied space is larger than the cap"""
    cap = cap or bellbound_conf.COPIED_DIM_CAP
    total = int(np.prod(_copied_dims(site_dims, copies)))
    if total > cap:
        raise CapExceededError(f"Copied space dimension {total} exceeds cap {cap}")
    return total


def _selections(copies):
    """Every setting selection (s_1, ..., s_N), 0-based"""
    return list(itertools.product(*[range(s) for s in copies]))


def _kept_factors(copies, selection):
    """Factor positions kept for a selection"""
    offsets = np.concatenate([[0], np.cumsum(copies)[:-1]]).astype(int)
    return [int(offsets[n] + s) for n, s in enumerate(selection)]


class SourceOperator:
    """Self-adjoint unit-trace dilation T of a state to S_n copies of each site"""

    def __init__(self, base_state, copies, matrix, validate=True, tol=None):
        """Store the dilation and (optionally) check every invariant"""
        if tol is None:
            tol = bellbound_conf.FEASIBILITY_TOL
        copies = [int(s) for s in copies]
        if len(copies) != base_state.n_parties or any(s < 1 for s in copies):
            raise ValidationError(f"Copies {copies} do not match a {base_state.n_parties}-party state")
        total = _check_copied_cap(base_state.dims, copies)
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (total, total):
            raise ValidationError(f"Source operator shape {matrix.shape} != ({total}, {total})")

        self.base_state = base_state
        self.site_dims = list(base_state.dims)
        self.copies = copies
        self.tol = tol

        if validate:
            if not is_hermitian(matrix, tol):
                raise DilationError("Source operator is not self-adjoint")
            trace = np.trace(matrix).real
            if abs(trace - 1.0) > tol:
                raise DilationError(f"Source operator trace is {trace:.12f}, expected 1")
            matrix = hermitian_part(matrix)
        self.matrix = matrix
        self.matrix.flags.writeable = False
        if validate:
            passed, residual = self.dilation_check()
            if not passed:
                raise DilationError(f"Dilation residual {residual:.3e} exceeds {tol:.1e}")

    @property
    def factor_dims(self):
        """Dimensions of the copied factors"""
        return _copied_dims(self.site_dims, self.copies)

    def dilation_check(self):
        """Max entrywise residual of every selection's partial trace against rho"""
        residual = 0.0
        rho = self.base_state.matrix
        for selection in _selections(self.copies):
            reduced = partial_trace(self.matrix, self.factor_dims, _kept_factors(self.copies, selection))
            residual = max(residual, float(np.max(np.abs(reduced - rho))))
        return residual <= self.tol, residual

    def is_psd(self):
        """Positive semidefiniteness within the PSD tolerance"""
        return min_eigenvalue(self.matrix) >= -bellbound_conf.PSD_TOL

    def __str__(self):
        """String representation"""
        return f"SourceOperator(dims={self.site_dims}, copies={self.copies})"


def check_dilation(source):
    """Return (passed, max residual) of the dilation property"""
    return source.dilation_check()


def product_source_operator(site_states, copies, base_state=None):
    """T = (x)_n rho_n^(x)S_n for a product state"""
    from src.core.quantum import product_state

    site_states = [np.array(s, dtype=complex) for s in site_states]
    if base_state is None:
        base_state = product_state(site_states)
    _check_copied_cap([s.shape[0] for s in site_states], copies)
    factors = [s for s, c in zip(site_states, copies) for _ in range(c)]
    return SourceOperator(base_state, copies, kron_all(factors))


def separable_source_operator(state, copies):
    """Mixture of product constructions over a state's known product decomposition"""
    if not state.product_components:
        raise ValidationError(f"{state} carries no product decomposition")
    _check_copied_cap(state.dims, copies)
    matrix = 0
    for weight, sites in state.product_components:
        factors = [np.asarray(s, dtype=complex) for s, c in zip(sites, copies) for _ in range(c)]
        matrix = matrix + weight * kron_all(factors)
    return SourceOperator(state, copies, matrix)


def _permute_factors(matrix, dims, order):
    """Reorder tensor factors: new factor i is old factor order[i]"""
    k = len(dims)
    t = np.asarray(matrix).reshape(list(dims) + list(dims))
    t = np.transpose(t, list(order) + [k + o for o in order])
    total = int(np.prod(dims))
    return t.reshape(total, total)


def _expand_site(matrix, dims, position, copies, sigma):
    """Apply X -> sum_k X_(k) x sigma^(S-1) - (S-1) tr(X) sigma^S to factor `position`"""
    if copies == 1:
        return matrix, dims
    d = dims[position]
    k_total = len(dims)
    new_dims = dims[:position] + [d] * copies + dims[position + 1:]
    padded = np.kron(matrix, kron_all([sigma] * (copies - 1)))
    padded_dims = dims + [d] * (copies - 1)

    result = 0
    for k in range(copies):
        # original factor goes to slot position + k, padding fills the other slots
        slots = list(range(position)) + [None] * copies + list(range(position + 1, k_total))
        pad = iter(range(k_total, k_total + copies - 1))
        for c in range(copies):
            slots[position + c] = position if c == k else next(pad)
        result = result + _permute_factors(padded, padded_dims, slots)

    traced = partial_trace(matrix, dims, [i for i in range(k_total) if i != position])
    traced_dims = dims[:position] + dims[position + 1:]
    filled = np.kron(traced, kron_all([sigma] * copies))
    filled_dims = traced_dims + [d] * copies
    slots = list(range(position)) + list(range(len(traced_dims), len(filled_dims))) \
        + list(range(position, len(traced_dims)))
    result = result - (copies - 1) * _permute_factors(filled, filled_dims, slots)
    return result, new_dims


def expansion_source_operator(state, copies, references=None):
    """Inclusion-exclusion dilation (x)_n Phi_n applied to rho

    Phi_n(X) = sum_k X at copy k with sigma_n elsewhere - (S_n - 1) tr(X) sigma_n^S_n.
    Each Phi_n is a signed sum of 2 S_n - 1 channels, so the trace norm of the
    result is at most prod_n (2 S_n - 1). sigma_n defaults to the reduced state.
    """
    copies = [int(s) for s in copies]
    _check_copied_cap(state.dims, copies)
    if references is None:
        references = [state.reduced([n]) for n in range(state.n_parties)]
    matrix = np.array(state.matrix)
    dims = list(state.dims)
    position = 0
    for n in range(state.n_parties):
        matrix, dims = _expand_site(matrix, dims, position, copies[n], np.asarray(references[n]))
        position += copies[n]
    return SourceOperator(state, copies, hermitian_part(matrix))


def _constraint_matrix(site_dims, copies):
    """Sparse 0/1 matrix mapping vec(T) to the stacked selection partial traces"""
    factor_dims = _copied_dims(site_dims, copies)
    total = int(np.prod(factor_dims))
    p = int(np.prod(site_dims))
    multi = np.array(np.unravel_index(np.arange(total), factor_dims))
    selections = _selections(copies)
    rows, cols = [], []
    for index, selection in enumerate(selections):
        keep = _kept_factors(copies, selection)
        traced = [k for k in range(len(factor_dims)) if k not in keep]
        kept_flat = np.ravel_multi_index(tuple(multi[keep]), site_dims)
        traced_flat = np.ravel_multi_index(tuple(multi[traced]), [factor_dims[k] for k in traced])
        groups = np.lexsort((kept_flat, traced_flat)).reshape(total // p, p)
        cols.append((groups[:, :, None] * total + groups[:, None, :]).ravel())
        kept = kept_flat[groups]
        rows.append(index * p * p + (kept[:, :, None] * p + kept[:, None, :]).ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    shape = (len(selections) * p * p, total * total)
    return csr_matrix((np.ones(rows.size), (rows, cols)), shape=shape)


def _lsqr(operator, rhs):
    """Minimum-norm least-squares solution, refined once"""
    x = lsqr(operator, rhs, atol=1e-15, btol=1e-15, conlim=1e12, iter_lim=20 * rhs.size + 1000)[0]
    correction = lsqr(operator, rhs - operator @ x, atol=1e-15, btol=1e-15, conlim=1e12,
                      iter_lim=20 * rhs.size + 1000)[0]
    return x + correction


def _min_frobenius(constraints, rhs, total):
    """Smallest Frobenius-norm T meeting the stacked constraints (A is real)"""
    real = _lsqr(constraints, rhs.real)
    imag = _lsqr(constraints, rhs.imag)
    return hermitian_part((real + 1j * imag).reshape(total, total))


def _weighted_min_norm(constraints, rhs, total, weights, vectors):
    """min tr[T W T] subject to the constraints, W = V diag(w) V^dagger

    Substituting T = Q^(-1/2) Z with Q(X) = (W X + X W)/2 turns this into a
    minimum-norm problem in Z, solved in real coordinates.
    """
    scale = np.sqrt(2.0 / (weights[:, None] + weights[None, :]))
    n_vec = total * total
    m = constraints.shape[0]

    def inverse_root(z):
        return vectors @ ((vectors.conj().T @ z @ vectors) * scale) @ vectors.conj().T

    def matvec(v):
        z = (v[:n_vec] + 1j * v[n_vec:]).reshape(total, total)
        y = constraints @ inverse_root(z).ravel()
        return np.concatenate([y.real, y.imag])

    def rmatvec(v):
        y = v[:m] + 1j * v[m:]
        z = inverse_root((constraints.T @ y).reshape(total, total))
        return np.concatenate([z.real.ravel(), z.imag.ravel()])

    operator = LinearOperator((2 * m, 2 * n_vec), matvec=matvec, rmatvec=rmatvec, dtype=float)
    z = _lsqr(operator, np.concatenate([rhs.real, rhs.imag]))
    z = (z[:n_vec] + 1j * z[n_vec:]).reshape(total, total)
    return hermitian_part(inverse_root(z))


def solve_source_operator(state, copies, objective="min-frobenius", iterations=None):
    """Construct a dilation by solving the linear partial-trace constraints

    objective 'min-frobenius' returns the least Frobenius-norm solution;
    'min-trace-norm' refines it by iteratively reweighted least squares and
    keeps the feasible iterate with the smallest trace norm.
    """
    copies = [int(s) for s in copies]
    if len(copies) != state.n_parties or any(s < 1 for s in copies):
        raise ValidationError(f"Copies {copies} do not match a {state.n_parties}-party state")
    total = _check_copied_cap(state.dims, copies)
    if all(s == 1 for s in copies):
        return SourceOperator(state, copies, state.matrix)
    if objective not in ("min-frobenius", "min-trace-norm"):
        raise ValidationError(f"Unknown objective '{objective}'")

    constraints = _constraint_matrix(state.dims, copies)
    rhs = np.tile(np.asarray(state.matrix).ravel(), len(_selections(copies)))
    matrix = _min_frobenius(constraints, rhs, total)
    if objective == "min-trace-norm":
        matrix = _reweighted_trace_norm(constraints, rhs, total, matrix,
                                        iterations or bellbound_conf.TRACE_NORM_ITERATIONS)

    residual = float(np.max(np.abs(constraints @ matrix.ravel() - rhs)))
    if residual > bellbound_conf.FEASIBILITY_TOL:
        raise NonConvergenceError(f"Source operator solve left residual {residual:.3e}")
    return SourceOperator(state, copies, matrix)


def _reweighted_trace_norm(constraints, rhs, total, start, iterations):
    """Iteratively reweighted least squares heuristic for the smallest trace norm"""
    best, best_norm = start, trace_norm(start)
    current = start
    values = np.linalg.eigvalsh(current)
    epsilon = max(1e-2 * float(np.max(np.abs(values))), 1e-8)
    for _ in range(iterations):
        values, vectors = np.linalg.eigh(current)
        weights = 1.0 / np.sqrt(values ** 2 + epsilon ** 2)
        current = _weighted_min_norm(constraints, rhs, total, weights, vectors)
        residual = float(np.max(np.abs(constraints @ current.ravel() - rhs)))
        norm = trace_norm(current)
        if residual <= bellbound_conf.FEASIBILITY_TOL and norm < best_norm:
            best, best_norm = current, norm
        epsilon = max(0.5 * epsilon, 1e-9)
    logger.debug(f"Reweighted trace norm: {trace_norm(start):.9f} -> {best_norm:.9f}")
    return best


class TensorPositivityVerdict:
    """Result of the tensor positivity test"""

    def __init__(self, status, value, witness=None):
        """Store status, attained product expectation and witness vectors"""
        self.status = status
        self.value = float(value)
        self.witness = witness

    def to_dict(self):
        """Report fields as a dict"""
        return {"status": self.status, "value": self.value}

    def __str__(self):
        """String representation"""
        return f"TensorPositivityVerdict({self.status}, value={self.value:.3e})"


def product_expectation(matrix, dims, vectors):
    """<phi_1 x ... x phi_m| W |phi_1 x ... x phi_m>"""
    effects = [np.outer(v, v.conj())[np.newaxis] for v in vectors]
    return float(contract_factors(matrix, dims, effects).real.ravel()[0])


def tensor_positivity_check(matrix, dims, restarts=None, seed=0, iteration_cap=None, threshold=None):
    """Tensor positivity test by PSD check, then alternating minimization over product vectors"""
    restarts = restarts or bellbound_conf.RESTARTS
    iteration_cap = iteration_cap or bellbound_conf.ITERATION_CAP
    threshold = threshold if threshold is not None else bellbound_conf.SWEEP_THRESHOLD
    matrix = np.asarray(matrix, dtype=complex)
    if not is_hermitian(matrix, 1e-9):
        raise ValidationError("Tensor positivity needs a self-adjoint operator")
    dims = [int(d) for d in dims]

    lowest = min_eigenvalue(matrix)
    if lowest >= -bellbound_conf.PSD_TOL:
        return TensorPositivityVerdict(PSD_CERTIFIED, lowest)

    best_value, best_vectors = None, None
    for restart in range(restarts):
        rng = np.random.default_rng([seed, restart])
        vectors = [random_unit_vector(d, rng) for d in dims]
        value = product_expectation(matrix, dims, vectors)
        for _ in range(iteration_cap):
            for i in range(len(dims)):
                effects = [None if j == i else np.outer(v, v.conj())[np.newaxis] for j, v in enumerate(vectors)]
                contracted = contract_factors(matrix, dims, effects).reshape(dims[i], dims[i])
                vectors[i] = np.linalg.eigh(hermitian_part(contracted))[1][:, 0]
            new_value = product_expectation(matrix, dims, vectors)
            change = value - new_value
            value = new_value
            if change < threshold:
                break
        if best_value is None or value < best_value:
            best_value, best_vectors = value, [v.copy() for v in vectors]

    if best_value < -bellbound_conf.VIOLATION_TOL:
        return TensorPositivityVerdict(VIOLATED, product_expectation(matrix, dims, best_vectors), best_vectors)
    return TensorPositivityVerdict(NO_VIOLATION_FOUND, best_value, best_vectors)


class CoveringInterval:
    """Certified interval [lower, upper] containing the covering norm"""

    def __init__(self, lower, upper, lower_witness, methods, verdict):
        """Store the interval"""
        self.lower = float(lower)
        self.upper = float(upper)
        self.lower_witness = lower_witness
        self.methods = methods
        self.verdict = verdict

    def to_dict(self):
        """Report fields as a dict"""
        return {"lower": self.lower, "upper": self.upper, "methods": list(self.methods),
                "tensor_positivity": self.verdict.status}

    def __str__(self):
        """String representation"""
        return f"CoveringInterval([{self.lower:.6f}, {self.upper:.6f}])"


def _split_sum(matrix, dims, projectors):
    """sum over the 2^m patterns (X_i or I - X_i) of |tr[W (Y_1 x ... x Y_m)]|"""
    effects = [np.stack([x, np.eye(x.shape[0]) - x]) for x in projectors]
    return float(np.abs(contract_factors(matrix, dims, effects).real).sum())


def covering_norm_interval(matrix, dims, restarts=None, seed=0, iteration_cap=None, threshold=None):
    """Covering norm interval: |tr W| <= lower <= ||W||_cov <= upper = ||W||_1

    A tensor positive C with C +- W tensor positive satisfies
    tr C = sum_patterns tr[C Y_p] >= sum_patterns |tr[W Y_p]| for the 2^m
    products Y_p of X_i or I - X_i; the lower end maximizes that sum over
    projectors X_i by alternating positive-part updates.
    """
    restarts = restarts or bellbound_conf.RESTARTS
    iteration_cap = iteration_cap or bellbound_conf.ITERATION_CAP
    threshold = threshold if threshold is not None else bellbound_conf.SWEEP_THRESHOLD
    matrix = np.asarray(matrix, dtype=complex)
    dims = [int(d) for d in dims]
    verdict = tensor_positivity_check(matrix, dims, restarts=restarts, seed=seed,
                                      iteration_cap=iteration_cap, threshold=threshold)
    trace = float(np.trace(matrix).real)
    if verdict.status == PSD_CERTIFIED:
        identities = tuple(np.eye(d) for d in dims)
        return CoveringInterval(trace, trace, identities, ["psd"], verdict)

    upper = trace_norm(matrix)
    best_value = abs(trace)
    best_projectors = tuple(np.eye(d) for d in dims)
    for restart in range(restarts):
        rng = np.random.default_rng([seed, restart])
        projectors = [random_projector(d, max(1, d // 2), rng) for d in dims]
        value = _split_sum(matrix, dims, projectors)
        for _ in range(iteration_cap):
            for i in range(len(dims)):
                projectors[i] = _best_split(matrix, dims, projectors, i)
            new_value = _split_sum(matrix, dims, projectors)
            gain = new_value - value
            value = max(value, new_value)
            if gain < threshold:
                break
        if value > best_value:
            best_value, best_projectors = value, tuple(p.copy() for p in projectors)

    lower = min(best_value, upper)
    return CoveringInterval(lower, upper, best_projectors, ["trace-norm", "projective-split"], verdict)


def _best_split(matrix, dims, projectors, i):
    """Update X_i to the positive part of the sign-weighted contracted operator"""
    effects = []
    for j, x in enumerate(projectors):
        effects.append(None if j == i else np.stack([x, np.eye(x.shape[0]) - x]))
    blocks = contract_factors(matrix, dims, effects).reshape(-1, dims[i], dims[i])
    current = projectors[i]
    complement = np.eye(dims[i]) - current
    with_x = np.einsum("pab,ba->p", blocks, current).real
    without_x = np.einsum("pab,ba->p", blocks, complement).real
    signs_x = np.where(with_x >= 0, 1.0, -1.0)
    signs_not = np.where(without_x >= 0, 1.0, -1.0)
    kernel = np.tensordot(signs_x - signs_not, blocks, axes=(0, 0))
    candidate = positive_projector(kernel)
    old = _split_sum(matrix, dims, projectors)
    trial = list(projectors)
    trial[i] = candidate
    return candidate if _split_sum(matrix, dims, trial) >= old else current


class CandidateBound:
    """Covering interval of one candidate dilation for one reduced site"""

    def __init__(self, site, candidate, source, interval):
        """Store the candidate row"""
        self.site = site
        self.candidate = candidate
        self.source = source
        self.interval = interval

    def to_dict(self):
        """Report fields as a dict"""
        row = {"site": self.site + 1, "candidate": self.candidate, "copies": list(self.source.copies)}
        row.update(self.interval.to_dict())
        return row


class UpsilonBound:
    """Certified upper bound on the maximal Bell violation with the dilation attaining it"""

    def __init__(self, value, best, rows):
        """Store the bound"""
        self.value = float(value)
        self.best = best
        self.rows = rows

    def to_dict(self):
        """Report fields as a dict"""
        return {"bound": self.value, "best": self.best.to_dict(), "candidates": [r.to_dict() for r in self.rows]}

    def __str__(self):
        """String representation"""
        return f"UpsilonBound({self.value:.6f}, via {self.best.candidate} at site {self.best.site + 1})"


class DilationBounder:
    """Class to bound the maximal violation over a finite family of candidate source operators"""

    def __init__(self, candidates=None, restarts=None, seed=0, iterations=None):
        """Initialize the bounder"""
        self.logger = get_logger(__name__)
        self.candidates = list(candidates or bellbound_conf.DILATION_CANDIDATES)
        self.restarts = restarts or bellbound_conf.RESTARTS
        self.seed = seed
        self.iterations = iterations

        # Progress callback
        self.progress_callback = None
        self.total_steps = 0
        self.current_step = 0

    def set_progress_callback(self, callback):
        """Set a callback function for progress updates"""
        self.progress_callback = callback

    def update_progress(self, message, step=None):
        """Update the progress"""
        if step is not None:
            self.current_step = step
        else:
            self.current_step += 1
        progress = int((self.current_step / self.total_steps) * 100) if self.total_steps > 0 else 0
        self.logger.debug(f"{progress}% - {message}")
        if self.progress_callback:
            self.progress_callback(progress, message)

    def build(self, state, copies, candidate):
        """Construct one candidate source operator, or None when it does not apply"""
        if candidate == "product":
            if not state.product_components:
                return None
            return separable_source_operator(state, copies)
        if candidate == "expansion":
            return expansion_source_operator(state, copies)
        if candidate == "solve":
            return solve_source_operator(state, copies, "min-frobenius")
        if candidate == "trace-norm":
            return solve_source_operator(state, copies, "min-trace-norm", iterations=self.iterations)
        raise ValidationError(f"Unknown dilation candidate '{candidate}'")

    def bound(self, state, settings):
        """min over sites n and candidates of the covering upper value of T_(S_1 x .. 1_n .. x S_N)"""
        settings = [int(s) for s in settings]
        if len(settings) != state.n_parties:
            raise ValidationError(f"Expected {state.n_parties} setting counts, got {len(settings)}")
        reduced_tuples = []
        for n in range(state.n_parties):
            reduced = list(settings)
            reduced[n] = 1
            _check_copied_cap(state.dims, reduced)
            reduced_tuples.append(reduced)

        self.total_steps = len(reduced_tuples) * len(self.candidates)
        self.current_step = 0
        rows = []
        for n, reduced in enumerate(reduced_tuples):
            for name in self.candidates:
                self.update_progress(f"Site {n + 1}, candidate {name}")
                source = self.build(state, reduced, name)
                if source is None:
                    continue
                interval = covering_norm_interval(source.matrix, source.factor_dims,
                                                  restarts=self.restarts, seed=self.seed)
                rows.append(CandidateBound(n, name, source, interval))
                self.logger.info(f"Site {n + 1}, {name}: covering interval [{interval.lower:.6f}, {interval.upper:.6f}]")

        if not rows:
            raise ValidationError(f"No dilation candidate among {self.candidates} applies to {state}")
        best = rows[0]
        for row in rows[1:]:
            if row.interval.upper < best.interval.upper:
                best = row
        return UpsilonBound(max(1.0, best.interval.upper), best, rows)


def upsilon_upper_bound(state, settings, candidates=None, restarts=None, seed=0):
    """Source operator bound on the maximal Bell violation, with the dilation attaining it"""
    return DilationBounder(candidates=candidates, restarts=restarts, seed=seed).bound(state, settings)


class LhvCertificate:
    """LqHV model from a tensor positive source operator, with its certification flag"""

    def __init__(self, model, verdict, certified):
        """Store the model and flags"""
        self.model = model
        self.verdict = verdict
        self.certified = certified
        self.warning = not certified

    def to_dict(self):
        """Report fields as a dict"""
        result = {"certified_lhv": self.certified, "tensor_positivity": self.verdict.status}
        result.update(self.model.summary())
        return result


def lhv_certificate_from_tensor_positive(source, povms, restarts=None, seed=0):
    """A tensor positive source operator yields a proper LHV model"""
    verdict = tensor_positivity_check(source.matrix, source.factor_dims, restarts=restarts, seed=seed)
    if verdict.status == VIOLATED:
        raise TensorPositivityError(f"Source operator is not tensor positive (product value {verdict.value:.3e})")
    model = lqhv_from_source(source, povms)
    certified = verdict.status == PSD_CERTIFIED
    if not certified:
        logger.warning("Tensor positivity not certified; the LHV model is not guaranteed")
    return LhvCertificate(model, verdict, certified)
