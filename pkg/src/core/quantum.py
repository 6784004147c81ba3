"""
Finite-dimensional quantum layer: states, POVMs and joint probabilities
"""

import numpy as np

import bellbound_conf
from src.core.errors import ValidationError, CapExceededError
from src.core.scenario import Behavior, ScenarioSpec, _interleaved_to_table
from src.utils.helpers import get_logger, parse_descriptor, parse_int_list
from src.utils.linalg import (
    contract_factors, hermitian_part, is_hermitian, kron_all, min_eigenvalue,
    partial_trace, random_unitary
)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

logger = get_logger(__name__)


class DensityState:
    """Density matrix on C^d_1 x ... x C^d_N"""

    def __init__(self, dims, matrix, family=None, params=None, product_components=None,
                 tol=None, dim_cap=None):
        """Validate self-adjointness, unit trace and positivity"""
        if tol is None:
            tol = bellbound_conf.PSD_TOL
        if dim_cap is None:
            dim_cap = bellbound_conf.STATE_DIM_CAP
        dims = [int(d) for d in dims]
        if not dims or any(d < 1 for d in dims):
            raise ValidationError(f"Site dimensions must be positive, got {dims}")
        total = int(np.prod(dims))
        if total > dim_cap:
            raise CapExceededError(f"State dimension {total} exceeds cap {dim_cap}")
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (total, total):
            raise ValidationError(f"State matrix shape {matrix.shape} != ({total}, {total})")
        if not is_hermitian(matrix, tol):
            raise ValidationError("State matrix is not self-adjoint")
        trace = np.trace(matrix).real
        if abs(trace - 1.0) > tol:
            raise ValidationError(f"State trace is {trace:.12f}, expected 1")
        lowest = min_eigenvalue(matrix)
        if lowest < -tol:
            raise ValidationError(f"State has negative eigenvalue {lowest:.3e}")

        matrix = hermitian_part(matrix)
        matrix.flags.writeable = False
        self.dims = dims
        self.matrix = matrix
        self.family = family
        self.params = dict(params or {})
        # [(weight, [site density matrices])] when a product decomposition is known
        self.product_components = product_components

    @property
    def n_parties(self):
        """Number of sites"""
        return len(self.dims)

    def reduced(self, keep):
        """Reduced density matrix on the listed sites"""
        return partial_trace(self.matrix, self.dims, keep)

    def purity(self):
        """tr[rho^2]"""
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def __str__(self):
        """String representation"""
        tag = self.family or "custom"
        return f"DensityState({tag}, dims={self.dims})"


class PovmFamily:
    """Per party, per setting: L_n positive matrices on C^d_n summing to the identity"""

    def __init__(self, scenario, elements, tol=None):
        """Validate positivity and completeness of every measurement"""
        if tol is None:
            tol = bellbound_conf.PSD_TOL
        if len(elements) != scenario.n_parties:
            raise ValidationError(f"Expected POVMs for {scenario.n_parties} parties, got {len(elements)}")
        stacks = []
        for n, stack in enumerate(elements):
            stack = np.array(stack, dtype=complex)
            if stack.ndim != 4 or stack.shape[0] != scenario.settings[n] \
                    or stack.shape[1] != scenario.outcome_counts[n] or stack.shape[2] != stack.shape[3]:
                raise ValidationError(
                    f"Party {n + 1}: POVM array shape {stack.shape} does not match "
                    f"({scenario.settings[n]}, {scenario.outcome_counts[n]}, d, d)")
            d = stack.shape[2]
            for s in range(stack.shape[0]):
                for l in range(stack.shape[1]):
                    if not is_hermitian(stack[s, l], tol):
                        raise ValidationError(f"Party {n + 1}, setting {s + 1}: element {l + 1} not self-adjoint")
                    if min_eigenvalue(stack[s, l]) < -tol:
                        raise ValidationError(f"Party {n + 1}, setting {s + 1}: element {l + 1} not positive")
                    stack[s, l] = hermitian_part(stack[s, l])
                deviation = float(np.max(np.abs(stack[s].sum(axis=0) - np.eye(d))))
                if deviation > tol:
                    raise ValidationError(
                        f"Party {n + 1}, setting {s + 1}: elements sum to identity only within {deviation:.3e}")
            stack.flags.writeable = False
            stacks.append(stack)
        self.scenario = scenario
        self.elements = stacks

    @property
    def dims(self):
        """Per-site Hilbert space dimensions"""
        return [stack.shape[2] for stack in self.elements]

    def __str__(self):
        """String representation"""
        return f"PovmFamily({self.scenario}, dims={self.dims})"


def joint_probabilities(state, povms):
    """P_s(l) = tr[rho (M_1^(s_1)(l_1) x ... x M_N^(s_N)(l_N))]"""
    if list(state.dims) != list(povms.dims):
        raise ValidationError(f"State dims {state.dims} != POVM dims {povms.dims}")
    scenario = povms.scenario
    effects = [stack.reshape((-1,) + stack.shape[2:]) for stack in povms.elements]
    values = contract_factors(state.matrix, state.dims, effects).real
    interleaved = []
    for s, l in zip(scenario.settings, scenario.outcome_counts):
        interleaved += [s, l]
    tables = _interleaved_to_table(values.reshape(interleaved), scenario.n_parties)
    return Behavior(scenario, tables)


def _pure(dims, vector, family=None, params=None, product_components=None):
    """Density state of a pure vector"""
    vector = np.asarray(vector, dtype=complex)
    vector = vector / np.linalg.norm(vector)
    return DensityState(dims, np.outer(vector, vector.conj()), family=family, params=params,
                        product_components=product_components)


def ghz_qudit(n_parties, d):
    """GHZ qudit state (1/sqrt(d)) sum_j |j>^N"""
    if n_parties < 2 or d < 2:
        raise ValidationError(f"GHZ state needs N >= 2 and d >= 2, got N={n_parties}, d={d}")
    if d ** n_parties > bellbound_conf.STATE_DIM_CAP:
        raise CapExceededError(f"GHZ state dimension {d ** n_parties} exceeds cap {bellbound_conf.STATE_DIM_CAP}")
    vector = np.zeros(d ** n_parties, dtype=complex)
    step = sum(d ** k for k in range(n_parties))
    vector[np.arange(d) * step] = 1.0 / np.sqrt(d)
    return _pure([d] * n_parties, vector, family="ghz", params={"N": n_parties, "d": d})


def generalized_ghz(n_parties, phi):
    """Generalized GHZ state sin(phi)|1>^N + cos(phi)|2>^N"""
    if n_parties < 2:
        raise ValidationError(f"Generalized GHZ state needs N >= 2, got {n_parties}")
    if 2 ** n_parties > bellbound_conf.STATE_DIM_CAP:
        raise CapExceededError(f"State dimension {2 ** n_parties} exceeds cap")
    vector = np.zeros(2 ** n_parties, dtype=complex)
    vector[0] = np.sin(phi)
    vector[-1] = np.cos(phi)
    components = None
    if np.isclose(np.sin(phi) * np.cos(phi), 0.0, atol=1e-15):
        basis = np.eye(2)[0] if abs(np.sin(phi)) > 0.5 else np.eye(2)[1]
        site = np.outer(basis, basis).astype(complex)
        components = [(1.0, [site] * n_parties)]
    return _pure([2] * n_parties, vector, family="gghz", params={"N": n_parties, "phi": float(phi)},
                 product_components=components)


def singlet():
    """(|12> - |21>) / sqrt(2)"""
    return _pure([2, 2], [0, 1, -1, 0], family="singlet")


def werner(p):
    """p * singlet + (1 - p) * I/4"""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"Werner weight must lie in [0, 1], got {p}")
    matrix = p * singlet().matrix + (1.0 - p) * np.eye(4) / 4.0
    return DensityState([2, 2], matrix, family="werner", params={"p": float(p)})


def product_state(site_states, family="product"):
    """rho_1 x ... x rho_N with its product decomposition attached"""
    site_states = [np.array(s, dtype=complex) for s in site_states]
    dims = [s.shape[0] for s in site_states]
    return DensityState(dims, kron_all(site_states), family=family,
                        product_components=[(1.0, site_states)])


def maximally_mixed(dims):
    """I / D as a product state"""
    return product_state([np.eye(d) / d for d in dims], family="mixed")


def separable_mixture(weights, site_state_lists):
    """sum_k w_k rho_k1 x ... x rho_kN"""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValidationError("Mixture weights must be a probability vector")
    components = []
    matrix = 0
    for w, sites in zip(weights, site_state_lists):
        sites = [np.array(s, dtype=complex) for s in sites]
        components.append((float(w), sites))
        matrix = matrix + w * kron_all(sites)
    dims = [s.shape[0] for s in components[0][1]]
    return DensityState(dims, matrix, family="separable", product_components=components)


def random_density_matrix(d, rng, rank=None):
    """Partial trace of a Haar-random pure state on C^d x C^rank"""
    rank = rank or d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(dims, rng, rank=None):
    """Random mixed state on the full product space"""
    return DensityState(dims, random_density_matrix(int(np.prod(dims)), rng, rank), family="random")


def random_product_state(dims, rng):
    """Product of random site states"""
    return product_state([random_density_matrix(d, rng) for d in dims])


def random_separable_state(dims, terms, rng):
    """Random mixture of random product states"""
    weights = rng.dirichlet(np.ones(terms))
    sites = [[random_density_matrix(d, rng) for d in dims] for _ in range(terms)]
    return separable_mixture(weights, sites)


def projective_measurement(basis, n_outcomes):
    """Projectors built from basis columns; column j goes to outcome j mod L"""
    basis = np.asarray(basis, dtype=complex)
    d = basis.shape[0]
    elements = np.zeros((n_outcomes, d, d), dtype=complex)
    for j in range(d):
        v = basis[:, j]
        elements[j % n_outcomes] += np.outer(v, v.conj())
    return elements


def spin_measurement(direction):
    """Two-outcome projective measurement (I + n.sigma)/2, (I - n.sigma)/2"""
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    observable = direction[0] * PAULI_X + direction[1] * PAULI_Y + direction[2] * PAULI_Z
    return np.stack([(np.eye(2) + observable) / 2, (np.eye(2) - observable) / 2])


def random_povms(scenario, dims, rng):
    """Projective measurements in Haar-random bases for every party and setting"""
    elements = []
    for n, d in enumerate(dims):
        stack = [projective_measurement(random_unitary(d, rng), scenario.outcome_counts[n])
                 for _ in range(scenario.settings[n])]
        elements.append(np.stack(stack))
    return PovmFamily(scenario, elements)


def state_from_descriptor(text, seed=0):
    """Build a state from 'singlet', 'ghz:N=3,d=2', 'gghz:N=3,phi=0.5236', 'werner:p=0.5',
    'mixed:dims=2x2', 'random:dims=2x2,rank=2',
    'product:dims=2x2', 'separable:dims=2x2,terms=3' or a JSON file path"""
    if text.lower().endswith(".json"):
        from src.utils.serialization import load_json, state_from_dict

        return state_from_dict(load_json(text))
    rng = np.random.default_rng(seed)
    try:
        name, params = parse_descriptor(text)
        if name == "singlet":
            return singlet()
        if name == "ghz":
            return ghz_qudit(int(params.get("N", 3)), int(params.get("d", 2)))
        if name == "gghz":
            return generalized_ghz(int(params.get("N", 3)), float(params.get("phi", np.pi / 4)))
        if name == "werner":
            return werner(float(params.get("p", 1.0)))
        if name == "mixed":
            return maximally_mixed(parse_int_list(params.get("dims", "2x2")))
        if name == "random":
            rank = int(params["rank"]) if "rank" in params else None
            return random_state(parse_int_list(params.get("dims", "2x2")), rng, rank=rank)
        if name == "product":
            return random_product_state(parse_int_list(params.get("dims", "2x2")), rng)
        if name == "separable":
            return random_separable_state(parse_int_list(params.get("dims", "2x2")),
                                          int(params.get("terms", 3)), rng)
    except (KeyError, ValueError) as e:
        raise ValidationError(f"Bad state descriptor '{text}': {str(e)}")
    raise ValidationError(f"Unknown state descriptor '{text}'")


def recognize_family(state, family):
    """The named family's state when `state` is it, else `state` with no family tag"""
    if family is None:
        return state
    dims = state.dims
    reference = None
    if family == "singlet" and dims == [2, 2]:
        reference = singlet()
    elif family == "ghz" and len(dims) >= 2 and len(set(dims)) == 1:
        reference = ghz_qudit(len(dims), dims[0])
    elif family == "mixed":
        reference = maximally_mixed(dims)
    if reference is not None and np.allclose(state.matrix, reference.matrix, atol=bellbound_conf.FEASIBILITY_TOL):
        return reference
    logger.warning(f"Ignoring family tag '{family}' that the matrix does not match")
    return state


def dichotomic_for(state, settings):
    """+1/-1 scenario matching a state's party count"""
    return ScenarioSpec(state.n_parties, settings, [[1.0, -1.0]] * state.n_parties)
